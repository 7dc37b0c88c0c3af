"""Biorthogonal function systems in Hilbert and Krein spaces at finite truncation."""

from .errors import (
    GridMismatch,
    GridTooSmall,
    KGRSError,
    NonPositiveSection,
    NotBiorthogonal,
    NotJOrthonormal,
    RankDeficientSpan,
    SignsAbsent,
)
from .grid import (
    Grid,
    GridFunction,
    fourier_multiplier_apply,
    fourier_transform,
    inner,
    inverse_fourier_transform,
    multiply_apply,
    parity_apply,
)
from .grs import (
    FamilySpec,
    build_family,
    classify,
    expansion_minusQ,
    extremality_quotient,
    quasi_basis_residual,
    reconstruct_Q,
)
from .hamiltonians import (
    anharmonic_basis,
    build_truncated_NE1,
    example1_apply,
    shifted_oscillator_apply,
)
from .krein import (
    PARITY,
    BiorthogonalSystem,
    KreinStructure,
    biorthogonal_partner,
    c_symmetry_build,
    certify,
    indefinite_inner,
    metric_inner_minusQ,
    sign_split,
)
from .specfun import (
    gauss_hermite_rule,
    hermite_function,
    hyp2f1_terminating,
    indefinite_gram_closed_form,
)

__version__ = "0.1.0"
