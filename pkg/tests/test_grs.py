import math

import numpy as np
import pytest
import scipy.linalg

from kgrs.errors import GridTooSmall, KGRSError, NonPositiveSection, RankDeficientSpan
from kgrs.grid import Grid, GridFunction, inner_samples
from kgrs.grs import (
    FIRST_TYPE,
    INCONCLUSIVE,
    NOT_J_ORTHONORMAL,
    FamilySpec,
    build_family,
    classify,
    default_section,
    expansion_minusQ,
    extremality_quotient,
    indefinite_coefficients,
    quasi_basis_residual,
    reconstruct_Q,
)
from kgrs.krein import PARITY, BiorthogonalSystem, certify
from kgrs.specfun import hermite_functions


def exact_minus_half_x2(N):
    """<(-x^2/2) e_n, e_m> from the ladder relations."""
    Q = np.zeros((N, N))
    for n in range(N):
        Q[n, n] = -(n + 0.5) / 2
        if n + 2 < N:
            Q[n, n + 2] = Q[n + 2, n] = -math.sqrt((n + 1) * (n + 2)) / 4
    return Q


def test_spec_validation(grid):
    with pytest.raises(KGRSError):
        FamilySpec.shifted(0.0, 4, grid)
    with pytest.raises(KGRSError):
        FamilySpec.anharmonic(2.0, 4, grid)
    with pytest.raises(KGRSError):
        FamilySpec.anharmonic(4.0, 4, grid, p=lambda x: np.exp(-x * x))
    with pytest.raises(KGRSError):
        FamilySpec("other", 3, grid)
    assert FamilySpec.anharmonic(4.0, 3, grid).label() == "anharmonic(beta=4,p=gauss-odd)"


def test_shifted_family_samples(grid):
    system = build_family(FamilySpec.shifted(0.5, 4, grid))
    x = grid.x
    # e_1(z) = sqrt(2) pi^(-1/4) z exp(-z^2/2)
    z = x + 0.5j
    assert np.max(np.abs(system.phi[1] - math.sqrt(2) * math.pi ** -0.25 * z * np.exp(-z * z / 2))) < 1e-13
    assert system.provenance["route_gap"] < 1e-8


def test_grid_too_small_suggests_width():
    with pytest.raises(GridTooSmall) as info:
        build_family(FamilySpec.gaussian(30, Grid(5.0, 256)))
    assert info.value.suggested_L > 5.0
    assert abs(hermite_functions(29, info.value.suggested_L)[29]) < 1e-12


@pytest.mark.parametrize("a", [0.25, 0.5, 1.0])
def test_shifted_biorthogonal(a, grid):
    system = build_family(FamilySpec.shifted(a, 16, grid))
    assert system.biorthogonality_defect() < 1e-8


def test_identity_system_reconstructs_zero():
    g = Grid(12.0, 512)
    e = hermite_functions(5, g.x)
    rec = reconstruct_Q(BiorthogonalSystem(g, e, e))
    assert rec.section == 6
    assert np.max(np.abs(rec.Q_hermite)) < 1e-12
    assert np.max(np.abs(rec.e_rows - e)) < 1e-12


def test_rank_deficient_span():
    g = Grid(12.0, 512)
    e = hermite_functions(2, g.x)
    rows = np.array([e[0], e[1], e[0] + 1e-9 * e[2]])
    with pytest.raises(RankDeficientSpan):
        reconstruct_Q(BiorthogonalSystem(g, rows, rows))


def test_nonpositive_section():
    g = Grid(12.0, 512)
    e = hermite_functions(1, g.x)
    with pytest.raises(NonPositiveSection):
        reconstruct_Q(BiorthogonalSystem(g, e, np.array([e[0], -e[1]]), tolerance=3.0))


def test_example1_reconstruction_oracle(example1_40):
    rec = reconstruct_Q(example1_40.truncated(12))
    assert rec.section > 12
    err = np.abs(rec.Q_hermite - exact_minus_half_x2(12))
    assert err.max() < 2e-2
    # G reaches ~1e9 at the top of the section; asymmetry is relative to that
    assert rec.asymmetry < 1e-10 * np.linalg.norm(rec.G_matrix, 2)
    assert rec.orthonormality_defect < 1e-6


def test_example1_pure_sections_converge(example1_40):
    errs = []
    for N in (8, 12, 16):
        rec = reconstruct_Q(example1_40.truncated(N), section=N)
        errs.append(np.max(np.abs(rec.Q_hermite[:8, :8] - exact_minus_half_x2(8))))
    assert errs[0] > errs[1] > errs[2]


def test_expm_round_trip(example1_40):
    rec = reconstruct_Q(example1_40.truncated(10))
    G = rec.G_matrix
    assert np.max(np.abs(scipy.linalg.expm(-rec.Q_matrix) - G)) < 1e-12 * np.abs(G).max()
    assert rec.min_eigenvalue > 0


def test_shifted_e_estimates(shifted12):
    rec = reconstruct_Q(shifted12)
    e = hermite_functions(11, shifted12.grid.x)
    assert np.max(np.abs(rec.e_rows - e)) < 1e-6
    assert rec.to_dict()["section"] == rec.section


def test_default_section_rules(shifted12):
    assert default_section(shifted12) == 37
    hand = BiorthogonalSystem(shifted12.grid, shifted12.phi, shifted12.psi)
    assert default_section(hand) == 12
    with pytest.raises(KGRSError):
        reconstruct_Q(hand, section=20)


def test_classify_shifted(shifted15):
    report = classify(shifted15)
    assert report.verdict == FIRST_TYPE
    assert report.anticommutator_residual < 1e-4
    assert report.parities == tuple((-1) ** n for n in range(15))
    assert max(report.j_eigen_residuals) < 1e-5
    assert report.to_dict()["verdict"] == FIRST_TYPE


def test_classify_anharmonic(grid):
    system = build_family(FamilySpec.anharmonic(4.0, 15, grid))
    report = classify(system)
    assert report.verdict == FIRST_TYPE
    assert report.parities == tuple((-1) ** n for n in range(15))


def test_classify_example1(example1_40):
    report = classify(example1_40.truncated(12))
    assert report.verdict == NOT_J_ORTHONORMAL
    assert report.anticommutator_residual is None
    assert report.j_deviation == pytest.approx(1 - math.sqrt(2 / 3), abs=1e-10)


def test_classify_inconclusive_on_tight_tolerance(shifted12):
    assert classify(shifted12, anticommutator_tol=1e-30).verdict == INCONCLUSIVE


def _probe(grid, centre=0.0):
    x = grid.x
    return GridFunction(grid, (2 / math.pi) ** 0.25 * np.exp(-((x - centre) ** 2)))


@pytest.mark.parametrize("c1,c2", [(0.0, 0.0), (0.5, 0.5), (-0.5, 0.5), (0.0, 0.5)])
def test_quasi_basis_example1(example1_40, c1, c2):
    grid = example1_40.grid
    f, g = _probe(grid, c1), _probe(grid, c2)
    curves = quasi_basis_residual(example1_40, f, g, 40)
    assert curves.phi_psi[0] == pytest.approx(abs(curves.exact))
    assert curves.phi_psi[40] < 1e-6
    assert curves.psi_phi[40] < 1e-6
    gap = max(abs(a - b) for a, b in zip(curves.phi_psi, curves.psi_phi))
    if abs(c1) == abs(c2):
        # f = g or f = Jg: the orderings agree termwise
        assert gap < 1e-12
    else:
        assert gap > 1e-3
    with pytest.raises(ValueError):
        quasi_basis_residual(example1_40, f, g, 41)


def test_indefinite_coefficients(shifted12, rng):
    c = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    got = indefinite_coefficients(shifted12, PARITY, shifted12.synthesize(c))
    assert np.max(np.abs(got - c)) < 1e-7


def test_expansion_minusQ(shifted12):
    c = 1.0 / (1.0 + np.arange(12))
    curve = expansion_minusQ(shifted12, PARITY, c, 12)
    assert curve[0] == pytest.approx(np.linalg.norm(c))
    assert all(a >= b - 1e-12 for a, b in zip(curve, curve[1:]))
    assert curve[-1] < 1e-7


def test_extremality_identity():
    g = Grid(12.0, 512)
    e = hermite_functions(5, g.x)
    system = BiorthogonalSystem(g, e, e)
    assert extremality_quotient(system, [1.0]) == pytest.approx(1.0, abs=1e-12)


def test_extremality_properties(example1_40, rng):
    gvec = np.array([1.0, 0.3, -0.2])
    values = [extremality_quotient(example1_40.truncated(N), gvec) for N in (4, 8, 12)]
    assert values[0] >= values[1] >= values[2] > 0
    assert extremality_quotient(example1_40.truncated(8), 3j * gvec) == pytest.approx(values[1] / 9, rel=1e-10)
    # no trial vector does better than the closed-form minimiser
    rec = reconstruct_Q(example1_40.truncated(8), section=8)
    G = rec.G_matrix
    gv = np.zeros(8, dtype=complex)
    gv[:3] = gvec
    trials = rng.standard_normal((500, 8)) + 1j * rng.standard_normal((500, 8))
    quotients = np.einsum("ki,ij,kj->k", trials.conj(), G, trials).real / np.abs(trials.conj() @ gv) ** 2
    assert quotients.min() >= values[1] * (1 - 1e-12)
    best = np.linalg.solve(G, gv)
    at_best = (best.conj() @ G @ best).real / abs(best.conj() @ gv) ** 2
    assert at_best == pytest.approx(values[1], rel=1e-9)
    with pytest.raises(ValueError):
        extremality_quotient(example1_40.truncated(4), np.zeros(2))
