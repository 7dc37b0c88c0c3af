"""Krein-space structure over grid functions.

A fundamental symmetry J (parity by default) turns the grid inner product
into the indefinite form [f, g] = <J f, g>.  Biorthogonal systems carry the
signs delta_n = sign [phi_n, phi_n] once certified, and those signs define
the finite-rank C-symmetry and the -Q metric on the span.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import GridMismatch, NotBiorthogonal, NotJOrthonormal, SignsAbsent
from .grid import Grid, GridFunction, inner, inner_samples, orthonormal_span

DEFAULT_CERT_TOL = 1e-6
IMAG_WARN = 1e-8


def _reverse(samples):
    return np.asarray(samples)[..., ::-1]


@dataclass(frozen=True)
class KreinStructure:
    """Involution acting on sample arrays along the last axis."""

    action: Callable[[np.ndarray], np.ndarray] = _reverse
    label: str = "parity"

    def apply_samples(self, samples):
        return self.action(samples)

    def apply(self, f):
        return GridFunction(f.grid, self.action(f.samples))


PARITY = KreinStructure()


def indefinite_inner(J, f, g):
    """[f, g] = <J f, g>."""
    return inner(J.apply(f), g)


def indefinite_gram_samples(J, grid, rows):
    """Matrix [phi_n, phi_m] for stacked rows (n indexes rows)."""
    return inner_samples(grid, J.apply_samples(rows), rows)


@dataclass(frozen=True, eq=False)
class BiorthogonalSystem:
    """Paired sample stacks phi[n], psi[n] on a common grid.

    ``signs`` stays ``None`` until :func:`certify` fills it.  ``spec`` keeps
    the recipe the system was built from so that larger sections can be
    rebuilt; hand-made systems leave it ``None``.
    """

    grid: Grid
    phi: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    family: str = "custom"
    signs: Optional[tuple] = None
    tolerance: float = DEFAULT_CERT_TOL
    spec: object = None
    provenance: dict = field(default_factory=dict, repr=False)
    j_deviation: Optional[float] = None

    def __post_init__(self):
        phi = np.array(np.atleast_2d(self.phi), dtype=complex)
        psi = np.array(np.atleast_2d(self.psi), dtype=complex)
        if phi.shape != psi.shape or phi.shape[1] != self.grid.M:
            raise GridMismatch(f"phi {phi.shape} / psi {psi.shape} do not fit {self.grid}")
        phi.setflags(write=False)
        psi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        if self.signs is not None:
            object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))

    @property
    def N(self):
        return self.phi.shape[0]

    def phi_functions(self):
        return [GridFunction(self.grid, row) for row in self.phi]

    def psi_functions(self):
        return [GridFunction(self.grid, row) for row in self.psi]

    def cross_gram(self):
        """Matrix with entries <phi_n, psi_m>."""
        return inner_samples(self.grid, self.phi, self.psi)

    def biorthogonality_defect(self):
        return float(np.max(np.abs(self.cross_gram() - np.eye(self.N))))

    def truncated(self, n):
        signs = None if self.signs is None else self.signs[:n]
        return replace(self, phi=self.phi[:n], psi=self.psi[:n], signs=signs)

    def require_signs(self):
        if self.signs is None:
            raise SignsAbsent(f"{self.family} system has no certified signs")
        return np.array(self.signs, dtype=float)

    def synthesize(self, coefficients):
        """Samples of sum_n c_n phi_n."""
        c = np.asarray(coefficients, dtype=complex)
        if c.ndim != 1 or len(c) > self.N:
            raise ValueError(f"need at most {self.N} coefficients, got shape {c.shape}")
        return c @ self.phi[: len(c)]


def _check_j_norms(diag, tolerance):
    for n, value in enumerate(diag):
        if abs(abs(value) - 1.0) > tolerance:
            raise NotJOrthonormal(n, value, tolerance)
    if np.max(np.abs(diag.imag), initial=0.0) > IMAG_WARN:
        warnings.warn(
            f"[phi_n, phi_n] has imaginary parts up to {np.max(np.abs(diag.imag)):.3g}",
            stacklevel=3,
        )
    return np.where(diag.real >= 0, 1, -1)


def biorthogonal_partner(J, phi, tolerance=DEFAULT_CERT_TOL):
    """psi_n = [phi_n, phi_n] J phi_n for a J-orthonormal list."""
    if not phi:
        return []
    grid = phi[0].grid
    rows = np.array([f.samples for f in phi])
    diag = np.einsum("nk,nk->n", J.apply_samples(rows), rows.conj()) * grid.h
    signs = _check_j_norms(diag, tolerance)
    psi = signs[:, None] * J.apply_samples(rows)
    defect = np.max(np.abs(inner_samples(grid, rows, psi) - np.eye(len(phi))))
    if defect > tolerance:
        raise NotBiorthogonal(f"partner certification failed: max |<phi_n, psi_m> - delta| = {defect:.3g}")
    return [GridFunction(grid, row) for row in psi]


def certify(system, J=PARITY, tolerance=None):
    """Attach signs delta_n = sign Re [phi_n, phi_n] to ``system``.

    Raises :class:`NotJOrthonormal` if some |[phi_n, phi_n]| misses 1 by more
    than the tolerance and :class:`NotBiorthogonal` if <phi_n, psi_m> misses
    delta_nm.
    """
    tol = system.tolerance if tolerance is None else tolerance
    diag = np.einsum("nk,nk->n", J.apply_samples(system.phi), system.phi.conj()) * system.grid.h
    deviation = float(np.max(np.abs(np.abs(diag) - 1.0))) if len(diag) else 0.0
    signs = _check_j_norms(diag, tol)
    defect = system.biorthogonality_defect()
    if defect > tol:
        raise NotBiorthogonal(f"max |<phi_n, psi_m> - delta_nm| = {defect:.3g} > {tol:g}")
    return replace(system, signs=tuple(signs), tolerance=tol, j_deviation=deviation)


def sign_split(system):
    signs = system.require_signs()
    positive = tuple(int(n) for n in np.flatnonzero(signs > 0))
    negative = tuple(int(n) for n in np.flatnonzero(signs < 0))
    return positive, negative


@dataclass(frozen=True, eq=False)
class CSymmetryOperator:
    """C_N f = sum_n delta_n <f, psi_n> phi_n, stored through its system."""

    system: BiorthogonalSystem

    @property
    def N(self):
        return self.system.N

    def apply_samples(self, samples):
        s = self.system
        coeffs = s.grid.h * (np.atleast_2d(samples) @ s.psi.conj().T)
        out = (coeffs * np.array(s.signs)) @ s.phi
        return out[0] if np.ndim(samples) == 1 else out

    def apply(self, f):
        return GridFunction(f.grid, self.apply_samples(f.samples))


def c_symmetry_build(system):
    system.require_signs()
    return CSymmetryOperator(system)


def jc_positivity(system, J=PARITY):
    """Smallest eigenvalue of the Hermitian part of <J C b_n, b_m>.

    ``b_n`` is an orthonormal basis of span{phi_n}.
    """
    C = c_symmetry_build(system)
    basis, _ = orthonormal_span(system.grid, system.phi)
    form = inner_samples(system.grid, J.apply_samples(C.apply_samples(basis)), basis).T
    herm = 0.5 * (form + form.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


def _coefficients(system, c, d):
    c = np.asarray(c, dtype=complex)
    d = np.asarray(d, dtype=complex)
    if c.shape != d.shape or c.ndim != 1:
        raise ValueError(f"coefficient lists differ: {c.shape} vs {d.shape}")
    if len(c) > system.N:
        raise ValueError(f"at most {system.N} coefficients, got {len(c)}")
    return c, d


def metric_inner_minusQ(system, c, d):
    """<f, g>_{-Q} for f = sum c_n phi_n, g = sum d_n phi_n.

    The phi_n are orthonormal in this metric, so the value is sum c_n conj(d_n).
    """
    c, d = _coefficients(system, c, d)
    return complex(np.vdot(d, c))


def metric_inner_grid(system, J, c, d):
    """Grid-side evaluation [C_N f, g] of the same quantity."""
    c, d = _coefficients(system, c, d)
    C = c_symmetry_build(system)
    f = GridFunction(system.grid, system.synthesize(c))
    g = GridFunction(system.grid, system.synthesize(d))
    return indefinite_inner(J, C.apply(f), g)


@dataclass(frozen=True)
class GramReport:
    family: str
    N: int
    tolerance: float
    kind: str
    gram: np.ndarray = field(repr=False)
    max_offdiag: float = 0.0
    diag_signs: tuple = ()

    def to_dict(self):
        return {
            "family": self.family,
            "kind": self.kind,
            "N": self.N,
            "tolerance": self.tolerance,
            "gram": [[float(v.real), float(v.imag)] for v in np.asarray(self.gram).ravel()],
            "max_offdiag": self.max_offdiag,
            "diag_signs": list(self.diag_signs),
        }


def gram_report(system, kind, J=PARITY):
    """Gram matrix of one of the three kinds: ``ordinary`` <phi_n, phi_m>,
    ``indefinite`` [phi_n, phi_m] or ``biorthogonal`` <phi_n, psi_m>."""
    if kind == "ordinary":
        gram = inner_samples(system.grid, system.phi, system.phi)
    elif kind == "indefinite":
        gram = indefinite_gram_samples(J, system.grid, system.phi)
    elif kind == "biorthogonal":
        gram = system.cross_gram()
    else:
        raise ValueError(f"unknown Gram kind {kind!r}")
    off = gram - np.diag(np.diag(gram))
    max_off = float(np.max(np.abs(off))) if gram.size else 0.0
    signs = tuple(int(s) for s in np.where(np.diag(gram).real >= 0, 1, -1))
    return GramReport(system.family, system.N, system.tolerance, kind, gram, max_off, signs)
