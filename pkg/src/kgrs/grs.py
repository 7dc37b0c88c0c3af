"""Family builders, finite-section reconstruction of G = e^{-Q} and Q, and
first-type classification.

Reconstruction works on a *section* of K >= N family members (K = N plus a
guard band when the family can be rebuilt) and reports the leading N
quantities.  The compression of G to span{phi_0..phi_{K-1}} is accurate for
low indices and degrades toward the top of the section, so the guard band
keeps the truncation edge away from the reported block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    GridTooSmall,
    KGRSError,
    NonPositiveSection,
    NotBiorthogonal,
    NotJOrthonormal,
    RankDeficientSpan,
)
from .grid import Grid, GridFunction, inner, inner_samples, multiplier_apply_samples, orthonormal_span
from .hamiltonians import MAX_ANHARMONIC_N, anharmonic_rows
from .krein import DEFAULT_CERT_TOL, PARITY, BiorthogonalSystem, certify
from .specfun import hermite_functions

SHIFTED = "shifted"
GAUSSIAN = "example1"
ANHARMONIC = "anharmonic"
KINDS = (SHIFTED, GAUSSIAN, ANHARMONIC)

TAIL_TOL = 1e-12
FOURIER_NOISE_FLOOR = 1e-15
SECTION_GUARD = 25
MAX_SECTION = 40
MAX_SPAN_CONDITION = 1e10
ANTICOMMUTATOR_TOL = 1e-4
J_EIGEN_TOL = 1e-5

FIRST_TYPE = "FirstTypeEvidence"
NOT_J_ORTHONORMAL = "NotJOrthonormal"
INCONCLUSIVE = "Inconclusive"


def default_p(x):
    return 0.3 * x * np.exp(-0.5 * x * x)


P_PRESETS = {"gauss-odd": default_p}


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    N: int
    grid: Grid = field(default_factory=Grid)
    a: Optional[float] = None
    beta: Optional[float] = None
    p: Optional[Callable] = None
    p_label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KGRSError(f"unknown family {self.kind!r}; expected one of {KINDS}")
        if self.N < 1:
            raise KGRSError(f"N must be positive, got {self.N}")
        if self.kind == SHIFTED:
            if self.a is None or self.a == 0:
                raise KGRSError("shifted oscillator needs a nonzero real shift a")
        if self.kind == ANHARMONIC:
            if self.beta is None or not self.beta > 2:
                raise KGRSError(f"anharmonic family needs beta > 2, got {self.beta}")
            if self.p is None:
                object.__setattr__(self, "p", default_p)
                object.__setattr__(self, "p_label", self.p_label or "gauss-odd")
            x = self.grid.x
            odd_defect = np.max(np.abs(self.p(-x) + self.p(x)))
            if odd_defect > 1e-12:
                raise KGRSError(f"p is not odd on the grid (defect {odd_defect:.3g})")

    @classmethod
    def shifted(cls, a, N, grid=None):
        return cls(SHIFTED, N, grid or Grid(), a=float(a))

    @classmethod
    def gaussian(cls, N, grid=None):
        return cls(GAUSSIAN, N, grid or Grid())

    @classmethod
    def anharmonic(cls, beta, N, grid=None, p=None, p_label=None):
        return cls(ANHARMONIC, N, grid or Grid(), beta=float(beta), p=p, p_label=p_label)

    def label(self):
        if self.kind == SHIFTED:
            return f"shifted(a={self.a:g})"
        if self.kind == ANHARMONIC:
            return f"anharmonic(beta={self.beta:g},p={self.p_label or 'custom'})"
        return GAUSSIAN


def _hermite_tail_check(N, grid):
    top = abs(float(hermite_functions(N - 1, grid.L)[N - 1]))
    if top >= TAIL_TOL:
        L = grid.L
        while abs(float(hermite_functions(N - 1, L)[N - 1])) >= TAIL_TOL:
            L += 0.5
        raise GridTooSmall(f"|e_{N - 1}(L)| = {top:.2g} on L={grid.L:g}", suggested_L=L)


def build_family(spec):
    """Sample {phi_n}, {psi_n} for the family described by ``spec``."""
    grid, N, x = spec.grid, spec.N, spec.grid.x
    provenance = {}
    if spec.kind == SHIFTED:
        _hermite_tail_check(N, grid)
        a = spec.a
        phi = hermite_functions(N - 1, x + 1j * a)
        psi = hermite_functions(N - 1, x - 1j * a)
        e = hermite_functions(N - 1, x)
        phi_f = multiplier_apply_samples(grid, e, lambda xi: np.exp(-a * xi), FOURIER_NOISE_FLOOR)
        psi_f = multiplier_apply_samples(grid, e, lambda xi: np.exp(a * xi), FOURIER_NOISE_FLOOR)
        win = grid.interior()
        provenance = {
            "phi_fourier": phi_f,
            "psi_fourier": psi_f,
            "route_gap": float(max(np.max(np.abs(phi_f - phi)[:, win]), np.max(np.abs(psi_f - psi)[:, win]))),
        }
    elif spec.kind == GAUSSIAN:
        _hermite_tail_check(N, grid)
        e = hermite_functions(N - 1, x)
        phi = e * np.exp(-0.25 * x * x)
        psi = e * np.exp(0.25 * x * x)
    else:
        if N > MAX_ANHARMONIC_N:
            raise KGRSError(f"anharmonic family supports N <= {MAX_ANHARMONIC_N}")
        energies, e = anharmonic_rows(spec.beta, N, grid)
        pv = spec.p(x)
        phi = np.exp(pv) * e
        psi = np.exp(-pv) * e
        provenance = {"energies": energies, "basis": e}
    return BiorthogonalSystem(grid, phi, psi, family=spec.label(), spec=spec, provenance=provenance)


def default_section(system):
    if system.spec is None:
        return system.N
    return max(system.N, min(system.N + SECTION_GUARD, MAX_SECTION))


def _section_system(system, section):
    K = default_section(system) if section is None else int(section)
    if K < system.N:
        raise KGRSError(f"section {K} is smaller than the system size {system.N}")
    if K == system.N:
        return system
    if system.spec is None:
        raise KGRSError("cannot extend a system that was not built from a FamilySpec")
    return build_family(replace(system.spec, N=K))


@dataclass(frozen=True, eq=False)
class QReconstruction:
    """Finite-section metric and generator.

    ``G_matrix`` and ``Q_matrix`` are K x K in the orthonormal span basis
    ``span_basis``; ``e_coords[:, n]`` are the span coordinates of e_n and
    ``Q_hermite`` is the leading N x N block of Q in the e_n coordinates.
    """

    N: int
    section: int
    span_basis: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    G_matrix: np.ndarray = field(repr=False)
    Q_matrix: np.ndarray = field(repr=False)
    e_coords: np.ndarray = field(repr=False)
    e_rows: np.ndarray = field(repr=False)
    Q_hermite: np.ndarray = field(repr=False)
    asymmetry: float = 0.0
    min_eigenvalue: float = 0.0
    orthonormality_defect: float = 0.0
    grid: Grid = field(default_factory=Grid, repr=False)

    @property
    def e_estimates(self):
        return [GridFunction(self.grid, row) for row in self.e_rows]

    def to_dict(self):
        mat = lambda A: [[float(v.real), float(v.imag)] for v in np.asarray(A).ravel()]
        return {
            "N": self.N,
            "section": self.section,
            "L": self.grid.L,
            "M": self.grid.M,
            "asymmetry": self.asymmetry,
            "min_eigenvalue": self.min_eigenvalue,
            "orthonormality_defect": self.orthonormality_defect,
            "Q_hermite": mat(self.Q_hermite),
        }


def _span_condition(R):
    sv = np.linalg.svd(R, compute_uv=False)
    return np.inf if sv[-1] == 0 else float((sv[0] / sv[-1]) ** 2)


def reconstruct_Q(system, section=None):
    """Compress G0: phi_n -> psi_n to the span, then Q = -log G, e_n = G^{1/2} phi_n.

    ``section`` is the number of family members used.  By default it is N
    plus a guard band (capped at 40, exactly N for hand-built systems),
    shrunk while the span Gram matrix is too ill-conditioned; an explicit
    section is used as given.
    """
    work = _section_system(system, section)
    grid = work.grid
    basis, R = orthonormal_span(grid, work.phi)
    K = work.N
    if section is None:
        while K > system.N and _span_condition(R[:K, :K]) > MAX_SPAN_CONDITION:
            K -= 1
        if K < work.N:
            work = work.truncated(K)
            basis, R = basis[:K], R[:K, :K]
    cond = _span_condition(R)
    if cond > MAX_SPAN_CONDITION:
        raise RankDeficientSpan(f"Gram matrix of span{{phi_n}} has condition number {cond:.3g}")
    defect = work.biorthogonality_defect()
    if defect > max(work.tolerance, DEFAULT_CERT_TOL):
        raise NotBiorthogonal(f"section of size {K} has biorthogonality defect {defect:.3g}")
    W = inner_samples(grid, work.psi, basis).T
    G0 = np.linalg.solve(R.T, W.T).T
    asym = float(np.linalg.norm(G0 - G0.conj().T, 2))
    G = 0.5 * (G0 + G0.conj().T)
    w, V = np.linalg.eigh(G)
    if w[0] <= 0:
        raise NonPositiveSection(float(w[0]))
    Q = -(V * np.log(w)) @ V.conj().T
    E = (V * np.sqrt(w)) @ V.conj().T @ R
    e_rows = E.T @ basis
    N = system.N
    ortho = float(np.max(np.abs(inner_samples(grid, e_rows[:N], e_rows[:N]) - np.eye(N))))
    Qe = (E.conj().T @ Q @ E)[:N, :N]
    return QReconstruction(
        N=N,
        section=K,
        span_basis=basis,
        R=R,
        G_matrix=G,
        Q_matrix=Q,
        e_coords=E,
        e_rows=e_rows[:N],
        Q_hermite=Qe,
        asymmetry=asym,
        min_eigenvalue=float(w[0]),
        orthonormality_defect=ortho,
        grid=grid,
    )


@dataclass(frozen=True)
class ClassificationReport:
    family: str
    N: int
    L: float
    M: int
    verdict: str
    anticommutator_residual: Optional[float]
    j_eigen_residuals: tuple
    parities: tuple
    signs: tuple
    tolerances: dict
    section: int = 0
    j_deviation: Optional[float] = None
    detail: str = ""

    def to_dict(self):
        return {
            "family": self.family,
            "N": self.N,
            "L": self.L,
            "M": self.M,
            "section": self.section,
            "verdict": self.verdict,
            "anticommutator_residual": self.anticommutator_residual,
            "j_eigen_residuals": list(self.j_eigen_residuals),
            "parities": list(self.parities),
            "signs": list(self.signs),
            "j_deviation": self.j_deviation,
            "tolerances": dict(self.tolerances),
            "detail": self.detail,
        }


def classify(system, J=PARITY, cert_tol=None, anticommutator_tol=ANTICOMMUTATOR_TOL,
             j_eigen_tol=J_EIGEN_TOL, section=None):
    """First-type evidence for ``system`` with respect to ``J``.

    Certification failure gives ``NotJOrthonormal``.  Otherwise the
    reconstructed e_n must be J-eigenvectors and Q must anticommute with J
    (compressed to the e_n coordinates) for ``FirstTypeEvidence``; anything
    else is ``Inconclusive``.
    """
    cert_tol = system.tolerance if cert_tol is None else cert_tol
    tolerances = {"certification": cert_tol, "anticommutator": anticommutator_tol, "j_eigen": j_eigen_tol}
    grid = system.grid
    common = dict(family=system.family, N=system.N, L=grid.L, M=grid.M, tolerances=tolerances)
    try:
        certified = certify(system, J, cert_tol)
    except NotJOrthonormal as exc:
        return ClassificationReport(
            verdict=NOT_J_ORTHONORMAL, anticommutator_residual=None, j_eigen_residuals=(),
            parities=(), signs=(), j_deviation=abs(abs(exc.value) - 1.0), detail=str(exc), **common,
        )
    rec = reconstruct_Q(certified, section)
    e = rec.e_rows
    Je = J.apply_samples(e)
    J_e = inner_samples(grid, Je, e).T
    anti = float(np.linalg.norm(J_e @ rec.Q_hermite + rec.Q_hermite @ J_e, 2))
    residuals, parities = [], []
    for n in range(system.N):
        plus = math.sqrt(grid.h) * np.linalg.norm(Je[n] - e[n])
        minus = math.sqrt(grid.h) * np.linalg.norm(Je[n] + e[n])
        residuals.append(float(min(plus, minus)))
        parities.append(1 if plus <= minus else -1)
    first = anti < anticommutator_tol and max(residuals) < j_eigen_tol
    detail = "" if first else "finite section does not certify an anticommuting Q"
    if first and tuple(parities) != certified.signs:
        first, detail = False, "J-eigenvalues of e_n disagree with the signs of [phi_n, phi_n]"
    return ClassificationReport(
        verdict=FIRST_TYPE if first else INCONCLUSIVE,
        anticommutator_residual=anti,
        j_eigen_residuals=tuple(residuals),
        parities=tuple(parities),
        signs=certified.signs,
        section=rec.section,
        j_deviation=certified.j_deviation,
        detail=detail,
        **common,
    )


class QuasiBasisCurves(NamedTuple):
    phi_psi: list
    psi_phi: list
    exact: complex


def quasi_basis_residual(system, f, g, upto):
    """|<f,g> - sum_{n<k} <f,phi_n><psi_n,g>| for k = 0..upto, and the same
    with phi and psi exchanged."""
    if upto > system.N:
        raise ValueError(f"upto={upto} exceeds N={system.N}")
    grid = system.grid
    exact = inner(f, g)
    f_phi = inner_samples(grid, f.samples, system.phi)[0, :upto]
    f_psi = inner_samples(grid, f.samples, system.psi)[0, :upto]
    psi_g = inner_samples(grid, system.psi, g.samples)[:upto, 0]
    phi_g = inner_samples(grid, system.phi, g.samples)[:upto, 0]
    part1 = np.concatenate([[0.0], np.cumsum(f_phi * psi_g)])
    part2 = np.concatenate([[0.0], np.cumsum(f_psi * phi_g)])
    return QuasiBasisCurves(
        [float(v) for v in np.abs(exact - part1)],
        [float(v) for v in np.abs(exact - part2)],
        exact,
    )


def indefinite_coefficients(system, J, samples):
    """delta_n [f, phi_n] for every n."""
    signs = system.require_signs()
    return signs * inner_samples(system.grid, J.apply_samples(samples), system.phi)[0]


def expansion_minusQ(system, J, coefficients, upto):
    """||f - sum_{n<k} delta_n [f, phi_n] phi_n||_{-Q} for k = 0..upto.

    ``f`` is given by span coefficients, so the -Q norm is the coefficient
    l2 norm.  The indefinite coefficients are recomputed on the grid and must
    reproduce the input within the system tolerance.
    """
    system.require_signs()
    if upto > system.N:
        raise ValueError(f"upto={upto} exceeds N={system.N}")
    c = np.zeros(system.N, dtype=complex)
    given = np.asarray(coefficients, dtype=complex)
    c[: len(given)] = given
    grid_coeffs = indefinite_coefficients(system, J, system.synthesize(c))
    gap = float(np.max(np.abs(grid_coeffs - c)))
    if gap > max(system.tolerance, DEFAULT_CERT_TOL) * max(1.0, float(np.max(np.abs(c)))):
        raise KGRSError(f"grid-side indefinite coefficients miss the span coefficients by {gap:.3g}")
    out = []
    for k in range(upto + 1):
        err = np.concatenate([grid_coeffs[:k] - c[:k], c[k:]])
        out.append(float(np.linalg.norm(err)))
    return out


def extremality_quotient(system, g, section=None):
    """min over phi in the span of <G phi, phi> / |<phi, g>|^2.

    ``g`` holds coordinates in the orthonormal span basis (zero padded).  The
    minimum is 1 / (g* G^-1 g), attained at phi proportional to G^-1 g.  By
    default the section is exactly N, so spans are nested as N grows.
    """
    rec = reconstruct_Q(system, system.N if section is None else section)
    K = rec.section
    gv = np.zeros(K, dtype=complex)
    given = np.asarray(g, dtype=complex)
    if len(given) > K:
        raise ValueError(f"g has {len(given)} coordinates, section has {K}")
    gv[: len(given)] = given
    if not np.any(gv):
        raise ValueError("g must be nonzero")
    w, V = np.linalg.eigh(rec.G_matrix)
    proj = V.conj().T @ gv
    return float(1.0 / np.sum(np.abs(proj) ** 2 / w))
