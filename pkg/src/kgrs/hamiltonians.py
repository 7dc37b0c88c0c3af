"""Spectral realizations of the model Hamiltonians and the finite-rank
operators H_{phi,psi} f = sum lambda_n <f, psi_n> phi_n."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import EigensolverError, GridTooSmall, ParityDefect
from .grid import GridFunction, derivative_samples, inner_samples

log = logging.getLogger(__name__)

PARITY_TOL = 1e-8
MAX_ANHARMONIC_N = 40


def shifted_oscillator_samples(grid, a, samples):
    x = grid.x
    d2 = derivative_samples(grid, samples, 2)
    return -d2 + (x * x + 2j * a * x) * samples


def shifted_oscillator_apply(a, f):
    """(-d^2/dx^2 + x^2 + 2 i a x) f."""
    return GridFunction(f.grid, shifted_oscillator_samples(f.grid, a, f.samples))


def example1_samples(grid, samples, adjoint=False):
    x = grid.x
    d1 = derivative_samples(grid, samples, 1)
    d2 = derivative_samples(grid, samples, 2)
    if adjoint:
        return 0.5 * (-d2 + x * d1 + 0.5 * (1.5 * x * x + 1.0) * samples)
    return 0.5 * (-d2 - x * d1 + 0.5 * (1.5 * x * x - 1.0) * samples)


def example1_apply(f):
    """H = (-f'' - x f' + (3x^2/2 - 1) f / 2) / 2."""
    return GridFunction(f.grid, example1_samples(f.grid, f.samples))


def example1_adjoint_apply(f):
    """H* = (-f'' + x f' + (3x^2/2 + 1) f / 2) / 2."""
    return GridFunction(f.grid, example1_samples(f.grid, f.samples, adjoint=True))


def perturbed_anharmonic_samples(grid, beta, p_values, samples, adjoint=False):
    """H_beta +- (2 p' d/dx + p'') - p'^2, derivatives of p taken spectrally."""
    dp = derivative_samples(grid, p_values, 1).real
    d2p = derivative_samples(grid, p_values, 2).real
    d1 = derivative_samples(grid, samples, 1)
    d2 = derivative_samples(grid, samples, 2)
    base = -d2 + np.abs(grid.x) ** beta * samples
    sign = -1.0 if adjoint else 1.0
    return base + sign * (2 * dp * d1 + d2p * samples) - dp * dp * samples


def eigen_residuals(grid, applied, rows, lambdas, mask=None):
    """||H phi_n - lambda_n phi_n|| / ||phi_n|| row by row."""
    rows = np.atleast_2d(rows)
    diff = np.atleast_2d(applied) - np.asarray(lambdas)[:, None] * rows
    if mask is not None:
        diff = diff[:, mask]
        rows = rows[:, mask]
    return [float(v) for v in np.linalg.norm(diff, axis=1) / np.linalg.norm(rows, axis=1)]


@lru_cache(maxsize=8)
def _second_derivative_matrix(grid):
    D2 = np.fft.ifft(-(grid.xi ** 2)[:, None] * np.fft.fft(np.eye(grid.M), axis=0), axis=0).real
    return 0.5 * (D2 + D2.T)


def _orient(v, x):
    """Fix the sign so the right-hand tail is positive, as for Hermite functions."""
    significant = np.flatnonzero((np.abs(v) > 1e-3 * np.max(np.abs(v))) & (x > 0))
    k = significant[-1] if len(significant) else int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


@lru_cache(maxsize=16)
def _anharmonic(beta, N, grid):
    H = -_second_derivative_matrix(grid) + np.diag(np.abs(grid.x) ** beta)
    try:
        w, V = scipy.linalg.eigh(H, subset_by_index=[0, N - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"dense eigensolver failed for beta={beta}: {exc}") from exc
    out = []
    for n in range(N):
        v = V[:, n]
        mirrored = v[::-1]
        s = 1 if float(v @ mirrored) >= 0 else -1
        defect = float(np.linalg.norm(mirrored - s * v))
        if defect > PARITY_TOL:
            raise ParityDefect(f"eigenvector {n} has parity defect {defect:.3g}")
        log.debug("anharmonic beta=%g n=%d parity defect %.3g", beta, n, defect)
        v = 0.5 * (v + s * mirrored)
        v = _orient(v, grid.x) / (math.sqrt(grid.h) * np.linalg.norm(v))
        edge = max(abs(v[0]), abs(v[-1]))
        spectrum = np.abs(np.fft.fft(v))
        tail = spectrum[grid.M // 2 - grid.M // 16: grid.M // 2 + grid.M // 16].max() / spectrum.max()
        if edge > 1e-12 or tail > 1e-10:
            raise GridTooSmall(
                f"anharmonic eigenfunction {n} not resolved (edge {edge:.2g}, spectral tail {tail:.2g})",
                suggested_L=1.25 * grid.L if edge > 1e-12 else grid.L,
            )
        v.setflags(write=False)
        out.append((float(w[n]), v, s))
    return tuple(out)


def anharmonic_basis(beta, N, grid, _allow_any_beta=False):
    """Lowest N eigenpairs of -d^2/dx^2 + |x|^beta on the grid.

    Returns ``[(eigenvalue, GridFunction, parity), ...]``; eigenfunctions have
    unit grid norm and the Hermite sign convention.
    """
    if not _allow_any_beta and not beta > 2:
        raise ValueError(f"beta must exceed 2, got {beta}")
    if not 1 <= N <= MAX_ANHARMONIC_N:
        raise ValueError(f"N must lie in [1, {MAX_ANHARMONIC_N}], got {N}")
    return [(lam, GridFunction(grid, v), s) for lam, v, s in _anharmonic(float(beta), int(N), grid)]


def anharmonic_rows(beta, N, grid):
    pairs = _anharmonic(float(beta), int(N), grid)
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


@dataclass(frozen=True)
class SpectrumReport:
    label: str
    N: int
    eigenvalues: tuple
    residuals: tuple
    grid: tuple = field(default=(0.0, 0))
    adjoint_eigenvalues: tuple = ()
    eigenvalue_defect: float = 0.0
    hermiticity_defect: float = 0.0
    power_check: tuple = ()

    def to_dict(self):
        pairs = lambda vals: [[float(complex(v).real), float(complex(v).imag)] for v in vals]
        return {
            "label": self.label,
            "N": self.N,
            "eigenvalues": pairs(self.eigenvalues),
            "adjoint_eigenvalues": pairs(self.adjoint_eigenvalues),
            "residuals": list(self.residuals),
            "eigenvalue_defect": self.eigenvalue_defect,
            "hermiticity_defect": self.hermiticity_defect,
            "power_check": [
                {"index": i, "estimate": [float(e.real), float(e.imag)], "defect": d}
                for i, e, d in self.power_check
            ],
            "grid": {"L": self.grid[0], "M": self.grid[1]},
        }


def ne1_apply_samples(system, lambdas, samples, swapped=False):
    """H_{phi,psi} (or H_{psi,phi} when ``swapped``) on stacked samples."""
    left, right = (system.psi, system.phi) if swapped else (system.phi, system.psi)
    coeffs = system.grid.h * (np.atleast_2d(samples) @ right.conj().T)
    out = (coeffs * np.asarray(lambdas)) @ left
    return out[0] if np.ndim(samples) == 1 else out


def _by_real_part(values):
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def _inverse_iteration(A, target, rng, steps=25):
    n = A.shape[0]
    shift = target + 1e-6 * (1.0 + abs(target))
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    shifted = A - shift * np.eye(n)
    for _ in range(steps):
        x = np.linalg.solve(shifted, x)
        x /= np.linalg.norm(x)
    return complex(np.vdot(x, A @ x))


def build_truncated_NE1(system, lambdas, label=None, checks=3, seed=0):
    """Assemble H_N = sum lambda_n |phi_n><psi_n| and recover its spectrum.

    The span-coordinate matrix A[m, n] = <H_N phi_n, psi_m> is computed on
    the grid; its eigenvalues are the recovered spectrum.  ``checks``
    randomly chosen eigenvalues are re-derived by inverse iteration.
    """
    lambdas = np.asarray(lambdas, dtype=complex)
    if lambdas.shape != (system.N,):
        raise ValueError(f"need {system.N} eigenvalues, got {lambdas.shape}")
    grid = system.grid
    applied = ne1_apply_samples(system, lambdas, system.phi)
    A = inner_samples(grid, applied, system.psi).T
    applied_adj = ne1_apply_samples(system, lambdas.conj(), system.psi, swapped=True)
    B = inner_samples(grid, applied_adj, system.phi).T
    eig = _by_real_part(np.linalg.eigvals(A))
    eig_adj = _by_real_part(np.linalg.eigvals(B))
    defect = float(np.max(np.abs(eig - _by_real_part(lambdas)))) if system.N else 0.0
    residuals = eigen_residuals(grid, applied, system.phi, lambdas)
    rng = np.random.default_rng(seed)
    picks = sorted(rng.choice(system.N, size=min(checks, system.N), replace=False).tolist())
    power = []
    for j in picks:
        est = _inverse_iteration(A, lambdas[j], rng)
        power.append((int(j), est, float(abs(est - lambdas[j]))))
    return SpectrumReport(
        label=label or f"H_phi_psi[{system.family}]",
        N=system.N,
        eigenvalues=tuple(complex(v) for v in eig),
        residuals=tuple(residuals),
        grid=(grid.L, grid.M),
        adjoint_eigenvalues=tuple(complex(v) for v in eig_adj),
        eigenvalue_defect=defect,
        hermiticity_defect=float(np.max(np.abs(A - A.conj().T))) if system.N else 0.0,
        power_check=tuple(power),
    )
