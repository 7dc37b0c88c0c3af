"""Uniform midpoint grids on [-L, L] and functions sampled on them.

The node layout x_k = (k - M/2 + 1/2) h never contains 0 and is symmetric,
so the parity x -> -x is the index reversal k -> M-1-k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatch, KGRSError, NonFiniteValue

DEFAULT_L = 14.0
DEFAULT_M = 1024
INTERIOR_MARGIN = 4.0


@dataclass(frozen=True)
class Grid:
    L: float = DEFAULT_L
    M: int = DEFAULT_M

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise KGRSError(f"half width must be positive, got {self.L}")
        if self.M <= 0 or self.M % 2:
            raise KGRSError(f"point count must be a positive even integer, got {self.M}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self):
        return 2.0 * self.L / self.M

    @cached_property
    def x(self):
        nodes = (np.arange(self.M) - self.M / 2 + 0.5) * self.h
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def xi(self):
        """Angular frequencies 2 pi j / (M h) in FFT order."""
        freqs = 2.0 * math.pi * np.fft.fftfreq(self.M, d=self.h)
        freqs.setflags(write=False)
        return freqs

    def interior(self, margin=INTERIOR_MARGIN):
        """Boolean mask of nodes with |x| <= L - margin."""
        return np.abs(self.x) <= self.L - margin

    def sample(self, func):
        return GridFunction(self, func(self.x))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.samples, dtype=complex)
        if values.shape != (self.grid.M,):
            raise KGRSError(f"expected {self.grid.M} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("grid function has non-finite samples")
        values.setflags(write=False)
        object.__setattr__(self, "samples", values)

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.samples - other.samples)

    def __neg__(self):
        return GridFunction(self.grid, -self.samples)

    def __mul__(self, scalar):
        return GridFunction(self.grid, scalar * self.samples)

    __rmul__ = __mul__

    def norm(self):
        return math.sqrt(self.grid.h) * float(np.linalg.norm(self.samples))

    def to_csv(self, path):
        """Write columns x, re, im under a ``# grid L=.. M=..`` header."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# grid L={self.grid.L:.17g} M={self.grid.M}\n")
            fh.write("x,re,im\n")
            for xk, v in zip(self.grid.x, self.samples):
                fh.write(f"{xk:.17g},{v.real:.17g},{v.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("# grid"):
                raise KGRSError(f"{path}: missing '# grid' header")
            params = dict(tok.split("=") for tok in header[len("# grid"):].split())
            grid = Grid(float(params["L"]), int(params["M"]))
            if fh.readline().strip() != "x,re,im":
                raise KGRSError(f"{path}: expected column line 'x,re,im'")
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        if rows.shape[0] != grid.M or not np.allclose(rows[:, 0], grid.x, rtol=0, atol=1e-12):
            raise KGRSError(f"{path}: abscissae do not match {grid}")
        return cls(grid, rows[:, 1] + 1j * rows[:, 2])


def inner(f, g):
    """h * sum f conj(g): linear in the first argument."""
    f._check(g)
    return complex(f.grid.h * np.vdot(g.samples, f.samples))


def inner_samples(grid, F, G):
    """Matrix of inner products <F_i, G_j> for stacked sample rows."""
    return grid.h * (np.atleast_2d(F) @ np.atleast_2d(G).conj().T)


def parity_apply(f):
    return GridFunction(f.grid, f.samples[::-1])


def fourier_transform(f):
    """Discrete unitary transform (2 pi)^(-1/2) int exp(-i x xi) f dx.

    Returns ``(xi, values)`` with frequencies in increasing order.
    """
    grid = f.grid
    spec = (grid.h / math.sqrt(2 * math.pi)) * np.exp(-1j * grid.x[0] * grid.xi) * np.fft.fft(f.samples)
    return np.fft.fftshift(grid.xi), np.fft.fftshift(spec)


def inverse_fourier_transform(grid, values):
    """Inverse of :func:`fourier_transform` for values in increasing-xi order."""
    spec = np.fft.ifftshift(np.asarray(values, dtype=complex))
    dxi = 2 * math.pi / (grid.M * grid.h)
    samples = (grid.M * dxi / math.sqrt(2 * math.pi)) * np.fft.ifft(np.exp(1j * grid.x[0] * grid.xi) * spec)
    return GridFunction(grid, samples)


def _symbol_values(grid, symbol):
    values = np.asarray(symbol(grid.xi), dtype=complex)
    if values.shape == ():
        values = np.full(grid.M, complex(values))
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("Fourier symbol is not finite on the frequency set")
    return values


def multiplier_apply_samples(grid, samples, symbol, noise_floor=None):
    """F^-1 symbol(xi) F applied along the last axis of ``samples``.

    The scaling and node-offset phases of the unitary transform cancel in
    F^-1 s F, so only the FFT remains.  With ``noise_floor`` set, Fourier
    modes below ``noise_floor * max|F f|`` (per row) are dropped before the
    symbol acts; exponentially growing symbols would otherwise amplify
    round-off in the spectral tail.
    """
    values = _symbol_values(grid, symbol)
    spec = np.fft.fft(np.asarray(samples, dtype=complex), axis=-1)
    if noise_floor is not None:
        mag = np.abs(spec)
        spec = np.where(mag > noise_floor * mag.max(axis=-1, keepdims=True), spec, 0.0)
    return np.fft.ifft(values * spec, axis=-1)


def fourier_multiplier_apply(f, symbol, noise_floor=None):
    return GridFunction(f.grid, multiplier_apply_samples(f.grid, f.samples, symbol, noise_floor))


def multiply_apply(f, weight):
    values = np.asarray(weight(f.grid.x), dtype=complex)
    if values.shape == ():
        values = np.full(f.grid.M, complex(values))
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("multiplier weight is not finite on the grid")
    return GridFunction(f.grid, values * f.samples)


def derivative_samples(grid, samples, order=1):
    """Spectral derivative of the given order along the last axis."""
    return multiplier_apply_samples(grid, samples, lambda xi: (1j * xi) ** order)


def orthonormal_span(grid, rows):
    """Orthonormal basis of the span of stacked sample rows.

    Returns ``(basis, R)`` with ``rows[n] = sum_j R[j, n] * basis[j]``;
    the basis is nested (the first k vectors span the first k rows).
    """
    A = math.sqrt(grid.h) * np.atleast_2d(rows).T
    Qm, R = np.linalg.qr(A)
    return Qm.T / math.sqrt(grid.h), R
