"""Hermite functions, Gauss-Hermite quadrature and the hypergeometric pieces
needed for the indefinite Gram matrix of the Gaussian deformation family."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import PochhammerZero, RecurrenceOverflow

MAX_HERMITE_ORDER = 500
MAX_QUADRATURE_POINTS = 400
_OVERFLOW = 1e300
_PI_QUARTER = math.pi ** -0.25


@dataclass(frozen=True)
class HermiteEval:
    n: int
    z: complex
    value: complex
    scaled: bool


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for integrals of ``f(x) * exp(-x**2)``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values):
        """Apply the rule to samples ``f(nodes)`` (last axis)."""
        return np.asarray(values) @ self.weights


def hermite_functions(nmax, z):
    """Normalized Hermite functions e_0..e_nmax at ``z``.

    Returns an array of shape ``(nmax + 1,) + np.shape(z)``, complex when ``z``
    is complex and real otherwise.  Uses the three-term recurrence on the
    normalized values, so neither H_n nor n! is ever formed.
    """
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    if nmax > MAX_HERMITE_ORDER:
        raise ValueError(f"order {nmax} exceeds {MAX_HERMITE_ORDER}")
    z = np.asarray(z)
    dtype = complex if np.iscomplexobj(z) else float
    z = z.astype(dtype)
    out = np.empty((nmax + 1,) + z.shape, dtype=dtype)
    with np.errstate(over="ignore", invalid="ignore"):
        out[0] = _PI_QUARTER * np.exp(-0.5 * z * z)
        if nmax >= 1:
            out[1] = math.sqrt(2.0) * z * out[0]
        for n in range(1, nmax):
            out[n + 1] = (math.sqrt(2.0 / (n + 1)) * z * out[n]
                          - math.sqrt(n / (n + 1)) * out[n - 1])
        peak = np.max(np.abs(out)) if out.size else 0.0
    if not np.isfinite(peak) or peak > _OVERFLOW:
        raise RecurrenceOverflow(
            f"Hermite recurrence magnitude {peak:.3g} exceeds {_OVERFLOW:g} "
            f"(nmax={nmax}, max|Im z|={np.max(np.abs(np.imag(z))) if z.size else 0:.3g})"
        )
    return out


def hermite_function(n, z):
    """e_n(z) = (2^n n! sqrt(pi))^(-1/2) H_n(z) exp(-z^2/2)."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    value = hermite_functions(n, z)[n]
    return value[()] if np.ndim(value) == 0 else value


def hermite_eval(n, z, scaled=True):
    """Scalar evaluation wrapped as a :class:`HermiteEval` record.

    With ``scaled=False`` the physicists' polynomial H_n(z) is returned,
    recovered from e_n through the log-space normalization.
    """
    z = complex(z)
    value = complex(hermite_function(n, z))
    if not scaled:
        lognorm = 0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi))
        value = value * np.exp(lognorm + 0.5 * z * z)
    return HermiteEval(n=n, z=z, value=value, scaled=scaled)


def _hermite_pair(K, x):
    """(e_K(x), e_{K-1}(x)) for real ``x``."""
    prev = np.zeros_like(x)
    cur = _PI_QUARTER * np.exp(-0.5 * x * x)
    for n in range(K):
        prev, cur = cur, math.sqrt(2.0 / (n + 1)) * x * cur - math.sqrt(n / (n + 1)) * prev
    return cur, prev


@lru_cache(maxsize=64)
def _gauss_hermite(K):
    m = K // 2
    if m:
        # Tricomi-type initial guesses for the positive zeros, largest first:
        # x = sqrt(2K+1) cos(t/2) with t - sin t = (4k-1) pi / (2K+1).
        rhs = math.pi * (4 * np.arange(1, m + 1) - 1) / (2 * K + 1)
        t = np.array([brentq(lambda s, r=r: s - math.sin(s) - r, 0.0, 2 * math.pi) for r in rhs])
        x = math.sqrt(2 * K + 1) * np.cos(0.5 * t)
        for _ in range(100):
            eK, eK1 = _hermite_pair(K, x)
            step = eK / (math.sqrt(2.0 * K) * eK1 - x * eK)
            x = x - step
            if np.max(np.abs(step)) <= 1e-14 * max(1.0, float(np.max(x))):
                break
        positive = np.sort(x)
    else:
        positive = np.empty(0)
    middle = [0.0] if K % 2 else []
    nodes = np.concatenate([-positive[::-1], middle, positive])
    _, eK1 = _hermite_pair(K, nodes)
    with np.errstate(divide="ignore", under="ignore"):
        weights = np.exp(-nodes * nodes - np.log(K * eK1 * eK1))
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def gauss_hermite_rule(K):
    """K-point Gauss-Hermite rule, exact for polynomials of degree < 2K."""
    if not 1 <= K <= MAX_QUADRATURE_POINTS:
        raise ValueError(f"K must lie in [1, {MAX_QUADRATURE_POINTS}], got {K}")
    return _gauss_hermite(int(K))


def hyp2f1_terminating(m, b, c, z):
    """Terminating 2F1(-m, b; c; z) = sum_{k<=m} (-m)_k (b)_k / ((c)_k k!) z^k.

    ``b`` may be any real; the series stops at k = m because (-m)_{m+1} = 0.
    """
    if m < 0 or int(m) != m:
        raise ValueError("m must be a nonnegative integer")
    total = 1.0
    term = 1.0
    for k in range(int(m)):
        if c + k == 0:
            raise PochhammerZero(f"(c)_{k + 1} vanishes for c = {c}")
        term *= (-m + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
    return total


def indefinite_gram_closed_form(n, m):
    """|[phi_n, phi_m]| for phi_n = e_n exp(-x^2/4) under parity.

    Zero when n + m is odd; otherwise

        sqrt(2^(n+m+1) / (3^(n+m+1) pi n! m!)) Gamma((n+m+1)/2)
            * |2F1(-m, -n; (1-m-n)/2; 3/2)|

    with the prefactor assembled in log space.
    """
    if n < 0 or m < 0:
        raise ValueError("indices must be nonnegative")
    if n > 60 or m > 60:
        raise ValueError("closed form is restricted to n, m <= 60")
    if (n + m) % 2:
        return 0.0
    s = n + m + 1
    logpre = (0.5 * (s * (math.log(2.0) - math.log(3.0)) - math.log(math.pi)
                     - math.lgamma(n + 1) - math.lgamma(m + 1))
              + math.lgamma(0.5 * s))
    series = hyp2f1_terminating(m, -n, 0.5 * (1 - m - n), 1.5)
    return math.exp(logpre) * abs(series)
