import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgrs.errors import PochhammerZero, RecurrenceOverflow
from kgrs.grid import Grid
from kgrs.specfun import (
    gauss_hermite_rule,
    hermite_eval,
    hermite_function,
    hermite_functions,
    hyp2f1_terminating,
    indefinite_gram_closed_form,
)


def _hermite_series(n, z):
    """e_n(z) from the explicit coefficient sum of H_n, 40 digits."""
    with mp.workdps(40):
        z = mp.mpc(z)
        H = mp.factorial(n) * mp.fsum(
            (-1) ** m * (2 * z) ** (n - 2 * m) / (mp.factorial(m) * mp.factorial(n - 2 * m))
            for m in range(n // 2 + 1)
        )
        val = H * mp.exp(-z * z / 2) / mp.sqrt(2 ** n * mp.factorial(n) * mp.sqrt(mp.pi))
        return complex(val)


def test_e0_at_origin():
    assert hermite_function(0, 0.0) == pytest.approx(math.pi ** -0.25, abs=1e-15)
    assert hermite_function(0, 0.0) == pytest.approx(0.7511255444, abs=1e-10)


def test_e1_vanishes_at_origin():
    assert hermite_function(1, 0.0) == 0.0


def test_e5_complex_matches_series():
    # frozen from the 50-digit coefficient sum
    expected = complex(0.49396054739078378316, -0.33735521519791960311)
    assert abs(hermite_function(5, 0.7 + 0.3j) - expected) < 1e-14


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(0, 20),
    re=st.floats(-4.5, 4.5),
    im=st.floats(-2.0, 2.0),
)
def test_recurrence_matches_series(n, re, im):
    z = complex(re, im)
    if abs(z) > 5:
        z = z / abs(z) * 5
    ref = _hermite_series(n, z)
    got = complex(hermite_function(n, z))
    scale = max(abs(ref), 1e-3)
    assert abs(got - ref) <= 1e-10 * scale


def test_real_argument_bounded():
    x = np.linspace(-40, 40, 4001)
    e = hermite_functions(200, x)
    assert np.isrealobj(e)
    assert np.max(np.abs(e)) <= 1.1


def test_unscaled_polynomial():
    # H_3(x) = 8x^3 - 12x
    assert hermite_eval(3, 1.5, scaled=False).value == pytest.approx(8 * 1.5 ** 3 - 12 * 1.5, rel=1e-13)
    rec = hermite_eval(3, 1.5)
    assert rec.scaled and rec.n == 3


def test_overflow_guard():
    with pytest.raises(RecurrenceOverflow):
        hermite_functions(500, 60j)
    with pytest.raises(ValueError):
        hermite_functions(501, 0.0)


def test_gh_single_point():
    rule = gauss_hermite_rule(1)
    assert rule.nodes.tolist() == [0.0]
    assert rule.weights[0] == pytest.approx(math.sqrt(math.pi), rel=1e-15)


def test_gh_two_points():
    # roots of 4x^2 - 2 with equal weights from the degree-0 moment
    rule = gauss_hermite_rule(2)
    assert np.allclose(rule.nodes, [-1 / math.sqrt(2), 1 / math.sqrt(2)], rtol=0, atol=1e-15)
    assert np.allclose(rule.weights, [math.sqrt(math.pi) / 2] * 2, rtol=1e-14)


def test_gh_fourth_moment():
    rule = gauss_hermite_rule(20)
    assert rule.integrate(rule.nodes ** 4) == pytest.approx(0.75 * math.sqrt(math.pi), abs=1e-13)


@pytest.mark.parametrize("K", [1, 2, 3, 7, 20, 64, 101, 200, 300, 400])
def test_gh_rule_invariants(K):
    rule = gauss_hermite_rule(K)
    nodes, weights = rule.nodes, rule.weights
    assert np.all(np.diff(nodes) > 0)
    assert np.array_equal(nodes, -nodes[::-1])
    assert abs(weights.sum() / math.sqrt(math.pi) - 1) < 1e-12
    ref_nodes, ref_weights = np.polynomial.hermite.hermgauss(K) if K <= 300 else (None, None)
    if ref_nodes is not None:
        assert np.max(np.abs(nodes - ref_nodes)) < 1e-12 * max(1.0, nodes[-1])
        assert np.max(np.abs(weights - ref_weights)) < 1e-12 * weights.max()
    if K <= 300:
        assert np.all(weights > 0)
    else:
        # outermost weights fall below the smallest subnormal double
        assert np.all(weights >= 0)


@pytest.mark.parametrize("K", [5, 12, 33])
def test_gh_exact_on_polynomials(K):
    rule = gauss_hermite_rule(K)
    for d in range(0, 2 * K, 2):
        exact = math.gamma((d + 1) / 2)
        got = rule.integrate(rule.nodes ** d)
        assert abs(got - exact) <= 1e-12 * exact
        assert abs(rule.integrate(rule.nodes ** (d + 1))) <= 1e-12 * exact


def test_gh_rejects_out_of_range():
    with pytest.raises(ValueError):
        gauss_hermite_rule(0)
    with pytest.raises(ValueError):
        gauss_hermite_rule(401)


def test_hermite_orthonormality_by_quadrature():
    rule = gauss_hermite_rule(80)
    e = hermite_functions(40, rule.nodes)
    # divide out exp(-x^2) folded into the weights
    G = (e * np.exp(rule.nodes ** 2)) @ np.diag(rule.weights) @ e.T
    assert np.max(np.abs(G - np.eye(41))) < 1e-10


def _hyp_fraction(m, b, c, z):
    total, term = Fraction(1), Fraction(1)
    for k in range(m):
        term *= Fraction(-m + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
    return total


def test_hyp2f1_examples():
    assert hyp2f1_terminating(0, 7, 0.3, 2.0) == 1.0
    assert hyp2f1_terminating(2, 0, -0.5, 1.5) == 1.0
    expected = _hyp_fraction(2, Fraction(1), Fraction(-1, 2), Fraction(3, 2))
    assert expected == -11
    assert hyp2f1_terminating(2, 1, -0.5, 1.5) == pytest.approx(-11.0, abs=1e-13)


@pytest.mark.parametrize("m,b,c", [(5, -3, Fraction(-7, 2)), (8, -8, Fraction(-15, 2)), (6, 4, Fraction(5, 3))])
def test_hyp2f1_matches_rational_sum(m, b, c):
    z = Fraction(3, 2)
    exact = float(_hyp_fraction(m, Fraction(b), c, z))
    assert hyp2f1_terminating(m, b, float(c), 1.5) == pytest.approx(exact, rel=1e-12)


def test_hyp2f1_vanishing_pochhammer():
    with pytest.raises(PochhammerZero):
        hyp2f1_terminating(3, 1, -1, 0.5)


def test_closed_form_examples():
    assert indefinite_gram_closed_form(0, 1) == 0.0
    assert indefinite_gram_closed_form(0, 0) == pytest.approx(math.sqrt(2 / 3), rel=1e-14)
    assert indefinite_gram_closed_form(0, 2) == pytest.approx(1 / (3 * math.sqrt(3)), rel=1e-14)


def _example1_indefinite_by_quadrature(n, m, rule):
    # [phi_n, phi_m] = int e_n(-x) e_m(x) exp(-x^2/2) dx
    x, w = rule.nodes, rule.weights
    e = hermite_functions(max(n, m), x)
    return float(np.sum(w * np.exp(0.5 * x * x) * e[n][::-1] * e[m]))


def test_closed_form_vs_quadrature():
    rule = gauss_hermite_rule(120)
    for n in range(31):
        for m in range(31 - n):
            q = abs(_example1_indefinite_by_quadrature(n, m, rule))
            assert abs(indefinite_gram_closed_form(n, m) - q) < 1e-8, (n, m)


def test_parity_selection():
    for n in range(25):
        for m in range(25):
            value = indefinite_gram_closed_form(n, m)
            assert (value == 0.0) == ((n + m) % 2 == 1)


def test_closed_form_range():
    assert math.isfinite(indefinite_gram_closed_form(60, 60))
    with pytest.raises(ValueError):
        indefinite_gram_closed_form(61, 0)
