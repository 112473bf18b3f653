"""Quadrature sanity against closed-form integrals.

Every tolerance assertion here also checks the reported error estimate,
because downstream modules fold those estimates into their own error
accounting and silently optimistic estimates would corrupt it.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levystore.quad import (QuadratureError, integrate,
                            integrate_semi_infinite)


def test_polynomial_is_exact():
    # Gauss-Kronrod 7-15 integrates degree-13 polynomials exactly on one panel
    res = integrate(lambda x: 7.0 * x**6 - 3.0 * x**2 + 1.0, 0.0, 2.0)
    truth = 2.0**7 - 2.0**3 + 2.0
    assert abs(res.value - truth) < 1e-12
    assert res.error < 1e-10


def test_arctan_to_pi():
    res = integrate(lambda x: 4.0 / (1.0 + x * x), 0.0, 1.0, tol=1e-12)
    assert abs(res.value - math.pi) <= max(res.error, 1e-12)


def test_inverse_sqrt_endpoint_singularity():
    res = integrate(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, tol=1e-10,
                    endpoint_exponents=(-0.5, None))
    assert abs(res.value - 2.0) <= max(res.error, 1e-10)


def test_singularity_at_upper_endpoint():
    res = integrate(lambda x: 1.0 / np.sqrt(1.0 - x), 0.0, 1.0, tol=1e-10,
                    endpoint_exponents=(None, -0.5))
    assert abs(res.value - 2.0) <= max(res.error, 1e-10)


def test_breakpoint_at_kink():
    res = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, tol=1e-12,
                    breakpoints=(0.3,))
    truth = 0.5 * (0.3**2 + 0.7**2)
    assert abs(res.value - truth) < 1e-11


def test_semi_infinite_exponential():
    res = integrate_semi_infinite(lambda x: np.exp(-x), 0.0, tol=1e-10,
                                  tail_bound=lambda T: math.exp(-T))
    assert abs(res.value - 1.0) <= max(res.error, 1e-9)


def test_semi_infinite_shifted_start():
    res = integrate_semi_infinite(lambda x: np.exp(-x), 3.0, tol=1e-10,
                                  tail_bound=lambda T: math.exp(-T))
    assert abs(res.value - math.exp(-3.0)) <= max(res.error, 1e-10)


def test_semi_infinite_with_endpoint_exponent():
    # int_0^inf x^{-1/2} e^{-x} dx = Gamma(1/2)
    res = integrate_semi_infinite(
        lambda x: np.where(x > 0, np.exp(-x) / np.sqrt(np.maximum(x, 1e-300)), 0.0),
        0.0, tol=1e-9, tail_bound=lambda T: math.exp(-T),
        endpoint_exponent=-0.5)
    assert abs(res.value - math.sqrt(math.pi)) <= max(res.error * 4.0, 1e-8)


def test_budget_exhaustion_carries_partial_result():
    f = lambda x: np.cos(200.0 * x)
    with pytest.raises(QuadratureError) as exc:
        integrate(f, 0.0, 10.0, tol=1e-14, max_intervals=4)
    partial = exc.value.result
    assert np.isfinite(partial.value)
    assert partial.error > 0.0


def test_bad_limits_rejected():
    with pytest.raises(ValueError):
        integrate(lambda x: x, 1.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-5, 5), d=st.floats(-5, 5),
       b=st.floats(0.1, 4.0))
def test_cubic_matches_antiderivative(c, d, b):
    res = integrate(lambda x: 3 * c * x**2 + d, 0.0, b, tol=1e-11)
    truth = c * b**3 + d * b
    assert abs(res.value - truth) <= max(res.error, 1e-9 * (1 + abs(truth)))


@settings(max_examples=25, deadline=None)
@given(split=st.floats(0.1, 0.9))
def test_interval_additivity(split):
    f = lambda x: np.exp(-x) * np.sin(3.0 * x)
    whole = integrate(f, 0.0, 1.0, tol=1e-12)
    left = integrate(f, 0.0, split, tol=1e-12)
    right = integrate(f, split, 1.0, tol=1e-12)
    assert abs(whole.value - (left.value + right.value)) < 1e-10
