import math

import numpy as np
import pytest

from fplab.quadrature import QuadratureError, integrate


def exp_bound(e):
    # |exp(z)| <= exp(Re z) <= exp(center + major)
    return np.exp(e.center + e.major)


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (-2.0, 3.0), (0.5, 0.50001)])
def test_exponential_within_certified_bound(a, b):
    res = integrate(np.exp, exp_bound, a, b, tol=1e-12)
    exact = math.exp(a) * math.expm1(b - a)
    assert res.abs_error <= 1e-12
    assert abs(res.value - exact) <= res.abs_error


def test_pole_near_interval_forces_refinement():
    # 1/(x^2 + c^2) has poles at +-ic; ellipses must keep their minor axis below c.
    c = 0.05

    def bound(e):
        gap = c - e.minor
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(gap > 0, 1.0 / gap**2, np.inf)

    res = integrate(lambda x: 1.0 / (x * x + c * c), bound, -1.0, 1.0, tol=1e-11)
    exact = 2 * math.atan(1 / c) / c
    assert abs(res.value - exact) <= res.abs_error
    assert res.panels > 4


def test_unbounded_integrand_fails_loudly():
    with pytest.raises(QuadratureError):
        integrate(lambda x: x, lambda e: np.full(e.rho.shape, np.inf), 0.0, 1.0, max_panels=50)


def test_rejects_empty_interval():
    with pytest.raises(ValueError):
        integrate(np.exp, exp_bound, 1.0, 1.0)
