"""Adaptive Gauss-Legendre quadrature with rigorous per-panel error bounds.

For a panel ``[a, b]`` and an integrand analytic inside the Bernstein
ellipse ``E_rho`` (foci ``a``, ``b``) with ``|f| <= M`` there, the
``n``-point Gauss rule satisfies

    |I - I_n| <= (b - a)/2 * 64/15 * M * rho**(-2n) / (rho**2 - 1).

The caller supplies ``M`` as a function of the ellipse geometry; this
module picks the best ``rho`` from a grid, bisects panels whose bound is
too large, and adds a floating-point rounding allowance.  The result is an
upper bound on the total error, not an estimate.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

NODES = 20
_X, _W = np.polynomial.legendre.leggauss(NODES)
_RHO = np.geomspace(1.02, 200.0, 48)
_EPS = np.finfo(float).eps


class QuadratureError(ArithmeticError):
    """Requested tolerance not reached within the panel budget."""


@dataclass(frozen=True)
class Ellipse:
    """Bernstein ellipses around panel ``[center - half, center + half]``.

    ``major`` and ``minor`` are the semi-axes, one entry per candidate rho.
    """

    center: float
    half: float
    rho: np.ndarray

    @property
    def major(self) -> np.ndarray:
        return 0.5 * self.half * (self.rho + 1.0 / self.rho)

    @property
    def minor(self) -> np.ndarray:
        return 0.5 * self.half * (self.rho - 1.0 / self.rho)


# ``bound(ellipse)`` returns an array of sup|f| over each candidate ellipse,
# with ``inf`` where the ellipse meets a singularity.
BoundFn = Callable[[Ellipse], np.ndarray]


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error: float
    panels: int


def _panel(f, bound: BoundFn, a: float, b: float):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    fx = f(c + h * _X)
    value = h * float(np.dot(_W, fx))
    m = bound(Ellipse(c, h, _RHO))
    with np.errstate(over="ignore", invalid="ignore"):
        trunc = h * 64.0 / 15.0 * m * _RHO ** (-2 * NODES) / (_RHO**2 - 1.0)
    trunc = float(np.nanmin(np.where(np.isfinite(trunc), trunc, np.inf)))
    rounding = 4 * (NODES + 8) * _EPS * h * float(np.dot(_W, np.abs(fx)))
    return value, trunc, rounding


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    bound: BoundFn,
    a: float,
    b: float,
    tol: float = 5e-13,
    max_panels: int = 4000,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` with certified absolute error ``<= tol``.

    A panel is accepted once its truncation bound is below its share of
    ``tol`` (proportional to width); otherwise it is bisected.
    """
    if not b > a:
        raise ValueError("need b > a")
    density = 0.5 * tol / (b - a)
    total = 0.0
    trunc_total = 0.0
    round_total = 0.0
    accepted = 0
    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        value, trunc, rounding = _panel(f, bound, lo, hi)
        if trunc <= density * (hi - lo):
            total += value
            trunc_total += trunc
            round_total += rounding
            accepted += 1
            continue
        if accepted + len(stack) >= max_panels or hi - lo <= 4 * _EPS * max(abs(lo), abs(hi)):
            raise QuadratureError(
                f"panel [{lo:.3g}, {hi:.3g}] bound {trunc:.3g} above target after {accepted} panels"
            )
        mid = 0.5 * (lo + hi)
        stack.append((mid, hi))
        stack.append((lo, mid))
    # Summation of accepted panels adds one more rounding per panel.
    round_total += accepted * _EPS * abs(total)
    err = trunc_total + round_total
    if err > tol:
        raise QuadratureError(f"certified error {err:.3g} above tolerance {tol:.3g}")
    return QuadResult(total, err, accepted)
