"""Brute-force distributions of first-passage times, used as an oracle.

The pmf of T = N_1 is built from the first-step decomposition alone: either
the first step goes up (T = 1), or it goes down and the walk needs two
independent copies of T to climb back and then up (T = 1 + T' + T'').
N_d is then the d-fold convolution of T.  Nothing here touches the integral
or closed-form results the oracle is meant to check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fplab.walk import BiasParams, check_threshold

_ROUNDING = 1e-16
# Above this horizon the quadratic self-convolution gets slow; switch to the
# coefficient ratio recurrence.
_CONVOLUTION_LIMIT = 20001


@dataclass(frozen=True)
class PmfTable:
    """P[N_d = n] for n = d, d+2, ..., <= n_max (other n have mass 0).

    ``tail_mass`` is a certified upper bound on P[N_d > n_max].
    """

    params: BiasParams
    level: int
    n_max: int
    mass: np.ndarray
    tail_mass: float

    @property
    def support(self) -> np.ndarray:
        return self.level + 2 * np.arange(self.mass.size)

    def prob(self, n: int) -> float:
        if n < self.level or n > self.n_max or (n - self.level) % 2:
            return 0.0
        return float(self.mass[(n - self.level) // 2])

    def pgf(self, t: float) -> float:
        """Truncated sum of P[N_d = n] t^n."""
        return float(np.dot(self.mass, np.power(float(t), self.support.astype(float))))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(f"# p={self.params.exact} d={self.level} n_max={self.n_max} tail_mass={self.tail_mass!r}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "mass"])
            for n, m in zip(self.support, self.mass):
                writer.writerow([int(n), format(float(m), ".17g")])


def _certified_tail(mass: np.ndarray, n_max: int) -> float:
    return max(0.0, 1.0 - float(mass.sum())) + n_max * _ROUNDING


def single_step_pmf(params: BiasParams, n_max: int, method: str = "auto") -> PmfTable:
    """Distribution of T, the hitting time of level 1, up to ``n_max``.

    ``method="convolution"`` uses P[T=1] = p and
    P[T=2j+1] = q * sum_{a+b=2j} P[T=a] P[T=b]; ``"ratio"`` uses the
    first-order recurrence (j+1) P[T=2j+1] = 2(2j-1) p q P[T=2j-1], which
    follows from the quadratic q t phi^2 - phi + p t = 0 satisfied by the
    generating function.  ``"auto"`` picks convolution for moderate horizons.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if method == "auto":
        method = "convolution" if n_max <= _CONVOLUTION_LIMIT else "ratio"
    p, q = params.p, params.q
    size = (n_max - 1) // 2 + 1
    a = np.zeros(size)
    a[0] = p
    if method == "convolution":
        for j in range(1, size):
            a[j] = q * np.dot(a[:j], a[j - 1 :: -1])
    elif method == "ratio":
        j = np.arange(1, size)
        ratios = 2.0 * (2 * j - 1) * p * q / (j + 1)
        a[1:] = p * np.cumprod(ratios)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PmfTable(params, 1, n_max, a, _certified_tail(a, n_max))


def convolve_power(base: PmfTable, d: int, n_max: int | None = None) -> PmfTable:
    """Distribution of N_d = T_1 + ... + T_d, truncated at ``n_max``.

    Truncation is exact: P[N_d = n] for n <= n_max only involves P[T = k]
    with k <= n.
    """
    d = check_threshold(d)
    if base.level != 1:
        raise ValueError("base must be the single-step table")
    n_max = base.n_max if n_max is None else n_max
    if n_max > base.n_max:
        raise ValueError("n_max exceeds the base table horizon")
    if n_max < d:
        return PmfTable(base.params, d, n_max, np.zeros(0), 1.0)
    one = base.mass[: (n_max - 1) // 2 + 1]
    out = one
    for k in range(2, d + 1):
        keep = (n_max - k) // 2 + 1
        out = np.convolve(out, one)[:keep]
    return PmfTable(base.params, d, n_max, out, _certified_tail(out, n_max))


def convolve_tables(a: PmfTable, b: PmfTable) -> PmfTable:
    """Distribution of the sum of two independent table variables."""
    n_max = min(a.n_max, b.n_max)
    level = a.level + b.level
    keep = max(0, (n_max - level) // 2 + 1)
    out = np.convolve(a.mass, b.mass)[:keep]
    return PmfTable(a.params, level, n_max, out, _certified_tail(out, n_max))


def truncated_moment(table: PmfTable, order: int) -> tuple[float, float]:
    """sum_n P[N = n] n^order for order -1 or -2, with a certified error bound.

    Beyond the horizon n^order <= n_max^order, so the missing part is at most
    ``tail_mass * n_max**order``.
    """
    if order not in (-1, -2):
        raise ValueError("order must be -1 or -2")
    n = table.support.astype(float)
    value = float(np.dot(table.mass, n**order))
    rounding = table.mass.size * _ROUNDING * value
    return value, table.tail_mass * float(table.n_max) ** order + rounding
