"""Reproductions of the pi-estimation experiments: exact curves and Monte Carlo runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fplab.estimators import Kind, budget_normalized_variance, estimator_coefficients
from fplab.walk import FAIR_COIN_STEP_CAP, sample_batch

FIGURE1_D_MAX = 201
HAT = Kind.pi(4)  # fair coin
TILDE = Kind.pi(6)  # p = 3/4


@dataclass
class Figure1Row:
    d: int
    ln_d_var_hat: float
    ln_d_var_tilde: float
    failed: bool = False


def figure1_rows(d_max: int = 101) -> list[Figure1Row]:
    """ln(d Var) of the fair-coin and p = 3/4 pi estimators for d = 1, 3, ..., d_max."""
    if d_max < 1 or d_max % 2 == 0:
        raise ValueError("d_max must be a positive odd integer")
    if d_max > FIGURE1_D_MAX:
        raise ValueError(f"d_max above {FIGURE1_D_MAX} is not supported (the p=3/4 variance underflows)")
    rows = []
    for d in range(1, d_max + 1, 2):
        try:
            hat = math.log(budget_normalized_variance(HAT, d))
            tilde = math.log(budget_normalized_variance(TILDE, d))
            rows.append(Figure1Row(d, hat, tilde))
        except (ArithmeticError, ValueError):
            rows.append(Figure1Row(d, math.nan, math.nan, failed=True))
    return rows


@dataclass
class BandRow:
    estimator: str
    p: str
    d: int
    m: int
    mean: float
    sd: float
    band_lo: float
    band_hi: float
    median_n: float
    max_n: int
    capped: int

    def contains(self, value: float, width: float = 4.0) -> bool:
        """Whether ``value`` lies within ``width`` standard errors of the mean."""
        return abs(self.mean - value) <= width * self.sd / math.sqrt(self.m)


@dataclass
class ExperimentSummary:
    rows: list
    metadata: dict = field(default_factory=dict)


def _band(name: str, kind: Kind, d: int, m: int, seed: int, workers: int, step_cap: int | None) -> BandRow:
    spec = estimator_coefficients(kind, d)
    batch = sample_batch(spec.p_implied, d, m, seed, workers=workers, step_cap=step_cap, on_cap="flag")
    ok = ~batch.capped
    est = spec.apply(batch.win_rates()[ok])
    n = batch.n_steps[ok]
    mean = float(est.mean()) if est.size else math.nan
    sd = float(est.std(ddof=1)) if est.size > 1 else math.nan
    return BandRow(
        estimator=name,
        p=str(spec.p_implied.exact),
        d=d,
        m=m,
        mean=mean,
        sd=sd,
        band_lo=mean - sd / 2,
        band_hi=mean + sd / 2,
        median_n=float(np.median(n)) if n.size else math.nan,
        max_n=int(batch.n_steps.max()),
        capped=int(batch.capped.sum()),
    )


def figure2_summary(
    d_list=(1, 3, 5, 7, 9),
    m: int = 100,
    seed: int = 0,
    workers: int = 1,
    step_cap: int = FAIR_COIN_STEP_CAP,
) -> ExperimentSummary:
    """M replications of both pi estimators per odd d.

    Seeds differ per (estimator, d) so that runs are independent; capped
    fair-coin replications are excluded from the statistics but counted
    (``max_n`` includes them, as a lower bound on the true maximum).
    """
    if m < 2:
        raise ValueError("M must be >= 2")
    rows = []
    for d in d_list:
        if d < 1 or d % 2 == 0:
            raise ValueError(f"figure 2 needs odd thresholds, got {d}")
        rows.append(_band("hat", HAT, d, m, _sub_seed(seed, 0, d), workers, step_cap))
        rows.append(_band("tilde", TILDE, d, m, _sub_seed(seed, 1, d), workers, step_cap))
    return ExperimentSummary(rows)


def _sub_seed(seed: int, which: int, d: int) -> int:
    return (seed * 1_000_003 + which * 10_007 + d) & ((1 << 63) - 1)


def pi45_summary(replications: int = 10_000, seed: int = 0, workers: int = 1, d: int = 45) -> dict:
    """Run the p = 3/4 pi estimator at threshold d many times."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    spec = estimator_coefficients(TILDE, d)
    batch = sample_batch(spec.p_implied, d, replications, seed, workers=workers)
    est = spec.apply(batch.win_rates())
    err = np.abs(est - math.pi)
    n = batch.n_steps
    return {
        "d": d,
        "p": str(spec.p_implied.exact),
        "replications": replications,
        "max_abs_error": float(err.max()),
        "mean_estimate": float(est.mean()),
        "n_min": int(n.min()),
        "n_mean": float(n.mean()),
        "n_max": int(n.max()),
        "n_sd": float(n.std(ddof=1)) if n.size > 1 else 0.0,
    }
