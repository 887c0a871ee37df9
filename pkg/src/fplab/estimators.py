"""Unbiased coin-flip estimators of pi and ln 2.

Rearranging the closed forms for E[R/N] gives an affine map
``estimate = scale * (R/N - offset)`` whose expectation is exactly the
target constant.  For pi with a coin of odds ratio r_k = tan(pi/k)^2,

    scale  = (-1)^((d-1)/2) * k * r^(d/2) / d
    offset = 1 - d * sum_{j=0}^{(d-1)/2} (-1)^j r^(-j) / (d - 2j)

and for ln 2 with a fair coin and even d = 2m,

    scale  = (-1)^(m+1) / m
    offset = 1 - m * sum_{i=1}^{m} (-1)^(m+i) C(m, i) (2^i - 1) / i.

``scale`` is tiny and ``offset`` huge for large d, so both are kept exact
(rationals, or rationals times one square root) and only
``shift = scale * offset``, which is of order one, is rounded to double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from fplab.exact import expect_win_rate, expected_hitting_time, var_win_rate
from fplab.surd import Surd
from fplab.walk import BiasParams, FirstPassageSample, check_threshold, win_rate

EXACT_KS = (4, 6, 8, 12)
_DPS = 60
PLAN_D_LIMIT = 10**4


class ParityMismatch(ValueError):
    pass


class UnsupportedKind(ValueError):
    pass


class NoFiniteD(RuntimeError):
    """No threshold up to the scan limit meets the requested accuracy."""


@dataclass(frozen=True)
class Kind:
    """``Kind("pi", k)`` for the odd-d pi estimators, ``Kind("ln2")`` for ln 2."""

    name: str
    k: int | None = None

    def __post_init__(self):
        if self.name == "pi":
            if self.k is None or int(self.k) != self.k or self.k < 4:
                raise UnsupportedKind(f"pi estimators need an integer k >= 4, got {self.k!r}")
        elif self.name == "ln2":
            if self.k is not None:
                raise UnsupportedKind("the ln 2 estimator takes no k")
        else:
            raise UnsupportedKind(f"unknown estimator kind {self.name!r}")

    @classmethod
    def pi(cls, k: int = 6) -> Kind:
        return cls("pi", k)

    @classmethod
    def ln2(cls) -> Kind:
        return cls("ln2")

    @property
    def parity(self) -> int:
        """Required d mod 2."""
        return 1 if self.name == "pi" else 0

    @property
    def target(self) -> float:
        return math.pi if self.name == "pi" else math.log(2)

    def __str__(self) -> str:
        return f"pi[k={self.k}]" if self.name == "pi" else "ln2"


def _sqrt_r(k: int):
    """tan(pi/k), exactly when it lies in Q(sqrt n), else a 60-digit mpf."""
    if k == 4:
        return Surd(1)
    if k == 6:
        return Surd(0, Fraction(1, 3), 3)
    if k == 8:
        return Surd(-1, 1, 2)
    if k == 12:
        return Surd(2, -1, 3)
    with mpmath.workdps(_DPS):
        return mpmath.tan(mpmath.pi / k)


def _unwrap(x):
    return x.a if isinstance(x, Surd) and x.is_rational else x


def r_for_k(k: int):
    """Odds ratio r_k = tan(pi/k)^2 and p_k = 1/(1 + r_k).

    Rational (Fraction) for k = 4, 6; :class:`Surd` for k = 8, 12; a 60-digit
    mpmath float otherwise.
    """
    if int(k) != k or k < 4:
        raise UnsupportedKind(f"k must be an integer >= 4, got {k!r}")
    s = _sqrt_r(int(k))
    if isinstance(s, Surd):
        r = s * s
        return _unwrap(r), _unwrap(1 / (1 + r))
    with mpmath.workdps(_DPS):
        r = s * s
        return r, 1 / (1 + r)


def _to_float(x) -> float:
    return float(x)


def _exact_str(x) -> str:
    if isinstance(x, Surd):
        return x.exact_str()
    if isinstance(x, Fraction):
        return str(x)
    return mpmath.nstr(x, _DPS - 5)


@dataclass(frozen=True)
class EstimatorSpec:
    """``estimate = scale * (win_rate - offset)`` with E[estimate] = target.

    ``scale``, ``offset`` and ``shift = scale * offset`` are exact
    (Fraction or Surd) for ln 2 and for pi with k in {4, 6, 8, 12}, and
    60-digit mpmath floats for other k.
    """

    kind: Kind
    d: int
    p_implied: BiasParams
    p_exact: object
    scale: object
    offset: object
    shift: object

    @property
    def target(self) -> float:
        return self.kind.target

    @property
    def is_exact(self) -> bool:
        return isinstance(self.scale, (Surd, Fraction))

    @property
    def scale_float(self) -> float:
        return _to_float(self.scale)

    @property
    def shift_float(self) -> float:
        return _to_float(self.shift)

    @property
    def scale_squared(self) -> float:
        return _to_float(self.scale * self.scale)

    def apply(self, w):
        """Map a win rate (scalar or array) to the estimate."""
        return self.scale_float * w - self.shift_float

    def to_json(self) -> dict:
        return {
            "kind": self.kind.name,
            "k": self.kind.k,
            "d": self.d,
            "p_implied": _exact_str(self.p_exact),
            "p_implied_double": self.p_implied.p,
            "scale": {"exact": _exact_str(self.scale), "double": self.scale_float},
            "offset": {"exact": _exact_str(self.offset), "double": _to_float(self.offset)},
            "target": "pi" if self.kind.name == "pi" else "ln2",
        }


def _pi_coefficients(k: int, d: int):
    s = _sqrt_r(k)
    m = (d - 1) // 2
    sign = -1 if m % 2 else 1
    if isinstance(s, Surd):
        r = s * s
        r_inv = 1 / r
        scale = sign * k * r**m * s / d
        total = sum(((-1) ** j * r_inv**j / (d - 2 * j) for j in range(m + 1)), Surd(0))
        offset = 1 - d * total
        shift = scale * offset
        p = 1 / (1 + r)
        return _unwrap(p), _unwrap(scale), _unwrap(offset), _unwrap(shift)
    # offset ~ r^(-m): carry its digits on top of the working precision.
    dps = _DPS + int(m * max(0.0, -2 * math.log10(float(s)))) + 5
    with mpmath.workdps(dps):
        s = mpmath.tan(mpmath.pi / k)
        r = s * s
        scale = sign * k * r**m * s / d
        offset = 1 - d * mpmath.fsum((-1) ** j * r ** (-j) / (d - 2 * j) for j in range(m + 1))
        return 1 / (1 + r), scale, offset, scale * offset


def _ln2_coefficients(d: int):
    m = d // 2
    scale = Fraction((-1) ** (m + 1), m)
    total = sum(Fraction((-1) ** (m + i) * math.comb(m, i) * (2**i - 1), i) for i in range(1, m + 1))
    offset = 1 - m * total
    return Fraction(1, 2), scale, offset, scale * offset


def estimator_coefficients(kind: Kind, d: int) -> EstimatorSpec:
    """Build the estimator for ``kind`` at threshold ``d`` (parity must match)."""
    d = check_threshold(d)
    if not isinstance(kind, Kind):
        raise UnsupportedKind(f"expected a Kind, got {kind!r}")
    if d % 2 != kind.parity:
        raise ParityMismatch(f"{kind} needs {'odd' if kind.parity else 'even'} d, got d={d}")
    if kind.name == "pi":
        p, scale, offset, shift = _pi_coefficients(kind.k, d)
    else:
        p, scale, offset, shift = _ln2_coefficients(d)
    params = BiasParams(p if isinstance(p, Fraction) else float(p))
    return EstimatorSpec(kind, d, params, p, scale, offset, shift)


def evaluate_estimator(spec: EstimatorSpec, sample: FirstPassageSample) -> float:
    if sample.level != spec.d:
        raise ValueError(f"sample was drawn at d={sample.level}, estimator needs d={spec.d}")
    return spec.apply(win_rate(sample))


def expected_value_identity(spec: EstimatorSpec, method: str = "closed_form") -> float:
    """The estimator applied to the exact mean win rate; equals the target."""
    return spec.apply(expect_win_rate(spec.p_implied, spec.d, method=method))


def _implied_params(kind: Kind) -> BiasParams:
    if kind.name == "ln2":
        return BiasParams(Fraction(1, 2))
    _, p = r_for_k(kind.k)
    return BiasParams(p if isinstance(p, Fraction) else float(p))


def _scale_squared(kind: Kind, d: int) -> float:
    """scale^2 without forming the offset: 1/m^2 for ln 2, k^2 r^d / d^2 for pi."""
    if kind.name == "ln2":
        return 1.0 / (d // 2) ** 2
    r, _ = r_for_k(kind.k)
    with mpmath.workdps(40):
        if isinstance(r, Surd):
            r = r.to_mpf(40)
        elif isinstance(r, (Fraction, int)):
            r = mpmath.mpf(Fraction(r).numerator) / Fraction(r).denominator
        return float(kind.k**2 * r**d / d**2)


def estimator_variance(kind: Kind, d: int) -> float:
    """Var[estimate] = scale^2 Var[R/N]; cheap in d, so the planner can scan far."""
    d = check_threshold(d)
    if d % 2 != kind.parity:
        raise ParityMismatch(f"{kind} needs {'odd' if kind.parity else 'even'} d, got d={d}")
    return _scale_squared(kind, d) * var_win_rate(_implied_params(kind), d)


def budget_normalized_variance(kind: Kind, d: int) -> float:
    """d * Var[estimate]: variance at equal expected coin-flip budget."""
    return d * estimator_variance(kind, d)


@dataclass(frozen=True)
class PlanResult:
    kind: Kind
    d_chosen: int
    chebyshev_bound: float
    eps: float
    delta: float
    expected_cost: float

    def to_json(self) -> dict:
        return {
            "kind": self.kind.name,
            "k": self.kind.k,
            "d_chosen": self.d_chosen,
            "chebyshev_bound": self.chebyshev_bound,
            "eps": self.eps,
            "delta": self.delta,
            "expected_cost": None if math.isinf(self.expected_cost) else self.expected_cost,
            "expected_cost_infinite": math.isinf(self.expected_cost),
        }


def chebyshev_bound(kind: Kind, d: int, eps: float) -> float:
    """Upper bound Var[estimate] / eps^2 on P[|estimate - target| > eps]."""
    return estimator_variance(kind, d) / eps**2


def choose_threshold(kind: Kind, eps: float, delta: float, d_limit: int = PLAN_D_LIMIT) -> PlanResult:
    """Smallest d of the right parity with Var[estimate]/eps^2 <= delta.

    For the fair coin the plan is still returned, with infinite expected cost.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    d = 1 if kind.parity else 2
    while d <= d_limit:
        bound = chebyshev_bound(kind, d, eps)
        if bound <= delta:
            return PlanResult(kind, d, bound, eps, delta, expected_hitting_time(_implied_params(kind), d))
        d += 2
    raise NoFiniteD(f"no d <= {d_limit} reaches P[|error| > {eps}] <= {delta} for {kind}")
