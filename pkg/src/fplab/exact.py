"""Exact moments of the win rate R/N at the first-passage time N = N_d.

Because ``R/N = 1/2 + d/(2N)`` pathwise, everything reduces to E[1/N] and
E[1/N^2].  After the substitution ``t = u/(p + q u^2)`` in the generating
function of N, both become integrals over ``[0, 1]``:

    E[1/N]   = int u^(d-1) h(u) du
    E[1/N^2] = int u^(d-1) h(u) l(u) du

with ``h(u) = (p - q u^2)/(p + q u^2)`` and ``l(u) = ln((p + q u^2)/u)``.
Three routes to the mean are provided: certified quadrature, the closed
forms (alternating sums done in exact rationals), and stable backward
recursions for the integrals ``F_k`` (odd ``d``) and ``G_m`` (even ``d``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from fplab.quadrature import Ellipse, QuadratureError, integrate
from fplab.walk import BiasParams, check_threshold

__all__ = [
    "MomentReport",
    "QuadratureError",
    "RecursionTable",
    "closed_form_even",
    "closed_form_naive",
    "closed_form_odd",
    "eval_ell",
    "eval_h",
    "expect_win_rate",
    "expected_hitting_time",
    "f_sequence",
    "g_sequence",
    "moment_inv_n",
    "moment_inv_n_sq",
    "moment_report",
    "var_win_rate",
]

MOMENT_TOL = 1e-12
METHODS = ("quadrature", "closed_form", "recursion")

_EPS = np.finfo(float).eps
# Unit roundoff (each IEEE operation errs by at most this relative amount), padded for second-order terms.
_UNIT = 0.5 * _EPS * 1.01
# Above this many decimal digits the closed form hands over to recursion.
_MAX_DIGITS = 20000
# Midpoint seeding is used while the padding it needs stays below this.
_MAX_PAD = 512
_SEED_TARGET = 1e-17
_EXT_DPS = 30
_EXT_ULP = 10.0 ** (1 - _EXT_DPS)


def eval_h(params: BiasParams, u):
    """(p - q u^2) / (p + q u^2)."""
    p, q = params.p, params.q
    u2 = np.square(u)
    return (p - q * u2) / (p + q * u2)


def eval_ell(params: BiasParams, u):
    """ln((p + q u^2) / u) for 0 < u <= 1."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0) or np.any(u > 1):
        raise ValueError("eval_ell needs 0 < u <= 1")
    # p + q u^2 = 1 - q (1 - u^2)
    out = np.log1p(-params.q * (1 - u * u)) - np.log(u)
    return out if out.ndim else float(out)


# -- quadrature -----------------------------------------------------------


def _h_bound(params: BiasParams, d: int):
    """sup |u^(d-1) h(u)| over Bernstein ellipses; inf where a pole is enclosed."""
    p, q = params.p, params.q
    s = math.sqrt(p / q)  # poles of h at +-i s

    def bound(e: Ellipse) -> np.ndarray:
        radius = abs(e.center) + e.major
        gap = s - e.minor
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_m = (d - 1) * np.log(radius) + np.log(p + q * radius**2) - math.log(q) - 2 * np.log(gap)
            return np.where(gap > 0, np.exp(log_m), np.inf)

    return bound


def _h_ell_bound(params: BiasParams, d: int):
    """Same for u^(d-1) h(u) l(u); the ellipse must also stay in Re z > 0."""
    p, q = params.p, params.q
    s = math.sqrt(p / q)
    base = _h_bound(params, d)

    def bound(e: Ellipse) -> np.ndarray:
        radius = e.center + e.major
        near = e.center - e.major
        gap = s - e.minor
        with np.errstate(divide="ignore", invalid="ignore"):
            v_lo = np.log(q * gap**2)
            v_hi = np.log(p + q * radius**2)
            log_v = np.maximum(np.abs(v_lo), np.abs(v_hi)) + math.pi
            log_z = np.maximum(np.abs(np.log(near)), np.abs(np.log(radius))) + math.pi / 2
            m = base(e) * (log_v + log_z)
        return np.where((near > 0) & (gap > 0), m, np.inf)

    return bound


def moment_inv_n(params: BiasParams, d: int) -> tuple[float, float]:
    """E[1/N_d] as ``(value, certified_abs_error)``."""
    d = check_threshold(d)
    if params.is_certain:
        return 1.0 / d, 0.0
    p, q = params.p, params.q

    def f(u):
        u2 = u * u
        return u ** (d - 1) * (p - q * u2) / (p + q * u2)

    res = integrate(f, _h_bound(params, d), 0.0, 1.0, tol=MOMENT_TOL / 2)
    return res.value, res.abs_error


def _origin_cut(params: BiasParams, d: int) -> tuple[float, float]:
    """Cut point delta and a bound on int_0^delta |u^(d-1) h l| du."""
    log_inv_p = -math.log(params.p)
    delta = 0.5
    while True:
        tail = delta**d / d * (log_inv_p - math.log(delta) + 1.0 / d)
        if tail <= 1e-15:
            return delta, tail
        delta *= 0.5


def moment_inv_n_sq(params: BiasParams, d: int) -> tuple[float, float]:
    """E[1/N_d^2] as ``(value, certified_abs_error)``.

    The ``ln(1/u)`` endpoint singularity is cut off at a tiny ``delta``
    (the integrand is positive there, so the piece lies in ``[0, tail]``);
    bisection then grades the panels geometrically towards ``delta``.
    """
    d = check_threshold(d)
    if params.is_certain:
        return 1.0 / d**2, 0.0
    p, q = params.p, params.q

    def f(u):
        u2 = u * u
        return u ** (d - 1) * (p - q * u2) / (p + q * u2) * (np.log1p(-q * (1 - u2)) - np.log(u))

    delta, tail = _origin_cut(params, d)
    res = integrate(f, _h_ell_bound(params, d), delta, 1.0, tol=MOMENT_TOL / 2)
    return res.value + tail / 2, res.abs_error + tail / 2


# -- recursions -----------------------------------------------------------


@dataclass(frozen=True)
class RecursionTable:
    """Values of F_0..F_m (``kind="F"``) or G_0..G_m (``kind="G"``).

    F_k = int_0^1 u^(2k) / (1 + r u^2) du and G_k = int_1^(1+r) (x-1)^k / x dx.
    For G the scaled values g_k = G_k / r^k are kept as well, since G_k
    underflows for large k; ``certified_abs_error`` bounds the error of F_k,
    respectively of g_k (so G_k is off by at most that times r^k).
    """

    kind: str
    r: float
    values: np.ndarray
    start_index: int
    certified_abs_error: float
    scaled: np.ndarray | None = None

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.arange(self.values.size)
        r = self.r
        if self.kind == "F":
            upper = 1.0 / (2 * k + 1)
            return upper / (1 + r), upper
        upper = r / (k + 1)  # for g_k
        return upper / (1 + r), upper


def _beta_series(r: float, a: float) -> tuple[float, float]:
    """int_0^1 w^a / (1 + r w) dw via the positive series sum_j t^j B(a+1, j+1)/(1+r).

    Expanding 1/(1 + r w) about w = 1 gives terms with ratio < t = r/(1+r).
    Returns ``(value, abs_error)`` as mpmath numbers at ``_EXT_DPS`` digits.
    """
    with mpmath.workdps(_EXT_DPS):
        r_mp, a_mp = mpmath.mpf(r), mpmath.mpf(a)
        t = r_mp / (1 + r_mp)
        term = 1 / (a_mp + 1)
        total = term
        j = 0
        while term * t / (1 - t) > 1e-22 * total:
            j += 1
            term *= t * j / (a_mp + 1 + j)
            total += term
        value = total / (1 + r_mp)
        err = term * t / (1 - t) / (1 + r_mp) + (j + 2) * _EXT_ULP * value
    return value, err


def _extended_backward(step, seed, err, start: int, r: float):
    """Run ``v_{k-1} = step(k, v_k)`` from ``start`` down to 0 at ``_EXT_DPS`` digits.

    Used when r is too close to 1 for the seed error to be damped: the whole
    recursion then runs in extended precision, so each double entry carries
    only the propagated seed error plus its own final rounding.
    """
    with mpmath.workdps(_EXT_DPS):
        v = [mpmath.mpf(0)] * (start + 1)
        v[start] = seed
        for k in range(start, 0, -1):
            v[k - 1] = step(k, v[k])
        growth = max(mpmath.mpf(1), mpmath.mpf(r)) ** start
        carried = float(err * growth + 4 * start * _EXT_ULP)
    vals = np.array([float(x) for x in v])
    return vals, carried + _UNIT * np.abs(vals)


def _pad_for(r: float, width_at, m: int) -> int | None:
    """Smallest padding so a midpoint seed at m+pad is damped below target."""
    if r >= 1.0:
        return None
    log_r = math.log(r)
    pad = 2
    while pad <= _MAX_PAD:
        if pad * log_r + math.log(width_at(m + pad) / 2) <= math.log(_SEED_TARGET):
            return pad
        pad += 1 if pad < 16 else pad // 4
    return None


def f_sequence(r: float, m: int) -> RecursionTable:
    """F_0..F_m by backward recursion F_{k-1} = 1/(2k-1) - r F_k.

    Errors shrink by a factor r per step.  The start value F_K is the
    midpoint of ``1/((1+r)(2K+1)) <= F_K <= 1/(2K+1)`` when the padding
    needed to damp its error is modest; for r close to 1 (no damping) it is
    summed from a convergent positive series and the recursion itself is
    carried out in extended precision.
    """
    r = float(r)
    if not r > 0:
        raise ValueError("f_sequence needs r > 0")
    if m < 0:
        raise ValueError("m must be >= 0")
    pad = _pad_for(r, lambda k: r / ((1 + r) * (2 * k + 1)), m)
    if pad is not None:
        start = m + pad
        hi = 1.0 / (2 * start + 1)
        seed, err = 0.5 * (hi + hi / (1 + r)), 0.5 * (hi - hi / (1 + r))
    else:
        start = m + 2
        seed, err = _beta_series(r, start - 0.5)
        # F_K = (1/2) int w^(K-1/2)/(1+rw) dw
        vals, errs = _extended_backward(lambda k, v: mpmath.mpf(1) / (2 * k - 1) - r * v,
                                        seed / 2, err / 2, start, r)
        return _finish_f(r, m, start, vals, errs)
    vals = np.empty(start + 1)
    errs = np.empty(start + 1)
    vals[start], errs[start] = seed, err
    for k in range(start, 0, -1):
        inv = 1.0 / (2 * k - 1)
        nxt = inv - r * vals[k]
        # Subtrahend of the forward form, 1/(2k-1) - F_{k-1} = r F_k, is >= 0.
        assert nxt <= inv
        vals[k - 1] = nxt
        errs[k - 1] = r * errs[k] + _UNIT * (inv + r * vals[k] + abs(nxt))
    return _finish_f(r, m, start, vals, errs)


def _finish_f(r, m, start, vals, errs) -> RecursionTable:
    table = RecursionTable("F", r, vals[: m + 1].copy(), start, float(errs[: m + 1].max()))
    _check_bounds(table)
    return table


def g_sequence(r: float, m: int) -> RecursionTable:
    """G_0..G_m with G_k = int_1^(1+r) (x-1)^k / x dx, by backward recursion.

    Works on g_k = G_k / r^k, for which G_k = r^k/k - G_{k-1} becomes
    g_{k-1} = r (1/k - g_k): errors shrink by r per step and relative accuracy
    of G_k is kept even when G_k itself is tiny.
    """
    r = float(r)
    if not r > 0:
        raise ValueError("g_sequence needs r > 0")
    if m < 0:
        raise ValueError("m must be >= 0")
    pad = _pad_for(r, lambda k: r * r / ((1 + r) * (k + 1)), m)
    if pad is not None:
        start = m + pad
        hi = r / (start + 1)
        seed, err = 0.5 * (hi + hi / (1 + r)), 0.5 * (hi - hi / (1 + r))
    else:
        start = m + 2
        seed, err = _beta_series(r, float(start))
        # g_K = r int v^K/(1+rv) dv
        vals, errs = _extended_backward(lambda k, v: r * (mpmath.mpf(1) / k - v),
                                        r * seed, r * err, start, r)
        return _finish_g(r, m, start, vals, errs)
    vals = np.empty(start + 1)
    errs = np.empty(start + 1)
    vals[start], errs[start] = seed, err
    for k in range(start, 0, -1):
        inv = 1.0 / k
        diff = inv - vals[k]
        assert diff >= 0
        vals[k - 1] = r * diff
        errs[k - 1] = r * errs[k] + _UNIT * (r * inv + 2 * vals[k - 1])
    return _finish_g(r, m, start, vals, errs)


def _finish_g(r, m, start, vals, errs) -> RecursionTable:
    scaled = vals[: m + 1].copy()
    with np.errstate(under="ignore"):
        unscaled = scaled * np.power(r, np.arange(m + 1, dtype=float))
    table = RecursionTable("G", r, unscaled, start, float(errs[: m + 1].max()), scaled)
    _check_bounds(table)
    return table


def _check_bounds(table: RecursionTable) -> None:
    lo, hi = table.bounds()
    vals = table.values if table.kind == "F" else table.scaled
    slack = table.certified_abs_error
    if np.any(vals < lo - slack) or np.any(vals > hi + slack):
        raise ArithmeticError(f"{table.kind}-recursion left its two-sided bounds")


# -- closed forms ---------------------------------------------------------


def _mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def _odd_terms(rho: Fraction, d: int) -> list[Fraction]:
    return [Fraction((-1) ** k * rho**k, d - 2 * k) for k in range((d - 1) // 2 + 1)]


def _even_terms(p: Fraction, m: int) -> list[Fraction]:
    return [Fraction((-1) ** (m + k) * math.comb(m, k) * (p**-k - 1), k) for k in range(1, m + 1)]


def _digits_lost(magnitude: float) -> float:
    return max(0.0, math.log10(magnitude)) if magnitude > 0 else 0.0


def closed_form_odd(params: BiasParams, d: int, precision: int | None = None) -> float:
    """E[R/N] for odd d from the arctan closed form.

    The alternating sum is formed in exact rationals; the combination with
    ``(p/q)^(d/2) arctan(sqrt(q/p))`` runs in extended precision with at
    least twice the number of digits the two parts cancel, plus 16.
    ``precision`` forces a minimum number of decimal digits.
    """
    d = check_threshold(d)
    if d % 2 == 0:
        raise ValueError("closed_form_odd needs odd d")
    if params.is_certain:
        raise ValueError("p = 1: E[R/N] = 1 exactly; the closed form does not apply")
    rho = params.exact / params.q_exact
    m = (d - 1) // 2
    terms = _odd_terms(rho, d)
    lost = _digits_lost(d * float(sum(abs(t) for t in terms)))
    dps = max(precision or 0, math.ceil(2 * lost) + 16, 30)
    if dps > _MAX_DIGITS:
        return expect_win_rate(params, d, method="recursion")
    with mpmath.workdps(dps):
        rho_mp = _mpf(rho)
        lead = (-1) ** m * d * rho_mp ** (mpmath.mpf(d) / 2) * mpmath.atan(1 / mpmath.sqrt(rho_mp))
        return float(lead + 1 - d * _mpf(sum(terms)))


def closed_form_even(params: BiasParams, d: int, precision: int | None = None) -> float:
    """E[R/N] for even d from the logarithmic closed form (exact-rational sum)."""
    d = check_threshold(d)
    if d % 2:
        raise ValueError("closed_form_even needs even d")
    if params.is_certain:
        raise ValueError("p = 1: E[R/N] = 1 exactly; the closed form does not apply")
    p = params.exact
    rho = p / params.q_exact
    m = d // 2
    terms = _even_terms(p, m)
    weight = m * rho**m
    lost = _digits_lost(float(weight * (sum(abs(t) for t in terms) + 1)))
    dps = max(precision or 0, math.ceil(2 * lost) + 16, 30)
    if dps > _MAX_DIGITS:
        return expect_win_rate(params, d, method="recursion")
    with mpmath.workdps(dps):
        lead = (-1) ** m * _mpf(weight) * mpmath.log(_mpf(p))
        return float(lead + 1 - _mpf(weight * sum(terms)))


def closed_form_naive(params: BiasParams, d: int) -> float:
    """Both closed forms evaluated term by term in double precision.

    Accurate only while (p/q)^(d/2) is small; kept to exhibit the cancellation.
    """
    d = check_threshold(d)
    p, q = params.p, params.q
    rho = p / q
    if d % 2:
        m = (d - 1) // 2
        s = sum((-1) ** k * rho**k / (d - 2 * k) for k in range(m + 1))
        return (-1) ** m * d * rho ** (d / 2) * math.atan(math.sqrt(q / p)) + 1 - d * s
    m = d // 2
    s = sum((-1) ** (m + k) * math.comb(m, k) * (p**-k - 1) / k for k in range(1, m + 1))
    return (-1) ** m * m * rho**m * math.log(p) + 1 - m * rho**m * s


# -- public moment API ----------------------------------------------------


def _inv_n_by_method(params: BiasParams, d: int, method: str) -> tuple[float, float]:
    """E[1/N_d] and an error bound, by the requested route."""
    if method == "quadrature":
        return moment_inv_n(params, d)
    if method == "recursion":
        r = params.r
        if d % 2:
            table = f_sequence(r, (d + 1) // 2)
            f_last = float(table.values[-1])
            return 1.0 / d - 2 * r * f_last, 2 * r * table.certified_abs_error + 2 * _EPS / d
        # E[R/N] = 1 - (d/2) g_m, i.e. E[1/N] = 1/d - g_m.
        table = g_sequence(r, d // 2)
        return 1.0 / d - float(table.scaled[-1]), table.certified_abs_error + 2 * _EPS / d
    if method == "closed_form":
        mean = closed_form_odd(params, d) if d % 2 else closed_form_even(params, d)
        return (2 * mean - 1) / d, 4 * _EPS / d
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def expect_win_rate(params: BiasParams, d: int, method: str = "quadrature") -> float:
    """E[R_{N_d}/N_d]."""
    d = check_threshold(d)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if params.is_certain:
        return 1.0
    if method == "closed_form":
        return closed_form_odd(params, d) if d % 2 else closed_form_even(params, d)
    if method == "recursion" and d % 2:
        r = params.r
        return 1.0 - d * r * float(f_sequence(r, (d + 1) // 2).values[-1])
    return 0.5 + 0.5 * d * _inv_n_by_method(params, d, method)[0]


def var_win_rate(params: BiasParams, d: int) -> float:
    """Var[R_{N_d}/N_d] = (d^2/4) (E[1/N^2] - E[1/N]^2), clipped at 0."""
    return moment_report(params, d).var_win_rate


def expected_hitting_time(params: BiasParams, d: int) -> float:
    """E[N_d] = d / (2p - 1); infinite for the fair coin."""
    d = check_threshold(d)
    if params.is_fair:
        return math.inf
    return float(d / (2 * params.exact - 1))


@dataclass(frozen=True)
class MomentReport:
    """Exact moments of 1/N_d and of the win rate at one (p, d).

    ``abs_error_estimate`` is an upper bound on the error of both
    ``mean_win_rate`` and ``var_win_rate``.
    """

    p: Fraction
    d: int
    e_inv_n: float
    e_inv_n_sq: float
    mean_win_rate: float
    var_win_rate: float
    method: str
    abs_error_estimate: float

    def as_dict(self) -> dict:
        return {
            "p": str(self.p),
            "d": self.d,
            "e_inv_n": self.e_inv_n,
            "e_inv_n_sq": self.e_inv_n_sq,
            "mean_win_rate": self.mean_win_rate,
            "var_win_rate": self.var_win_rate,
            "method": self.method,
            "abs_error_estimate": self.abs_error_estimate,
        }


def moment_report(params: BiasParams, d: int, method: str = "quadrature") -> MomentReport:
    """All moments at (p, d).  E[1/N^2] always comes from quadrature."""
    d = check_threshold(d)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if params.is_certain:
        return MomentReport(params.exact, d, 1.0 / d, 1.0 / d**2, 1.0, 0.0, method, 0.0)
    e1, err1 = _inv_n_by_method(params, d, method)
    e2, err2 = moment_inv_n_sq(params, d)
    if method != "quadrature":
        # The variance still needs the quadrature value of E[1/N].
        q1, qerr1 = moment_inv_n(params, d)
    else:
        q1, qerr1 = e1, err1
    mean = 0.5 + 0.5 * d * e1
    var_raw = 0.25 * d * d * (e2 - q1 * q1)
    var_err = 0.25 * d * d * (err2 + 2 * abs(q1) * qerr1 + qerr1**2) + 4 * _EPS * 0.25 * d * d * e2
    if var_raw < -var_err:
        raise ArithmeticError(f"negative variance {var_raw:.3g} beyond its error bound {var_err:.3g}")
    err = max(0.5 * d * err1 + _EPS, var_err)
    return MomentReport(params.exact, d, e1, e2, mean, max(var_raw, 0.0), method, err)
