"""Biased +-1 random walk stopped when it first reaches level ``d``.

The walk is simulated literally, one coin flip per step; a step is ``+1``
when the 64-bit draw ``U`` satisfies ``U < floor(p * 2**64)``, which makes
dyadic probabilities such as 3/4 exact.

For the fair coin every bit of a draw is an exact fair flip, so draw ``j``
supplies flips ``64j .. 64j+63`` (most significant bit first, ``0`` = up).
The first flip of each draw is the same as under the threshold rule.  Words
that cannot carry the walk to ``d`` are applied in one popcount; heavy
fair-coin tails make this the difference between seconds and hours.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from fplab.rng import Stream, bernoulli_threshold, draw_block, stream_key

# Default cap applied to fair-coin batches, where E[N_d] is infinite.
FAIR_COIN_STEP_CAP = 10**9

_FIRST_CHUNK = 64
_MAX_BLOCK = 1 << 22


class CapExceeded(RuntimeError):
    """A walk ran past its step cap without reaching the target level."""

    def __init__(self, steps: int, level: int, index: int | None = None):
        self.steps = steps
        self.level = level
        self.index = index
        where = "" if index is None else f" (replication {index})"
        super().__init__(f"step cap exceeded after {steps} steps at level {level}{where}")


def coerce_probability(value) -> Fraction:
    """Exact value of a probability given as Fraction, int, float or string.

    Strings may be fractions (``"3/4"``) or decimals (``"0.75"``); floats are
    taken at their exact binary value.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"probability must be finite, got {value}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a probability: {value!r}") from exc
    return Fraction(float(value))


@dataclass(frozen=True)
class BiasParams:
    """The coin: P[step = +1] = p with 1/2 <= p <= 1.

    ``p`` is held exactly as a :class:`~fractions.Fraction`; the float views
    ``p``, ``q``, ``r`` and ``drift`` are derived from it.
    """

    exact: Fraction

    def __init__(self, p):
        exact = coerce_probability(p)
        if not Fraction(1, 2) <= exact <= 1:
            raise ValueError(f"p must lie in [1/2, 1], got {exact}")
        object.__setattr__(self, "exact", exact)

    @property
    def q_exact(self) -> Fraction:
        return 1 - self.exact

    @property
    def r_exact(self) -> Fraction:
        return self.q_exact / self.exact

    @property
    def p(self) -> float:
        return float(self.exact)

    @property
    def q(self) -> float:
        return float(self.q_exact)

    @property
    def r(self) -> float:
        return float(self.r_exact)

    @property
    def drift(self) -> float:
        return float(2 * self.exact - 1)

    @property
    def is_fair(self) -> bool:
        return self.exact == Fraction(1, 2)

    @property
    def is_certain(self) -> bool:
        return self.exact == 1

    def __repr__(self) -> str:
        return f"BiasParams(p={self.exact})"


def check_threshold(d) -> int:
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise ValueError(f"threshold d must be a positive integer, got {d!r}")
    return int(d)


@dataclass(frozen=True)
class FirstPassageSample:
    n_steps: int
    right_steps: int
    level: int
    stream_id: tuple[int, int]
    capped: bool = False


def win_rate(sample: FirstPassageSample) -> float:
    """Fraction of up-steps at the hitting time, R / N."""
    return sample.right_steps / sample.n_steps


_SHIFTS = np.arange(63, -1, -1, dtype=np.uint64)


def _bit_steps(words: np.ndarray) -> np.ndarray:
    """+-1 steps of each 64-bit word, most significant bit first; shape (..., 64)."""
    bits = (words[..., None] >> _SHIFTS) & np.uint64(1)
    return 1 - 2 * bits.astype(np.int64)


def _scan_words(words: np.ndarray, start: np.ndarray, d: int):
    """First hitting step (1-based, 0 if none) within a block of words, and the end level."""
    down = np.bitwise_count(words).astype(np.int64)
    delta = 64 - 2 * down
    ends = start[:, None] + np.cumsum(delta, axis=1)
    before = ends - delta
    hit_at = np.zeros(words.shape[0], dtype=np.int64)
    # Only words starting within 64 of d can contain the hit.
    rows, cols = np.nonzero(before + 64 >= d)
    if rows.size:
        path = before[rows, cols][:, None] + np.cumsum(_bit_steps(words[rows, cols]), axis=1)
        hit = path == d
        has = hit.any(axis=1)
        rows, cols, off = rows[has], cols[has], hit[has].argmax(axis=1)
        # np.nonzero is row-major, so the first entry per row is the earliest word.
        uniq, first = np.unique(rows, return_index=True)
        hit_at[uniq] = 64 * cols[first] + off[first] + 1
    return hit_at, ends[:, -1]


def _simulate_fair(keys: np.ndarray, d: int, step_cap: int | None):
    m = keys.size
    n_out = np.zeros(m, dtype=np.int64)
    capped = np.zeros(m, dtype=bool)
    level = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    word = 0
    chunk = 1
    full_words = None if step_cap is None else step_cap // 64
    while active.size:
        width = chunk if full_words is None else min(chunk, full_words - word)
        if width <= 0:
            break
        hit_at, end = _scan_words(draw_block(keys[active], word, width), level[active], d)
        done = hit_at > 0
        n_out[active[done]] = 64 * word + hit_at[done]
        active = active[~done]
        level[active] = end[~done]
        word += width
        if active.size:
            chunk = min(2 * chunk, max(1, _MAX_BLOCK // (64 * active.size)))
    if active.size:
        # Step cap reached: finish the partial last word flip by flip.
        tail = step_cap - 64 * word
        if tail:
            steps = _bit_steps(draw_block(keys[active], word, 1)[:, 0])[:, :tail]
            path = level[active, None] + np.cumsum(steps, axis=1)
            hit = path == d
            done = hit.any(axis=1)
            n_out[active[done]] = 64 * word + hit[done].argmax(axis=1) + 1
            level[active[~done]] = path[~done, -1]
            active = active[~done]
        capped[active] = True
        n_out[active] = step_cap
    r_out = np.where(capped, (n_out + level) // 2, (n_out + d) // 2)
    return n_out, r_out, capped, level


def _simulate(keys: np.ndarray, params: BiasParams, d: int, step_cap: int | None):
    """Run one walk per key in lockstep; all rows share the draw counter."""
    if params.is_fair:
        return _simulate_fair(keys, d, step_cap)
    m = keys.size
    threshold = bernoulli_threshold(params.exact)
    n_out = np.zeros(m, dtype=np.int64)
    r_out = np.zeros(m, dtype=np.int64)
    capped = np.zeros(m, dtype=bool)

    active = np.arange(m)
    level = np.zeros(m, dtype=np.int64)
    ups = np.zeros(m, dtype=np.int64)
    counter = 0
    chunk = _FIRST_CHUNK
    while active.size:
        width = chunk
        if step_cap is not None:
            if counter >= step_cap:
                capped[active] = True
                n_out[active] = counter
                r_out[active] = ups[active]
                break
            width = min(width, step_cap - counter)
        if threshold is None:
            up = np.ones((active.size, width), dtype=bool)
        else:
            up = draw_block(keys[active], counter, width) < np.uint64(threshold)
        path = level[active, None] + np.cumsum(2 * up.astype(np.int64) - 1, axis=1)
        hit = path == d
        has_hit = hit.any(axis=1)
        if has_hit.any():
            rows = np.flatnonzero(has_hit)
            first = hit[rows].argmax(axis=1)
            idx = active[rows]
            n_out[idx] = counter + first + 1
            up_counts = np.cumsum(up[rows], axis=1)[np.arange(rows.size), first]
            r_out[idx] = ups[idx] + up_counts
        still = ~has_hit
        idx = active[still]
        level[idx] = path[still, -1]
        ups[idx] += up[still].sum(axis=1)
        active = idx
        counter += width
        if active.size:
            chunk = min(2 * chunk, max(_FIRST_CHUNK, _MAX_BLOCK // active.size))
    # Capped rows keep their partial level in ``level``.
    return n_out, r_out, capped, level


def sample_first_passage(
    params: BiasParams, d: int, stream: Stream, step_cap: int | None = None
) -> FirstPassageSample:
    """Flip coins on ``stream`` until the running sum first equals ``d``.

    Raises :class:`CapExceeded` if ``step_cap`` steps pass without a hit.
    """
    d = check_threshold(d)
    keys = np.array([stream.key], dtype=np.uint64)
    n, r, capped, level = _simulate(keys, params, d, step_cap)
    if capped[0]:
        raise CapExceeded(int(n[0]), int(level[0]))
    return FirstPassageSample(int(n[0]), int(r[0]), d, (stream.master_seed, stream.index))


@dataclass(frozen=True)
class SampleBatch(Sequence):
    """Replications ``0 .. count-1`` of one (params, d, master_seed) experiment.

    Behaves as a sequence of :class:`FirstPassageSample`; the underlying
    arrays are exposed for vectorized work.  Capped replications (only in
    ``on_cap="flag"`` mode) carry the partial path: steps taken and up-steps
    so far.
    """

    params: BiasParams
    level: int
    master_seed: int
    n_steps: np.ndarray
    right_steps: np.ndarray
    capped: np.ndarray

    def __len__(self) -> int:
        return self.n_steps.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return FirstPassageSample(
            int(self.n_steps[i]),
            int(self.right_steps[i]),
            self.level,
            (self.master_seed, i),
            bool(self.capped[i]),
        )

    def win_rates(self) -> np.ndarray:
        """R/N per replication; NaN for capped ones."""
        out = self.right_steps / self.n_steps
        out[self.capped] = np.nan
        return out


def sample_batch(
    params: BiasParams,
    d: int,
    count: int,
    master_seed: int,
    workers: int = 1,
    step_cap: int | None = None,
    on_cap: str = "raise",
) -> SampleBatch:
    """Draw ``count`` independent first-passage samples.

    Replication ``i`` uses the stream ``Stream(master_seed, i)``, so the result
    does not depend on ``workers``.  A fair coin gets ``FAIR_COIN_STEP_CAP``
    unless a cap is given.  With ``on_cap="raise"`` the lowest capped
    replication raises :class:`CapExceeded`; with ``"flag"`` it is marked.
    """
    d = check_threshold(d)
    if count < 1:
        raise ValueError("count must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if on_cap not in ("raise", "flag"):
        raise ValueError(f"on_cap must be 'raise' or 'flag', got {on_cap!r}")
    if step_cap is None and params.is_fair:
        step_cap = FAIR_COIN_STEP_CAP

    keys = np.fromiter((stream_key(master_seed, i) for i in range(count)), dtype=np.uint64, count=count)
    bounds = np.linspace(0, count, min(workers, count) + 1).astype(int)
    blocks = [(bounds[j], bounds[j + 1]) for j in range(len(bounds) - 1)]

    def run(block):
        lo, hi = block
        return _simulate(keys[lo:hi], params, d, step_cap)

    if len(blocks) == 1:
        parts = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(run, blocks))
    n = np.concatenate([part[0] for part in parts])
    r = np.concatenate([part[1] for part in parts])
    capped = np.concatenate([part[2] for part in parts])
    level = np.concatenate([part[3] for part in parts])
    if on_cap == "raise" and capped.any():
        i = int(np.flatnonzero(capped)[0])
        raise CapExceeded(int(n[i]), int(level[i]), index=i)
    return SampleBatch(params, d, master_seed, n, r, capped)
