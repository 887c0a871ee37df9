"""Counter-based 64-bit random streams.

Each replication owns a stream keyed by ``(master_seed, index)``.  Draw ``j``
of a stream is ``mix64(key + (j + 1) * GOLDEN)``, i.e. a SplitMix64 sequence
started at ``key``.  Because any draw can be computed from its counter alone,
streams can be evaluated in arbitrary chunks, in parallel, and in any order
without changing a single bit of output.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_SEED_SALT = 0x2545F4914F6CDD1D

_GOLDEN_U = np.uint64(GOLDEN)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer; uint64 arithmetic wraps modulo 2**64."""
    z = z ^ (z >> _S30)
    z = z * _M1_U
    z = z ^ (z >> _S27)
    z = z * _M2_U
    return z ^ (z >> _S31)


def stream_key(master_seed: int, index: int) -> int:
    return mix64(mix64(master_seed ^ _SEED_SALT) + (index + 1) * GOLDEN)


@dataclass(frozen=True)
class Stream:
    """Identity of one replication's random stream."""

    master_seed: int
    index: int = 0

    @property
    def key(self) -> int:
        return stream_key(self.master_seed, self.index)

    def raw(self, start: int, count: int) -> np.ndarray:
        """Draws ``start .. start+count-1`` as uint64."""
        return draw_block(np.array([self.key], dtype=np.uint64), start, count)[0]


def draw_block(keys: np.ndarray, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` for every key; shape ``(len(keys), count)``."""
    counters = (np.arange(start + 1, start + count + 1, dtype=np.uint64)) * _GOLDEN_U
    return mix64_array(keys[:, None] + counters[None, :])


def bernoulli_threshold(p: Fraction) -> int | None:
    """``floor(p * 2**64)``; ``None`` means every draw succeeds (p == 1)."""
    if not 0 <= p <= 1:
        raise ValueError(f"probability out of range: {p}")
    if p == 1:
        return None
    return (p.numerator << 64) // p.denominator
