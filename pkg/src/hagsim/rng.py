"""Deterministic 64-bit random streams.

Every stochastic draw in the simulator flows through a splitmix64
substream derived from (master_seed, label, replication), so adding a
site or a replication to a sweep never perturbs the draws of any other
substream, and results are bit-reproducible across processes.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """FNV-1a hash of the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def mix64(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit value (order-sensitive)."""
    acc = _GAMMA
    for p in parts:
        acc = (acc ^ (p & _MASK64)) & _MASK64
        acc, _ = splitmix64(acc)
        _, acc = splitmix64(acc)
    return acc


class Stream:
    """splitmix64 sequence with uniform and exponential helpers."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state, out = splitmix64(self._state)
        return out

    def next_float(self) -> float:
        # 53-bit uniform in [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53

    def exponential(self, mean: float) -> float:
        # inverse CDF on (0, 1]; the 1-u flip avoids log(0)
        return -mean * math.log(1.0 - self.next_float())


def substream(master_seed: int, label: str, replication: int) -> Stream:
    """Independent stream for one (label, replication) pair."""
    return Stream(mix64(master_seed, fnv1a64(label), replication))
