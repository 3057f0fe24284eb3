"""Seeded random interleavers.

Permutations come from a Fisher-Yates shuffle driven by SplitMix64 so a
pattern is fully determined by ``(length, seed)`` and can be regenerated
by any implementation of the same two algorithms:

    state <- seed (mod 2**64)
    next():  state += 0x9E3779B97F4A7C15
             z = state
             z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
             return z ^ (z >> 31)            (all arithmetic mod 2**64)
    perm <- [0, 1, ..., n-1]
    for i = n-1 down to 1:  j = next() mod (i+1);  swap perm[i], perm[j]

``interleave(x)[k] = x[perm[k]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(seed: int):
    state = seed & _MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        yield z ^ (z >> 31)


@lru_cache(maxsize=256)
def _permutation(length: int, seed: int) -> np.ndarray:
    perm = list(range(length))
    rand = splitmix64(seed)
    for i in range(length - 1, 0, -1):
        j = next(rand) % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    arr = np.array(perm, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Interleaver:
    length: int
    seed: int
    permutation: np.ndarray = field(repr=False, compare=False)

    def interleave(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.length:
            raise ValueError(f"expected {self.length} values, got {x.shape[0]}")
        return x[self.permutation]

    def deinterleave(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[0] != self.length:
            raise ValueError(f"expected {self.length} values, got {y.shape[0]}")
        out = np.empty_like(y)
        out[self.permutation] = y
        return out


def build_interleaver(length: int, seed: int) -> Interleaver:
    if length < 1:
        raise ValueError(f"interleaver length must be >= 1, got {length}")
    return Interleaver(length, int(seed), _permutation(int(length), int(seed)))
