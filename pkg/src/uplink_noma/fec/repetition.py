"""Repetition coding with a sum-rule SISO decoder."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .soft import clamp_llr


def rep_encode(bits, factor: int) -> np.ndarray:
    if factor < 1:
        raise ValueError(f"repetition factor must be >= 1, got {factor}")
    return np.repeat(np.asarray(bits, dtype=np.int8), factor)


def rep_decode_siso(llr, factor: int):
    """Return ``(extrinsic, info)``: info sums each bit's copies, extrinsic drops the copy's own input."""
    llr = np.asarray(llr, dtype=float)
    if factor < 1 or llr.size % factor:
        raise ValueError(f"{llr.size} LLRs cannot be split into groups of {factor}")
    info = llr.reshape(-1, factor).sum(axis=1)
    extrinsic = np.repeat(info, factor) - llr
    return clamp_llr(extrinsic), clamp_llr(info)


def rep_decode_hard(bits, factor: int) -> np.ndarray:
    b = np.asarray(bits).reshape(-1, factor)
    return (2 * b.sum(axis=1) > factor).astype(np.int8)


@dataclass(frozen=True)
class SisoOutput:
    """Decoder result; ``extrinsic = clamp(total - input)`` per codeword position."""

    extrinsic: np.ndarray
    total: np.ndarray
    info: np.ndarray

    @property
    def hard(self) -> np.ndarray:
        return (self.info < 0).astype(np.int8)


@dataclass(frozen=True)
class RepetitionCode:
    info_len: int
    factor: int = 10

    @property
    def codeword_len(self) -> int:
        return self.info_len * self.factor

    @property
    def rate(self) -> float:
        return 1.0 / self.factor

    def encode(self, bits) -> np.ndarray:
        bits = np.asarray(bits)
        if bits.size != self.info_len:
            raise ValueError(f"expected {self.info_len} info bits, got {bits.size}")
        return rep_encode(bits, self.factor)

    def siso(self, llr, iterations: int = 1) -> SisoOutput:
        llr = np.asarray(llr, dtype=float)
        if llr.size != self.codeword_len:
            raise ValueError(f"expected {self.codeword_len} LLRs, got {llr.size}")
        info = llr.reshape(-1, self.factor).sum(axis=1)
        total = np.repeat(info, self.factor)
        return SisoOutput(clamp_llr(total - llr), total, clamp_llr(info))
