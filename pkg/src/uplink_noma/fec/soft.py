"""Conversion between Gaussian symbol beliefs and bit LLRs.

LLRs are natural-log ratios log P(b=0)/P(b=1), clamped to +-LLR_MAX.
"""
from __future__ import annotations

import numpy as np

from ..waveform import Modulation

LLR_MAX = 30.0
VAR_MIN = 1e-12
_SQRT2 = np.sqrt(2.0)


def clamp_llr(llr) -> np.ndarray:
    return np.clip(np.asarray(llr, dtype=float), -LLR_MAX, LLR_MAX)


def soft_demap(mu, v, modulation) -> np.ndarray:
    """Bit LLRs of symbols observed as ``mu`` plus circular Gaussian noise of variance ``v``.

    BPSK: 4 Re(mu) / v.  QPSK (Gray, interleaved I/Q bits):
    2 sqrt(2) Re(mu) / v and 2 sqrt(2) Im(mu) / v.
    """
    mod = Modulation.parse(modulation)
    mu = np.asarray(mu, dtype=np.complex128)
    v = np.maximum(np.asarray(v, dtype=float), VAR_MIN)
    if mod is Modulation.BPSK:
        return clamp_llr(4.0 * mu.real / v)
    out = np.empty(2 * mu.size)
    out[0::2] = 2 * _SQRT2 * mu.real / v
    out[1::2] = 2 * _SQRT2 * mu.imag / v
    return clamp_llr(out)


def soft_map(llr, modulation):
    """Symbol mean and variance implied by bit LLRs: returns ``(mu, v)``."""
    mod = Modulation.parse(modulation)
    t = np.tanh(clamp_llr(llr) / 2)
    if mod is Modulation.BPSK:
        mu = t.astype(np.complex128)
    else:
        mu = (t[0::2] + 1j * t[1::2]) / _SQRT2
    v = np.clip(1.0 - np.abs(mu) ** 2, 0.0, 1.0)
    return mu, v
