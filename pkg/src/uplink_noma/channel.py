"""Uplink impairments: block-fading multipath, CFO, integer delays and AWGN."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROFILES = ("uniform", "exponential", "phase")


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def power_profile(L_p: int, profile: str) -> np.ndarray:
    """Per-tap average powers summing to one.

    ``exponential`` decays by e per tap; ``phase`` has the uniform profile
    but is drawn with deterministic magnitudes (see :func:`draw_multipath`).
    """
    if L_p < 1:
        raise ValueError(f"L_p must be >= 1, got {L_p}")
    if profile == "exponential":
        p = np.exp(-np.arange(L_p, dtype=float))
    elif profile in ("uniform", "phase"):
        p = np.ones(L_p)
    else:
        raise ValueError(f"unknown power profile {profile!r}; expected one of {PROFILES}")
    return p / p.sum()


def draw_multipath(L_p: int, profile: str = "exponential", rng=None) -> np.ndarray:
    """Draw L_p complex taps with sum of average tap powers equal to one.

    ``uniform`` and ``exponential`` give i.i.d. circularly-symmetric Gaussian
    (Rayleigh) taps. ``phase`` gives taps of fixed magnitude sqrt(p_l) and
    uniform random phase, a non-fading channel for isolating estimator
    behaviour from fades.
    """
    rng = as_rng(rng)
    p = power_profile(L_p, profile)
    if profile == "phase":
        return np.sqrt(p) * np.exp(2j * np.pi * rng.random(L_p))
    g = rng.standard_normal(L_p) + 1j * rng.standard_normal(L_p)
    return np.sqrt(p / 2) * g


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user taps (M, L_p), normalised CFOs (M,) in cycles/sample and integer delays (M,)."""

    taps: np.ndarray
    cfo: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        taps = np.atleast_2d(np.asarray(self.taps, dtype=np.complex128))
        M = taps.shape[0]
        cfo = np.broadcast_to(np.asarray(self.cfo, dtype=float), (M,)).copy()
        offsets = np.broadcast_to(np.asarray(self.offsets), (M,)).astype(np.int64)
        if taps.shape[1] < 1 or not np.all(np.isfinite(taps)):
            raise ValueError("taps must be finite with L_p >= 1")
        if np.any(offsets < 0):
            raise ValueError("timing offsets must be non-negative integers")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "cfo", cfo)
        object.__setattr__(self, "offsets", offsets)

    @property
    def M(self) -> int:
        return self.taps.shape[0]

    @property
    def L_p(self) -> int:
        return self.taps.shape[1]

    @classmethod
    def ideal(cls, M: int) -> "ChannelRealization":
        return cls(np.ones((M, 1)), np.zeros(M), np.zeros(M, dtype=int))


def draw_channel(M: int, L_p: int, profile: str = "exponential", rng=None,
                 max_offset: int = 0, cfo_max: float = 0.0) -> ChannelRealization:
    """Independent taps per user, offsets uniform on [0, max_offset], CFO uniform on [-cfo_max, cfo_max]."""
    rng = as_rng(rng)
    taps = np.stack([draw_multipath(L_p, profile, rng) for _ in range(M)])
    offsets = rng.integers(0, max_offset + 1, size=M) if max_offset > 0 else np.zeros(M, dtype=int)
    cfo = rng.uniform(-cfo_max, cfo_max, size=M) if cfo_max > 0 else np.zeros(M)
    return ChannelRealization(taps, cfo, offsets)


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN level from an SNR measured on the received signal.

    ``signal_power`` is the average received signal power per complex sample;
    with M unit-power users on unit-power channels it is M.
    """

    snr_db: float
    signal_power: float = 1.0

    @property
    def sigma2(self) -> float:
        if np.isposinf(self.snr_db):
            return 0.0
        return float(self.signal_power * 10.0 ** (-self.snr_db / 10.0))


def awgn(n: int, sigma2: float, rng=None) -> np.ndarray:
    """CN(0, sigma2) samples; always consumes 2n normals so draws line up across SNRs."""
    rng = as_rng(rng)
    return np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def apply_channel(x, h) -> np.ndarray:
    """Linear convolution; output length len(x) + len(h) - 1."""
    return np.convolve(np.asarray(x, dtype=np.complex128), np.asarray(h, dtype=np.complex128))


def apply_cfo(x, eps: float, start: int = 0) -> np.ndarray:
    """Rotate by exp(j 2 pi eps n), n counted from ``start``."""
    x = np.asarray(x, dtype=np.complex128)
    if eps == 0.0:
        return x.copy()
    n = np.arange(start, start + x.size)
    return x * np.exp(2j * np.pi * eps * n)


def compose_uplink(frames, chan: ChannelRealization, noise: NoiseSpec, rng=None,
                   length: int | None = None) -> np.ndarray:
    """Superimpose M user frames as seen at the base station.

    Each frame is rotated by its user's CFO, delayed by its offset, passed
    through its taps and summed; AWGN of variance ``noise.sigma2`` is added
    last. The default output length just holds the latest user.
    """
    rng = as_rng(rng)
    frames = [np.asarray(f, dtype=np.complex128) for f in frames]
    if len(frames) != chan.M:
        raise ValueError(f"{len(frames)} frames for {chan.M} channel realizations")
    lengths = {f.size for f in frames}
    if len(lengths) != 1:
        raise ValueError(f"inconsistent frame lengths {sorted(lengths)}")
    flen = lengths.pop()
    needed = flen + int(chan.offsets.max()) + chan.L_p - 1
    total = needed if length is None else int(length)
    y = np.zeros(max(total, needed), dtype=np.complex128)
    for f, h, eps, d in zip(frames, chan.taps, chan.cfo, chan.offsets):
        contrib = apply_channel(apply_cfo(f, eps), h)
        y[d:d + contrib.size] += contrib
    y = y[:total]
    return y + awgn(total, noise.sigma2, rng)
