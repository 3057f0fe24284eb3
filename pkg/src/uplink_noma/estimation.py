"""Receiver-side synchronisation and multi-user channel estimation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import as_complex_vector, dft, idft, sliding_correlate
from .waveform import PreambleSet


class ReferenceNotFound(RuntimeError):
    """The synchronisation reference was not detected in the received samples."""


@dataclass(frozen=True)
class TimingEstimate:
    delta: int
    peak: float
    metric: np.ndarray  # |correlation| over the searched lags


def estimate_timing(y, pset: PreambleSet, m: int, search_range: int) -> TimingEstimate:
    """ML timing offset of user m from the composite received stream.

    ``y`` starts at the nominal (zero-offset) frame start, CP included. The
    receiver drops the first L samples and correlates against ``z_m`` over
    lags ``0..search_range``; the smallest lag with the largest magnitude
    wins.
    """
    y = as_complex_vector(y, "y")
    pset._check_user(m)
    N, L = pset.N, pset.L
    if search_range < 0:
        raise ValueError("search_range must be non-negative")
    if y.size < L + N + search_range:
        raise ValueError(
            f"search_range={search_range} exceeds the signal: need {L + N + search_range} samples, got {y.size}"
        )
    corr = sliding_correlate(y[L:L + N + search_range], pset.z[m])
    metric = np.abs(corr)
    delta = int(np.argmax(metric))  # first occurrence on ties
    return TimingEstimate(delta, float(metric[delta]), metric)


def first_path(est: TimingEstimate, L_p: int, threshold: float = 0.2) -> int:
    """Earliest lag within L_p - 1 samples before the peak reaching ``threshold * peak``.

    The correlation peak sits on the strongest tap; advancing a user by it
    would wrap earlier taps to negative delay.
    """
    lo = max(0, est.delta - (L_p - 1))
    window = est.metric[lo:est.delta + 1]
    hits = np.flatnonzero(window >= threshold * est.peak)
    return int(lo + hits[0])


@dataclass(frozen=True)
class MatchedFilterOutput:
    G: np.ndarray
    g: np.ndarray


def matched_filter(y, pset: PreambleSet) -> MatchedFilterOutput:
    """``G(k) = dft(y)(k) * conj(Z_1(k)) / sqrt(N)`` and ``g = idft(G)``."""
    y = as_complex_vector(y, "y")
    N = pset.N
    if y.size != N:
        raise ValueError(f"preamble observation must have N={N} samples, got {y.size}")
    G = dft(y) * np.conj(pset.Z[0]) / np.sqrt(N)
    return MatchedFilterOutput(G, idft(G))


@dataclass(frozen=True)
class ChannelEstimate:
    """Per-user taps ``h`` (M, L_p) and frequency responses ``H`` (M, N), unitary scaling."""

    h: np.ndarray
    H: np.ndarray

    @property
    def gains(self) -> np.ndarray:
        """Per-subcarrier gains seen by unit-energy symbols: ``sqrt(N) * H``."""
        return np.sqrt(self.H.shape[1]) * self.H

    @classmethod
    def from_taps(cls, taps, N: int) -> "ChannelEstimate":
        taps = np.atleast_2d(np.asarray(taps, dtype=np.complex128))
        if taps.shape[1] > N:
            raise ValueError(f"{taps.shape[1]} taps do not fit in N={N}")
        H = np.fft.fft(taps, n=N, axis=1, norm="ortho")
        return cls(taps, H)


def estimate_channels(y, pset: PreambleSet) -> ChannelEstimate:
    """Joint estimate of every user's taps from one CP-free preamble window.

    The matched filter against user 1's preamble leaves each user's impulse
    response cyclically shifted into its own window of ``g``.
    """
    if pset.M > 1 and (pset.M * pset.D > pset.N or pset.D < pset.L_p):
        raise ValueError("preamble windows overlap: need D >= L_p and M*D <= N")
    mf = matched_filter(y, pset)
    h = np.stack([mf.g[pset.window(m)] for m in range(pset.M)])
    return ChannelEstimate.from_taps(h, pset.N)


def nmse(est: ChannelEstimate, true_taps) -> float:
    """sum_m ||h_hat_m - h_m||^2 / sum_m ||h_m||^2."""
    true_taps = np.atleast_2d(np.asarray(true_taps, dtype=np.complex128))
    err = np.sum(np.abs(est.h - true_taps) ** 2)
    return float(err / np.sum(np.abs(true_taps) ** 2))


@dataclass(frozen=True)
class CfoEstimate:
    eps: float
    confidence: float
    position: int


CFO_SPLIT = 32


def estimate_cfo(rx, pss, *, repetitions: int = 1, period: int | None = None,
                 threshold: float = 0.4) -> CfoEstimate:
    """Split-correlation CFO estimate from one or more received PSS bursts.

    The first burst is located by the normalised sliding-correlation peak
    within the first ``period`` samples (or the whole stream). For each
    burst, ``P1`` correlates samples 0..30 and ``P2`` samples 32..62 against
    the reference; the products ``P2 * conj(P1)`` are accumulated over
    bursts and ``eps = angle(sum) / (2 pi 32)``.

    The phase is unambiguous for |eps| < 1/64, but the coarse search only
    holds below half a subcarrier spacing, |eps| < 1/(2 len(pss)): a ZC
    sequence under a frequency offset correlates best at a shifted lag.
    """
    rx = as_complex_vector(rx, "rx")
    pss = as_complex_vector(pss, "pss")
    n = pss.size
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if repetitions > 1 and (period is None or period < n):
        raise ValueError("period must be given and >= len(pss) when repetitions > 1")
    span = rx.size if period is None else min(rx.size, period + n - 1)
    if span < n:
        raise ReferenceNotFound(f"received stream shorter than the {n}-sample reference")
    seg = rx[:span]
    corr = np.abs(sliding_correlate(seg, pss))
    energy = np.convolve(np.abs(seg) ** 2, np.ones(n), mode="valid")
    metric = corr / (np.linalg.norm(pss) * np.sqrt(np.maximum(energy, 1e-300)))
    pos = int(np.argmax(metric))
    confidence = float(metric[pos])
    if confidence < threshold:
        raise ReferenceNotFound(f"correlation peak {confidence:.3f} below detection threshold {threshold}")
    if pos + (repetitions - 1) * (period or 0) + n > rx.size:
        raise ReferenceNotFound("stream ends before the last reference burst")

    half = n // 2  # 31 samples per half, the middle sample is skipped
    acc = 0j
    for r in range(repetitions):
        w = rx[pos + r * (period or 0): pos + r * (period or 0) + n] * np.conj(pss)
        acc += np.sum(w[n - half:]) * np.conj(np.sum(w[:half]))
    eps = float(np.angle(acc) / (2 * np.pi * CFO_SPLIT))
    return CfoEstimate(eps, confidence, pos)


def compensate_cfo(x, eps_hat: float, start: int = 0) -> np.ndarray:
    """Multiply by exp(-j 2 pi eps_hat n); undoes :func:`channel.apply_cfo`."""
    x = np.asarray(x, dtype=np.complex128)
    if eps_hat == 0.0:
        return x.copy()
    n = np.arange(start, start + x.size)
    return x * np.exp(-2j * np.pi * eps_hat * n)
