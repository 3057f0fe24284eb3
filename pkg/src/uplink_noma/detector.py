"""Iterative LMMSE multi-user detection.

The elementary signal estimator (ESE) works per subcarrier on
``Y(k) = sum_m G_m(k) X_m(k) + V(k)`` with ``V ~ CN(0, sigma2)`` and hands
Gaussian extrinsic beliefs to per-user SISO decoders, whose extrinsic
output becomes the next prior.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .fec.soft import VAR_MIN, soft_demap, soft_map
from .waveform import Modulation

VAR_MAX = 1e12


def ese_posterior(Y, gains, sigma2, mu, v):
    """LMMSE posterior ``(mu_hat, v_hat)`` of every user's symbol.

    Shapes: ``Y`` (S,), ``gains``/``mu``/``v`` (M, S). Prior variances are
    clamped to [VAR_MIN, 1].
    """
    v = np.clip(v, VAR_MIN, 1.0)
    y_bar = np.sum(gains * mu, axis=0)
    V = np.sum(np.abs(gains) ** 2 * v, axis=0) + sigma2
    mu_hat = mu + v * np.conj(gains) * (Y - y_bar) / V
    v_hat = v - v ** 2 * np.abs(gains) ** 2 / V
    return mu_hat, v_hat


def ese_lmmse(Y, gains, sigma2, mu, v):
    """Extrinsic ``(mu_e, v_e)`` per user: the posterior with the prior divided out.

    Uses the closed form of the Gaussian division,
    ``v_e = (V - |G|^2 v) / |G|^2`` and ``mu_e = mu + (Y - y_bar) / G``,
    which stays finite when the prior is nearly certain.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    gains = np.atleast_2d(np.asarray(gains, dtype=np.complex128))
    mu = np.atleast_2d(np.asarray(mu, dtype=np.complex128))
    v = np.clip(np.atleast_2d(np.asarray(v, dtype=float)), VAR_MIN, 1.0)
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    g2 = np.abs(gains) ** 2
    y_bar = np.sum(gains * mu, axis=0)
    V = np.sum(g2 * v, axis=0) + sigma2
    tiny = g2 < 1e-300
    safe_g = np.where(tiny, 1.0, gains)
    v_e = np.where(tiny, VAR_MAX, (V - g2 * v) / np.where(tiny, 1.0, g2))
    mu_e = np.where(tiny, 0.0, mu + (Y - y_bar) / safe_g)
    return mu_e, np.clip(v_e, VAR_MIN, VAR_MAX)


@dataclass(frozen=True)
class DetectorConfig:
    outer_iters: int = 10
    inner_iters: int = 5
    early_stop: bool = True

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be >= 1")


@dataclass(frozen=True)
class UserLink:
    """What the receiver knows a priori about one user: its code and interleaver."""

    code: object
    interleaver: object


@dataclass
class TraceRow:
    iteration: int
    user: int
    mean_variance: float
    ber: float | None


@dataclass
class DetectionResult:
    bits: list
    trace: list = field(default_factory=list)
    iterations: int = 0

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "user", "mean_variance", "ber_if_truth_known"])
        for r in self.trace:
            w.writerow([r.iteration, r.user, repr(r.mean_variance), "" if r.ber is None else repr(r.ber)])
        return buf.getvalue()


def n_symbols_for(code, modulation) -> int:
    mod = Modulation.parse(modulation)
    if code.codeword_len % mod.bits_per_symbol:
        raise ValueError(f"codeword length {code.codeword_len} not a multiple of {mod.bits_per_symbol}")
    return code.codeword_len // mod.bits_per_symbol


def detect(Y, gains, sigma2: float, users, modulation, cfg: DetectorConfig = DetectorConfig(),
           truth=None) -> DetectionResult:
    """Run the ESE/decoder loop on B received blocks.

    ``Y`` has shape (B, N) and ``gains`` (M, N); every user occupies the
    first ``n_symbols`` subcarrier slots in block-major order and the
    remainder is known zero padding. ``truth`` (per-user info bits) adds
    per-iteration BER to the trace.
    """
    mod = Modulation.parse(modulation)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.complex128))
    gains = np.atleast_2d(np.asarray(gains, dtype=np.complex128))
    B, N = Y.shape
    M = len(users)
    if gains.shape != (M, N):
        raise ValueError(f"gains shape {gains.shape} does not match {M} users x {N} subcarriers")
    n_syms = {n_symbols_for(u.code, mod) for u in users}
    if len(n_syms) != 1:
        raise ValueError("all users must carry the same number of symbols")
    n_sym = n_syms.pop()
    if n_sym > B * N:
        raise ValueError(f"{n_sym} symbols do not fit into {B} blocks of {N}")
    if truth is not None and len(truth) != M:
        raise ValueError("truth must hold one bit vector per user")

    S = B * N
    y = Y.reshape(S)
    G = np.tile(gains, (1, B))
    mu = np.zeros((M, S), dtype=np.complex128)
    v = np.zeros((M, S))
    v[:, :n_sym] = 1.0
    sigma2 = max(float(sigma2), VAR_MIN)

    result = DetectionResult(bits=[None] * M)
    stable = 0
    prev = None
    for t in range(1, cfg.outer_iters + 1):
        mu_e, v_e = ese_lmmse(y, G, sigma2, mu, v)
        for m, link in enumerate(users):
            llr = soft_demap(mu_e[m, :n_sym], v_e[m, :n_sym], mod)
            out = link.code.siso(link.interleaver.deinterleave(llr), cfg.inner_iters)
            mu_p, v_p = soft_map(link.interleaver.interleave(out.extrinsic), mod)
            mu[m, :n_sym] = mu_p
            v[m, :n_sym] = v_p
            result.bits[m] = out.hard
            ber = None if truth is None else float(np.mean(out.hard != np.asarray(truth[m])))
            result.trace.append(TraceRow(t, m, float(np.mean(v_p)), ber))
        result.iterations = t
        cur = np.concatenate(result.bits)
        if prev is not None and np.array_equal(cur, prev):
            stable += 1
        else:
            stable = 0
        prev = cur
        if cfg.early_stop and stable >= 2:
            break
    return result
