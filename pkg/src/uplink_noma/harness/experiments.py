"""Monte Carlo experiments.

Every trial draws from ``trial_rng(seed, i)``. The same trial index sees the
same bits, channel and unit-variance noise at every SNR point (common random
numbers), so curves are smooth and orderings are not Monte Carlo artefacts.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channel import ChannelRealization, NoiseSpec, awgn, apply_cfo, compose_uplink, draw_channel, draw_multipath
from ..detector import UserLink, detect, n_symbols_for
from ..dsp import CpBlock, remove_cp
from ..estimation import (ChannelEstimate, ReferenceNotFound, estimate_cfo, estimate_channels,
                          estimate_timing, first_path)
from ..fec import build_interleaver, make_code
from ..waveform import ZcParams, build_preamble_set, frame_user, generate_pss, map_symbols, payload_spectra, zadoff_chu
from .config import ExperimentConfig
from .results import ResultRow

TA_MAX_ROUNDS = 3


def trial_rng(seed: int, i: int) -> np.random.Generator:
    """Generator for trial ``i``: PCG64 seeded by ``SeedSequence([seed, i])``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(i)]))


def user_seed(seed: int, m: int) -> int:
    """Interleaver seed of user m, a fixed function of the master seed."""
    return int(np.random.SeedSequence([int(seed), 0x1EAF, int(m)]).generate_state(1, np.uint64)[0])


def _row(cfg, snr, M, metric, value):
    return ResultRow(cfg.experiment, None if snr is None else float(snr), int(M), metric,
                     float(value), cfg.trials, cfg.seed)


def _pset(cfg: ExperimentConfig, M: int):
    return build_preamble_set(ZcParams(cfg.N, cfg.gamma), M, cfg.L_p, cfg.L, cfg.shift)


def _sigma2(snr_db: float, M: int) -> float:
    # SNR is measured on the composite received signal: M unit-power users
    return NoiseSpec(snr_db, signal_power=float(M)).sigma2


# ---------------------------------------------------------------- zc_autocorr

def run_zc_autocorr(cfg: ExperimentConfig):
    z = zadoff_chu(ZcParams(cfg.N, cfg.gamma))
    R = np.array([np.vdot(np.roll(z, tau), z) for tau in range(cfg.N)])
    side = float(np.max(np.abs(R[1:]))) if cfg.N > 1 else 0.0
    ratio = abs(R[0]) / max(side, np.finfo(float).tiny)
    return [_row(cfg, None, 1, "autocorr_peak_ratio", ratio)]


# ---------------------------------------------------------------- mse_vs_snr

def run_mse_vs_snr(cfg: ExperimentConfig):
    rows = []
    N, L = cfg.N, cfg.L
    for M in cfg.M:
        pset = _pset(cfg, M)
        frames = [pset.z_cp[m].samples for m in range(M)]
        err = np.zeros(len(cfg.snr_grid_db))
        power = 0.0
        for i in range(cfg.trials):
            rng = trial_rng(cfg.seed, i)
            chan = draw_channel(M, cfg.L_p, cfg.profile, rng)
            clean = compose_uplink(frames, chan, NoiseSpec(np.inf), rng, length=N + L)
            w = awgn(N + L, 1.0, rng)
            power += np.sum(np.abs(chan.taps) ** 2)
            for s, snr in enumerate(cfg.snr_grid_db):
                y = clean + np.sqrt(_sigma2(snr, M)) * w
                est = estimate_channels(y[L:L + N], pset)
                err[s] += np.sum(np.abs(est.h - chan.taps) ** 2)
        for s, snr in enumerate(cfg.snr_grid_db):
            rows.append(_row(cfg, snr, M, "nmse", err[s] / power))
    return rows


# ---------------------------------------------------------------- data link

@dataclass
class _Users:
    code: object
    links: list
    n_sym: int
    n_blocks: int


def _users(cfg: ExperimentConfig, M: int) -> _Users:
    code = make_code(cfg.code, cfg.info_bits)
    links = [UserLink(code, build_interleaver(code.codeword_len, user_seed(cfg.seed, m))) for m in range(M)]
    n_sym = n_symbols_for(code, cfg.modulation)
    return _Users(code, links, n_sym, -(-n_sym // cfg.N))


def _transmit(users: _Users, pset, cfg, rng):
    """Random info bits per user and the frames carrying them."""
    bits, frames = [], []
    for m, link in enumerate(users.links):
        u = rng.integers(0, 2, size=users.code.info_len, dtype=np.int8)
        c = link.interleaver.interleave(users.code.encode(u))
        bits.append(u)
        frames.append(frame_user(map_symbols(c, cfg.modulation), pset, m))
    return bits, frames


def _receive(y, pset, users: _Users, cfg, sigma2, true_taps, truth):
    """Channel estimation (or genie CSI) and iterative detection on an aligned stream."""
    N, L = cfg.N, cfg.L
    if cfg.csi == "perfect":
        est = ChannelEstimate.from_taps(true_taps, N)
    else:
        est = estimate_channels(remove_cp(CpBlock(y[:N + L], N, L)), pset)
    Y = payload_spectra(y, N, L, users.n_blocks, start=N + L)
    res = detect(Y, est.gains, sigma2, users.links, cfg.modulation, cfg.detector)
    return sum(int(np.count_nonzero(b != t)) for b, t in zip(res.bits, truth))


def _dump(path, x, meta: dict):
    path = Path(path)
    np.asarray(x, dtype="<c16").view("<f8").tofile(path)
    header = "format=float64 little-endian interleaved I/Q; " + "; ".join(f"{k}={v}" for k, v in meta.items())
    path.with_name(path.name + ".txt").write_text(header + "\n", encoding="utf-8")


def run_ber_vs_snr(cfg: ExperimentConfig, dump_path=None):
    rows = []
    N, L = cfg.N, cfg.L
    for M in cfg.M:
        pset = _pset(cfg, M)
        users = _users(cfg, M)
        errors = np.zeros(len(cfg.snr_grid_db), dtype=np.int64)
        frame_len = (N + L) * (1 + users.n_blocks)
        for i in range(cfg.trials):
            rng = trial_rng(cfg.seed, i)
            bits, frames = _transmit(users, pset, cfg, rng)
            chan = draw_channel(M, cfg.L_p, cfg.profile, rng)
            clean = compose_uplink([f.serialize() for f in frames], chan, NoiseSpec(np.inf), rng,
                                   length=frame_len)
            w = awgn(frame_len, 1.0, rng)
            for s, snr in enumerate(cfg.snr_grid_db):
                sigma2 = _sigma2(snr, M)
                y = clean + np.sqrt(sigma2) * w
                errors[s] += _receive(y, pset, users, cfg, sigma2, chan.taps, bits)
                if dump_path is not None and i == 0 and M == cfg.M[-1] and s == len(cfg.snr_grid_db) - 1:
                    _dump(dump_path, y[N + L:], dict(experiment=cfg.experiment, snr_db=snr, M=M, N=N, L=L,
                                                     blocks=users.n_blocks, samples=frame_len - N - L))
        total = cfg.trials * M * users.code.info_len
        for s, snr in enumerate(cfg.snr_grid_db):
            rows.append(_row(cfg, snr, M, "ber", errors[s] / total))
    return rows


# ---------------------------------------------------------------- timing_sync

def _timing_frames(pset, rng):
    """Preamble plus one random QPSK block per user, so the search window sees data too."""
    out = []
    for m in range(pset.M):
        s = map_symbols(rng.integers(0, 2, size=2 * pset.N), "QPSK")
        out.append(frame_user(s, pset, m).serialize())
    return out


def estimate_offsets(y, pset, search_range: int, refine: bool) -> np.ndarray:
    out = np.empty(pset.M, dtype=np.int64)
    for m in range(pset.M):
        est = estimate_timing(y, pset, m, search_range)
        out[m] = first_path(est, pset.L_p) if refine else est.delta
    return out


def run_timing_sync(cfg: ExperimentConfig):
    rows = []
    for M in cfg.M:
        pset = _pset(cfg, M)
        hits = np.zeros(len(cfg.snr_grid_db), dtype=np.int64)
        for i in range(cfg.trials):
            rng = trial_rng(cfg.seed, i)
            frames = _timing_frames(pset, rng)
            chan = draw_channel(M, cfg.L_p, cfg.profile, rng, max_offset=cfg.max_offset)
            n = len(frames[0]) + cfg.max_offset + cfg.L_p - 1
            clean = compose_uplink(frames, chan, NoiseSpec(np.inf), rng, length=n)
            w = awgn(n, 1.0, rng)
            for s, snr in enumerate(cfg.snr_grid_db):
                y = clean + np.sqrt(_sigma2(snr, M)) * w
                hits[s] += np.count_nonzero(estimate_offsets(y, pset, cfg.search_range, cfg.L_p > 1) == chan.offsets)
        for s, snr in enumerate(cfg.snr_grid_db):
            rows.append(_row(cfg, snr, M, "sync_success_rate", hits[s] / (cfg.trials * M)))
    return rows


# ---------------------------------------------------------------- cfo_calibration

def pss_stream(pss, eps: float, h: complex, gap: int, repetitions: int, sigma2: float, rng,
               tail: int | None = None) -> np.ndarray:
    """``gap`` noise-only samples, then back-to-back PSS bursts, rotated by ``eps`` and scaled by ``h``."""
    n = pss.size
    tail = n if tail is None else tail
    tx = np.zeros(gap + repetitions * n + tail, dtype=np.complex128)
    tx[gap:gap + repetitions * n] = np.tile(pss, repetitions)
    return h * apply_cfo(tx, eps) + awgn(tx.size, sigma2, rng)


def _estimate_cfo_or_zero(rx, pss, repetitions):
    try:
        return estimate_cfo(rx, pss, repetitions=repetitions, period=pss.size).eps
    except ReferenceNotFound:
        return 0.0


def run_cfo_calibration(cfg: ExperimentConfig):
    pss = generate_pss(cfg.pss_root)
    rows = []
    for snr in cfg.snr_grid_db:
        sq = 0.0
        for i in range(cfg.trials):
            rng = trial_rng(cfg.seed, i)
            h = draw_multipath(1, cfg.profile, rng)[0]
            gap = int(rng.integers(0, pss.size))
            rx = pss_stream(pss, cfg.cfo, h, gap, cfg.pss_repetitions, NoiseSpec(snr).sigma2, rng)
            sq += (_estimate_cfo_or_zero(rx, pss, cfg.pss_repetitions) - cfg.cfo) ** 2
        rows.append(_row(cfg, snr, 1, "cfo_rmse", np.sqrt(sq / cfg.trials)))
    return rows


# ---------------------------------------------------------------- full_link

@dataclass
class LinkOutcome:
    bit_errors: int
    synced: bool
    rounds: int
    residual_offsets: np.ndarray
    residual_cfo: np.ndarray


def full_link_trial(cfg: ExperimentConfig, M: int, snr_db: float, rng, users: _Users | None = None,
                    pset=None, chan: ChannelRealization | None = None, dump=None) -> LinkOutcome:
    """One pass of the uplink procedure for M users.

    1. Each UE estimates its CFO from downlink PSS bursts and pre-compensates.
    2. Timing-advance loop: UEs send preambles, the base station estimates each
       offset (first-path refined) and the UEs advance; up to three rounds,
       ending early once every estimate is zero.
    3. Data frames are sent with the residual CFO and offsets; the base station
       estimates channels from the preamble and runs the iterative detector.
    """
    pset = _pset(cfg, M) if pset is None else pset
    users = _users(cfg, M) if users is None else users
    N, L = cfg.N, cfg.L
    if chan is None:
        chan = draw_channel(M, cfg.L_p, cfg.profile, rng, max_offset=cfg.max_offset, cfo_max=cfg.cfo)
    sigma2 = _sigma2(snr_db, M)

    pss = generate_pss(cfg.pss_root)
    eps_hat = np.zeros(M)
    for m in range(M):
        h = draw_multipath(1, "phase", rng)[0]
        gap = int(rng.integers(0, pss.size))
        rx = pss_stream(pss, chan.cfo[m], h, gap, cfg.pss_repetitions, NoiseSpec(snr_db).sigma2, rng)
        eps_hat[m] = _estimate_cfo_or_zero(rx, pss, cfg.pss_repetitions)
    residual_cfo = chan.cfo - eps_hat

    # arrivals relative to the base station's frame start, shifted by `base`
    # so over-estimated advances (early arrival) stay representable
    base = cfg.search_range + 1
    offsets = chan.offsets.astype(np.int64).copy()
    rounds = 0
    for rounds in range(1, TA_MAX_ROUNDS + 1):
        frames = _timing_frames(pset, rng)
        rc = ChannelRealization(chan.taps, residual_cfo, base + np.clip(offsets, -base, None))
        n = base + len(frames[0]) + cfg.search_range + cfg.L_p
        y = compose_uplink(frames, rc, NoiseSpec(snr_db, float(M)), rng, length=n)
        adv = estimate_offsets(y[base:], pset, cfg.search_range, cfg.L_p > 1)
        offsets = offsets - adv
        if not np.any(adv):
            break
    synced = not np.any(offsets)

    bits, frames = _transmit(users, pset, cfg, rng)
    frame_len = (N + L) * (1 + users.n_blocks)
    rc = ChannelRealization(chan.taps, residual_cfo, base + np.clip(offsets, -base, None))
    y = compose_uplink([f.serialize() for f in frames], rc, NoiseSpec(snr_db, float(M)), rng,
                       length=base + frame_len + cfg.search_range + cfg.L_p)
    aligned = y[base:base + frame_len]
    if dump is not None:
        dump(aligned[N + L:])
    errors = _receive(aligned, pset, users, cfg, max(sigma2, 1e-12), chan.taps, bits)
    return LinkOutcome(errors, synced, rounds, offsets, residual_cfo)


def run_full_link(cfg: ExperimentConfig, dump_path=None):
    rows = []
    for M in cfg.M:
        pset = _pset(cfg, M)
        users = _users(cfg, M)
        for s, snr in enumerate(cfg.snr_grid_db):
            errors = synced = 0
            for i in range(cfg.trials):
                rng = trial_rng(cfg.seed, i)
                dump = None
                if dump_path is not None and i == 0 and M == cfg.M[-1] and s == len(cfg.snr_grid_db) - 1:
                    def dump(x, snr=snr, M=M):
                        _dump(dump_path, x, dict(experiment=cfg.experiment, snr_db=snr, M=M, N=cfg.N, L=cfg.L,
                                                 blocks=users.n_blocks, samples=x.size))
                out = full_link_trial(cfg, M, snr, rng, users, pset, dump=dump)
                errors += out.bit_errors
                synced += out.synced
            rows.append(_row(cfg, snr, M, "ber", errors / (cfg.trials * M * users.code.info_len)))
            rows.append(_row(cfg, snr, M, "sync_success_rate", synced / cfg.trials))
    return rows


_RUNNERS = {
    "zc_autocorr": run_zc_autocorr,
    "mse_vs_snr": run_mse_vs_snr,
    "ber_vs_snr": run_ber_vs_snr,
    "timing_sync": run_timing_sync,
    "cfo_calibration": run_cfo_calibration,
    "full_link": run_full_link,
}

_DUMPS = {"ber_vs_snr", "full_link"}


def run_experiment(cfg: ExperimentConfig, dump_path=None) -> list:
    """Run one configured study; ``dump_path`` saves the aligned payload samples of trial 0
    at the last SNR point (payload-carrying experiments only)."""
    runner = _RUNNERS[cfg.experiment]
    if cfg.experiment in _DUMPS:
        return runner(cfg, dump_path=dump_path)
    if dump_path is not None:
        raise ValueError(f"--dump-samples is only available for {sorted(_DUMPS)}")
    return runner(cfg)
