"""Experiment configuration: JSON ingestion with total up-front validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..channel import PROFILES
from ..detector import DetectorConfig
from ..fec import make_code
from ..waveform import PSS_LENGTH, PSS_ROOTS, Modulation, ZcParams, build_preamble_set

EXPERIMENTS = ("zc_autocorr", "mse_vs_snr", "ber_vs_snr", "timing_sync", "cfo_calibration", "full_link")
CODES = ("rep10", "rep_ira")
CSI_MODES = ("perfect", "estimated")
CFO_LIMIT = 1 / (2 * PSS_LENGTH)


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    M: tuple = (2,)
    N: int = 64
    L: int = 8
    L_p: int = 4
    D: int | None = None
    shift_guard: int = 0
    gamma: int = 25
    snr_grid_db: tuple = (0.0, 5.0, 10.0)
    trials: int = 100
    code: str = "rep10"
    modulation: str = "QPSK"
    info_bits: int = 410
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    seed: int = 1
    csi: str = "estimated"
    profile: str = "exponential"
    max_offset: int = 0
    cfo: float = 0.0
    pss_root: int = 25
    pss_repetitions: int = 16
    carrier_hz: float = 915e6  # metadata only; the simulation is complex baseband

    @property
    def shift(self) -> int:
        return self.L_p + self.shift_guard if self.D is None else self.D

    @property
    def search_range(self) -> int:
        return self.max_offset + self.L_p - 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["M"] = list(self.M)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d


_DEFAULTS = {
    "zc_autocorr": dict(M=[1], N=63, gamma=25, L=0, L_p=1, trials=1, snr_grid_db=[]),
    "mse_vs_snr": dict(M=[2, 5, 10], N=256, L=16, L_p=8, gamma=25, trials=1000,
                       snr_grid_db=[0, 5, 10, 15, 20, 25, 30], profile="exponential"),
    "ber_vs_snr": dict(M=[2, 5], N=64, L=8, L_p=4, gamma=25, trials=300, code="rep10",
                       modulation="QPSK", snr_grid_db=[0, 2, 4, 6, 8, 10, 12, 14, 16], csi="estimated",
                       profile="exponential"),
    "timing_sync": dict(M=[2], N=256, L=16, L_p=1, D=128, gamma=25, trials=1000,
                        max_offset=64, snr_grid_db=[10, 20, 30], profile="phase"),
    "cfo_calibration": dict(M=[1], N=63, L=0, L_p=1, gamma=25, trials=1000, cfo=0.002,
                            snr_grid_db=[10], profile="phase", pss_repetitions=16),
    "full_link": dict(M=[2], N=256, L=16, L_p=4, shift_guard=44, gamma=25, trials=50,
                      max_offset=24, cfo=0.002, code="rep10", modulation="QPSK",
                      snr_grid_db=[10, 20, 30], csi="estimated", profile="exponential"),
}


def default_config(experiment: str) -> dict:
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    d = {"experiment": experiment}
    d.update(_DEFAULTS[experiment])
    return d


def _int(d, name, minimum=None):
    v = d[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {v}")
    return v


def _float(d, name):
    v = d[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    return float(v)


def _choice(d, name, options):
    v = d[name]
    if v not in options:
        raise ConfigError(name, f"expected one of {options}, got {v!r}")
    return v


def from_dict(raw: dict) -> ExperimentConfig:
    """Validate a raw mapping (experiment defaults merged underneath) into a config."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    if "experiment" not in raw:
        raise ConfigError("experiment", "missing required field")
    d = default_config(raw["experiment"])
    d.update(raw)
    base = ExperimentConfig(experiment=d["experiment"])

    M = d.get("M", base.M)
    M = [M] if isinstance(M, int) and not isinstance(M, bool) else M
    if not isinstance(M, (list, tuple)) or not M or not all(
            isinstance(m, int) and not isinstance(m, bool) and m >= 1 for m in M):
        raise ConfigError("M", f"expected a positive integer or a non-empty list of them, got {M!r}")

    snr = d.get("snr_grid_db", list(base.snr_grid_db))
    if not isinstance(snr, (list, tuple)) or not all(
            isinstance(s, (int, float)) and not isinstance(s, bool) and not math.isnan(s) for s in snr):
        raise ConfigError("snr_grid_db", f"expected a list of numbers, got {snr!r}")
    if d["experiment"] != "zc_autocorr" and not snr:
        raise ConfigError("snr_grid_db", "must not be empty")

    det = d.get("detector", {})
    if isinstance(det, DetectorConfig):
        det_cfg = det
    else:
        if not isinstance(det, dict):
            raise ConfigError("detector", "expected an object")
        bad = sorted(set(det) - {"outer_iters", "inner_iters", "early_stop"})
        if bad:
            raise ConfigError(f"detector.{bad[0]}", "unknown field")
        try:
            det_cfg = DetectorConfig(**det)
        except (TypeError, ValueError) as exc:
            raise ConfigError("detector", str(exc)) from None

    vals = {name: d.get(name, getattr(base, name)) for name in known}
    vals.update(M=tuple(M), snr_grid_db=tuple(float(s) for s in snr), detector=det_cfg)
    for name, minimum in (("N", 1), ("L", 0), ("L_p", 1), ("shift_guard", 0), ("gamma", 1),
                          ("trials", 1), ("info_bits", 1), ("seed", 0), ("max_offset", 0),
                          ("pss_repetitions", 1)):
        vals[name] = _int(vals, name, minimum)
    if vals["D"] is not None:
        vals["D"] = _int(vals, "D", 1)
    for name in ("cfo", "carrier_hz"):
        vals[name] = _float(vals, name)
    _choice(vals, "code", CODES)
    _choice(vals, "csi", CSI_MODES)
    _choice(vals, "profile", PROFILES)
    _choice(vals, "pss_root", PSS_ROOTS)
    try:
        Modulation.parse(vals["modulation"])
    except ValueError as exc:
        raise ConfigError("modulation", str(exc)) from None
    vals["modulation"] = Modulation.parse(vals["modulation"]).value

    cfg = ExperimentConfig(**vals)
    _validate_cross(cfg)
    return cfg


def _validate_cross(cfg: ExperimentConfig) -> None:
    try:
        zc = ZcParams(cfg.N, cfg.gamma)
    except ValueError as exc:
        raise ConfigError("gamma", str(exc)) from None
    exp = cfg.experiment
    if exp in ("mse_vs_snr", "ber_vs_snr", "timing_sync", "full_link"):
        for M in cfg.M:
            try:
                build_preamble_set(zc, M, cfg.L_p, cfg.L, cfg.shift)
            except ValueError as exc:
                field_name = "D" if "D" in str(exc).split()[0] else ("L" if str(exc).startswith("L") else "M")
                raise ConfigError(field_name, f"M={M}: {exc}") from None
    if exp in ("ber_vs_snr", "full_link"):
        try:
            code = make_code(cfg.code, cfg.info_bits)
        except ValueError as exc:
            raise ConfigError("info_bits" if cfg.code == "rep_ira" else "code", str(exc)) from None
        if code.codeword_len % Modulation.parse(cfg.modulation).bits_per_symbol:
            raise ConfigError("info_bits", "codeword length not a multiple of bits per symbol")
    if exp in ("timing_sync", "full_link") and max(cfg.M) > 1 and cfg.search_range >= cfg.shift:
        raise ConfigError(
            "max_offset",
            f"max_offset + L_p - 1 = {cfg.search_range} must be < D = {cfg.shift} "
            "so shifted preambles of other users cannot alias into the search window",
        )
    if exp in ("cfo_calibration", "full_link") and abs(cfg.cfo) >= CFO_LIMIT:
        raise ConfigError("cfo", f"|cfo| must be < 1/126 (half a PSS subcarrier), got {cfg.cfo}")
    if exp == "cfo_calibration" and cfg.L_p != 1:
        raise ConfigError("L_p", "cfo_calibration models a flat downlink channel (L_p = 1)")


def load_config(path=None, *, experiment: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config (or start from experiment defaults) and apply CLI overrides."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {p}: {exc.strerror or exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON in {p}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
    if experiment is not None:
        raw["experiment"] = experiment
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return from_dict(raw)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return from_dict({**cfg.to_dict(), "detector": asdict(cfg.detector), **kw}) if kw else cfg


__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "default_config", "from_dict",
           "load_config", "with_overrides", "replace"]
