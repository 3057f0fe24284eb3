"""Result rows and their CSV form."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

METRICS = ("nmse", "ber", "sync_success_rate", "cfo_rmse", "autocorr_peak_ratio")
HEADER = ("experiment", "snr_db", "M", "metric", "value", "trials", "seed")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    snr_db: float | None
    M: int
    metric: str
    value: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not math.isfinite(self.value):
            raise ValueError(f"{self.metric} value must be finite, got {self.value}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(rows, path) -> None:
    """Header plus one line per row; floats use repr so they parse back exactly."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            w.writerow([_fmt(getattr(r, name)) for name in HEADER])


def read_csv(path) -> list:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            ResultRow(
                experiment=rec["experiment"],
                snr_db=float(rec["snr_db"]) if rec["snr_db"] else None,
                M=int(rec["M"]),
                metric=rec["metric"],
                value=float(rec["value"]),
                trials=int(rec["trials"]),
                seed=int(rec["seed"]),
            )
            for rec in reader
        ]
