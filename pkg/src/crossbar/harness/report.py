"""Experiment reports as deterministic CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

HEADER = ("experiment", "params", "metric", "value", "seed", "time_us", "energy_uj")


def format_params(params: dict) -> str:
    return ";".join(f"{k}={params[k]}" for k in sorted(params))


def _params_key(params: str):
    """Sort key treating numeric parameter values as numbers."""
    key = []
    for item in params.split(";"):
        k, _, v = item.partition("=")
        try:
            key.append((k, 0, float(v), ""))
        except ValueError:
            key.append((k, 1, 0.0, v))
    return tuple(key)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


@dataclass
class ExperimentReport:
    """Append-only metric rows; ``to_csv`` orders them by params then seed."""

    rows: list = field(default_factory=list)

    def add(self, experiment: str, params: dict, metric: str, value, seed,
            time_us=None, energy_uj=None) -> None:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
        self.rows.append((experiment, format_params(params), metric, value, seed,
                          None if time_us is None else float(time_us),
                          None if energy_uj is None else float(energy_uj)))

    def extend(self, other: "ExperimentReport") -> None:
        self.rows.extend(other.rows)

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (r[0], _params_key(r[1]),
                                              r[4] if r[4] is not None else -1, r[2]))

    def values(self, metric: str, **match):
        """Values of ``metric`` on rows whose params contain every ``match`` item."""
        want = {f"{k}={v}" for k, v in match.items()}
        return [r[3] for r in self.sorted_rows()
                if r[2] == metric and want <= set(r[1].split(";"))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        for r in self.sorted_rows():
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def write(self, path) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(self.to_csv().encode("utf-8"))
        return p
