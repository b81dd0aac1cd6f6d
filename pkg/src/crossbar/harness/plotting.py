"""Line charts for the experiment reports (SVG, reproducible bytes)."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import ExperimentReport  # noqa: E402

# fixed ids and no timestamp so identical data gives identical files
matplotlib.rcParams["svg.hashsalt"] = "crossbar"
_META = {"Date": None, "Creator": None}


def _params(s):
    return dict(kv.split("=", 1) for kv in s.split(";") if kv)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_sketch_bench(rep: ExperimentReport, out_dir) -> list[Path]:
    """Time and energy versus ``m`` for each ``n``: one chart per quantity."""
    # series[(n, quantity)][(label, ell)] -> [(m, value)]
    series = defaultdict(lambda: defaultdict(list))
    for exp, params, metric, _, _, t, e in rep.sorted_rows():
        if exp != "sketch-bench" or metric not in ("hybrid", "digital_memory", "digital_flops"):
            continue
        p = _params(params)
        m, n, ell = int(p["m"]), int(p["n"]), int(p["ell"])
        series[(n, "time")][(metric, ell)].append((m, t))
        if e is not None:
            series[(n, "energy")][(metric, ell)].append((m, e))
    styles = {"hybrid": "-", "digital_memory": "--", "digital_flops": ":"}
    paths = []
    for (n, qty), lines in sorted(series.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        for (label, ell), pts in sorted(lines.items()):
            pts.sort()
            ax.loglog([p[0] for p in pts], [p[1] for p in pts], styles[label],
                      label=f"{label} l={ell}")
        ax.set_xlabel("rows m")
        ax.set_ylabel("time (us)" if qty == "time" else "energy (uJ)")
        ax.set_title(f"streamed sketch, n={n}")
        ax.legend(fontsize=6, ncol=2)
        paths.append(_save(fig, Path(out_dir) / f"sketch_{qty}_n{n}.svg"))
    return paths


def plot_metric_vs(rep: ExperimentReport, metric: str, x_key: str, group_key: str,
                   path, xlabel=None, ylabel=None) -> Path:
    """Median of ``metric`` over seeds against ``x_key``, one line per ``group_key``."""
    groups = defaultdict(lambda: defaultdict(list))
    for _, params, m, value, _, _, _ in rep.sorted_rows():
        if m != metric:
            continue
        p = _params(params)
        if x_key not in p:
            continue
        groups[p.get(group_key, "")][float(p[x_key])].append(value)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for g, pts in sorted(groups.items()):
        xs = sorted(pts)
        ax.plot(xs, [np.median(pts[x]) for x in xs], "o-", label=g)
    ax.set_xlabel(xlabel or x_key)
    ax.set_ylabel(ylabel or metric)
    ax.legend(fontsize=7)
    return _save(fig, path)
