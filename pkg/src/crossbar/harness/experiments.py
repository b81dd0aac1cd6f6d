"""Experiment pipelines: classification, streaming benchmark, PCA studies,
background subtraction and sketched least squares."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cost import (CostLedger, DigitalProfile, HardwareProfile, cost_matrix_read, cost_op,
                    digital_cost, digital_sketch_flops)
from ..rnla import (PCAConfig, SketchConfig, _lstsq_qr, center_columns, default_sketch_scale,
                    exact_olls, exact_truncated_svd, randomized_pca, randomized_pca_digital,
                    sketch_digital, sketch_stream)
from ..tile import AnalogTile, DeviceParams, IOParams, PulseConfig, ideal_tile
from .datasets import N_BLOCKS, CubeDataset, FrameStack, replicated_design
from .report import ExperimentReport

CLASSIFY_MODES = ("analog", "ideal-analog", "digital-streaming", "digital-baseline")
PCA_MODES = ("analog", "ideal-analog", "digital")

# Device preset for the classification experiment.  The chip codes each input
# as a pulse probability relative to the vector maximum, so a coincidence
# always moves a weight by one step and the stored sketch grows with the
# pulse count.  With 63 pulses and 4096 updates the largest expected entry
# stays well inside w_max.
CHIP_DEVICE = DeviceParams(dw_min=3.7e-5)


def full_probability_scale(bl: int, dw_min: float, s_max: float, a_max: float) -> float:
    """Sketch scale at which the largest row and column inputs fire in every slot."""
    return bl * dw_min / (s_max * a_max)


def _mode_check(mode, allowed):
    if mode not in allowed:
        raise ValueError(f"mode must be one of {', '.join(allowed)}; got {mode!r}")


def _cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    return float(a @ b / (na * nb)) if na and nb else math.nan


def _ledger_cost(ledger):
    return (ledger.time_us, ledger.energy_uj) if ledger is not None and ledger.profile else (None, None)


# -- classification ------------------------------------------------------------

@dataclass
class ClassifyResult:
    accuracy: float
    cosine: list
    regressor: np.ndarray
    report: ExperimentReport = field(default_factory=ExperimentReport)


def classify_pipeline(ds: CubeDataset, pulses: int = 63, mode: str = "analog", seed: int = 0,
                      device: DeviceParams | None = None, io: IOParams | None = None,
                      profile: HardwareProfile | None = None) -> ClassifyResult:
    """Sketch the replicated design, fit one regressor per block, average, classify."""
    _mode_check(mode, CLASSIFY_MODES)
    x_tr, y_tr = ds.x_train, ds.y_train
    exact = exact_olls(x_tr, y_tr)
    ledger = CostLedger(profile or HardwareProfile.low())
    if mode == "digital-baseline":
        ws = [exact]
        ledger = None
    else:
        a = replicated_design(ds)
        ell = a.shape[1]
        if mode == "digital-streaming":
            z = sketch_digital(a, SketchConfig(ell, "rademacher", seed=seed))
            ledger = None
        else:
            if mode == "ideal-analog":
                pc = PulseConfig(pulses, ideal=True)
                tile = ideal_tile(ell, a.shape[1], seed=seed)
                scale = default_sketch_scale(a)
            else:
                pc = PulseConfig(pulses)
                dev = device or CHIP_DEVICE
                tile = AnalogTile(ell, a.shape[1], dev, io or IOParams(), seed)
                scale = full_probability_scale(pulses, dev.dw_min, 1.0, np.max(np.abs(a)))
            cfg = SketchConfig(ell, "rademacher", pc, seed=seed, scale=scale)
            z = sketch_stream(a, cfg, tile, ledger)
        ws = []
        for i in range(N_BLOCKS):
            blk = z[:, 4 * i:4 * i + 4]
            ws.append(_lstsq_qr(blk[:, :3], blk[:, 3]))
    w = np.mean(ws, axis=0)
    pred = np.where(ds.x_test @ w >= 0, 1.0, -1.0)  # ties go to +1
    acc = float(np.mean(pred == ds.y_test))
    cos = [_cosine(wi, exact) for wi in ws]

    rep = ExperimentReport()
    params = {"mode": mode, "pulses": pulses if mode in ("analog", "ideal-analog") else 0}
    t, e = _ledger_cost(ledger)
    rep.add("classify", params, "accuracy", acc, seed, t, e)
    rep.add("classify", params, "cosine_mean", float(np.mean(cos)), seed)
    rep.add("classify", params, "cosine_min", float(np.min(cos)), seed)
    rep.add("classify", params, "cosine_global", _cosine(w, exact), seed)
    return ClassifyResult(acc, cos, w, rep)


def classify_study(ds: CubeDataset, pulses=(15, 31, 63), modes=CLASSIFY_MODES, seeds=range(10),
                   device=None, io=None, profile=None) -> ExperimentReport:
    rep = ExperimentReport()
    for mode in modes:
        # the baseline has no randomness and a single pulse setting
        mode_seeds = [min(seeds)] if mode == "digital-baseline" else seeds
        mode_pulses = pulses if mode in ("analog", "ideal-analog") else [0]
        for p in mode_pulses:
            for s in mode_seeds:
                rep.extend(classify_pipeline(ds, p or 63, mode, s, device, io, profile).report)
    return rep


# -- streaming benchmark -------------------------------------------------------

def sketch_benchmark(m_grid, n_grid=(2048, 4096), ell_grid=(256, 512, 1024, 2048),
                     hybrid: HardwareProfile | None = None,
                     digital: DigitalProfile | None = None) -> ExperimentReport:
    """Cost-model comparison of streamed sketching of an ``m x n`` matrix.

    Hybrid: ``m`` OP updates plus one matrix read.  Digital, memory model: one
    rank-one update of the ``ell x n`` sketch per row with its two vector
    transfers.  Digital, FLOP model: ``ell n (2m - 1)`` operations at peak rate.
    """
    if not len(m_grid) or not len(n_grid) or not len(ell_grid):
        raise ValueError("grids must be nonempty")
    hybrid = hybrid or HardwareProfile.mid()
    digital = digital or DigitalProfile()
    t_op, e_op = cost_op(hybrid)
    t_rm, e_rm = cost_matrix_read(hybrid)
    rep = ExperimentReport()
    for n in n_grid:
        for ell in ell_grid:
            if max(ell, n) > hybrid.logical_dim:
                raise ValueError(f"sketch {ell}x{n} exceeds accelerator capacity {hybrid.logical_dim}")
            t_row, e_row = digital_cost("op", (ell, n), digital, hybrid)
            for m in m_grid:
                ht, he = m * t_op + t_rm, m * e_op + e_rm
                dt, de = m * t_row, m * e_row
                flops = digital_sketch_flops(m, n, ell)
                ft = flops / digital.peak_flops * 1e6
                p = {"m": m, "n": n, "ell": ell}
                rep.add("sketch-bench", p, "hybrid", 0.0, 0, ht, he)
                rep.add("sketch-bench", p, "digital_memory", 0.0, 0, dt, de)
                rep.add("sketch-bench", p, "digital_flops", flops, 0, ft, None)
                rep.add("sketch-bench", p, "speedup_memory", dt / ht, 0)
                rep.add("sketch-bench", p, "energy_ratio_memory", de / he, 0)
                rep.add("sketch-bench", p, "speedup_flops", ft / ht, 0)
    return rep


# -- PCA -------------------------------------------------------------------------

def _pca_tile(shape, mode, seed, device, io, ledger):
    if mode == "ideal-analog":
        return ideal_tile(*shape, seed=seed, ledger=ledger)
    return AnalogTile(*shape, device or DeviceParams(), io or IOParams(), seed, ledger)


def run_pca(a, cfg: PCAConfig, mode="analog", device=None, io=None, ledger=None):
    _mode_check(mode, PCA_MODES)
    if mode == "digital":
        return randomized_pca_digital(a, cfg)
    tile = _pca_tile(np.shape(a), mode, cfg.seed, device, io, None)
    return randomized_pca(a, cfg, tile, ledger)


def pca_error_study(a, k=5, ells=None, trials=10, q=2, modes=("analog", "digital"),
                    device=None, io=None, seed0=0, digital_ells=None) -> ExperimentReport:
    """Relative projection error ``|A - U U^T A| / |A|`` per sketch size and mode,
    plus the exact rank-``k`` error as reference.

    The digital mode runs at ``digital_ells`` (default ``ell = k`` only, the
    usual digital setting); the other modes sweep ``ells``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = np.asarray(a, dtype=float)
    ells = ells or (k, 2 * k, 3 * k)
    rep = ExperimentReport()
    uk, _, _ = exact_truncated_svd(a, k)
    exact = float(np.linalg.norm(a - uk @ (uk.T @ a)) / np.linalg.norm(a))
    rep.add("pca-study", {"k": k, "mode": "exact"}, "rel_error", exact, seed0)
    for mode in modes:
        sweep = (digital_ells or (k,)) if mode == "digital" else ells
        for ell in sweep:
            for t in range(trials):
                cfg = PCAConfig(k, ell, q, seed0 + t)
                res = run_pca(a, cfg, mode, device, io)
                rep.add("pca-study", {"k": k, "ell": ell, "q": q, "mode": mode},
                        "rel_error", res.projection_error(a), cfg.seed)
    return rep


# -- background subtraction ----------------------------------------------------

@dataclass
class BgsubResult:
    foreground: np.ndarray          # (f, h, w)
    per_frame_residual: np.ndarray  # |foreground_t| / |frame_t - mean|
    pca: object
    report: ExperimentReport


def background_subtract(frames: FrameStack, cfg: PCAConfig, mode="analog", device=None,
                        io=None, ledger=None):
    """Foreground = centered frames minus their projection on the top-k PCs.

    PCA runs on the (pixels x frames) transpose so the tall-matrix requirement
    holds for short clips.
    """
    f, h, w = frames.shape
    if cfg.k > f:
        raise ValueError(f"k={cfg.k} exceeds the number of frames {f}")
    a = frames.as_matrix()
    ac = center_columns(a)
    res = run_pca(ac.T, cfg, mode, device, io, ledger)
    basis = res.u_k  # pixel-space principal directions
    fg = (ac - (ac @ basis) @ basis.T) * math.sqrt(f)
    centered = (a - a.mean(axis=0))
    denom = np.linalg.norm(centered, axis=1)
    per_frame = np.linalg.norm(fg, axis=1) / np.where(denom > 0, denom, 1.0)
    return fg.reshape(f, h, w), per_frame, res


def mask_iou(pred, truth) -> float:
    pred, truth = np.asarray(pred, bool), np.asarray(truth, bool)
    union = np.logical_or(pred, truth).sum()
    return float(np.logical_and(pred, truth).sum() / union) if union else 1.0


def foreground_mask(fg, threshold=0.2):
    return np.abs(fg) > threshold


def bgsub_pipeline(frames: FrameStack, cfg: PCAConfig, mode="analog", truth_mask=None,
                   device=None, io=None, threshold=0.2, reference="digital") -> BgsubResult:
    """Background subtraction with an optional comparison against a reference mode."""
    ledger = CostLedger(HardwareProfile.low()) if mode != "digital" else None
    fg, per_frame, res = background_subtract(frames, cfg, mode, device, io, ledger)
    rep = ExperimentReport()
    p = {"k": cfg.k, "ell": cfg.ell, "q": cfg.q, "mode": mode}
    t, e = _ledger_cost(ledger)
    rep.add("bgsub", p, "mean_frame_residual", float(per_frame.mean()), cfg.seed, t, e)
    if truth_mask is not None:
        rep.add("bgsub", p, "mask_iou", mask_iou(foreground_mask(fg, threshold), truth_mask), cfg.seed)
    if reference and reference != mode:
        ref, _, _ = background_subtract(frames, cfg, reference, device, io)
        rep.add("bgsub", p, f"rel_diff_vs_{reference}",
                float(np.linalg.norm(fg - ref) / np.linalg.norm(ref)), cfg.seed)
    return BgsubResult(fg, per_frame, res, rep)


# -- sketched least squares -------------------------------------------------------

def olls_pipeline(a, b, ell, mode="analog", dist="gaussian", pulses=31, seed=0,
                  device=None, io=None) -> ExperimentReport:
    """Sketch-and-solve least squares on ``[A b]`` against the exact solution."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = np.column_stack([a, b])
    n = a.shape[1]
    if ell < n + 1:
        raise ValueError(f"ell={ell} must be at least n+1={n + 1}")
    x_hat = exact_olls(a, b)
    ledger = None
    if mode == "digital":
        z = sketch_digital(ab, SketchConfig(ell, dist, seed=seed))
    else:
        _mode_check(mode, PCA_MODES)
        ledger = CostLedger(HardwareProfile.low())
        ideal = mode == "ideal-analog"
        tile = _pca_tile((ell, n + 1), mode, seed, device, io, None)
        cfg = SketchConfig(ell, dist, PulseConfig(pulses, ideal=ideal), seed=seed,
                           scale=default_sketch_scale(ab, tile.device.w_max))
        z = sketch_stream(ab, cfg, tile, ledger)
    x = _lstsq_qr(z[:, :n], z[:, n])
    rep = ExperimentReport()
    p = {"ell": ell, "mode": mode, "dist": dist}
    t, e = _ledger_cost(ledger)
    rel = float(np.linalg.norm(x - x_hat) / max(np.linalg.norm(x_hat), 1e-300))
    rep.add("olls", p, "rel_error_vs_exact", rel, seed, t, e)
    res_s = float(np.linalg.norm(a @ x - b))
    res_e = float(np.linalg.norm(a @ x_hat - b))
    rep.add("olls", p, "residual_ratio", res_s / res_e if res_e else math.nan, seed)
    for i, v in enumerate(x):
        rep.add("olls", p, f"x_{i}", float(v), seed)
    return rep
