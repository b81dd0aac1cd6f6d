"""Acceptance criteria.  Each test prints one ``PASS``/``FAIL criterion N`` line
(visible even under output capture) and then asserts the same condition."""

import math
import time
import warnings

import numpy as np
import pytest

from crossbar import (DigitalProfile, HardwareProfile, LowRankUpdate, PCAConfig, PulseConfig,
                      SketchConfig, cost_matrix_read, cost_matrix_write, cost_mv, cost_op,
                      digital_cost, embedding_distortion, ideal_tile, low_rank_update,
                      randomized_pca, randomized_pca_digital, sketch_digital, sketch_stream,
                      sketched_olls, tile_new)
from crossbar.cost import digital_sketch_flops
from crossbar.harness import experiments as ex
from crossbar.harness.datasets import gen_cube, moving_square, spectrum_matched
from crossbar.rnla import gaussian_sketch_apply, sketched_olls_digital

IDEAL = PulseConfig(ideal=True)


@pytest.fixture
def verdict(capsys):
    def report(label, ok, detail, elapsed=None, budget=None):
        if budget is not None:
            detail += f"; {elapsed:.1f}s of {budget}s budget"
            ok = ok and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
        assert ok, detail
    return report


def rel(a, b):
    nb = np.linalg.norm(b)
    return np.linalg.norm(a - b) / nb if nb else np.linalg.norm(a)


# 1 ----------------------------------------------------------------------------------

def test_criterion_1_cost_table(verdict):
    t0 = time.perf_counter()
    low, high = HardwareProfile.low(), HardwareProfile.high()
    expect = [
        ("T_MW", cost_matrix_write, 0, 2048, 20480),
        ("T_MV", cost_mv, 0, 0.135, 0.240),
        ("E_MV", cost_mv, 1, 12.928, 33.28),
        ("T_OP", cost_op, 0, 0.11, 0.14),
        ("T_RM", cost_matrix_read, 0, 2293.76, 4259.84),
        ("E_RM", cost_matrix_read, 1, 212860.928, 555745.28),
    ]
    bad = []
    for name, fn, idx, lo, hi in expect:
        for p, want in ((low, lo), (high, hi)):
            got = fn(p)[idx]
            if not math.isclose(got, want, rel_tol=1e-9):
                bad.append(f"{name}={got} (want {want})")
    dims = (low.logical_dim, low.logical_dim)
    dig = DigitalProfile()
    for kind, want in (("read", (250.0, 12000.0)), ("write", (250.0, 12000.0)),
                       ("mv", (250.005, 12000.064))):
        got = digital_cost(kind, dims, dig, low)
        if not all(math.isclose(g, w, rel_tol=1e-9) for g, w in zip(got, want)):
            bad.append(f"digital {kind}={got}")
    elapsed = time.perf_counter() - t0
    verdict(1, not bad, "all 12 hybrid endpoints and digital rows exact" if not bad
            else "; ".join(bad), elapsed, 1)


# 2 ----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def classify_run():
    t0 = time.perf_counter()
    ds = gen_cube(8192, seed=0)
    rep = ex.classify_study(ds, pulses=(15, 31, 63),
                            modes=("analog", "digital-streaming", "digital-baseline"),
                            seeds=range(10))
    return rep, time.perf_counter() - t0


def test_criterion_2a_classification_baseline(verdict, classify_run):
    rep, elapsed = classify_run
    acc = rep.values("accuracy", mode="digital-baseline")[0]
    verdict("2a", abs(acc - 0.9833) <= 0.01,
            f"digital baseline accuracy {acc:.4f}, target 0.9833 +- 0.01", elapsed, 120)


def test_criterion_2b_classification_streaming(verdict, classify_run):
    rep, elapsed = classify_run
    med = float(np.median(rep.values("accuracy", mode="digital-streaming")))
    verdict("2b", abs(med - 0.9631) <= 0.02,
            f"digital streaming median accuracy {med:.4f}, target 0.9631 +- 0.02", elapsed, 120)


def test_criterion_2c_classification_analog_trend(verdict, classify_run):
    rep, elapsed = classify_run
    meds = [float(np.median(rep.values("accuracy", mode="analog", pulses=p))) for p in (15, 31, 63)]
    ok = meds[0] < meds[1] < meds[2] and meds[2] >= 0.90
    verdict("2c", ok, "analog median accuracy at 15/31/63 pulses "
            + " / ".join(f"{m:.3f}" for m in meds) + " (monotone, >= 0.90 at 63)", elapsed, 120)


# 3 ----------------------------------------------------------------------------------

def test_criterion_3_streaming_benchmark(verdict):
    t0 = time.perf_counter()
    m_grid = [2 ** e for e in range(12, 23, 2)]
    ells = (256, 512, 1024, 2048)
    rep = ex.sketch_benchmark(m_grid, (2048, 4096), ells)
    m = max(m_grid)
    flops_ok = True
    # direct check of the formula on every row
    for r in rep.rows:
        if r[2] == "digital_flops":
            p = dict(kv.split("=") for kv in r[1].split(";"))
            ell, mm, n = int(p["ell"]), int(p["m"]), int(p["n"])
            flops_ok = flops_ok and r[3] == ell * n * (2 * mm - 1) == digital_sketch_flops(mm, n, ell)
    parts, ok = [], flops_ok
    for n in (2048, 4096):
        for ell in ells:
            s = rep.values("speedup_memory", m=m, n=n, ell=ell)[0]
            e = rep.values("energy_ratio_memory", m=m, n=n, ell=ell)[0]
            parts.append(f"n={n} ell={ell}: {s:.1f}x/{e:.1f}x")
            if ell == max(ells):
                ok = ok and s >= 15 and e >= 8
    verdict(3, ok, f"m={m}, time/energy advantage (judged at ell={max(ells)}): "
            + ", ".join(parts) + f"; flop counts exact={flops_ok}",
            time.perf_counter() - t0, 60)


# 4 ----------------------------------------------------------------------------------

def test_criterion_4_pca_trend(verdict):
    t0 = time.perf_counter()
    k = 5
    a = spectrum_matched(k=k, seed=0)
    ells = (k, 2 * k, 3 * k)
    rep = ex.pca_error_study(a, k=k, ells=ells, trials=10, q=2, modes=("analog", "digital"),
                             digital_ells=ells)
    hyb = [float(np.median(rep.values("rel_error", mode="analog", ell=e))) for e in ells]
    dig = [float(np.median(rep.values("rel_error", mode="digital", ell=e))) for e in ells]
    gap = abs(hyb[2] - dig[2])
    ok = gap <= 0.03 and hyb[0] >= hyb[1] >= hyb[2]
    verdict(4, ok, "median hybrid error at ell=k/2k/3k "
            + " / ".join(f"{h:.3f}" for h in hyb)
            + "; digital " + " / ".join(f"{d:.3f}" for d in dig)
            + f"; |hybrid - digital| at 3k = {gap:.3f}", time.perf_counter() - t0, 120)


# 5 ----------------------------------------------------------------------------------

def _oracle_case(rng):
    m = int(rng.integers(2, 129))
    n = int(rng.integers(1, min(64, m) + 1))
    errs = {}
    a = rng.uniform(-0.5, 0.5, (m, n))
    t = ideal_tile(m, n, seed=int(rng.integers(1 << 30)))
    t.m_load(a)
    errs["m_read"] = rel(t.m_read(), a)
    x, y = rng.standard_normal(n), rng.standard_normal(m)
    errs["mv"] = rel(t.mv_analog(x), a @ x)
    errs["mv_t"] = rel(t.mv_transpose_analog(y), a.T @ y)
    u, v = 0.2 * rng.uniform(-1, 1, m), 0.2 * rng.uniform(-1, 1, n)
    t.op_update(u, v, IDEAL)
    errs["op"] = rel(t.weights, a + np.outer(u, v))

    p = int(rng.integers(1, 3))
    c, d = 0.1 * rng.uniform(-1, 1, (m, p)), 0.1 * rng.uniform(-1, 1, (n, p))
    t.m_load(a)
    with warnings.catch_warnings():
        # tiny shapes trip the advisory "rank not small" warning
        warnings.simplefilter("ignore", UserWarning)
        upd = LowRankUpdate(c, d)
    low_rank_update(t, upd, IDEAL)
    errs["low_rank"] = rel(t.weights, a + c @ d.T)

    ell = int(rng.integers(1, 33))
    dist = ("gaussian", "rademacher")[int(rng.integers(2))]
    cfg = SketchConfig(ell, dist, IDEAL, seed=int(rng.integers(1 << 30)))
    b = rng.standard_normal((m, n))
    errs["sketch"] = rel(sketch_stream(b, cfg, ideal_tile(ell, n)), sketch_digital(b, cfg))

    if m >= n + 1 + 8:
        ab = rng.standard_normal((m, n + 1))
        ell = int(rng.integers(n + 1 + 8, max(n + 10, min(m, n + 40))))
        cfg = SketchConfig(ell, dist, IDEAL, seed=int(rng.integers(1 << 30)))
        errs["olls"] = rel(sketched_olls(ab, cfg, ideal_tile(ell, n + 1)),
                           sketched_olls_digital(ab, cfg))

    kk = int(rng.integers(1, min(5, n) + 1))
    pc = PCAConfig(kk, int(rng.integers(kk, n + 1)), int(rng.integers(0, 3)),
                   seed=int(rng.integers(1 << 30)))
    res = randomized_pca(b, pc, ideal_tile(m, n))
    ref = randomized_pca_digital(b, pc)
    errs["pca"] = rel(res.u_k * res.sigma_k @ res.v_k.T, ref.u_k * ref.sigma_k @ ref.v_k.T)
    return (m, n), errs


def test_criterion_5_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, where = {}, {}
    for _ in range(50):
        shape, errs = _oracle_case(rng)
        for k, e in errs.items():
            if e > worst.get(k, -1):
                worst[k], where[k] = e, shape
    ok = max(worst.values()) <= 1e-10
    detail = "50 cases, worst relative error " + ", ".join(
        f"{k}={v:.1e}" for k, v in worst.items())
    if not ok:
        detail += f" (at {where})"
    verdict(5, ok, detail, time.perf_counter() - t0, 30)


# 6 ----------------------------------------------------------------------------------

def test_criterion_6_noise_statistics(verdict):
    t0 = time.perf_counter()
    u = np.array([0.02, -0.01, 0.015, 0.0])
    v = np.array([0.01, 0.02, -0.005])
    exact = np.outer(u, v)
    n_op = 20000
    acc = np.zeros((4, 3))
    acc2 = np.zeros((4, 3))
    for s in range(n_op):
        # each trial is a freshly fabricated tile, so device-to-device
        # variation averages out with the pulse noise
        t = tile_new(4, 3, seed=s)
        t.op_update(u, v)
        acc += t.weights
        acc2 += t.weights ** 2
    mean = acc / n_op
    se = np.sqrt(np.maximum(acc2 / n_op - mean ** 2, 0) / (n_op - 1))
    z_op = np.where(se > 0, np.abs(mean - exact) / np.where(se > 0, se, 1), 0)
    op_ok = np.all(z_op <= 4) and np.all(mean[se == 0] == exact[se == 0])

    w = np.array([[0.3, -0.2, 0.1], [-0.4, 0.25, 0.5]])
    x = np.array([63, 21, -42]) / 63 * 0.8  # on the 7-bit input grid after normalization
    t = tile_new(2, 3, seed=1)
    t.m_load(w)
    n_mv = 10000
    ys = np.array([t.mv_analog(x) for _ in range(n_mv)])
    se_mv = ys.std(axis=0, ddof=1) / math.sqrt(n_mv)
    z_mv = np.abs(ys.mean(axis=0) - w @ x) / se_mv
    mv_ok = np.all(z_mv <= 3)

    tc = tile_new(4, 64, seed=2)
    tc.m_load(np.ones((4, 64)))
    tc.m_load(np.vstack([np.ones((2, 64)), -np.ones((2, 64))]))
    yc = tc.mv_analog(np.ones(64))
    bound = 20 * tc.device.w_max
    clip_ok = np.array_equal(yc, [bound, bound, -bound, -bound])

    ok = bool(op_ok and mv_ok and clip_ok)
    verdict(6, ok, f"op_update max |z|={z_op.max():.2f} over {n_op} trials (<= 4); "
            f"mv_analog max |z|={z_mv.max():.2f} over {n_mv} trials (<= 3); "
            f"clipped output {yc.tolist()} (want +-{bound})", time.perf_counter() - t0, 60)


# 7 ----------------------------------------------------------------------------------

def test_criterion_7_background_subtraction(verdict):
    t0 = time.perf_counter()
    frames, mask = moving_square(seed=0)
    k = 5
    ious, diffs = [], []
    for s in range(5):
        cfg = PCAConfig(k, 3 * k, 2, seed=s)
        dig = ex.bgsub_pipeline(frames, cfg, "digital", mask)
        ious.append(dig.report.values("mask_iou")[0])
        hyb = ex.bgsub_pipeline(frames, cfg, "analog", mask)
        diffs.append(hyb.report.values("rel_diff_vs_digital")[0])
    iou, diff = float(np.median(ious)), float(np.median(diffs))
    verdict(7, iou >= 0.8 and diff <= 0.15,
            f"median over 5 seeds: digital mask IoU {iou:.3f} (>= 0.8), "
            f"hybrid-vs-digital foreground difference {diff:.3f} (<= 0.15)",
            time.perf_counter() - t0, 60)


# 8 ----------------------------------------------------------------------------------

def test_criterion_8_embedding(verdict):
    t0 = time.perf_counter()
    a = np.random.default_rng(0).standard_normal((1024, 8))
    meds = [embedding_distortion(a, gaussian_sketch_apply(ell), trials=200, seed=ell)["q50"]
            for ell in (64, 128, 256)]
    ok = meds[2] <= 0.5 and meds[0] > meds[1] > meds[2]
    verdict(8, ok, "median distortion at ell=64/128/256: "
            + " / ".join(f"{m:.3f}" for m in meds) + " (decreasing, <= 0.5 at 256)",
            time.perf_counter() - t0, 30)
