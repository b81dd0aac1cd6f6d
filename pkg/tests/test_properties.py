"""Property-based checks of the invariants every component must keep."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from crossbar import (CostLedger, HardwareProfile, PCAConfig, PulseConfig, center_columns,
                      quantize, randomized_pca_digital, tile_new)
from crossbar.cost import HYBRID_COST, PRIMITIVES

finite = st.floats(-1e3, 1e3, allow_nan=False)
bits = st.integers(1, 12)
small_dim = st.integers(1, 8)


@given(arrays(float, st.integers(1, 30), elements=finite), bits, st.floats(0.01, 100))
def test_quantizer_bounded_and_odd(x, b, bound):
    q = quantize(x, b, bound)
    assert np.all(np.abs(q) <= bound * (1 + 1e-12))
    assert np.allclose(quantize(-x, b, bound), -q)
    assert quantize(0.0, b, bound) == 0.0
    assert len(np.unique(np.round(quantize(np.linspace(-bound, bound, 4097), b, bound), 12))) \
        <= max(2 ** b - 1, 3)  # one bit is ternary


@given(finite, finite, bits)
def test_quantizer_monotonic(a, b, nb):
    lo, hi = sorted((a, b))
    assert quantize(lo, nb, 10.0) <= quantize(hi, nb, 10.0)


@st.composite
def tile_and_ops(draw):
    rows, cols = draw(small_dim), draw(small_dim)
    seed = draw(st.integers(0, 2**16))
    ops = draw(st.lists(st.sampled_from(["op", "mv", "mvt", "load"]), min_size=1, max_size=6))
    return rows, cols, seed, ops


@settings(max_examples=60, deadline=None)
@given(tile_and_ops(), st.floats(0.1, 50))
def test_weights_stay_in_range(case, amp):
    rows, cols, seed, ops = case
    t = tile_new(rows, cols, seed=seed)
    rng = np.random.default_rng(seed)
    bound = t.io.out_bound_factor * t.device.w_max
    for op in ops:
        if op == "op":
            t.op_update(amp * rng.standard_normal(rows), amp * rng.standard_normal(cols),
                        PulseConfig(bl=int(rng.integers(1, 64))))
        elif op == "load":
            t.m_load(rng.uniform(-1, 1, (rows, cols)))
        else:
            x = amp * rng.standard_normal(cols if op == "mv" else rows)
            y = t.mv_analog(x) if op == "mv" else t.mv_transpose_analog(x)
            # output magnitude never exceeds the ADC bound times the input scale
            assert np.all(np.abs(y) <= bound * np.max(np.abs(x)) * (1 + 1e-12))
        assert np.all(np.abs(t.weights) <= t.device.w_max)


@settings(max_examples=30, deadline=None)
@given(small_dim, small_dim, st.integers(0, 2**31 - 1))
def test_tile_determinism(rows, cols, seed):
    def run():
        t = tile_new(rows, cols, seed=seed)
        r = np.random.default_rng(seed)
        t.op_update(r.standard_normal(rows), r.standard_normal(cols))
        return t.weights.copy(), t.mv_analog(r.standard_normal(cols))
    (w1, y1), (w2, y2) = run(), run()
    assert np.array_equal(w1, w2) and np.array_equal(y1, y2)


profiles = st.sampled_from([HardwareProfile.low(), HardwareProfile.mid(), HardwareProfile.high()])


@given(profiles, st.dictionaries(st.sampled_from(PRIMITIVES), st.integers(0, 1000)),
       st.dictionaries(st.sampled_from(PRIMITIVES), st.integers(0, 1000)))
def test_ledger_additive(p, c1, c2):
    a, b, both = CostLedger(p), CostLedger(p), CostLedger(p)
    for k, n in c1.items():
        a.record(k, n)
        both.record(k, n)
    for k, n in c2.items():
        b.record(k, n)
        both.record(k, n)
    a.merge(b)
    assert math.isclose(a.time_us, both.time_us, rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(a.energy_uj, both.energy_uj, rel_tol=1e-12, abs_tol=1e-12)
    assert a.counts == both.counts


@given(st.sampled_from(PRIMITIVES))
def test_costs_positive_and_ordered(name):
    low, high = HardwareProfile.low(), HardwareProfile.high()
    tl, el = HYBRID_COST[name](low)
    th, eh = HYBRID_COST[name](high)
    assert tl > 0 and el > 0 and th > 0 and eh > 0
    # the high-end profile is never cheaper than the low-end one
    assert th >= tl and eh >= el


@given(arrays(float, st.tuples(st.integers(1, 20), st.integers(1, 6)), elements=finite))
def test_center_columns_zero_mean(a):
    c = center_columns(a)
    assert np.allclose(c.sum(axis=0), 0, atol=1e-9 * (1 + np.abs(a).max()))


@settings(max_examples=30, deadline=None)
@given(st.integers(6, 20), st.integers(2, 6), st.integers(0, 1000))
def test_pca_factors_orthonormal(m, n, seed):
    a = np.random.default_rng(seed).standard_normal((m, n))
    k = min(2, n)
    res = randomized_pca_digital(a, PCAConfig(k, n, 1, seed=seed))
    assert np.allclose(res.u_k.T @ res.u_k, np.eye(k), atol=1e-8)
    assert np.all(np.diff(res.sigma_k) <= 1e-12) and np.all(res.sigma_k >= 0)
