"""Randomized linear algebra on analog tiles.

Streamed sketching builds ``Z = S @ A`` one row of ``A`` at a time with
outer-product updates; randomized PCA runs subspace iteration with analog MV
products and finishes digitally.  Each hybrid routine has an all-digital
counterpart drawing the same random numbers, used for mode parity checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.linalg as la

from .cost import CostLedger
from .errors import SingularSystemError
from .tile import AnalogTile, PulseConfig, scale_to_range

DISTRIBUTIONS = ("gaussian", "rademacher")


@dataclass(frozen=True)
class SketchConfig:
    """Streamed sketch of size ``ell``.

    ``scale`` maps sketch units to weight units on the tile.  ``None`` picks
    one from the data when the whole matrix is available.
    """

    ell: int
    dist: str = "gaussian"
    pulses: PulseConfig = field(default_factory=PulseConfig)
    seed: int = 0
    scale: float | None = None
    init_cost: bool = False

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"dist must be one of {DISTRIBUTIONS}")


@dataclass(frozen=True)
class PCAConfig:
    k: int
    ell: int
    q: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.ell < self.k or self.q < 0:
            raise ValueError("need k >= 1, ell >= k and q >= 0")


@dataclass
class PCAResult:
    u_k: np.ndarray
    sigma_k: np.ndarray
    v_k: np.ndarray
    q_basis: np.ndarray | None = None
    b: np.ndarray | None = None
    scale: float = 1.0
    rank_deficient: bool = False
    config: PCAConfig | None = None

    def projection_error(self, a) -> float:
        """Relative Frobenius residual ``|A - U U^T A| / |A|``."""
        a = np.asarray(a, dtype=float)
        r = a - self.u_k @ (self.u_k.T @ a)
        return float(np.linalg.norm(r) / np.linalg.norm(a))


@dataclass(frozen=True)
class LowRankUpdate:
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        c, d = np.atleast_2d(self.c), np.atleast_2d(self.d)
        if c.ndim != 2 or d.ndim != 2 or c.shape[1] != d.shape[1] or c.shape[1] < 1:
            raise ValueError("C and D must be matrices with the same number p >= 1 of columns")
        if c.shape[1] > min(c.shape[0], d.shape[0]) // 2:
            warnings.warn("low-rank update rank is not small relative to the matrix", stacklevel=2)


def draw_sketch_column(rng, ell, dist):
    """One column of the sketching matrix."""
    if dist == "gaussian":
        return rng.standard_normal(ell)
    return np.where(rng.random(ell) < 0.5, -1.0, 1.0)


def sketch_matrix(m, ell, dist="gaussian", seed=0):
    """The ``ell x m`` matrix whose columns :func:`sketch_stream` draws."""
    rng = np.random.default_rng(seed)
    s = np.empty((ell, m))
    for j in range(m):
        s[:, j] = draw_sketch_column(rng, ell, dist)
    return s


def default_sketch_scale(a, w_max=1.0, headroom=0.5):
    """Scale keeping a unit-variance sketch of ``a`` within ``headroom * w_max``
    at four standard deviations."""
    a = np.asarray(a, dtype=float)
    col = np.max(np.linalg.norm(a, axis=0)) if a.size else 0.0
    return 1.0 if col == 0 else headroom * w_max / (4.0 * col)


def sketch_stream(rows: Iterable, cfg: SketchConfig, tile: AnalogTile,
                  ledger: CostLedger | None = None):
    """Sketch a row stream on ``tile`` and read ``Z = S @ A`` back.

    The tile must be ``ell x n``.  Each row ``a_j`` triggers one OP update
    with a fresh sketch column ``s_j``; the array is reset (optionally
    charged as a write) before streaming and read once at the end.
    """
    if tile.rows != cfg.ell:
        raise ValueError(f"tile has {tile.rows} rows, sketch needs {cfg.ell}")
    scale = cfg.scale
    if scale is None:
        if not isinstance(rows, np.ndarray):
            raise ValueError("a streamed (non-array) input needs an explicit SketchConfig.scale")
        scale = default_sketch_scale(rows, tile.device.w_max)
    prev = tile.ledger
    if ledger is not None:
        tile.ledger = ledger
    try:
        rng = np.random.default_rng(cfg.seed)
        tile.m_reset(charge=cfg.init_cost)
        for a_j in rows:
            a_j = np.asarray(a_j, dtype=float)
            if a_j.shape != (tile.cols,):
                raise ValueError(f"row of shape {a_j.shape}, expected ({tile.cols},)")
            s = draw_sketch_column(rng, cfg.ell, cfg.dist)
            tile.op_update(scale * s, a_j, cfg.pulses)
        z = tile.m_read()
    finally:
        tile.ledger = prev
    return z / scale


def sketch_digital(a, cfg: SketchConfig):
    """All-digital ``S @ A`` with the same sketch columns as :func:`sketch_stream`."""
    a = np.asarray(a, dtype=float)
    return sketch_matrix(a.shape[0], cfg.ell, cfg.dist, cfg.seed) @ a


def _lstsq_qr(a, b):
    q, r, piv = la.qr(a, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    tol = max(a.shape) * np.finfo(float).eps * (d[0] if d.size else 0.0)
    rank = int(np.sum(d > tol))
    if rank < a.shape[1]:
        raise SingularSystemError(
            f"least-squares matrix is rank deficient (rank {rank} < {a.shape[1]})", rank)
    x = np.empty(a.shape[1])
    x[piv] = la.solve_triangular(r, q.T @ b)
    return x


def exact_olls(a, b):
    """Minimizer of ``|A x - b|`` via pivoted QR."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],):
        raise ValueError("A must be m x n and b of length m")
    return _lstsq_qr(a, b)


def sketched_olls(rows, cfg: SketchConfig, tile: AnalogTile | None = None,
                  ledger: CostLedger | None = None):
    """Sketch-and-solve least squares on the augmented rows ``[a_j, b_j]``.

    ``tile`` defaults to an ``ell x (n+1)`` tile with default device and IO
    parameters seeded from ``cfg.seed``.
    """
    if tile is None:
        arr = np.asarray(rows, dtype=float)
        tile = AnalogTile(cfg.ell, arr.shape[1], seed=cfg.seed)
        rows = arr
    n = tile.cols - 1
    if cfg.ell < n + 1:
        raise ValueError(f"sketch size {cfg.ell} must be at least n+1 = {n + 1}")
    z = sketch_stream(rows, cfg, tile, ledger)
    return _lstsq_qr(z[:, :n], z[:, n])


def sketched_olls_digital(ab, cfg: SketchConfig):
    ab = np.asarray(ab, dtype=float)
    n = ab.shape[1] - 1
    if cfg.ell < n + 1:
        raise ValueError(f"sketch size {cfg.ell} must be at least n+1 = {n + 1}")
    z = sketch_digital(ab, cfg)
    return _lstsq_qr(z[:, :n], z[:, n])


def embedding_distortion(a, sketch_apply: Callable, trials: int = 100, seed=0,
                         quantiles=(0.05, 0.5, 0.95)):
    """Empirical subspace-embedding distortion of a random sketch.

    ``sketch_apply(u, rng)`` returns ``S @ u`` for a fresh random ``S``.  Per
    trial the distortion is ``max |sigma_i(S U)^2 - 1|`` with ``U`` an
    orthonormal basis of range(A).
    """
    a = np.asarray(a, dtype=float)
    u = la.orth(a)
    if u.shape[1] < a.shape[1]:
        raise ValueError("A must have full column rank")
    rng = np.random.default_rng(seed)
    eps = np.empty(trials)
    for t in range(trials):
        s = la.svdvals(sketch_apply(u, rng))
        eps[t] = np.max(np.abs(s ** 2 - 1.0))
    qs = np.quantile(eps, quantiles)
    out = {f"q{int(round(100 * p)):02d}": float(v) for p, v in zip(quantiles, qs)}
    out.update(mean=float(eps.mean()), max=float(eps.max()), samples=eps)
    return out


def gaussian_sketch_apply(ell):
    """Gaussian sketch with N(0, 1/ell) entries for :func:`embedding_distortion`."""
    def apply(u, rng):
        return rng.standard_normal((ell, u.shape[0])) @ u / math.sqrt(ell)
    return apply


# -- PCA ------------------------------------------------------------------------

def center_columns(a):
    """Subtract column means and divide by sqrt(m)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1:
        raise ValueError("need a matrix with at least one row")
    return (a - a.mean(axis=0)) / math.sqrt(a.shape[0])


def _sign_fix(u, v):
    idx = np.argmax(np.abs(u), axis=0)
    s = np.sign(u[idx, np.arange(u.shape[1])])
    s[s == 0] = 1.0
    return u * s, v * s


def exact_truncated_svd(a, k):
    """Top-``k`` singular triplets from a full SVD, sign-normalized."""
    a = np.asarray(a, dtype=float)
    if not 1 <= k <= min(a.shape):
        raise ValueError(f"k={k} outside [1, {min(a.shape)}]")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    uk, vk = _sign_fix(u[:, :k], vt[:k].T)
    return uk, s[:k], vk


def _orth(y):
    q, r, _ = la.qr(y, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    tol = max(y.shape) * np.finfo(float).eps * (d[0] if d.size else 0.0)
    rank = int(np.sum(d > tol))
    return q[:, :rank], rank < y.shape[1]


def _finish_pca(y, a, cfg, scale):
    q, deficient = _orth(y)
    b = q.T @ a
    k = min(cfg.k, q.shape[1])
    if k < cfg.k:
        warnings.warn(f"sample matrix has rank {q.shape[1]} < k={cfg.k}", stacklevel=3)
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    u_k, v_k = _sign_fix(q @ ub[:, :k], vt[:k].T)
    return PCAResult(u_k, s[:k], v_k, q, b, scale, deficient, cfg)


def _check_pca_dims(shape, cfg):
    m, n = shape
    if m < n:
        raise ValueError(f"randomized PCA needs m >= n, got {m} x {n}")
    if cfg.ell > min(m, n):
        raise ValueError(f"ell={cfg.ell} exceeds min(m, n)={min(m, n)}")


def randomized_pca(a, cfg: PCAConfig, tile: AnalogTile | None = None,
                   ledger: CostLedger | None = None, *, scale: float | None = None):
    """Randomized subspace iteration with analog MV products.

    When ``a`` is given it is max-abs scaled to half the weight range and
    loaded into ``tile``.  With ``a=None`` the tile contents are used as-is
    (e.g. after :func:`low_rank_update`); ``scale`` must then give the
    weight-per-unit factor, and ``B`` is formed from a matrix readout.
    """
    if a is None:
        if tile is None or scale is None:
            raise ValueError("a tile and its scale are required when A is not given")
        shape = (tile.rows, tile.cols)
    else:
        a = np.asarray(a, dtype=float)
        shape = a.shape
    _check_pca_dims(shape, cfg)
    if tile is None:
        tile = AnalogTile(*shape, seed=cfg.seed)
    if (tile.rows, tile.cols) != shape:
        raise ValueError(f"tile {(tile.rows, tile.cols)} does not match matrix {shape}")

    prev = tile.ledger
    if ledger is not None:
        tile.ledger = ledger
    try:
        if a is not None:
            scaled, scale = scale_to_range(a, tile.device.w_max)
            tile.m_load(scaled)
        rng = np.random.default_rng(cfg.seed)
        y = np.empty((shape[0], cfg.ell))
        for j in range(cfg.ell):
            r = rng.standard_normal(shape[1])
            tile.v_write(r)
            for _ in range(cfg.q):
                z = tile.mv_analog(r)
                r = tile.mv_transpose_analog(z)
            z = tile.mv_analog(r)
            # the MV result already sits in the tile cache; only the readout is charged
            y[:, j] = tile.v_read(tile.v_write(z, charge=False))
        if a is None:
            a = tile.m_read() / scale
    finally:
        tile.ledger = prev
    return _finish_pca(y, a, cfg, scale)


def randomized_pca_digital(a, cfg: PCAConfig):
    """All-digital randomized subspace iteration with the same random draws."""
    a = np.asarray(a, dtype=float)
    _check_pca_dims(a.shape, cfg)
    rng = np.random.default_rng(cfg.seed)
    r = np.empty((a.shape[1], cfg.ell))
    for j in range(cfg.ell):
        r[:, j] = rng.standard_normal(a.shape[1])
    y = a @ r
    for _ in range(cfg.q):
        y = a @ (a.T @ y)
    return _finish_pca(y, a, cfg, 1.0)


def low_rank_update(tile: AnalogTile, upd: LowRankUpdate, pulses: PulseConfig | None = None,
                    ledger: CostLedger | None = None, scale: float = 1.0):
    """Apply ``A <- A + C D^T`` in place with one OP update per column pair.

    ``scale`` is the weight-per-unit factor of the matrix held by the tile.
    """
    c, d = np.atleast_2d(upd.c), np.atleast_2d(upd.d)
    if c.shape[0] != tile.rows or d.shape[0] != tile.cols:
        raise ValueError(f"update of shape {c.shape} / {d.shape} does not match tile")
    prev = tile.ledger
    if ledger is not None:
        tile.ledger = ledger
    try:
        for p in range(c.shape[1]):
            tile.op_update(scale * c[:, p], d[:, p], pulses)
    finally:
        tile.ledger = prev
