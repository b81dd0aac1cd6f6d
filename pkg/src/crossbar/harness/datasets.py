"""Synthetic datasets for the experiment pipelines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

N_BLOCKS = 19


@dataclass(frozen=True)
class CubeDataset:
    """Points in [-0.5, 0.5]^3 labelled by the sign of their first coordinate."""

    points: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    test: np.ndarray

    @property
    def x_train(self):
        return self.points[self.train]

    @property
    def y_train(self):
        return self.labels[self.train]

    @property
    def x_test(self):
        return self.points[self.test]

    @property
    def y_test(self):
        return self.labels[self.test]


def gen_cube(m: int = 8192, seed: int = 0) -> CubeDataset:
    """``m`` points, half with positive and half with negative first coordinate,
    randomly split into equal train and test halves."""
    if m < 2 or m % 2:
        raise ValueError(f"m must be a positive even number, got {m}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5, 0.5, size=(m, 3))
    half = m // 2
    # magnitudes below 1e-9 are redrawn so every label is well defined
    x1 = np.abs(pts[:, 0])
    while np.any(small := x1 < 1e-9):
        x1[small] = np.abs(rng.uniform(-0.5, 0.5, size=small.sum()))
    sign = np.concatenate([np.ones(half), -np.ones(half)])
    pts[:, 0] = sign * x1
    perm = rng.permutation(m)
    pts, labels = pts[perm], sign[perm]
    split = rng.permutation(m)
    return CubeDataset(pts, labels, np.sort(split[:half]), np.sort(split[half:]))


def replicated_design(ds: CubeDataset, blocks: int = N_BLOCKS) -> np.ndarray:
    """``[A1, ..., A_blocks]`` with every block equal to ``[x, y, z, t]`` of the training set."""
    block = np.column_stack([ds.x_train, ds.y_train])
    return np.tile(block, (1, blocks))


@dataclass(frozen=True)
class FrameStack:
    """``f`` grayscale frames of ``h x w`` pixels with values in [0, 1]."""

    frames: np.ndarray

    def __post_init__(self):
        if self.frames.ndim != 3:
            raise ValueError("frames must have shape (f, h, w)")

    @property
    def shape(self):
        return self.frames.shape

    def as_matrix(self) -> np.ndarray:
        f = self.frames.shape[0]
        return self.frames.reshape(f, -1).astype(float)

    @classmethod
    def from_matrix(cls, mat, h, w) -> "FrameStack":
        mat = np.asarray(mat, dtype=float)
        return cls(mat.reshape(mat.shape[0], h, w))


def moving_square(f: int = 64, h: int = 24, w: int = 32, size: int = 6, seed: int = 0,
                  noise: float = 0.01, illumination: float = 0.06, speed: int = 3):
    """Textured background under slowly varying illumination with a bright
    square sliding across it.

    The illumination is a sum of five orthogonal smooth patterns (2-D cosine
    modes), each with its own sinusoidal gain over time, so the background
    occupies a five-dimensional subspace.  Returns ``(FrameStack, mask)``
    where ``mask`` (f, h, w) marks the square.
    """
    rng = np.random.default_rng(seed)
    yy, xx = (np.mgrid[0:h, 0:w] + 0.5) / np.array([h, w])[:, None, None]
    bg = 0.45 + 0.1 * np.sin(6 * xx) * np.cos(5 * yy) + 0.03 * rng.random((h, w))
    modes = [np.cos(np.pi * a * xx) * np.cos(np.pi * b * yy)
             for a, b in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0))]
    modes = [m / np.sqrt(np.mean(m ** 2)) for m in modes]
    t = np.arange(f)
    gains = [illumination * np.sin(2 * np.pi * (j + 1) * t / f + rng.uniform(0, 2 * np.pi))
             for j in range(len(modes))]
    frames = np.empty((f, h, w))
    mask = np.zeros((f, h, w), dtype=bool)
    span = w - size
    for i in range(f):
        # bounce horizontally, sway vertically
        x0 = (speed * i) % (2 * span)
        x0 = x0 if x0 <= span else 2 * span - x0
        y0 = int(round((h - size) * (0.5 + 0.4 * np.sin(2 * np.pi * i / f))))
        img = bg + sum(g[i] * m for g, m in zip(gains, modes))
        img = img + noise * rng.standard_normal((h, w))
        img[y0:y0 + size, x0:x0 + size] = 0.95
        mask[i, y0:y0 + size, x0:x0 + size] = True
        frames[i] = img
    return FrameStack(np.clip(frames, 0.0, 1.0)), mask


def rank_k_residual(a, k: int) -> float:
    """Relative Frobenius error of the best rank-``k`` approximation."""
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    return float(np.sqrt(np.sum(s[k:] ** 2) / np.sum(s ** 2)))


def spectrum_matched(m: int = 1966, n: int = 53, k: int = 5, target: float = 0.125,
                     seed: int = 0, kind: str = "genotype") -> np.ndarray:
    """``m x n`` centered matrix whose exact rank-``k`` relative residual is ``target``.

    ``kind="genotype"`` mimics population-structured marker data: each row
    belongs to one of ``k + 1`` populations with a fixed code in {0, 1, 2}
    per column, plus within-population scatter whose level is solved for so
    the residual hits ``target``.  ``kind="gaussian"`` instead uses random
    orthonormal singular vectors with a geometric head and a flat tail.
    """
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    if not 1 <= k < n <= m:
        raise ValueError("need 1 <= k < n <= m")
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        u, _ = np.linalg.qr(rng.standard_normal((m, n)))
        v, _ = np.linalg.qr(rng.standard_normal((n, n)))
        head = 0.7 ** np.arange(k)
        tail = head[-1] * 0.5 * np.linspace(1.0, 0.3, n - k)
        # tail energy share must equal target^2
        t2 = target ** 2 * np.sum(head ** 2) / (1 - target ** 2)
        tail *= np.sqrt(t2 / np.sum(tail ** 2))
        return (u * np.concatenate([head, tail])) @ v.T
    if kind != "genotype":
        raise ValueError(f"unknown kind {kind!r}")
    pop = rng.integers(0, k + 1, m)
    codes = rng.integers(0, 3, (k + 1, n)).astype(float)
    base, scatter = codes[pop], rng.standard_normal((m, n))

    def build(sig):
        a = base + sig * scatter
        return (a - a.mean(axis=0)) / np.sqrt(m)

    sig = brentq(lambda s: rank_k_residual(build(s), k) - target, 1e-9, 10.0, xtol=1e-12)
    return build(sig)
