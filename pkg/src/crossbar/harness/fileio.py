"""Plain-text matrix files, grayscale frames and PCA result bundles."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..rnla import PCAConfig, PCAResult


def write_matrix(path, a) -> None:
    """``rows cols`` header, then one row per line at 17 significant digits."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise ValueError("only 2-D arrays can be written")
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_matrix(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    tokens = text.split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
        vals = np.array([float(t) for t in tokens[2:]])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed matrix file ({exc})") from None
    if rows < 0 or cols < 0 or vals.size != rows * cols:
        raise ValueError(f"{path}: header says {rows}x{cols} but found {vals.size} values")
    return vals.reshape(rows, cols)


# -- frames ------------------------------------------------------------------------

def write_pgm(path, img, binary=True) -> None:
    """Write an image with values in [0, 1] as 8-bit PGM (P5, or P2 when not binary)."""
    q = np.clip(np.rint(np.asarray(img, dtype=float) * 255), 0, 255).astype(np.uint8)
    if q.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    h, w = q.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + q.tobytes())
    else:
        body = "\n".join(" ".join(str(int(v)) for v in row) for row in q)
        Path(path).write_text(f"P2\n{w} {h}\n255\n{body}\n", encoding="ascii", newline="\n")


def read_pgm(path) -> np.ndarray:
    """Read P2 or P5 PGM into floats in [0, 1]."""
    with Image.open(path) as im:
        if im.format != "PPM" or im.mode not in ("L", "I", "I;16", "I;16B"):
            raise ValueError(f"{path}: not a grayscale PGM")
        maxval = 255 if im.mode == "L" else 65535
        return np.asarray(im, dtype=float) / maxval


def write_bin(path, frames) -> None:
    """Raw little-endian float32 frames plus a ``.dims`` sidecar holding ``f h w``."""
    frames = np.asarray(frames, dtype="<f4")
    if frames.ndim == 2:
        frames = frames[None]
    Path(path).write_bytes(frames.tobytes())
    Path(str(path) + ".dims").write_text(" ".join(map(str, frames.shape)) + "\n",
                                         encoding="utf-8", newline="\n")


def read_bin(path) -> np.ndarray:
    dims_path = Path(str(path) + ".dims")
    if not dims_path.exists():
        raise FileNotFoundError(f"missing sidecar {dims_path}")
    dims = [int(t) for t in dims_path.read_text().split()]
    if len(dims) == 2:
        dims = [1] + dims
    data = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: {data.size} values do not match dims {dims}")
    return data.reshape(dims).astype(float)


def read_frames(path) -> np.ndarray:
    """Frames from a directory of PGM files (sorted by name), one PGM, or a ``.bin``."""
    p = Path(path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix.lower() == ".pgm")
        if not files:
            raise ValueError(f"{p}: no .pgm frames found")
        return np.stack([read_pgm(f) for f in files])
    if p.suffix.lower() == ".bin":
        return read_bin(p)
    return read_pgm(p)[None]


def write_frames(directory, frames, prefix="frame") -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for i, img in enumerate(frames):
        f = d / f"{prefix}_{i:04d}.pgm"
        write_pgm(f, img)
        out.append(f)
    return out


# -- PCA results -------------------------------------------------------------------

PCA_FILES = ("u_k.mtx", "sigma_k.mtx", "v_k.mtx", "meta.json")


def save_pca(directory, res: PCAResult) -> list[Path]:
    """Write U_k, Sigma_k (as a column) and V_k plus a JSON metadata record."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "u_k.mtx", res.u_k)
    write_matrix(d / "sigma_k.mtx", res.sigma_k.reshape(-1, 1))
    write_matrix(d / "v_k.mtx", res.v_k)
    cfg = res.config
    meta = {
        "k": cfg.k if cfg else res.u_k.shape[1],
        "ell": cfg.ell if cfg else None,
        "q": cfg.q if cfg else None,
        "seed": cfg.seed if cfg else None,
        "scale": res.scale,
        "rank_deficient": res.rank_deficient,
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8", newline="\n")
    return [d / f for f in PCA_FILES]


def load_pca(directory) -> PCAResult:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text(encoding="utf-8"))
    cfg = None
    if meta.get("ell") is not None:
        cfg = PCAConfig(meta["k"], meta["ell"], meta["q"], meta["seed"])
    return PCAResult(read_matrix(d / "u_k.mtx"), read_matrix(d / "sigma_k.mtx").ravel(),
                     read_matrix(d / "v_k.mtx"), scale=meta["scale"],
                     rank_deficient=meta["rank_deficient"], config=cfg)
