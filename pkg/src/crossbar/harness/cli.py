"""Command-line entry point: ``crossbar <subcommand> [options]``."""

from __future__ import annotations

import functools
import warnings
from pathlib import Path

import click
import numpy as np

from ..cost import PRIMITIVES, CostLedger, ledger_report
from ..errors import SingularSystemError
from ..rnla import PCAConfig
from . import config as cfgmod
from . import experiments as ex
from . import fileio, plotting
from .datasets import FrameStack, gen_cube, moving_square, spectrum_matched
from .report import ExperimentReport

_FAIL = (ValueError, OSError, SingularSystemError, np.linalg.LinAlgError)


def _common(fn):
    @click.option("--config", "config_path", type=click.Path(dir_okay=False),
                  help="key = value config file.")
    @click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                  help="Override one config key (repeatable).")
    @click.option("--seed", type=int, default=None,
                  help=f"Random seed (default: config 'seed', then ${cfgmod.SEED_ENV}, then 0).")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out",
                  show_default=True, help="Output directory.")
    @functools.wraps(fn)
    def wrapper(config_path, overrides, seed, out_dir, **kw):
        try:
            cfg = cfgmod.load_config(config_path)
            cfg.update(cfgmod.parse_config("\n".join(overrides), "--set"))
            if seed is None:
                seed = cfgmod.default_seed(cfg)
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return fn(cfg=cfg, seed=seed, out=out, **kw)
        except _FAIL as exc:
            raise click.ClickException(str(exc)) from None
    return wrapper


def _emit(rep: ExperimentReport, path: Path):
    rep.write(path)
    click.echo(f"wrote {path}")


def _tile_params(cfg):
    return cfgmod.device_params(cfg), cfgmod.io_params(cfg)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Analog crossbar simulator and hybrid randomized linear algebra experiments."""


@main.command()
@click.option("--pulses", type=int, multiple=True, default=(15, 31, 63), show_default=True)
@click.option("--mode", "modes", type=click.Choice(ex.CLASSIFY_MODES), multiple=True,
              default=ex.CLASSIFY_MODES, show_default=True)
@click.option("--trials", type=int, default=1, show_default=True,
              help="Number of consecutive seeds starting at --seed.")
@click.option("--points", type=int, default=8192, show_default=True)
@click.option("--data-seed", type=int, default=0, show_default=True)
@_common
def classify(cfg, seed, out, pulses, modes, trials, points, data_seed):
    """Cube classification through a streamed sketch."""
    ds = gen_cube(points, data_seed)
    # the chip preset is the base; config keys override it
    device = cfgmod.device_params(cfg, ex.CHIP_DEVICE)
    io = cfgmod.io_params(cfg)
    rep = ex.classify_study(ds, pulses, modes, range(seed, seed + trials), device, io,
                            cfgmod.hardware_profile(cfg))
    _emit(rep, out / "classify.csv")
    plotting.plot_metric_vs(rep, "accuracy", "pulses", "mode", out / "classify_accuracy.svg",
                            "pulses", "test accuracy")


@main.command("sketch-bench")
@click.option("--m", "m_grid", type=int, multiple=True,
              default=tuple(2 ** e for e in range(12, 23, 2)), show_default=True)
@click.option("--n", "n_grid", type=int, multiple=True, default=(2048, 4096), show_default=True)
@click.option("--ell", "ell_grid", type=int, multiple=True, default=(256, 512, 1024, 2048),
              show_default=True)
@click.option("--profile", default=None, help="Hybrid profile: low, mid or high (default mid).")
@_common
def sketch_bench(cfg, seed, out, m_grid, n_grid, ell_grid, profile):
    """Simulated time and energy of streamed sketching, hybrid vs digital."""
    hybrid = cfgmod.hardware_profile(cfg, profile or cfg.get("profile.name", "mid"))
    rep = ex.sketch_benchmark(m_grid, n_grid, ell_grid, hybrid, cfgmod.digital_profile(cfg))
    _emit(rep, out / "sketch_bench.csv")
    plotting.plot_sketch_bench(rep, out)


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="Matrix file holding [A b] (last column is b). Default: random problem.")
@click.option("--rows", type=int, default=512, show_default=True)
@click.option("--cols", type=int, default=8, show_default=True)
@click.option("--ell", type=int, default=64, show_default=True)
@click.option("--mode", type=click.Choice(ex.PCA_MODES), default="analog", show_default=True)
@click.option("--dist", type=click.Choice(["gaussian", "rademacher"]), default="gaussian",
              show_default=True)
@click.option("--pulses", type=int, default=31, show_default=True)
@_common
def olls(cfg, seed, out, input_path, rows, cols, ell, mode, dist, pulses):
    """Sketch-and-solve least squares."""
    if input_path:
        ab = fileio.read_matrix(input_path)
    else:
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((rows, cols))
        ab = np.column_stack([a, a @ rng.standard_normal(cols) + 0.1 * rng.standard_normal(rows)])
    if ab.shape[1] < 2:
        raise ValueError("[A b] needs at least two columns")
    device, io = _tile_params(cfg)
    rep = ex.olls_pipeline(ab[:, :-1], ab[:, -1], ell, mode, dist, pulses, seed, device, io)
    _emit(rep, out / "olls.csv")


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Matrix file (rows >= cols).")
@click.option("--k", type=int, required=True)
@click.option("--ell", type=int, default=None, help="Sketch size (default 3k, capped at cols).")
@click.option("--q", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(ex.PCA_MODES), default="analog", show_default=True)
@_common
def pca(cfg, seed, out, input_path, k, ell, q, mode):
    """Randomized PCA of a matrix file; writes U_k, Sigma_k, V_k and metadata."""
    a = fileio.read_matrix(input_path)
    ell = ell or min(3 * k, min(a.shape))
    device, io = _tile_params(cfg)
    res = ex.run_pca(a, PCAConfig(k, ell, q, seed), mode, device, io)
    for p in fileio.save_pca(out / "pca", res):
        click.echo(f"wrote {p}")
    rep = ExperimentReport()
    rep.add("pca", {"k": k, "ell": ell, "q": q, "mode": mode}, "rel_error",
            res.projection_error(a), seed)
    _emit(rep, out / "pca.csv")


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True),
              help="Directory of PGM frames, a PGM file or a .bin stack. Default: synthetic clip.")
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--ell", type=int, default=None, help="Sketch size (default 3k).")
@click.option("--q", type=int, default=2, show_default=True)
@click.option("--mode", type=click.Choice(ex.PCA_MODES), default="analog", show_default=True)
@click.option("--threshold", type=float, default=0.2, show_default=True)
@click.option("--no-frames", is_flag=True, help="Skip writing foreground frames.")
@_common
def bgsub(cfg, seed, out, input_path, k, ell, q, mode, threshold, no_frames):
    """Video background subtraction with randomized PCA."""
    mask = None
    if input_path:
        frames = FrameStack(fileio.read_frames(input_path))
    else:
        frames, mask = moving_square(seed=0)
    ell = ell or min(3 * k, frames.shape[0])
    device, io = _tile_params(cfg)
    res = ex.bgsub_pipeline(frames, PCAConfig(k, ell, q, seed), mode, mask, device, io, threshold)
    _emit(res.report, out / "bgsub.csv")
    if not no_frames:
        # foreground is signed; shift to mid-gray for viewing
        files = fileio.write_frames(out / "foreground", np.clip(0.5 + res.foreground, 0, 1))
        click.echo(f"wrote {len(files)} frames to {out / 'foreground'}")


@main.command("pca-study")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="Matrix file. Default: synthetic matrix with a matched spectrum.")
@click.option("--kind", type=click.Choice(["genotype", "gaussian"]), default="genotype",
              show_default=True, help="Synthetic generator.")
@click.option("--rows", type=int, default=1966, show_default=True)
@click.option("--cols", type=int, default=53, show_default=True)
@click.option("--target", type=float, default=0.125, show_default=True,
              help="Exact rank-k residual of the synthetic matrix.")
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--q", type=int, default=2, show_default=True)
@click.option("--trials", type=int, default=10, show_default=True)
@_common
def pca_study(cfg, seed, out, input_path, kind, rows, cols, target, k, q, trials):
    """Projection error of hybrid vs digital randomized PCA over sketch sizes."""
    if input_path:
        a = fileio.read_matrix(input_path)
    else:
        a = spectrum_matched(rows, cols, k, target, seed, kind)
    device, io = _tile_params(cfg)
    rep = ex.pca_error_study(a, k, None, trials, q, ("analog", "digital"), device, io, seed)
    _emit(rep, out / "pca_study.csv")
    plotting.plot_metric_vs(rep, "rel_error", "ell", "mode", out / "pca_study.svg",
                            "sketch size", "relative error")


@main.command("cost-report")
@click.option("--profile", default=None, help="low, mid or high (default low).")
@click.option("--count", "counts", multiple=True, metavar="PRIMITIVE=N",
              help=f"Ledger counts; primitives: {', '.join(PRIMITIVES)}. Default one of each.")
@_common
def cost_report(cfg, seed, out, profile, counts):
    """Hybrid vs digital cost table for a ledger of primitive counts."""
    hybrid = cfgmod.hardware_profile(cfg, profile or cfg.get("profile.name", "low"))
    ledger = CostLedger(hybrid)
    if counts:
        for item in counts:
            name, sep, n = item.partition("=")
            if not sep:
                raise ValueError(f"expected PRIMITIVE=N, got {item!r}")
            ledger.record(name.strip(), int(n))
    else:
        for prim in PRIMITIVES:
            ledger.record(prim)
    text = ledger_report(ledger, hybrid, cfgmod.digital_profile(cfg))
    path = out / "cost_report.csv"
    path.write_bytes(text.encode("utf-8"))
    click.echo(text, nl=False)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
