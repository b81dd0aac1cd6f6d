"""Time and energy model for a hybrid analog accelerator and a memory-bound
digital accelerator.

All times are in microseconds and all energies in micro-Joules.  A hybrid
accelerator has ``m_tiles`` crossbar tiles of ``n_tile x n_tile`` devices and
serves logical matrices up to ``n_tile * sqrt(m_tiles)`` on a side.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace

PRIMITIVES = ("matrix_write", "mv", "op", "vector_write", "vector_read", "matrix_read")

# digital counterpart used for each hybrid primitive in comparisons
_DIGITAL_KIND = {
    "matrix_write": "write",
    "mv": "mv",
    "op": "op",
    "vector_write": "vector",
    "vector_read": "vector",
    "matrix_read": "read",
}

REPORT_HEADER = (
    "primitive",
    "count",
    "hybrid_time_us",
    "hybrid_energy_uj",
    "digital_time_us",
    "digital_energy_uj",
    "speedup",
    "energy_ratio",
)


@dataclass(frozen=True)
class HardwareProfile:
    """Per-primitive constants of the hybrid accelerator.

    ``t_w``/``e_w`` are per column write time/energy; ``t_i``/``e_i`` vector
    transport; ``t_m``/``e_m`` the analog MV on one tile; ``t_r``/``e_r`` one
    pairwise combine of tile results; ``t_o``/``e_o`` the analog OP update on
    one tile.
    """

    t_w: float
    e_w: float
    t_i: float
    e_i: float
    t_m: float
    e_m: float
    t_r: float
    e_r: float
    t_o: float
    e_o: float
    m_tiles: int = 64
    n_tile: int = 2048

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        _check_pow2(self.m_tiles)

    @property
    def logical_dim(self) -> int:
        """Side of the largest matrix one accelerator holds, n * sqrt(m)."""
        return int(round(self.n_tile * math.sqrt(self.m_tiles)))

    @classmethod
    def low(cls, **kw) -> "HardwareProfile":
        base = dict(t_w=1.0, e_w=2.0, t_i=0.005, e_i=0.001, t_m=0.1, e_m=0.2,
                    t_r=0.005, e_r=0.001, t_o=0.1, e_o=0.2)
        base.update(kw)
        return cls(**base)

    @classmethod
    def high(cls, **kw) -> "HardwareProfile":
        base = dict(t_w=10.0, e_w=100.0, t_i=0.02, e_i=0.01, t_m=0.1, e_m=0.5,
                    t_r=0.02, e_r=0.01, t_o=0.1, e_o=0.5)
        base.update(kw)
        return cls(**base)

    @classmethod
    def mid(cls, **kw) -> "HardwareProfile":
        lo, hi = cls.low(), cls.high()
        base = {f.name: 0.5 * (getattr(lo, f.name) + getattr(hi, f.name))
                for f in fields(cls) if f.name not in ("m_tiles", "n_tile")}
        base.update(kw)
        return cls(**base)

    @classmethod
    def named(cls, name: str, **kw) -> "HardwareProfile":
        try:
            return {"low": cls.low, "high": cls.high, "mid": cls.mid}[name](**kw)
        except KeyError:
            raise ValueError(f"unknown profile {name!r} (expected low, mid or high)") from None


# 16K x 16K half-precision matrix (2**29 bytes) moves in 250 us for 12000 uJ
_CAL_BYTES = 2 * 16384 * 16384


@dataclass(frozen=True)
class DigitalProfile:
    """Memory-bound digital accelerator (bytes/s, uJ/byte, flop/s)."""

    bandwidth: float = _CAL_BYTES / 250e-6
    energy_per_byte: float = 12000.0 / _CAL_BYTES
    peak_flops: float = 1e13
    precision_bytes: int = 2

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")


def _check_pow2(m):
    if not isinstance(m, (int,)) or isinstance(m, bool) or m < 1 or m & (m - 1):
        raise ValueError(f"tile count must be a positive power of two, got {m!r}")


def cost_matrix_write(p: HardwareProfile) -> tuple[float, float]:
    return p.t_w * p.n_tile, p.e_w * p.n_tile * p.m_tiles


def cost_mv(p: HardwareProfile) -> tuple[float, float]:
    _check_pow2(p.m_tiles)
    m = p.m_tiles
    return p.t_i + p.t_m + p.t_r * math.log2(m), (p.e_i + p.e_m + p.e_r) * m


def cost_op(p: HardwareProfile) -> tuple[float, float]:
    return 2 * p.t_i + p.t_o, (2 * p.e_i + p.e_o) * p.m_tiles


def cost_vector_read(p: HardwareProfile) -> tuple[float, float]:
    _check_pow2(p.m_tiles)
    return p.t_i, p.e_i * p.m_tiles


# moving a vector into the tile cache costs the same transport as reading it out
cost_vector_write = cost_vector_read


def cost_matrix_read(p: HardwareProfile) -> tuple[float, float]:
    t_mv, e_mv = cost_mv(p)
    cols = p.n_tile * math.sqrt(p.m_tiles)
    return cols * (t_mv + p.t_i), cols * (e_mv + p.e_i * p.m_tiles)


HYBRID_COST = {
    "matrix_write": cost_matrix_write,
    "mv": cost_mv,
    "op": cost_op,
    "vector_write": cost_vector_write,
    "vector_read": cost_vector_read,
    "matrix_read": cost_matrix_read,
}


def digital_cost(primitive: str, dims: tuple[int, int], p: DigitalProfile,
                 transport: HardwareProfile | None = None) -> tuple[float, float]:
    """Memory-bound cost of one primitive on the digital accelerator.

    ``write``, ``read``, ``mv`` and ``op`` all stream the full ``rows x cols``
    matrix once.  ``mv`` additionally pays one vector transport and ``op`` two,
    taken from ``transport`` when given.  ``vector`` is transport only.
    """
    rows, cols = dims
    if rows < 1 or cols < 1:
        raise ValueError("dims must be positive")
    n_vec = {"write": 0, "read": 0, "mv": 1, "op": 2, "vector": 1}
    if primitive not in n_vec:
        raise ValueError(f"unknown digital primitive {primitive!r}")
    if primitive == "vector":
        time = energy = 0.0
    else:
        nbytes = p.precision_bytes * rows * cols
        time = nbytes / p.bandwidth * 1e6
        energy = nbytes * p.energy_per_byte
    if transport is not None and n_vec[primitive]:
        t_v, e_v = cost_vector_read(transport)
        time += n_vec[primitive] * t_v
        energy += n_vec[primitive] * e_v
    return time, energy


def digital_sketch_flops(m: int, n: int, ell: int) -> int:
    """Arithmetic operations of a dense ell-row sketch of an m x n matrix."""
    return ell * n * (2 * m - 1)


@dataclass
class CostLedger:
    """Accumulated cost of the primitives executed on a hybrid accelerator.

    When ``profile`` is None only the counts are tracked.
    """

    profile: HardwareProfile | None = None
    time_us: float = 0.0
    energy_uj: float = 0.0
    counts: dict = field(default_factory=lambda: dict.fromkeys(PRIMITIVES, 0))

    def record(self, primitive: str, n: int = 1) -> None:
        if primitive not in self.counts:
            raise ValueError(f"unknown primitive {primitive!r}")
        if n < 0:
            raise ValueError("count must be nonnegative")
        self.counts[primitive] += n
        if self.profile is not None:
            t, e = HYBRID_COST[primitive](self.profile)
            self.time_us += n * t
            self.energy_uj += n * e

    def merge(self, other: "CostLedger") -> None:
        for k, v in other.counts.items():
            self.record(k, v)

    def snapshot(self) -> "CostLedger":
        return replace(self, counts=dict(self.counts))


def ledger_rows(ledger: CostLedger, hybrid: HardwareProfile, digital: DigitalProfile,
                dims: tuple[int, int] | None = None) -> list[dict]:
    """Per-primitive comparison rows plus a total row and break-even rows.

    ``dims`` is the logical matrix used for the digital costs; it defaults to
    the accelerator's full ``n sqrt(m)`` square.
    """
    if dims is None:
        dims = (hybrid.logical_dim,) * 2
    rows = []
    tot = [0.0, 0.0, 0.0, 0.0]
    total_count = 0
    for prim in PRIMITIVES:
        c = ledger.counts.get(prim, 0)
        th, eh = HYBRID_COST[prim](hybrid)
        td, ed = digital_cost(_DIGITAL_KIND[prim], dims, digital, hybrid)
        vals = [c * th, c * eh, c * td, c * ed]
        tot = [a + b for a, b in zip(tot, vals)]
        total_count += c
        rows.append(_row(prim, c, *vals))
    rows.append(_row("total", total_count, *tot))

    # number of follow-up MV/OP calls after which a matrix write has paid off
    t_mw, _ = cost_matrix_write(hybrid)
    for prim in ("mv", "op"):
        th, eh = HYBRID_COST[prim](hybrid)
        td, ed = digital_cost(prim, dims, digital, hybrid)
        if td > th:
            k = math.ceil(t_mw / (td - th))
            rows.append(_row(f"breakeven_write_{prim}", k,
                             t_mw + k * th, cost_matrix_write(hybrid)[1] + k * eh,
                             k * td, k * ed))
        else:
            rows.append(_row(f"breakeven_write_{prim}", 0, math.nan, math.nan, math.nan, math.nan))
    return rows


def _row(name, count, th, eh, td, ed):
    return {
        "primitive": name,
        "count": count,
        "hybrid_time_us": th,
        "hybrid_energy_uj": eh,
        "digital_time_us": td,
        "digital_energy_uj": ed,
        "speedup": td / th if th > 0 else math.nan,
        "energy_ratio": ed / eh if eh > 0 else math.nan,
    }


def _fmt(v):
    if isinstance(v, float):
        return "n/a" if math.isnan(v) else repr(v)
    return str(v)


def ledger_report(ledger: CostLedger, hybrid: HardwareProfile, digital: DigitalProfile,
                  dims: tuple[int, int] | None = None) -> str:
    """Render :func:`ledger_rows` as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in ledger_rows(ledger, hybrid, digital, dims):
        w.writerow([_fmt(r[h]) for h in REPORT_HEADER])
    return buf.getvalue()
