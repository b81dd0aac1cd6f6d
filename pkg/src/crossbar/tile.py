"""Behavioral model of one analog crossbar tile.

The tile stores a signed weight matrix and executes noisy, quantized
matrix-vector products (forward and transposed), stochastic-pulse
outer-product updates, and matrix write/readout.  Every random draw comes from
the tile's own seeded generator, so a trajectory is a pure function of the
seed and the sequence of calls.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import CostLedger
from .errors import InvalidStateError, WeightRangeError


@dataclass(frozen=True)
class DeviceParams:
    """Step statistics of the resistive devices (ConstantStep-style).

    Steps and bounds are in weight units.  ``d2d_std`` and ``asym_std`` are
    frozen per device when the tile is built; ``p2p_std`` is redrawn on every
    update.
    """

    dw_min: float = 0.001
    asym_std: float = 0.01
    d2d_std: float = 0.1
    p2p_std: float = 0.3
    w_max: float = 1.0
    write_noise_std: float = 0.0

    def __post_init__(self):
        if not self.dw_min > 0 or not self.w_max > 0:
            raise ValueError("dw_min and w_max must be positive")
        if min(self.asym_std, self.d2d_std, self.p2p_std, self.write_noise_std) < 0:
            raise ValueError("standard deviations must be nonnegative")

    @classmethod
    def ideal(cls, w_max: float = 1.0, dw_min: float = 0.001) -> "DeviceParams":
        return cls(dw_min=dw_min, asym_std=0.0, d2d_std=0.0, p2p_std=0.0, w_max=w_max)


@dataclass(frozen=True)
class IOParams:
    """Converter resolution and output noise of the periphery.

    ``input_bits``/``adc_bits`` of None and ``out_bound_factor`` of ``inf``
    switch the corresponding quantization or clipping off.
    """

    input_bits: int | None = 7
    adc_bits: int | None = 9
    sigma_out: float = 0.1
    out_bound_factor: float = 20.0
    noise_management: bool = True
    update_management: bool = True

    def __post_init__(self):
        for name in ("input_bits", "adc_bits"):
            b = getattr(self, name)
            if b is not None and b < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.sigma_out < 0:
            raise ValueError("sigma_out must be nonnegative")
        if not self.out_bound_factor > 0:
            raise ValueError("out_bound_factor must be positive")

    @classmethod
    def ideal(cls) -> "IOParams":
        return cls(input_bits=None, adc_bits=None, sigma_out=0.0,
                   out_bound_factor=math.inf)

    @property
    def is_ideal(self) -> bool:
        return (self.input_bits is None and self.adc_bits is None
                and self.sigma_out == 0 and math.isinf(self.out_bound_factor))


@dataclass(frozen=True)
class PulseConfig:
    """Stochastic pulse train used by outer-product updates.

    ``bl`` is the number of pulse slots.  With ``ideal`` set the update is the
    exact outer product instead.
    """

    bl: int = 31
    ideal: bool = False

    def __post_init__(self):
        if self.bl < 1:
            raise ValueError("bl must be >= 1")


def quantize(x, bits, bound):
    """Uniform mid-tread quantizer with ``2**bits - 1`` levels on [-bound, bound].

    Values are clipped to the range first.  Ties round away from zero.  A
    single bit gives the ternary grid {-bound, 0, bound}.
    """
    x = np.clip(np.asarray(x, dtype=float), -bound, bound)
    if bits is None or math.isinf(bound):
        return x
    n = max(2 ** (bits - 1) - 1, 1)
    scaled = x * (n / bound)
    levels = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return levels * bound / n


def scale_to_range(a, w_max=1.0, headroom=0.5):
    """Max-abs scale ``a`` so its largest entry is ``headroom * w_max``.

    Returns ``(scaled, factor)`` with ``scaled = factor * a``.  A zero matrix
    gets factor 1.
    """
    a = np.asarray(a, dtype=float)
    peak = np.max(np.abs(a)) if a.size else 0.0
    factor = 1.0 if peak == 0 else headroom * w_max / peak
    return a * factor, factor


@dataclass(frozen=True)
class VectorHandle:
    key: int
    generation: int


@dataclass
class AnalogTile:
    """One crossbar of ``rows x cols`` devices plus its converters.

    Create with :func:`tile_new` (or the equivalent constructor arguments).
    """

    rows: int
    cols: int
    device: DeviceParams = field(default_factory=DeviceParams)
    io: IOParams = field(default_factory=IOParams)
    seed: int = 0
    ledger: CostLedger | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("tile dimensions must be >= 1")
        self.rng = np.random.default_rng(self.seed)
        self.weights = np.zeros((self.rows, self.cols))
        d = self.device
        shape = (self.rows, self.cols)
        d2d = 1.0 + d.d2d_std * self.rng.standard_normal(shape) if d.d2d_std else np.ones(shape)
        asym = d.asym_std * self.rng.standard_normal(shape) if d.asym_std else np.zeros(shape)
        floor = 1e-3 * d.dw_min
        self.step_up = np.maximum(d.dw_min * d2d * (1.0 + asym), floor)
        self.step_down = np.maximum(d.dw_min * d2d * (1.0 - asym), floor)
        self.saturation_count = 0
        self._cache = {}
        self._keys = itertools.count()
        self._generation = 0

    @property
    def device_steps(self):
        """Per-device (up, down) step sizes, shape ``(2, rows, cols)``."""
        return np.stack([self.step_up, self.step_down])

    def _charge(self, primitive):
        if self.ledger is not None:
            self.ledger.record(primitive)

    def _clip(self):
        w = self.device.w_max
        np.clip(self.weights, -w, w, out=self.weights)

    # -- matrix state -----------------------------------------------------

    def m_reset(self, charge=False):
        """Zero all weights.  ``charge`` books it as a matrix write."""
        self.weights[...] = 0.0
        self._invalidate()
        if charge:
            self._charge("matrix_write")

    def m_load(self, a):
        """Program ``a`` into the array (entries must lie within ``+-w_max``)."""
        a = np.asarray(a, dtype=float)
        if a.shape != (self.rows, self.cols):
            raise ValueError(f"matrix shape {a.shape} does not match tile {(self.rows, self.cols)}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        w_max = self.device.w_max
        if np.max(np.abs(a)) > w_max:
            raise WeightRangeError(
                f"entry of magnitude {np.max(np.abs(a)):.4g} exceeds w_max={w_max}; "
                "scale the matrix first (see scale_to_range)")
        w = a.copy()
        if self.device.write_noise_std:
            w += self.device.write_noise_std * w_max * self.rng.standard_normal(w.shape)
        self.weights = w
        self._clip()
        self._invalidate()
        self._charge("matrix_write")

    def m_read(self):
        """Read the matrix back with one one-hot MV product per column."""
        self._charge("matrix_read")
        # one-hot inputs have max-abs 1, so the DAC passes them unchanged
        ones = quantize(1.0, self.io.input_bits, 1.0)
        out = self.weights * ones
        if self.io.sigma_out:
            noise = self.rng.standard_normal((self.cols, self.rows)).T
            out = out + self.io.sigma_out * self.device.w_max * noise
        return self._adc(out)

    # -- MV products --------------------------------------------------------

    def _adc(self, y):
        bound = self.io.out_bound_factor * self.device.w_max
        return quantize(y, self.io.adc_bits, bound)

    def _mv(self, w, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != w.shape[1]:
            raise ValueError(f"input length {x.shape} does not match {w.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("input vector has non-finite entries")
        alpha = 1.0
        if self.io.noise_management:
            peak = np.max(np.abs(x))
            alpha = peak if peak > 0 else 1.0
        xq = quantize(x / alpha, self.io.input_bits, 1.0)
        y = w @ xq
        if self.io.sigma_out:
            y = y + self.io.sigma_out * self.device.w_max * self.rng.standard_normal(y.shape)
        return self._adc(y) * alpha

    def mv_analog(self, x):
        """Noisy ``W @ x``."""
        self._charge("mv")
        return self._mv(self.weights, x)

    def mv_transpose_analog(self, x):
        """Noisy ``W.T @ x``."""
        self._charge("mv")
        return self._mv(self.weights.T, x)

    # -- outer-product update ---------------------------------------------

    def op_update(self, u, v, pulses: PulseConfig | None = None):
        """Add ``outer(u, v)`` to the weights with coincident pulse trains.

        Row ``i`` fires in each of ``bl`` slots with probability proportional
        to ``|u_i|`` and column ``j`` with probability proportional to
        ``|v_j|``.  The proportionality constants make the expected change
        exactly ``u_i * v_j`` given mean step ``dw_min``; update management
        balances them so the largest row and column probabilities match.
        Probabilities above one are clamped and counted in
        ``saturation_count``.
        """
        pulses = pulses or PulseConfig()
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != (self.rows,) or v.shape != (self.cols,):
            raise ValueError(f"update vectors {u.shape}, {v.shape} do not match tile")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("update vectors have non-finite entries")
        self._charge("op")
        if pulses.ideal:
            self.weights += np.outer(u, v)
            self._clip()
            return
        a_u = np.max(np.abs(u))
        a_v = np.max(np.abs(v))
        if a_u == 0 or a_v == 0:
            return
        bl = pulses.bl
        gain = 1.0 / math.sqrt(bl * self.device.dw_min)
        if self.io.update_management:
            k_u = gain * math.sqrt(a_v / a_u)
            k_v = gain * math.sqrt(a_u / a_v)
        else:
            k_u = k_v = gain
        p_row = k_u * np.abs(u)
        p_col = k_v * np.abs(v)
        if p_row.max() > 1.0 or p_col.max() > 1.0:
            self.saturation_count += 1
            np.minimum(p_row, 1.0, out=p_row)
            np.minimum(p_col, 1.0, out=p_col)

        rng = self.rng
        row_fire = (rng.random((bl, self.rows)) < p_row).astype(float)
        col_fire = (rng.random((bl, self.cols)) < p_col).astype(float)
        hits = row_fire.T @ col_fire
        positive = np.outer(u >= 0, v >= 0) | np.outer(u < 0, v < 0)
        step = np.where(positive, self.step_up, self.step_down)
        amount = hits
        if self.device.p2p_std:
            # sum of `hits` independent (1 + p2p * eta) pulse multipliers
            eta = rng.standard_normal(hits.shape)
            amount = hits + self.device.p2p_std * np.sqrt(hits) * eta
        self.weights += np.where(positive, 1.0, -1.0) * step * amount
        self._clip()

    # -- vector cache -----------------------------------------------------

    def _invalidate(self):
        self._generation += 1
        self._cache.clear()

    def v_write(self, x, charge=True) -> VectorHandle:
        """Move a digital vector into the tile-side cache."""
        x = np.array(x, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("cannot write an empty vector")
        h = VectorHandle(next(self._keys), self._generation)
        self._cache[h.key] = x
        if charge:
            self._charge("vector_write")
        return h

    def v_read(self, handle: VectorHandle):
        """Return the cached vector for ``handle``."""
        if handle.generation != self._generation or handle.key not in self._cache:
            raise InvalidStateError("stale vector handle")
        self._charge("vector_read")
        return self._cache[handle.key].copy()


def tile_new(rows, cols, device=None, io=None, seed=0, ledger=None) -> AnalogTile:
    return AnalogTile(rows, cols, device or DeviceParams(), io or IOParams(), seed, ledger)


def ideal_tile(rows, cols, w_max=1.0, seed=0, ledger=None) -> AnalogTile:
    """Noise-free, unquantized tile used as a digital-equivalence oracle."""
    return AnalogTile(rows, cols, DeviceParams.ideal(w_max), IOParams.ideal(), seed, ledger)
