"""Analog crossbar simulator with hybrid randomized linear algebra."""

from .cost import (CostLedger, DigitalProfile, HardwareProfile, cost_matrix_read,
                   cost_matrix_write, cost_mv, cost_op, cost_vector_read, digital_cost,
                   ledger_report)
from .errors import InvalidStateError, SingularSystemError, WeightRangeError
from .rnla import (LowRankUpdate, PCAConfig, PCAResult, SketchConfig, center_columns,
                   embedding_distortion, exact_olls, exact_truncated_svd, low_rank_update,
                   randomized_pca, randomized_pca_digital, sketch_digital, sketch_stream,
                   sketched_olls)
from .tile import (AnalogTile, DeviceParams, IOParams, PulseConfig, ideal_tile, quantize,
                   scale_to_range, tile_new)

__version__ = "0.1.0"

__all__ = [
    "AnalogTile",
    "CostLedger",
    "DeviceParams",
    "DigitalProfile",
    "HardwareProfile",
    "IOParams",
    "InvalidStateError",
    "LowRankUpdate",
    "PCAConfig",
    "PCAResult",
    "PulseConfig",
    "SingularSystemError",
    "SketchConfig",
    "WeightRangeError",
    "center_columns",
    "cost_matrix_read",
    "cost_matrix_write",
    "cost_mv",
    "cost_op",
    "cost_vector_read",
    "digital_cost",
    "embedding_distortion",
    "exact_olls",
    "exact_truncated_svd",
    "ideal_tile",
    "ledger_report",
    "low_rank_update",
    "quantize",
    "randomized_pca",
    "randomized_pca_digital",
    "scale_to_range",
    "sketch_digital",
    "sketch_stream",
    "sketched_olls",
    "tile_new",
]
