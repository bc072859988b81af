"""Truncated Prufer 2-group configuration space.

The end-to-end counterexample lives in :mod:`orbital_measures.prufer.pipeline`
(imported separately to keep this package free of measure-layer imports).
"""

from .config import (
    PruferConfig,
    TwoPointOrbitReport,
    element_shift,
    metric_tail_bound,
    mismatch_counts,
    one_config,
    prufer_metric,
    prufer_metric_exact,
    prufer_point,
    verify_two_point_orbit,
    zero_config,
)

__all__ = [
    "PruferConfig",
    "TwoPointOrbitReport",
    "element_shift",
    "metric_tail_bound",
    "mismatch_counts",
    "one_config",
    "prufer_metric",
    "prufer_metric_exact",
    "prufer_point",
    "verify_two_point_orbit",
    "zero_config",
]
