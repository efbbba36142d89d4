"""
Multi-frame elevation fusion on a rolling world-anchored grid.
"""

from .filters import (
    FusionError,
    UnfusableScanError,
    GridCell,
    KfParams,
    ndt_fuse_arrays,
    kf_fuse_arrays,
    ndt_update,
    kf_update,
    refine_by_variance,
)
from .grid_map import FusionSettings, MapSnapshot, RollingGridMap, integrate_frame, roll_map

__all__ = [
    "FusionError",
    "UnfusableScanError",
    "GridCell",
    "KfParams",
    "FusionSettings",
    "MapSnapshot",
    "RollingGridMap",
    "ndt_fuse_arrays",
    "kf_fuse_arrays",
    "ndt_update",
    "kf_update",
    "refine_by_variance",
    "integrate_frame",
    "roll_map",
]
