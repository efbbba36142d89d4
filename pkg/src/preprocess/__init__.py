"""
Per-frame pre-processing: rectification, cell statistics and coarse segmentation.
"""

from .segmentation import (
    PreprocessError,
    EmptyCellError,
    CellClass,
    CellObservation,
    FrameCellStatistics,
    cell_stats,
    coarse_segment,
    remove_overhang,
    frame_cell_statistics,
)
from .rectify import ScanFrame, ScanFormatError, rectify_scan, upright_points

__all__ = [
    "PreprocessError",
    "EmptyCellError",
    "ScanFormatError",
    "CellClass",
    "CellObservation",
    "FrameCellStatistics",
    "ScanFrame",
    "cell_stats",
    "coarse_segment",
    "remove_overhang",
    "frame_cell_statistics",
    "rectify_scan",
    "upright_points",
]
