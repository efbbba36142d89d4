"""
Per-cell height statistics and coarse terrain/obstacle segmentation.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence, Union

import numpy as np

from ..geometry.core import MapAnchor, project_points


class PreprocessError(Exception):
    """Base exception for pre-processing operations."""
    pass


class EmptyCellError(PreprocessError):
    """Raised when statistics are requested for a cell without heights."""
    pass


class CellClass(IntEnum):
    """Coarse state of a grid cell."""
    UNOBSERVED = 0
    POTENTIAL_TERRAIN = 1
    OBSTACLE = 2


@dataclass(frozen=True)
class CellObservation:
    """Height distribution of the points one frame dropped into a cell."""
    n: int
    mean: float
    var: float
    min_h: float
    max_h: float


def cell_stats(heights: Union[Sequence[float], np.ndarray]) -> CellObservation:
    """
    Mean and population variance of the heights in one cell.

    Raises:
        EmptyCellError: If no heights are given
    """
    h = np.asarray(heights, dtype=float).reshape(-1)
    if h.size == 0:
        raise EmptyCellError("Cannot compute statistics of an empty cell")
    mean = float(h.mean())
    var = float(np.mean((h - mean) ** 2))
    return CellObservation(n=int(h.size), mean=mean, var=var,
                           min_h=float(h.min()), max_h=float(h.max()))


def coarse_segment(obs: CellObservation, height_threshold: float) -> CellClass:
    """Obstacle when the min-max spread exceeds T_h, else potential terrain."""
    if obs.max_h - obs.min_h > height_threshold:
        return CellClass.OBSTACLE
    return CellClass.POTENTIAL_TERRAIN


def remove_overhang(cell_heights: Union[Sequence[float], np.ndarray],
                    overhang_height: float) -> np.ndarray:
    """Drop heights above (lowest height in the cell + T_o)."""
    h = np.asarray(cell_heights, dtype=float).reshape(-1)
    if h.size == 0:
        return h
    return h[h <= h.min() + overhang_height]


@dataclass
class FrameCellStatistics:
    """
    Column-wise statistics of every cell one frame touched.

    All arrays share the same length; ``rows``/``cols`` locate the cell in the
    map window.
    """
    rows: np.ndarray
    cols: np.ndarray
    n: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    min_h: np.ndarray
    max_h: np.ndarray
    cls: np.ndarray

    def __len__(self) -> int:
        return int(self.rows.size)

    def shifted(self, dz: float) -> "FrameCellStatistics":
        """Same statistics with every height offset by ``dz``."""
        return FrameCellStatistics(self.rows, self.cols, self.n, self.mean + dz, self.var,
                                   self.min_h + dz, self.max_h + dz, self.cls)

    @classmethod
    def empty(cls) -> "FrameCellStatistics":
        z_i = np.zeros(0, dtype=np.int64)
        z_f = np.zeros(0, dtype=float)
        return cls(z_i, z_i, z_i, z_f, z_f, z_f, z_f, np.zeros(0, dtype=np.int8))


def frame_cell_statistics(points: np.ndarray, anchor: MapAnchor,
                          height_threshold: float, overhang_height: float) -> FrameCellStatistics:
    """
    Overhang removal, statistics and coarse class for every touched cell.

    Args:
        points: K x 3 upright, LiDAR-centred points
        anchor: Map placement used for projection
        height_threshold: T_h
        overhang_height: T_o

    Returns:
        FrameCellStatistics for the cells containing at least one point
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    p = p[np.all(np.isfinite(p), axis=1)]
    rows, cols, inside = project_points(p, anchor)
    if not np.any(inside):
        return FrameCellStatistics.empty()

    n_side = anchor.side_cells
    flat = rows[inside] * n_side + cols[inside]
    z = p[inside, 2]

    # sort by cell, then height: the first entry of each run is the cell minimum
    order = np.lexsort((z, flat))
    flat = flat[order]
    z = z[order]
    _, start, counts = np.unique(flat, return_index=True, return_counts=True)
    cell_min = z[start]
    keep = z <= np.repeat(cell_min + overhang_height, counts)
    flat = flat[keep]
    z = z[keep]

    cells, start, counts = np.unique(flat, return_index=True, return_counts=True)
    min_h = z[start]
    max_h = z[start + counts - 1]
    mean = np.add.reduceat(z, start) / counts
    dev = z - np.repeat(mean, counts)
    var = np.add.reduceat(dev * dev, start) / counts

    cls = np.where(max_h - min_h > height_threshold,
                   CellClass.OBSTACLE, CellClass.POTENTIAL_TERRAIN).astype(np.int8)
    return FrameCellStatistics(
        rows=cells // n_side,
        cols=cells % n_side,
        n=counts.astype(np.int64),
        mean=mean,
        var=var,
        min_h=min_h,
        max_h=max_h,
        cls=cls,
    )
