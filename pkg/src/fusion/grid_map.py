"""
Rolling global grid map.

Cells are stored in ring buffers indexed by world-quantized cell coordinates
(gy mod N, gx mod N), so moving the vehicle only clears the rows and columns
that leave the window. ``snapshot()`` unrolls the buffers into window order
(row 0 = north edge, column 0 = west edge).
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..geometry.core import (
    GridIndex, InvalidArgumentError, MapAnchor, cell_center_grids, make_anchor,
)
from ..preprocess.rectify import ScanFrame
from ..preprocess.segmentation import CellClass, frame_cell_statistics
from .filters import GridCell, KfParams, UnfusableScanError, kf_fuse_arrays, ndt_fuse_arrays

logger = logging.getLogger('terrain.fusion')


@dataclass(frozen=True)
class FusionSettings:
    """Thresholds and filter choice used by ``RollingGridMap.integrate_frame``."""
    mode: str = "ndt"
    height_threshold: float = 0.4
    overhang_height: float = 2.3
    variance_threshold: float = 0.1
    min_obs: int = 3
    kf: KfParams = field(default_factory=KfParams)

    def __post_init__(self):
        if self.mode not in ("ndt", "kf"):
            raise InvalidArgumentError(f"Fusion mode must be 'ndt' or 'kf', got '{self.mode}'")
        if self.min_obs < 1:
            raise InvalidArgumentError("min_obs must be at least 1")


@dataclass(frozen=True, eq=False)
class MapSnapshot:
    """Immutable window-ordered copy of the map state."""
    S: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    cls: np.ndarray
    obs_frames: np.ndarray
    last_update: np.ndarray
    anchor: MapAnchor
    lidar_z: float = 0.0
    frame_id: int = -1

    def __post_init__(self):
        for name in ('S', 'mean', 'var', 'cls', 'obs_frames', 'last_update'):
            getattr(self, name).setflags(write=False)

    @property
    def side_cells(self) -> int:
        return self.anchor.side_cells

    @property
    def observed(self) -> np.ndarray:
        return self.S > 0


class RollingGridMap:
    """
    N x N elevation map that follows the vehicle.

    Content is anchored to world-quantized cells: moving the LiDAR changes
    where a cell appears in the window, never its (S, μ̂, Σ̂).
    """

    def __init__(self,
                 map_size_m: float = 80.0,
                 cell_size_m: float = 0.2,
                 lidar_xy: Tuple[float, float] = (0.0, 0.0),
                 settings: Optional[FusionSettings] = None):
        self.settings = settings or FusionSettings()
        self.map_size_m = float(map_size_m)
        self.anchor = make_anchor(lidar_xy, cell_size_m, map_size_m)
        n = self.anchor.side_cells
        self._S = np.zeros((n, n), dtype=np.int64)
        self._mean = np.zeros((n, n), dtype=float)
        self._var = np.zeros((n, n), dtype=float)
        self._cls = np.zeros((n, n), dtype=np.int8)
        self._last = np.full((n, n), -1, dtype=np.int64)
        self._frames = np.zeros((n, n), dtype=np.int64)
        self.lidar_z = 0.0
        self.frame_id = -1

    @property
    def side_cells(self) -> int:
        return self.anchor.side_cells

    @property
    def cell_size(self) -> float:
        return self.anchor.cell_size

    def _storage_index(self, rows, cols) -> Tuple[np.ndarray, np.ndarray]:
        n = self.side_cells
        half = n // 2
        gx0, gy0 = self.anchor.lidar_cell
        gx = gx0 - half + np.asarray(cols, dtype=np.int64)
        gy = gy0 + half - 1 - np.asarray(rows, dtype=np.int64)
        return np.mod(gy, n), np.mod(gx, n)

    def _clear(self, rows=slice(None), cols=slice(None)):
        self._S[rows, cols] = 0
        self._mean[rows, cols] = 0.0
        self._var[rows, cols] = 0.0
        self._cls[rows, cols] = CellClass.UNOBSERVED
        self._last[rows, cols] = -1
        self._frames[rows, cols] = 0

    def roll_map(self, new_lidar_xy) -> "RollingGridMap":
        """
        Recentre the window on a new LiDAR position and evict cells that leave it.

        Returns:
            self, for chaining
        """
        new_anchor = make_anchor(new_lidar_xy, self.cell_size, self.map_size_m)
        n = self.side_cells
        half = n // 2
        old_gx, old_gy = self.anchor.lidar_cell
        new_gx, new_gy = new_anchor.lidar_cell
        dx = new_gx - old_gx
        dy = new_gy - old_gy

        if abs(dx) >= n or abs(dy) >= n:
            self._clear()
            evicted = n * n
        else:
            evicted = 0
            if dx > 0:
                leaving = np.mod(np.arange(old_gx - half, old_gx - half + dx), n)
            else:
                leaving = np.mod(np.arange(old_gx + half + dx, old_gx + half), n)
            if leaving.size:
                self._clear(cols=leaving)
                evicted += leaving.size * n
            if dy > 0:
                leaving = np.mod(np.arange(old_gy - half, old_gy - half + dy), n)
            else:
                leaving = np.mod(np.arange(old_gy + half + dy, old_gy + half), n)
            if leaving.size:
                self._clear(rows=leaving)
                evicted += leaving.size * n

        if evicted:
            logger.debug(f"ROLL shift=({dx},{dy}) evicted_cells<={evicted}")
        self.anchor = new_anchor
        return self

    def cell(self, index: GridIndex) -> GridCell:
        """Fused state of the cell at a window index."""
        r, c = self._storage_index(index.row, index.col)
        return GridCell(
            S=int(self._S[r, c]),
            mean=float(self._mean[r, c]),
            var=float(self._var[r, c]),
            cls=CellClass(int(self._cls[r, c])),
            last_update=int(self._last[r, c]),
            obs_frames=int(self._frames[r, c]),
        )

    def set_cell(self, index: GridIndex, cell: GridCell) -> None:
        """Overwrite the cell at a window index."""
        if (cell.S == 0) != (cell.cls == CellClass.UNOBSERVED):
            raise InvalidArgumentError("A cell is unobserved exactly when its point count is zero")
        r, c = self._storage_index(index.row, index.col)
        self._S[r, c] = cell.S
        self._mean[r, c] = cell.mean
        self._var[r, c] = cell.var
        self._cls[r, c] = int(cell.cls)
        self._last[r, c] = cell.last_update
        self._frames[r, c] = cell.obs_frames

    def snapshot(self) -> MapSnapshot:
        """Copy of the window in row/column order for inference and evaluation."""
        n = self.side_cells
        half = n // 2
        gx0, gy0 = self.anchor.lidar_cell
        rows_idx = np.mod(gy0 + half - 1 - np.arange(n), n)
        cols_idx = np.mod(gx0 - half + np.arange(n), n)
        ix = np.ix_(rows_idx, cols_idx)
        return MapSnapshot(
            S=self._S[ix],
            mean=self._mean[ix],
            var=self._var[ix],
            cls=self._cls[ix],
            obs_frames=self._frames[ix],
            last_update=self._last[ix],
            anchor=self.anchor,
            lidar_z=self.lidar_z,
            frame_id=self.frame_id,
        )

    def integrate_frame(self, scan: ScanFrame) -> "RollingGridMap":
        """
        Fuse one rectified scan into the map.

        Steps: roll to the scan's LiDAR position, per-cell overhang removal,
        statistics and coarse segmentation, NDT or Kalman fusion, variance
        refinement. Elevations are stored in world z.

        Raises:
            UnfusableScanError: If the scan has no pose or is not upright
        """
        if scan.frame_pose is None:
            raise UnfusableScanError(f"Frame {scan.frame_id} has no pose")
        if not scan.upright:
            raise UnfusableScanError(f"Frame {scan.frame_id} must be rectified before integration")

        s = self.settings
        lidar = scan.frame_pose.translation
        self.roll_map(lidar[:2])
        self.lidar_z = float(lidar[2])
        self.frame_id = scan.frame_id

        stats = frame_cell_statistics(scan.points, self.anchor, s.height_threshold, s.overhang_height)
        if len(stats) == 0:
            return self
        stats = stats.shifted(self.lidar_z)

        sr, sc = self._storage_index(stats.rows, stats.cols)
        S = self._S[sr, sc]
        prior_cls = self._cls[sr, sc]

        frozen = prior_cls == CellClass.OBSTACLE
        new_obstacle = ~frozen & (stats.cls == CellClass.OBSTACLE)
        fuse = ~frozen & ~new_obstacle

        # first sighting of an obstacle still records its statistics
        first_obstacle = new_obstacle & (S == 0)
        self._S[sr[first_obstacle], sc[first_obstacle]] = stats.n[first_obstacle]
        self._mean[sr[first_obstacle], sc[first_obstacle]] = stats.mean[first_obstacle]
        self._var[sr[first_obstacle], sc[first_obstacle]] = stats.var[first_obstacle]
        self._cls[sr[new_obstacle], sc[new_obstacle]] = CellClass.OBSTACLE

        fr, fc = sr[fuse], sc[fuse]
        if fr.size:
            if s.mode == "ndt":
                S_new, mean_new, var_new = ndt_fuse_arrays(
                    self._S[fr, fc], self._mean[fr, fc], self._var[fr, fc],
                    stats.n[fuse], stats.mean[fuse], stats.var[fuse],
                )
            else:
                S_new, mean_new, var_new = self._kf_fuse(fr, fc, stats, fuse)
            self._S[fr, fc] = S_new
            self._mean[fr, fc] = mean_new
            self._var[fr, fc] = var_new
            self._cls[fr, fc] = CellClass.POTENTIAL_TERRAIN

        self._last[sr, sc] = scan.frame_id
        self._frames[sr, sc] += 1

        # variance refinement over the cells touched this frame
        promote = ((self._cls[sr, sc] == CellClass.POTENTIAL_TERRAIN)
                   & (self._frames[sr, sc] >= s.min_obs)
                   & (self._var[sr, sc] > s.variance_threshold))
        if np.any(promote):
            self._cls[sr[promote], sc[promote]] = CellClass.OBSTACLE

        logger.debug(
            f"INTEGRATE frame={scan.frame_id} cells={len(stats)} fused={int(fr.size)} "
            f"new_obstacles={int(new_obstacle.sum())} promoted={int(promote.sum())}"
        )
        return self

    def _kf_fuse(self, fr, fc, stats, fuse):
        kf = self.settings.kf
        xs, ys = cell_center_grids(self.anchor)
        distance = np.hypot(xs[stats.rows[fuse], stats.cols[fuse]], ys[stats.rows[fuse], stats.cols[fuse]])
        distance = np.maximum(distance, self.cell_size)
        xi = kf.measurement_variance(distance)
        xi = np.broadcast_to(np.asarray(xi, dtype=float), distance.shape)

        S_old = self._S[fr, fc]
        mean_old = self._mean[fr, fc]
        var_old = self._var[fr, fc]
        obs_mean = stats.mean[fuse]
        mean_new, var_new = kf_fuse_arrays(mean_old, var_old, obs_mean, kf.a, kf.c, kf.process_noise, xi)
        first = S_old == 0
        mean_new = np.where(first, obs_mean, mean_new)
        var_new = np.where(first, xi, var_new)
        return S_old + stats.n[fuse], mean_new, var_new


def integrate_frame(grid_map: RollingGridMap, scan: ScanFrame) -> RollingGridMap:
    return grid_map.integrate_frame(scan)


def roll_map(grid_map: RollingGridMap, new_lidar_xy) -> RollingGridMap:
    return grid_map.roll_map(new_lidar_xy)
