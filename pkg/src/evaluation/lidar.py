"""
Virtual spinning LiDAR over an analytic height field.

Every (elevation, azimuth) ray is marched from the sensor with a step that
grows with range until it passes below the terrain, then the crossing is
refined by bisection. Gaussian noise is added along the ray and the returned
points are expressed in the sensor frame.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geometry.core import Pose6
from .schema import SensorSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimulatedScan:
    """Sensor-frame points, their semantic labels and true ranges."""
    points: np.ndarray
    labels: np.ndarray
    ranges: np.ndarray
    frame_id: int = 0

    def __len__(self) -> int:
        return int(self.points.shape[0])


def ray_directions(sensor: SensorSpec) -> np.ndarray:
    """Unit ray directions in the sensor frame, one row per (elevation, azimuth)."""
    elev = sensor.elevation_angles()
    azim = sensor.azimuth_angles()
    e, a = np.meshgrid(elev, azim, indexing='ij')
    return np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], axis=-1).reshape(-1, 3)


def _clearance(terrain, origin: np.ndarray, dirs: np.ndarray, t: np.ndarray) -> np.ndarray:
    p = origin[None, :] + dirs * t[:, None]
    return p[:, 2] - terrain(p[:, 0], p[:, 1])


def simulate_lidar(terrain, pose: Pose6, sensor: Optional[SensorSpec] = None,
                   rng: Optional[np.random.Generator] = None, frame_id: int = 0) -> SimulatedScan:
    """
    Cast every ray of ``sensor`` from ``pose`` against ``terrain``.

    Args:
        terrain: Callable h(x, y) with ``labels(x, y)`` and ``height_bound()``
        pose: Sensor pose in the world
        sensor: Ray pattern and noise; defaults to a 64-beam spinning sensor
        rng: Noise generator; a fixed-seed generator when omitted
        frame_id: Carried into the result

    Returns:
        SimulatedScan; rays that leave ``max_range`` or climb above the
        terrain's height bound produce no point
    """
    sensor = sensor or SensorSpec()
    rng = rng if rng is not None else np.random.default_rng(0)
    origin = pose.translation
    local_dirs = ray_directions(sensor)
    dirs = pose.rotation.apply(local_dirs)
    top = terrain.height_bound()

    count = dirs.shape[0]
    t_prev = np.full(count, sensor.min_range)
    hit = np.zeros(count, dtype=bool)
    t_hit = np.full(count, np.nan)
    t_below = np.full(count, np.nan)

    # rays that start below ground never return
    active = _clearance(terrain, origin, dirs, t_prev) > 0.0

    while np.any(active):
        idx = np.nonzero(active)[0]
        step = np.maximum(sensor.march_step, sensor.march_growth * t_prev[idx])
        t_next = np.minimum(t_prev[idx] + step, sensor.max_range)
        f = _clearance(terrain, origin, dirs[idx], t_next)

        crossed = f <= 0.0
        if np.any(crossed):
            rows = idx[crossed]
            lo = t_prev[rows].copy()
            hi = t_next[crossed].copy()
            while np.any(hi - lo > sensor.bisection_tolerance):
                mid = 0.5 * (lo + hi)
                below = _clearance(terrain, origin, dirs[rows], mid) <= 0.0
                hi = np.where(below, mid, hi)
                lo = np.where(below, lo, mid)
            t_hit[rows] = 0.5 * (lo + hi)
            t_below[rows] = hi
            hit[rows] = True

        t_prev[idx] = t_next
        z = origin[2] + dirs[idx, 2] * t_next
        escaped = (dirs[idx, 2] >= 0.0) & (z > top)
        exhausted = t_next >= sensor.max_range
        active[idx] = ~(crossed | escaped | exhausted)

    rows = np.nonzero(hit)[0]
    true_range = t_hit[rows]
    noisy = true_range
    if sensor.range_noise > 0:
        noisy = true_range + rng.normal(0.0, sensor.range_noise, size=true_range.shape)
    noisy = np.maximum(noisy, 0.0)

    # label at the first sample under the surface
    world = origin[None, :] + dirs[rows] * t_below[rows][:, None]
    labels = np.asarray(terrain.labels(world[:, 0], world[:, 1]), dtype=np.int64)
    points = local_dirs[rows] * noisy[:, None]
    logger.debug(f"SIM frame={frame_id} rays={count} returns={rows.size}")
    return SimulatedScan(points=points, labels=labels, ranges=true_range, frame_id=frame_id)
