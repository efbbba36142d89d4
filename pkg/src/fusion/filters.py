"""
Temporal fusion of per-cell elevation Gaussians.

NDT fusion pools the moments of every batch of heights a cell has seen; the
Kalman variant treats each frame's cell mean as one scalar measurement.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..geometry.core import InvalidArgumentError
from ..preprocess.segmentation import CellClass, CellObservation


class FusionError(Exception):
    """Base exception for map fusion."""
    pass


class UnfusableScanError(FusionError, InvalidArgumentError):
    """Raised when a scan lacks a pose or has not been rectified."""
    pass


@dataclass(frozen=True)
class GridCell:
    """
    Fused state of one map cell.

    Attributes:
        S: Cumulative point count
        mean: Joint elevation mean (m)
        var: Joint elevation variance (m²)
        cls: Cell class; S == 0 exactly when UNOBSERVED
        last_update: Frame id of the last observation, -1 if never
        obs_frames: Number of frames that observed the cell
    """
    S: int = 0
    mean: float = 0.0
    var: float = 0.0
    cls: CellClass = CellClass.UNOBSERVED
    last_update: int = -1
    obs_frames: int = 0


@dataclass(frozen=True)
class KfParams:
    """
    Scalar Kalman filter parameters.

    With ``distance_scaled`` the measurement noise is ``measurement_noise * d``
    where d is the cell's distance to the LiDAR.
    """
    a: float = 1.0
    c: float = 1.0
    process_noise: float = 0.01
    measurement_noise: float = 0.01
    distance_scaled: bool = True

    def __post_init__(self):
        if self.process_noise < 0:
            raise InvalidArgumentError("Process noise ε must be non-negative")
        if not self.measurement_noise > 0:
            raise InvalidArgumentError("Measurement noise ξ must be positive")

    def measurement_variance(self, distance: Optional[np.ndarray] = None):
        if self.distance_scaled and distance is not None:
            return self.measurement_noise * np.asarray(distance, dtype=float)
        return self.measurement_noise


def ndt_fuse_arrays(S: np.ndarray, mean: np.ndarray, var: np.ndarray,
                    n: np.ndarray, obs_mean: np.ndarray, obs_var: np.ndarray
                    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Pooled-moment fusion, elementwise.

    S' = S + n
    μ' = (n·μ_o + S·μ) / S'
    Σ' = (n·Σ_o + S·Σ + (n·S/S')·(μ_o − μ)²) / S'
    """
    S = np.asarray(S, dtype=np.int64)
    n = np.asarray(n, dtype=np.int64)
    S_new = S + n
    Sf = S.astype(float)
    nf = n.astype(float)
    denom = np.where(S_new > 0, S_new, 1).astype(float)
    delta = obs_mean - mean
    mean_new = (nf * obs_mean + Sf * mean) / denom
    var_new = (nf * obs_var + Sf * var + (nf * Sf / denom) * delta * delta) / denom
    first = S == 0
    mean_new = np.where(first, obs_mean, mean_new)
    var_new = np.where(first, obs_var, var_new)
    return S_new, mean_new, np.maximum(var_new, 0.0)


def kf_fuse_arrays(mean: np.ndarray, var: np.ndarray, measurement: np.ndarray,
                   a: float, c: float, process_noise: float, measurement_noise
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """One predict/update step of the scalar Kalman filter, elementwise."""
    mean_bar = a * mean
    var_bar = a * a * var + process_noise
    gain = var_bar * c / (c * c * var_bar + measurement_noise)
    mean_new = mean_bar + gain * (measurement - c * mean_bar)
    var_new = (1.0 - gain * c) * var_bar
    return mean_new, np.maximum(var_new, 0.0)


def _observed_class(prior: GridCell) -> CellClass:
    return CellClass.POTENTIAL_TERRAIN if prior.cls == CellClass.UNOBSERVED else prior.cls


def ndt_update(prior: GridCell, obs: CellObservation, frame_id: Optional[int] = None) -> GridCell:
    """
    Fuse one frame's cell observation into a cell by pooled moments.

    Raises:
        InvalidArgumentError: If the observation holds no points
    """
    if obs.n < 1:
        raise InvalidArgumentError("Observation must contain at least one point")
    S, mean, var = ndt_fuse_arrays(np.int64(prior.S), np.float64(prior.mean), np.float64(prior.var),
                                   np.int64(obs.n), np.float64(obs.mean), np.float64(obs.var))
    return GridCell(
        S=int(S), mean=float(mean), var=float(var), cls=_observed_class(prior),
        last_update=prior.last_update if frame_id is None else frame_id,
        obs_frames=prior.obs_frames + 1,
    )


def kf_update(prior: GridCell, obs_mean: float, params: KfParams,
              distance: Optional[float] = None, n: int = 1,
              frame_id: Optional[int] = None) -> GridCell:
    """
    Kalman predict/update of a cell with a scalar elevation measurement.

    Args:
        prior: Current cell state (mean and variance used as the prior)
        obs_mean: Measured elevation
        params: Filter parameters
        distance: Cell distance to the LiDAR for distance-scaled ξ
        n: Points behind the measurement, added to S
        frame_id: Frame id recorded as last update
    """
    xi = params.measurement_variance(distance)
    mean, var = kf_fuse_arrays(np.float64(prior.mean), np.float64(prior.var), np.float64(obs_mean),
                               params.a, params.c, params.process_noise, xi)
    return replace(
        prior,
        S=prior.S + n,
        mean=float(mean),
        var=float(var),
        cls=_observed_class(prior),
        last_update=prior.last_update if frame_id is None else frame_id,
        obs_frames=prior.obs_frames + 1,
    )


def refine_by_variance(cell: GridCell, variance_threshold: float, min_obs: int) -> CellClass:
    """Promote a persistently high-variance potential-terrain cell to obstacle."""
    if (cell.cls == CellClass.POTENTIAL_TERRAIN
            and cell.obs_frames >= min_obs
            and cell.var > variance_threshold):
        return CellClass.OBSTACLE
    return cell.cls
