"""
Scan frames and their rectification: intra-frame motion compensation followed
by rotation into an upright, gravity-aligned frame centred on the LiDAR.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..geometry.core import Pose6, interpolate_poses
from .segmentation import PreprocessError


class ScanFormatError(PreprocessError):
    """Raised when a scan's arrays are inconsistent."""
    pass


@dataclass(frozen=True, eq=False)
class ScanFrame:
    """
    One LiDAR sweep.

    Attributes:
        points: K x 3 points in the sensor frame (or the upright frame once
            ``upright`` is set)
        frame_pose: Sensor pose at the start of the sweep; None when unknown
        frame_id: Sequence index
        fractions: Optional per-point time fraction of the sweep in [0, 1]
        labels: Optional per-point semantic label ids
        end_pose: Optional sensor pose at the end of the sweep, used to deskew
        upright: True once the points have been rectified
    """
    points: np.ndarray
    frame_pose: Optional[Pose6]
    frame_id: int = 0
    fractions: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    end_pose: Optional[Pose6] = None
    upright: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ScanFormatError(f"Points must be K x 3, got shape {pts.shape}")
        object.__setattr__(self, 'points', pts)

        if self.fractions is not None:
            frac = np.asarray(self.fractions, dtype=float).reshape(-1)
            if frac.size != pts.shape[0]:
                raise ScanFormatError("One time fraction per point is required")
            if frac.size and (np.nanmin(frac) < 0.0 or np.nanmax(frac) > 1.0 or not np.all(np.isfinite(frac))):
                raise ScanFormatError("Time fractions must lie in [0, 1]")
            object.__setattr__(self, 'fractions', frac)

        if self.labels is not None:
            lab = np.asarray(self.labels).reshape(-1).astype(np.int64)
            if lab.size != pts.shape[0]:
                raise ScanFormatError("One label per point is required")
            object.__setattr__(self, 'labels', lab)

    def __len__(self) -> int:
        return int(self.points.shape[0])


def upright_points(points: np.ndarray, pose: Pose6) -> np.ndarray:
    """Rotate sensor-frame points by the pose attitude (roll, pitch and azimuth removed)."""
    return pose.rotation.apply(np.asarray(points, dtype=float).reshape(-1, 3))


def rectify_scan(scan: ScanFrame, pose_before: Pose6, pose_after: Pose6) -> ScanFrame:
    """
    Deskew and upright a scan.

    With per-point fractions each point is moved by the pose interpolated at
    its fraction and expressed relative to ``pose_before``; without them the
    scan is taken as already deskewed. The result is rotated into world axes
    with the LiDAR (at ``pose_before``) at the origin.

    Args:
        scan: Raw scan in the sensor frame
        pose_before: Sensor pose at sweep start
        pose_after: Sensor pose at sweep end

    Returns:
        A new ScanFrame with ``upright=True`` and ``frame_pose=pose_before``
    """
    if scan.upright:
        return scan

    if scan.fractions is not None and len(scan):
        rotations, translations = interpolate_poses(pose_before, pose_after, scan.fractions)
        points = rotations.apply(scan.points) + (translations - pose_before.translation[None, :])
    else:
        points = upright_points(scan.points, pose_before)

    return replace(scan, points=points, frame_pose=pose_before, end_pose=pose_after, upright=True)
