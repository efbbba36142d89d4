"""
Coordinate systems shared by the mapping pipeline.

Covers rigid poses, the world-quantized rolling grid anchor with its sub-cell
residual, world/grid projection and pose interpolation.

Grid convention: columns grow with +x, rows grow with -y, and the LiDAR sits
in cell (N/2 - 1, N/2).
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation, Slerp


class GeometryError(Exception):
    """Base exception for geometry operations."""
    pass


class InvalidArgumentError(GeometryError, ValueError):
    """Raised when an argument is non-finite or outside its domain."""
    pass


ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class GridIndex:
    """Integer cell coordinates inside an N x N map."""
    row: int
    col: int

    def as_tuple(self) -> Tuple[int, int]:
        return (self.row, self.col)


@dataclass(frozen=True, eq=False)
class Pose6:
    """
    Rigid 6-DoF pose: world_point = rotation.apply(local_point) + translation.

    The rotation is kept as a scipy ``Rotation`` (unit quaternion internally).
    """
    translation: np.ndarray
    rotation: Rotation = field(default_factory=Rotation.identity)
    timestamp: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise InvalidArgumentError(f"Pose translation must be finite, got {t}")
        object.__setattr__(self, 'translation', t)
        if not isinstance(self.rotation, Rotation) or not self.rotation.single:
            raise InvalidArgumentError("Pose rotation must be a single scipy Rotation")

    @classmethod
    def identity(cls, timestamp: float = 0.0) -> "Pose6":
        return cls(np.zeros(3), Rotation.identity(), timestamp)

    @classmethod
    def from_translation(cls, x: float, y: float, z: float, timestamp: float = 0.0) -> "Pose6":
        return cls(np.array([x, y, z], dtype=float), Rotation.identity(), timestamp)

    @classmethod
    def from_rotation_matrix(cls, matrix: ArrayLike, translation: ArrayLike,
                             timestamp: float = 0.0) -> "Pose6":
        """
        Build a pose from a 3x3 rotation matrix.

        Near-orthonormal input is projected onto the closest rotation; a
        reflection (determinant < 0) is rejected.
        """
        m = np.asarray(matrix, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("Rotation matrix must be finite")
        if np.linalg.det(m) <= 0:
            raise InvalidArgumentError("Rotation matrix must have positive determinant")
        return cls(translation, Rotation.from_matrix(m), timestamp)

    @classmethod
    def from_euler(cls, angles_deg: ArrayLike, translation: ArrayLike,
                   timestamp: float = 0.0, seq: str = "xyz") -> "Pose6":
        return cls(translation, Rotation.from_euler(seq, angles_deg, degrees=True), timestamp)

    @property
    def rotation_matrix(self) -> np.ndarray:
        return self.rotation.as_matrix()

    @property
    def quaternion(self) -> np.ndarray:
        """Unit quaternion in scalar-last (x, y, z, w) order."""
        return self.rotation.as_quat()

    def inverse(self) -> "Pose6":
        inv = self.rotation.inv()
        return Pose6(-inv.apply(self.translation), inv, self.timestamp)

    def apply(self, points: ArrayLike) -> np.ndarray:
        """Map local points (K x 3 or 3) into the pose's parent frame."""
        return self.rotation.apply(np.asarray(points, dtype=float)) + self.translation

    def __repr__(self) -> str:
        t = ", ".join(f"{v:.3f}" for v in self.translation)
        q = ", ".join(f"{v:.4f}" for v in self.quaternion)
        return f"Pose6(t=({t}), q=({q}), ts={self.timestamp:.3f})"


@dataclass(frozen=True)
class MapAnchor:
    """
    Placement of the N x N grid in the world.

    ``lidar_cell`` is the world-quantized cell holding the LiDAR,
    ``floor(L / ω)`` per axis; the residual is ``L - lidar_cell * ω``.
    """
    lidar_world_xy: Tuple[float, float]
    residual_xy: Tuple[float, float]
    cell_size: float
    side_cells: int
    lidar_cell: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.side_cells <= 0 or self.side_cells % 2 != 0:
            raise InvalidArgumentError(f"Map side must be a positive even cell count, got {self.side_cells}")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise InvalidArgumentError(f"Cell size must be positive, got {self.cell_size}")
        for r in self.residual_xy:
            if not 0.0 <= r < self.cell_size:
                raise InvalidArgumentError(f"Residual {r} outside [0, {self.cell_size})")

    @property
    def half(self) -> int:
        return self.side_cells // 2

    @property
    def vehicle_cell(self) -> GridIndex:
        """Cell containing the LiDAR itself."""
        return GridIndex(self.half - 1, self.half)

    @property
    def map_size(self) -> float:
        return self.side_cells * self.cell_size


def _floor_div(values: np.ndarray, omega: float) -> np.ndarray:
    return np.floor(values / omega)


def compute_residual(lidar_xy: ArrayLike, omega: float) -> np.ndarray:
    """
    Sub-cell offset of the LiDAR inside its world-quantized cell.

    Args:
        lidar_xy: LiDAR world position (x, y) in meters
        omega: Cell size in meters

    Returns:
        Residual (r_x, r_y), each component in [0, ω)

    Raises:
        InvalidArgumentError: Non-finite input or ω <= 0
    """
    L = np.asarray(lidar_xy, dtype=float).reshape(2)
    if not (math.isfinite(omega) and omega > 0):
        raise InvalidArgumentError(f"Cell size must be positive and finite, got {omega}")
    if not np.all(np.isfinite(L)):
        raise InvalidArgumentError(f"LiDAR position must be finite, got {L}")

    residual = L - _floor_div(L, omega) * omega
    # rounding can land exactly on ω or a hair below zero
    residual = np.where(residual >= omega, residual - omega, residual)
    return np.clip(residual, 0.0, np.nextafter(omega, 0.0))


def side_cells_for(map_size_m: float, omega: float) -> int:
    """N = W / ω; must come out as an even integer."""
    if not (map_size_m > 0 and omega > 0):
        raise InvalidArgumentError("Map size and cell size must be positive")
    n = int(round(map_size_m / omega))
    if abs(n * omega - map_size_m) > 1e-6 * max(1.0, map_size_m) or n % 2 != 0 or n == 0:
        raise InvalidArgumentError(
            f"Map size {map_size_m} m is not an even multiple of cell size {omega} m"
        )
    return n


def make_anchor(lidar_xy: ArrayLike, omega: float, map_size_m: float) -> MapAnchor:
    """Anchor a W x W map of ω-sized cells on the LiDAR position."""
    n = side_cells_for(map_size_m, omega)
    residual = compute_residual(lidar_xy, omega)
    L = np.asarray(lidar_xy, dtype=float).reshape(2)
    cell = _floor_div(L, omega).astype(np.int64)
    return MapAnchor(
        lidar_world_xy=(float(L[0]), float(L[1])),
        residual_xy=(float(residual[0]), float(residual[1])),
        cell_size=float(omega),
        side_cells=n,
        lidar_cell=(int(cell[0]), int(cell[1])),
    )


def project_points(points: ArrayLike, anchor: MapAnchor) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised grid projection of LiDAR-centred points.

    Returns:
        (rows, cols, inside) where rows/cols are int64 arrays and ``inside``
        flags points that fall within the map
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    omega = anchor.cell_size
    half = anchor.half
    cols = half + _floor_div(p[:, 0] + anchor.residual_xy[0], omega)
    rows = half - 1 - _floor_div(p[:, 1] + anchor.residual_xy[1], omega)
    finite = np.isfinite(rows) & np.isfinite(cols)
    rows = np.where(finite, rows, -1).astype(np.int64)
    cols = np.where(finite, cols, -1).astype(np.int64)
    n = anchor.side_cells
    inside = finite & (rows >= 0) & (rows < n) & (cols >= 0) & (cols < n)
    return rows, cols, inside


def world_to_grid(p: ArrayLike, anchor: MapAnchor) -> Optional[GridIndex]:
    """
    Grid cell of a LiDAR-centred point, or None when it falls outside the map.
    """
    rows, cols, inside = project_points(np.asarray(p, dtype=float).reshape(1, 3), anchor)
    if not inside[0]:
        return None
    return GridIndex(int(rows[0]), int(cols[0]))


def cell_center(index: GridIndex, anchor: MapAnchor) -> Tuple[float, float]:
    """LiDAR-centred (x, y) of a cell centre; inverse of world_to_grid."""
    omega = anchor.cell_size
    x = (index.col - anchor.half + 0.5) * omega - anchor.residual_xy[0]
    y = (anchor.half - 1 - index.row + 0.5) * omega - anchor.residual_xy[1]
    return x, y


def cell_center_grids(anchor: MapAnchor) -> Tuple[np.ndarray, np.ndarray]:
    """N x N arrays of LiDAR-centred cell-centre coordinates."""
    idx = np.arange(anchor.side_cells)
    omega = anchor.cell_size
    xs = (idx - anchor.half + 0.5) * omega - anchor.residual_xy[0]
    ys = (anchor.half - 1 - idx + 0.5) * omega - anchor.residual_xy[1]
    return np.meshgrid(xs, ys)


def transform_points(points: ArrayLike, src: Pose6, dst: Pose6) -> np.ndarray:
    """Re-express points from the ``src`` frame in the ``dst`` frame: T_dst⁻¹ · T_src · p."""
    world = src.apply(points)
    return dst.rotation.inv().apply(world - dst.translation)


def transform_point(p: ArrayLike, src: Pose6, dst: Pose6) -> np.ndarray:
    return transform_points(np.asarray(p, dtype=float).reshape(3), src, dst)


def interpolate_pose(a: Pose6, b: Pose6, alpha: float) -> Pose6:
    """
    Pose at fraction ``alpha`` between ``a`` and ``b``.

    Translation is interpolated linearly, rotation by slerp.

    Raises:
        InvalidArgumentError: alpha outside [0, 1] or b earlier than a
    """
    if not (0.0 <= alpha <= 1.0):
        raise InvalidArgumentError(f"Interpolation fraction must lie in [0, 1], got {alpha}")
    if a.timestamp > b.timestamp:
        raise InvalidArgumentError("Pose timestamps must be ordered (a before b)")
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b
    rotations, translations = interpolate_poses(a, b, np.array([alpha]))
    timestamp = a.timestamp + alpha * (b.timestamp - a.timestamp)
    return Pose6(translations[0], rotations[0], timestamp)


def interpolate_poses(a: Pose6, b: Pose6, alphas: np.ndarray) -> Tuple[Rotation, np.ndarray]:
    """Vectorised interpolation for many fractions; returns (rotations, K x 3 translations)."""
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if alphas.size and (alphas.min() < 0.0 or alphas.max() > 1.0):
        raise InvalidArgumentError("Interpolation fractions must lie in [0, 1]")
    slerp = Slerp([0.0, 1.0], Rotation.concatenate([a.rotation, b.rotation]))
    rotations = slerp(alphas)
    translations = a.translation[None, :] + alphas[:, None] * (b.translation - a.translation)[None, :]
    return rotations, translations


def pose_from_matrix(matrix: ArrayLike, timestamp: float = 0.0) -> Pose6:
    """Pose from a 3x4 ``[R|t]`` or 4x4 homogeneous matrix (KITTI pose rows)."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 12:
        m = m.reshape(3, 4)
    elif m.size == 16:
        m = m.reshape(4, 4)[:3, :]
    else:
        raise InvalidArgumentError(f"Pose matrix must have 12 or 16 entries, got {m.size}")
    return Pose6.from_rotation_matrix(m[:, :3], m[:, 3], timestamp)


def pose_to_matrix(pose: Pose6) -> np.ndarray:
    """4x4 homogeneous matrix of a pose."""
    m = np.eye(4)
    m[:3, :3] = pose.rotation_matrix
    m[:3, 3] = pose.translation
    return m
