"""
Geometry primitives: poses, the rolling-grid anchor and world/grid projection.
"""

from .core import (
    GeometryError,
    InvalidArgumentError,
    GridIndex,
    Pose6,
    MapAnchor,
    compute_residual,
    side_cells_for,
    make_anchor,
    project_points,
    world_to_grid,
    cell_center,
    cell_center_grids,
    transform_point,
    transform_points,
    interpolate_pose,
    interpolate_poses,
    pose_from_matrix,
    pose_to_matrix,
)

__all__ = [
    "GeometryError",
    "InvalidArgumentError",
    "GridIndex",
    "Pose6",
    "MapAnchor",
    "compute_residual",
    "side_cells_for",
    "make_anchor",
    "project_points",
    "world_to_grid",
    "cell_center",
    "cell_center_grids",
    "transform_point",
    "transform_points",
    "interpolate_pose",
    "interpolate_poses",
    "pose_from_matrix",
    "pose_to_matrix",
]
