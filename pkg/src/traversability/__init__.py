"""
Normals, local-convexity labelling, travel cost, reachability and path planning.
"""

from ..bgk.inference import TerrainModel
from .analysis import (
    TraversabilityError,
    UndefinedNormalError,
    NoCostError,
    TraversabilityLabel,
    KinematicLimits,
    NormalField,
    CellGeometry,
    CostMap,
    EdgeMasks,
    compute_normals,
    compute_normal,
    edge_traversable,
    travel_cost,
    edge_masks,
    attach_edges,
    label_cells,
    grow_regions,
    seed_cells,
    region_grow,
    analyze_terrain,
)
from .planner import PathInfeasibleError, plan_path, path_cost

__all__ = [
    "TerrainModel",
    "TraversabilityError",
    "UndefinedNormalError",
    "NoCostError",
    "PathInfeasibleError",
    "TraversabilityLabel",
    "KinematicLimits",
    "NormalField",
    "CellGeometry",
    "CostMap",
    "EdgeMasks",
    "compute_normals",
    "compute_normal",
    "edge_traversable",
    "travel_cost",
    "edge_masks",
    "attach_edges",
    "label_cells",
    "grow_regions",
    "seed_cells",
    "region_grow",
    "analyze_terrain",
    "plan_path",
    "path_cost",
]
