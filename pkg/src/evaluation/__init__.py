"""
Ground truth, metrics, synthetic scenes and simulated LiDAR.
"""

from .schema import (
    EvaluationError,
    UndefinedMetricError,
    TRAVERSABLE_LABELS,
    HANGING_LABELS,
    PlanePrimitive,
    StepPrimitive,
    RampPrimitive,
    BoxPrimitive,
    WallPrimitive,
    HillPrimitive,
    SensorSpec,
    Waypoint,
    TrajectorySpec,
    SceneSpec,
    MetricReport,
)
from .ground_truth import (
    GroundTruthLabel,
    LabeledCloud,
    GroundTruthMap,
    assemble_map,
    label_traversability,
    nearest_traversable,
    finalize_gt,
    ground_truth_for_frame,
)
from .lidar import SimulatedScan, ray_directions, simulate_lidar
from .scene import (
    PRESETS,
    TerrainFunction,
    trajectory_poses,
    ground_truth_at,
    synth_scene,
    synth_sequence,
    preset_scene,
)
from .metrics import (
    metrics_traversability,
    metrics_elevation,
    elevation_rmse,
    evaluate_frame,
    reports_frame,
    summarize_reports,
)

__all__ = [
    "EvaluationError",
    "UndefinedMetricError",
    "TRAVERSABLE_LABELS",
    "HANGING_LABELS",
    "PlanePrimitive",
    "StepPrimitive",
    "RampPrimitive",
    "BoxPrimitive",
    "WallPrimitive",
    "HillPrimitive",
    "SensorSpec",
    "Waypoint",
    "TrajectorySpec",
    "SceneSpec",
    "MetricReport",
    "GroundTruthLabel",
    "LabeledCloud",
    "GroundTruthMap",
    "assemble_map",
    "label_traversability",
    "nearest_traversable",
    "finalize_gt",
    "ground_truth_for_frame",
    "SimulatedScan",
    "ray_directions",
    "simulate_lidar",
    "PRESETS",
    "TerrainFunction",
    "trajectory_poses",
    "ground_truth_at",
    "synth_scene",
    "synth_sequence",
    "preset_scene",
    "metrics_traversability",
    "metrics_elevation",
    "elevation_rmse",
    "evaluate_frame",
    "reports_frame",
    "summarize_reports",
]
