"""
Pipeline configuration, per-frame runner and ablation harness.
"""

from .schema import PipelineConfig
from .runner import (
    STAGES,
    PipelineError,
    MissingPoseError,
    FrameResult,
    TerrainPipeline,
    run_pipeline,
)
from .ablation import ablation_grid, evaluate_run, run_ablation

__all__ = [
    "PipelineConfig",
    "STAGES",
    "PipelineError",
    "MissingPoseError",
    "FrameResult",
    "TerrainPipeline",
    "run_pipeline",
    "ablation_grid",
    "evaluate_run",
    "run_ablation",
]
