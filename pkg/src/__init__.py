"""
Terrain Mapping - dense elevation and traversability maps from LiDAR sequences.

Builds a rolling elevation grid from successive point clouds by NDT or Kalman
cell fusion, fills and smooths it with two-pass Bayesian Generalized Kernel
inference, and derives traversability labels, travel costs and paths from a
local convexity test.

Features:
- World-anchored rolling grid with sub-cell residual alignment
- Multi-frame NDT / Kalman cell fusion with variance refinement
- Bilateral-weighted BGK elevation inference
- Normal-based traversability, region growing and cost-aware A*
- Synthetic scenes, virtual LiDAR and ground-truth evaluation
- Configuration via key-value files, environment variables and CLI flags
"""

__version__ = "1.0.0"
__author__ = "Terrain Mapping Team"
__description__ = "Dense terrain and traversability mapping from LiDAR"

# Package imports for convenience
from .utils.config import Config
from .utils.logging import ProductionLogger, PerformanceMonitor
from .pipeline.schema import PipelineConfig
from .pipeline.runner import FrameResult, TerrainPipeline, run_pipeline
from .pipeline.ablation import run_ablation
from .cli.commands import TerrainCLI

__all__ = [
    "Config",
    "ProductionLogger",
    "PerformanceMonitor",
    "PipelineConfig",
    "FrameResult",
    "TerrainPipeline",
    "run_pipeline",
    "run_ablation",
    "TerrainCLI",
]
