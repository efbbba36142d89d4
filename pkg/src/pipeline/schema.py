"""
Pydantic schema of the pipeline configuration.

Defaults: W = 80 m, ω = 0.2 m, T_h = 0.4 m,
T_Σ = 0.1, Σ_w = 0.1, l = 1 m, T_α = 10°, T_θ = 80°.
"""

import math
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..bgk.inference import BgkConfig
from ..fusion.filters import KfParams
from ..fusion.grid_map import FusionSettings
from ..geometry.core import InvalidArgumentError, side_cells_for
from ..traversability.analysis import KinematicLimits


class PipelineConfig(BaseModel):
    """Every tunable of the mapping pipeline."""
    model_config = ConfigDict(frozen=True)

    # map and thresholds
    map_size_m: float = Field(80.0, gt=0, description="W, map side length (m)")
    cell_size_m: float = Field(0.2, gt=0, description="ω, cell size (m)")
    height_diff_threshold_m: float = Field(0.4, gt=0, description="T_h, max in-cell height spread (m)")
    variance_threshold: float = Field(0.1, gt=0, description="T_Σ, max fused variance of terrain cells")
    bilateral_variance: float = Field(0.1, gt=0, description="Σ_w, bilateral weight variance")
    kernel_radius_m: float = Field(1.0, gt=0, description="l, sparse kernel radius (m)")
    similarity_angle_deg: float = Field(10.0, gt=0, lt=90, description="T_α, normal similarity limit (deg)")
    concavity_angle_deg: float = Field(80.0, gt=0, lt=90, description="T_θ, concavity limit (deg)")

    # vehicle
    vehicle_height_m: float = Field(1.8, gt=0, description="h_u, vehicle height (m)")
    overhang_height_m: Optional[float] = Field(None, gt=0, description="T_o; defaults to h_u + 0.5")
    lidar_height_m: float = Field(1.73, gt=0, description="LiDAR mounting height (m)")

    # variants
    fusion_mode: Literal["ndt", "kf"] = "ndt"
    bilateral_filter: bool = True
    estimated_variance: bool = True
    min_observations: int = Field(3, ge=1, description="Frames before variance refinement applies")
    variance_floor: float = Field(1e-4, gt=0, description="Lower clamp on observation variance (m²)")
    bgk_backend: Literal["fft", "direct"] = "fft"
    kf_a: float = 1.0
    kf_c: float = 1.0
    kf_process_noise: float = Field(0.01, ge=0, description="ε")
    kf_measurement_noise: float = Field(0.01, gt=0, description="ξ (per metre when distance scaled)")
    kf_distance_scaled_noise: bool = True

    # planning and evaluation
    planner_cost_weight: float = Field(5.0, ge=0, description="λ, travel cost weight")
    invalid_sentinel: float = Field(-999.0, description="Value written for invalid cells")
    include_invalid_in_error: bool = False

    # run
    seed: int = Field(0, ge=0)
    output_dir: Path = Path("./output")
    timing_enabled: bool = True
    single_threaded: bool = False

    @field_validator('fusion_mode', 'bgk_backend', mode='before')
    @classmethod
    def lowercase(cls, v):
        return v.lower() if isinstance(v, str) else v

    @model_validator(mode='after')
    def grid_is_even(self):
        try:
            side_cells_for(self.map_size_m, self.cell_size_m)
        except InvalidArgumentError as e:
            raise ValueError(str(e))
        if self.kernel_radius_m < self.cell_size_m:
            raise ValueError('Kernel radius l must be at least one cell')
        if not math.isfinite(self.invalid_sentinel):
            raise ValueError('Sentinel must be finite')
        return self

    @property
    def side_cells(self) -> int:
        return side_cells_for(self.map_size_m, self.cell_size_m)

    @property
    def overhang_threshold(self) -> float:
        """T_o, h_u + 0.5 unless set explicitly."""
        if self.overhang_height_m is not None:
            return self.overhang_height_m
        return self.vehicle_height_m + 0.5

    def kinematic_limits(self) -> KinematicLimits:
        return KinematicLimits(
            similarity_angle_deg=self.similarity_angle_deg,
            concavity_angle_deg=self.concavity_angle_deg,
            lidar_height=self.lidar_height_m,
        )

    def bgk_config(self) -> BgkConfig:
        return BgkConfig(
            kernel_radius=self.kernel_radius_m,
            bilateral_variance=self.bilateral_variance,
            variance_floor=self.variance_floor,
            bilateral_filter=self.bilateral_filter,
            estimated_variance=self.estimated_variance,
            backend=self.bgk_backend,
        )

    def fusion_settings(self) -> FusionSettings:
        return FusionSettings(
            mode=self.fusion_mode,
            height_threshold=self.height_diff_threshold_m,
            overhang_height=self.overhang_threshold,
            variance_threshold=self.variance_threshold,
            min_obs=self.min_observations,
            kf=KfParams(
                a=self.kf_a,
                c=self.kf_c,
                process_noise=self.kf_process_noise,
                measurement_noise=self.kf_measurement_noise,
                distance_scaled=self.kf_distance_scaled_noise,
            ),
        )

    def with_overrides(self, **changes: Any) -> "PipelineConfig":
        """Validated copy with some fields replaced."""
        values: Dict[str, Any] = self.model_dump()
        values.update(changes)
        return PipelineConfig(**values)

    def variant_name(self) -> str:
        """Short label of the ablation switches, e.g. ``ndt+BF+EV@0.2``."""
        parts = [self.fusion_mode]
        if self.bilateral_filter:
            parts.append("BF")
        if self.estimated_variance:
            parts.append("EV")
        return "+".join(parts) + f"@{self.cell_size_m:g}"
