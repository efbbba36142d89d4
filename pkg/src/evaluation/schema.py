"""
Pydantic schemas for synthetic scenes and evaluation reports.
"""

import math
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class EvaluationError(Exception):
    """Base exception for evaluation."""
    pass


class UndefinedMetricError(EvaluationError):
    """Raised when a metric's denominator is empty."""
    pass


# SemanticKITTI label ids
CAR = 10
ROAD = 40
PARKING = 44
SIDEWALK = 48
OTHER_GROUND = 49
BUILDING = 50
VEGETATION = 70
TRUNK = 71
TERRAIN = 72

TRAVERSABLE_LABELS = frozenset({ROAD, PARKING, SIDEWALK, OTHER_GROUND, TERRAIN})
HANGING_LABELS = frozenset({VEGETATION, TRUNK})


class PlanePrimitive(BaseModel):
    """Tilted plane h = height + slope_x·x + slope_y·y over the whole scene."""
    kind: Literal["plane"] = "plane"
    height: float = Field(0.0, description="Height at the origin (m)")
    slope_x: float = Field(0.0, description="dh/dx")
    slope_y: float = Field(0.0, description="dh/dy")
    label: int = Field(ROAD, ge=0, description="Semantic label id")


class StepPrimitive(BaseModel):
    """Half-plane beyond a line set to a constant height (curbs, ledges)."""
    kind: Literal["step"] = "step"
    heading_deg: float = Field(0.0, description="Direction the step faces away from")
    offset: float = Field(..., description="Distance of the step line from the origin along the heading (m)")
    height: float = Field(..., description="Height of the raised side (m)")
    label: int = Field(SIDEWALK, ge=0)


class RampPrimitive(BaseModel):
    """Linear ramp between two lines; constant beyond the far line."""
    kind: Literal["ramp"] = "ramp"
    heading_deg: float = 0.0
    start: float = Field(..., description="Ramp foot along the heading (m)")
    end: float = Field(..., description="Ramp top along the heading (m)")
    start_height: float = 0.0
    end_height: float = Field(..., description="Height at and beyond the top (m)")
    label: int = Field(ROAD, ge=0)

    @model_validator(mode='after')
    def end_after_start(self):
        if self.end <= self.start:
            raise ValueError('Ramp end must lie beyond its start')
        return self


class BoxPrimitive(BaseModel):
    """Axis-aligned rectangle set to a constant height."""
    kind: Literal["box"] = "box"
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    height: float
    label: int = Field(BUILDING, ge=0)

    @model_validator(mode='after')
    def ordered_bounds(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError('Box bounds must satisfy min < max')
        return self


class WallPrimitive(BaseModel):
    """Band of constant height along a line, optionally limited in extent."""
    kind: Literal["wall"] = "wall"
    heading_deg: float = 0.0
    offset: float = Field(..., description="Distance of the wall's near face along the heading (m)")
    thickness: float = Field(0.3, gt=0)
    height: float = Field(2.0)
    extent_min: float = Field(-math.inf, description="Lower bound along the wall (m)")
    extent_max: float = Field(math.inf, description="Upper bound along the wall (m)")
    label: int = Field(BUILDING, ge=0)


class HillPrimitive(BaseModel):
    """Gaussian bump added on top of everything else; keeps the label underneath."""
    kind: Literal["hill"] = "hill"
    center_x: float = 0.0
    center_y: float = 0.0
    amplitude: float = 0.5
    sigma: float = Field(2.0, gt=0)


Primitive = Annotated[
    Union[PlanePrimitive, StepPrimitive, RampPrimitive, BoxPrimitive, WallPrimitive, HillPrimitive],
    Field(discriminator="kind"),
]


class SensorSpec(BaseModel):
    """Virtual spinning LiDAR."""
    beams: int = Field(64, ge=1, le=512, description="Number of elevation rings")
    elevation_min_deg: float = Field(-88.0, ge=-90.0, le=90.0)
    elevation_max_deg: float = Field(2.0, ge=-90.0, le=90.0)
    elevations_deg: Optional[List[float]] = Field(None, description="Explicit ring angles, overrides the linspace")
    azimuth_step_deg: float = Field(0.2, gt=0, le=180.0)
    range_noise: float = Field(0.01, ge=0, description="Gaussian range noise σ (m)")
    max_range: float = Field(80.0, gt=0)
    min_range: float = Field(0.3, ge=0)
    bisection_tolerance: float = Field(1e-3, gt=0)
    march_step: float = Field(0.05, gt=0, description="Smallest ray-march step (m)")
    march_growth: float = Field(0.01, ge=0, description="Step growth relative to range")

    @model_validator(mode='after')
    def elevation_order(self):
        if self.elevations_deg is None and self.elevation_max_deg < self.elevation_min_deg:
            raise ValueError('elevation_max_deg must not be below elevation_min_deg')
        return self

    def elevation_angles(self) -> np.ndarray:
        if self.elevations_deg is not None:
            return np.radians(np.asarray(self.elevations_deg, dtype=float))
        return np.radians(np.linspace(self.elevation_min_deg, self.elevation_max_deg, self.beams))

    def azimuth_angles(self) -> np.ndarray:
        count = max(1, int(round(360.0 / self.azimuth_step_deg)))
        return np.radians(np.arange(count) * (360.0 / count))


class Waypoint(BaseModel):
    x: float
    y: float
    yaw_deg: float = 0.0
    roll_deg: float = 0.0
    pitch_deg: float = 0.0


class TrajectorySpec(BaseModel):
    """Sensor poses; z is terrain height under the waypoint plus the mounting height."""
    waypoints: List[Waypoint] = Field(default_factory=lambda: [Waypoint(x=0.0, y=0.0)])
    lidar_height: float = Field(1.73, gt=0)
    frame_period: float = Field(0.1, gt=0)

    @classmethod
    def straight(cls, start: Tuple[float, float], end: Tuple[float, float], frames: int,
                 lidar_height: float = 1.73) -> "TrajectorySpec":
        xs = np.linspace(start[0], end[0], frames)
        ys = np.linspace(start[1], end[1], frames)
        yaw = math.degrees(math.atan2(end[1] - start[1], end[0] - start[0])) if frames > 1 else 0.0
        return cls(waypoints=[Waypoint(x=float(x), y=float(y), yaw_deg=yaw) for x, y in zip(xs, ys)],
                   lidar_height=lidar_height)


class SceneSpec(BaseModel):
    """Deterministic synthetic scene: terrain primitives, sensor and trajectory."""
    name: str = Field("scene", min_length=1)
    primitives: List[Primitive] = Field(default_factory=lambda: [PlanePrimitive()])
    default_label: int = Field(TERRAIN, ge=0, description="Label where no primitive applies")
    seed: int = Field(0, ge=0)
    sensor: SensorSpec = Field(default_factory=SensorSpec)
    trajectory: TrajectorySpec = Field(default_factory=TrajectorySpec)

    @field_validator('name')
    @classmethod
    def name_must_not_be_blank(cls, v):
        if not v.strip():
            raise ValueError('Scene name cannot be blank')
        return v.strip()


class MetricReport(BaseModel):
    """Per-frame evaluation metrics; None marks an undefined metric."""
    frame_id: Optional[int] = None
    variant: Optional[str] = None
    precision: Optional[float] = Field(None, ge=0, le=1)
    recall: Optional[float] = Field(None, ge=0, le=1)
    f1: Optional[float] = Field(None, ge=0, le=1)
    error: Optional[float] = Field(None, ge=0, description="Mean absolute elevation error (m)")
    rmse: Optional[float] = Field(None, ge=0, description="Root mean squared elevation error (m)")
    coverage: Optional[float] = Field(None, ge=0, le=1)
    timing_ms: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode='after')
    def f1_consistent(self):
        p, r, f = self.precision, self.recall, self.f1
        if p is not None and r is not None and f is not None and p + r > 0:
            expected = 2 * p * r / (p + r)
            if abs(expected - f) > 1e-9:
                raise ValueError(f'F1 {f} inconsistent with P={p}, R={r}')
        return self
