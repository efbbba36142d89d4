"""
Deterministic synthetic terrain scenes.

A scene's height field is built from its primitives in order: set-type
primitives (plane, step, ramp, box, wall) overwrite height and label where
they apply, so later ones win; hills are added on top and keep the label
underneath.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ..bgk.inference import TerrainModel
from ..geometry.core import MapAnchor, Pose6, cell_center_grids, make_anchor
from ..preprocess.rectify import ScanFrame
from ..traversability.analysis import (
    KinematicLimits, TraversabilityLabel, compute_normals, label_cells,
)
from .ground_truth import GroundTruthLabel, GroundTruthMap, finalize_gt
from .schema import (
    BoxPrimitive, BUILDING, HillPrimitive, PlanePrimitive, RampPrimitive, SIDEWALK,
    SceneSpec, SensorSpec, StepPrimitive, TERRAIN, TRAVERSABLE_LABELS, TrajectorySpec,
    WallPrimitive,
)

logger = logging.getLogger(__name__)


def _along(x: np.ndarray, y: np.ndarray, heading_deg: float) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinates along and across a heading."""
    a = math.radians(heading_deg)
    ca, sa = math.cos(a), math.sin(a)
    return x * ca + y * sa, -x * sa + y * ca


class TerrainFunction:
    """Analytic height field h(x, y) and semantic label field of a scene."""

    def __init__(self, spec: SceneSpec):
        self.spec = spec

    def _evaluate(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        h = np.zeros(x.shape)
        labels = np.full(x.shape, self.spec.default_label, dtype=np.int64)
        bumps = np.zeros(x.shape)

        for prim in self.spec.primitives:
            if isinstance(prim, HillPrimitive):
                r2 = (x - prim.center_x) ** 2 + (y - prim.center_y) ** 2
                bumps += prim.amplitude * np.exp(-r2 / (2.0 * prim.sigma ** 2))
                continue
            if isinstance(prim, PlanePrimitive):
                mask = np.ones(x.shape, dtype=bool)
                value = prim.height + prim.slope_x * x + prim.slope_y * y
            elif isinstance(prim, StepPrimitive):
                s, _ = _along(x, y, prim.heading_deg)
                mask = s >= prim.offset
                value = np.full(x.shape, prim.height)
            elif isinstance(prim, RampPrimitive):
                s, _ = _along(x, y, prim.heading_deg)
                mask = s >= prim.start
                frac = np.clip((s - prim.start) / (prim.end - prim.start), 0.0, 1.0)
                value = prim.start_height + frac * (prim.end_height - prim.start_height)
            elif isinstance(prim, BoxPrimitive):
                mask = (x >= prim.x_min) & (x < prim.x_max) & (y >= prim.y_min) & (y < prim.y_max)
                value = np.full(x.shape, prim.height)
            elif isinstance(prim, WallPrimitive):
                s, t = _along(x, y, prim.heading_deg)
                mask = ((s >= prim.offset) & (s < prim.offset + prim.thickness)
                        & (t >= prim.extent_min) & (t <= prim.extent_max))
                value = np.full(x.shape, prim.height)
            else:
                raise TypeError(f"Unsupported primitive {type(prim).__name__}")
            h = np.where(mask, value, h)
            labels = np.where(mask, prim.label, labels)

        return h + bumps, labels

    def __call__(self, x, y) -> np.ndarray:
        return self._evaluate(x, y)[0]

    def labels(self, x, y) -> np.ndarray:
        return self._evaluate(x, y)[1]

    def height_bound(self) -> float:
        """Upper bound of h over the plane (tilted planes excluded)."""
        top = 0.0
        hills = 0.0
        for prim in self.spec.primitives:
            if isinstance(prim, HillPrimitive):
                hills += max(prim.amplitude, 0.0)
            elif isinstance(prim, PlanePrimitive):
                if prim.slope_x or prim.slope_y:
                    return math.inf
                top = max(top, prim.height)
            elif isinstance(prim, RampPrimitive):
                top = max(top, prim.start_height, prim.end_height)
            else:
                top = max(top, prim.height)
        return top + hills


def trajectory_poses(spec: SceneSpec, terrain: Optional[TerrainFunction] = None) -> List[Pose6]:
    """Sensor poses of the scene's trajectory, mounted above the terrain."""
    terrain = terrain or TerrainFunction(spec)
    traj = spec.trajectory
    poses = []
    for i, wp in enumerate(traj.waypoints):
        z = float(terrain(wp.x, wp.y)) + traj.lidar_height
        poses.append(Pose6.from_euler(
            [wp.roll_deg, wp.pitch_deg, wp.yaw_deg], [wp.x, wp.y, z], timestamp=i * traj.frame_period,
        ))
    return poses


def ground_truth_at(terrain: TerrainFunction, anchor: MapAnchor,
                    limits: Optional[KinematicLimits] = None,
                    traversable_labels=TRAVERSABLE_LABELS) -> GroundTruthMap:
    """
    Ground truth sampled at cell centres of a map placement.

    A cell is Traversable when its semantic label is a ground label and at
    least one edge to a neighbour passes the convexity test on the exact
    heights. Region growing from the vehicle cell crosses passing edges only.
    Heights are sampled one cell beyond the map so border cells get normals.
    """
    limits = limits or KinematicLimits()
    xs, ys = cell_center_grids(anchor)
    wx = np.pad(xs, 1, mode="reflect", reflect_type="odd") + anchor.lidar_world_xy[0]
    wy = np.pad(ys, 1, mode="reflect", reflect_type="odd") + anchor.lidar_world_xy[1]
    padded_heights, padded_labels = terrain._evaluate(wx, wy)

    exact = TerrainModel.from_elevation(padded_heights, anchor.cell_size)
    exact_map = label_cells(exact, compute_normals(exact), limits)
    inner = (slice(1, -1), slice(1, -1))
    heights = padded_heights[inner]
    semantic = np.isin(padded_labels[inner], sorted(traversable_labels))
    ok = semantic & (exact_map.labels[inner] == TraversabilityLabel.TRAVERSABLE)

    gt_labels = np.where(ok, GroundTruthLabel.TRAVERSABLE, GroundTruthLabel.NON_TRAVERSABLE).astype(np.int8)
    gt = GroundTruthMap(labels=gt_labels, elevation=np.where(ok, heights, np.nan), anchor=anchor)
    return finalize_gt(gt, anchor.vehicle_cell,
                       east_ok=exact_map.east_ok[1:-1, 1:-1], south_ok=exact_map.south_ok[1:-1, 1:-1])


def synth_scene(spec: SceneSpec, map_size_m: float = 80.0, cell_size_m: float = 0.2,
                limits: Optional[KinematicLimits] = None) -> Tuple[TerrainFunction, GroundTruthMap]:
    """
    Height function of a scene and its ground truth around the first pose.
    """
    terrain = TerrainFunction(spec)
    first = spec.trajectory.waypoints[0]
    anchor = make_anchor((first.x, first.y), cell_size_m, map_size_m)
    return terrain, ground_truth_at(terrain, anchor, limits)


def synth_sequence(spec: SceneSpec) -> Tuple[TerrainFunction, List[ScanFrame]]:
    """
    Simulated labelled scans along the scene trajectory.

    One generator seeded with ``spec.seed`` drives the noise of every frame,
    so identical specs give identical sequences.
    """
    from .lidar import simulate_lidar

    terrain = TerrainFunction(spec)
    rng = np.random.default_rng(spec.seed)
    poses = trajectory_poses(spec, terrain)
    frames = []
    for i, pose in enumerate(poses):
        end_pose = poses[i + 1] if i + 1 < len(poses) else pose
        scan = simulate_lidar(terrain, pose, spec.sensor, rng=rng, frame_id=i)
        frames.append(ScanFrame(points=scan.points, frame_pose=pose, frame_id=i,
                                labels=scan.labels, end_pose=end_pose))
    logger.info(f"Synthesised {len(frames)} frames for scene '{spec.name}'")
    return terrain, frames


def _line(frames: int, length: float) -> TrajectorySpec:
    return TrajectorySpec.straight((0.0, 0.0), (length, 0.0), frames)


def preset_scene(name: str, frames: int = 5, seed: int = 0,
                 sensor: Optional[SensorSpec] = None) -> SceneSpec:
    """
    Built-in scenes.

    flat: level road.
    curb: road with a 0.15 m sidewalk curb 3 m ahead.
    two_region: two level areas joined only by a 0.3 m step.
    corridor: level road band between bumpy terrain.
    hills: rolling Gaussian hills.
    walled_plateau: level ground with a walled-in square ahead.
    """
    sensor = sensor or SensorSpec()
    trajectory = _line(frames, 0.2 * (frames - 1))
    if name == "flat":
        primitives = [PlanePrimitive()]
    elif name == "curb":
        primitives = [PlanePrimitive(), StepPrimitive(offset=3.0, height=0.15, label=SIDEWALK)]
    elif name == "two_region":
        primitives = [PlanePrimitive(), StepPrimitive(offset=3.0, height=0.3, label=SIDEWALK)]
    elif name == "corridor":
        primitives = [
            PlanePrimitive(label=TERRAIN),
            HillPrimitive(center_x=4.0, center_y=4.0, amplitude=0.4, sigma=1.0),
            HillPrimitive(center_x=8.0, center_y=-4.5, amplitude=0.4, sigma=1.0),
            HillPrimitive(center_x=-4.0, center_y=-4.0, amplitude=0.3, sigma=1.2),
            BoxPrimitive(x_min=-40.0, x_max=40.0, y_min=-2.0, y_max=2.0, height=0.0, label=40),
        ]
    elif name == "hills":
        primitives = [
            PlanePrimitive(label=TERRAIN),
            HillPrimitive(center_x=6.0, center_y=3.0, amplitude=0.6, sigma=3.0),
            HillPrimitive(center_x=-5.0, center_y=-6.0, amplitude=0.8, sigma=4.0),
            HillPrimitive(center_x=12.0, center_y=-8.0, amplitude=-0.5, sigma=3.5),
        ]
    elif name == "walled_plateau":
        primitives = [
            PlanePrimitive(),
            BoxPrimitive(x_min=4.0, x_max=10.0, y_min=-3.0, y_max=3.0, height=1.5, label=BUILDING),
            BoxPrimitive(x_min=4.4, x_max=9.6, y_min=-2.6, y_max=2.6, height=0.0, label=TERRAIN),
        ]
    else:
        raise ValueError(f"Unknown scene preset '{name}'; choose from {sorted(PRESETS)}")
    return SceneSpec(name=name, primitives=primitives, seed=seed, sensor=sensor, trajectory=trajectory)


PRESETS = ("flat", "curb", "two_region", "corridor", "hills", "walled_plateau")
