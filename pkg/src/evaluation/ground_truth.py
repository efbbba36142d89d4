"""
Ground-truth traversability maps from labelled point clouds.

The labelled frames around a centre frame are assembled into its coordinate
frame, projected into the grid and judged per cell from their semantic
labels; region growing from the centre then removes traversable islands and
the elevation of each remaining cell is the mean height of its points.
"""

import logging
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import AbstractSet, Optional, Sequence

import numpy as np
import pandas as pd

from ..geometry.core import GridIndex, MapAnchor, project_points, transform_points
from ..preprocess.rectify import ScanFrame, upright_points
from ..traversability.analysis import grow_regions
from .schema import EvaluationError, HANGING_LABELS, TRAVERSABLE_LABELS

logger = logging.getLogger(__name__)


class GroundTruthLabel(IntEnum):
    EMPTY = 0
    TRAVERSABLE = 1
    NON_TRAVERSABLE = 2


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    """K x 3 points with one semantic label id each."""
    points: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True, eq=False)
class GroundTruthMap:
    """Per-cell ground-truth label and elevation H^G (NaN unless Traversable)."""
    labels: np.ndarray
    elevation: np.ndarray
    anchor: Optional[MapAnchor] = None

    @property
    def side_cells(self) -> int:
        return int(self.labels.shape[0])

    @property
    def traversable(self) -> np.ndarray:
        return self.labels == GroundTruthLabel.TRAVERSABLE


def assemble_map(frames: Sequence[ScanFrame], center_index: int, radius: float) -> LabeledCloud:
    """
    Transform every labelled frame within ``radius`` of the centre frame into
    the centre frame and concatenate.

    Frames without a pose are skipped with a warning.

    Raises:
        EvaluationError: If the centre frame has no pose
    """
    center = frames[center_index]
    if center.frame_pose is None:
        raise EvaluationError(f"Centre frame {center.frame_id} has no pose")

    clouds = []
    labels = []
    for frame in frames:
        if frame.frame_pose is None:
            logger.warning(f"Frame {frame.frame_id} has no pose; skipped while assembling")
            continue
        if np.linalg.norm(frame.frame_pose.translation - center.frame_pose.translation) > radius:
            continue
        clouds.append(transform_points(frame.points, frame.frame_pose, center.frame_pose).reshape(-1, 3))
        if frame.labels is not None:
            labels.append(frame.labels)
        else:
            labels.append(np.zeros(len(frame), dtype=np.int64))

    if not clouds:
        return LabeledCloud(np.zeros((0, 3)), np.zeros(0, dtype=np.int64))
    return LabeledCloud(np.vstack(clouds), np.concatenate(labels).astype(np.int64))


def label_traversability(cloud: LabeledCloud, anchor: MapAnchor,
                         traversable_labels: AbstractSet[int] = TRAVERSABLE_LABELS,
                         overhang_height: float = 2.3,
                         hanging_labels: AbstractSet[int] = HANGING_LABELS) -> GroundTruthMap:
    """
    Judge every cell from the labels of the points projected into it.

    A cell is Traversable when all of its remaining labels are in the
    traversable set. Points of a hanging class (vegetation, trunk) higher
    than T_o above the highest ground point of the cell are left out of the
    judgement; cells without ground points measure from their lowest point.

    Args:
        cloud: Upright points centred on the map's LiDAR
        anchor: Map placement
        traversable_labels: Label ids counted as ground
        overhang_height: T_o
        hanging_labels: Label ids that may overhang

    Returns:
        GroundTruthMap before region growing; elevation is the mean height of
        the remaining points of each Traversable cell
    """
    n = anchor.side_cells
    labels_out = np.full((n, n), GroundTruthLabel.EMPTY, dtype=np.int8)
    elevation = np.full((n, n), np.nan)
    if len(cloud) == 0:
        return GroundTruthMap(labels_out, elevation, anchor)

    rows, cols, inside = project_points(cloud.points, anchor)
    frame = pd.DataFrame({
        'cell': rows[inside] * n + cols[inside],
        'z': cloud.points[inside, 2],
        'label': cloud.labels[inside],
    })
    if frame.empty:
        return GroundTruthMap(labels_out, elevation, anchor)

    trav_ids = sorted(traversable_labels)
    frame['ground'] = frame['label'].isin(trav_ids)
    frame['hanging'] = frame['label'].isin(sorted(hanging_labels))

    grouped = frame.groupby('cell')['z']
    ground_max = frame[frame['ground']].groupby('cell')['z'].max()
    reference = grouped.min()
    reference.loc[ground_max.index] = ground_max
    frame['reference'] = frame['cell'].map(reference)

    excluded = frame['hanging'] & (frame['z'] > frame['reference'] + overhang_height)
    kept = frame[~excluded]
    per_cell = kept.groupby('cell').agg(all_ground=('ground', 'all'), mean_z=('z', 'mean'))

    judged = frame['cell'].unique()
    labels_flat = labels_out.reshape(-1)
    labels_flat[judged] = GroundTruthLabel.NON_TRAVERSABLE
    good = per_cell.index.to_numpy()[per_cell['all_ground'].to_numpy(dtype=bool)]
    labels_flat[good] = GroundTruthLabel.TRAVERSABLE
    elevation_flat = elevation.reshape(-1)
    elevation_flat[good] = per_cell.loc[good, 'mean_z'].to_numpy()
    return GroundTruthMap(labels_flat.reshape(n, n), elevation_flat.reshape(n, n), anchor)


def nearest_traversable(traversable: np.ndarray, center: GridIndex) -> Optional[GridIndex]:
    """Closest Traversable cell by Euclidean distance, ties broken by (row, col)."""
    rows, cols = np.nonzero(traversable)
    if rows.size == 0:
        return None
    d2 = (rows - center.row) ** 2 + (cols - center.col) ** 2
    order = np.lexsort((cols, rows, d2))
    return GridIndex(int(rows[order[0]]), int(cols[order[0]]))


def finalize_gt(gt: GroundTruthMap, center: Optional[GridIndex] = None,
                east_ok: Optional[np.ndarray] = None,
                south_ok: Optional[np.ndarray] = None) -> GroundTruthMap:
    """
    Region-grow from the centre cell; Traversable cells not connected to it
    become NonTraversable and lose their elevation.

    When the centre is not Traversable the nearest Traversable cell seeds the
    growth and a warning is logged. With edge masks (``EdgeMasks`` layout)
    growth crosses passing edges only.
    """
    n = gt.side_cells
    if center is None:
        center = gt.anchor.vehicle_cell if gt.anchor is not None else GridIndex(n // 2 - 1, n // 2)

    traversable = gt.traversable
    seed = center
    if not traversable[center.row, center.col]:
        seed = nearest_traversable(traversable, center)
        if seed is None:
            logger.warning("Ground truth has no traversable cell")
            return gt
        logger.warning(f"Centre cell ({center.row}, {center.col}) not traversable; "
                       f"seeding ground truth from ({seed.row}, {seed.col})")

    reachable = grow_regions(traversable, [seed], east_ok, south_ok)
    labels = gt.labels.copy()
    labels[traversable & ~reachable] = GroundTruthLabel.NON_TRAVERSABLE
    elevation = np.where(labels == GroundTruthLabel.TRAVERSABLE, gt.elevation, np.nan)
    return replace(gt, labels=labels, elevation=elevation)


def ground_truth_for_frame(frames: Sequence[ScanFrame], center_index: int, anchor: MapAnchor,
                           radius: float = 50.0,
                           traversable_labels: AbstractSet[int] = TRAVERSABLE_LABELS,
                           overhang_height: float = 2.3) -> GroundTruthMap:
    """
    Ground truth of one frame from a labelled sequence.

    The assembled cloud is turned upright around the centre LiDAR, judged
    per cell, region-grown from the vehicle cell and lifted to world
    elevations so it lines up with the map.
    """
    center = frames[center_index]
    cloud = assemble_map(frames, center_index, radius)
    upright = upright_points(cloud.points, center.frame_pose) if len(cloud) else cloud.points
    gt = label_traversability(LabeledCloud(upright, cloud.labels), anchor, traversable_labels, overhang_height)
    gt = finalize_gt(gt, anchor.vehicle_cell)
    return replace(gt, elevation=gt.elevation + float(center.frame_pose.translation[2]))
