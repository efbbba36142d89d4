"""
Traversability and elevation metrics against a ground-truth map.
"""

import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from ..bgk.inference import TerrainModel
from ..traversability.analysis import CostMap
from .ground_truth import GroundTruthMap
from .schema import EvaluationError, MetricReport, UndefinedMetricError

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("precision", "recall", "f1", "error", "rmse", "coverage")


def _check_geometry(shape_a, shape_b):
    if tuple(shape_a) != tuple(shape_b):
        raise EvaluationError(f"Grid shapes differ: {tuple(shape_a)} vs {tuple(shape_b)}")


def metrics_traversability(est: CostMap, gt: GroundTruthMap) -> Tuple[float, float, float]:
    """
    Precision, recall and F1 of the estimated Traversable cells.

    Raises:
        UndefinedMetricError: If either map has no Traversable cell
    """
    _check_geometry(est.labels.shape, gt.labels.shape)
    estimated = est.traversable
    truth = gt.traversable
    n_e = int(estimated.sum())
    n_g = int(truth.sum())
    if n_e == 0:
        raise UndefinedMetricError("Estimate has no traversable cell; precision undefined")
    if n_g == 0:
        raise UndefinedMetricError("Ground truth has no traversable cell; recall undefined")

    hits = int(np.count_nonzero(estimated & truth))
    precision = hits / n_e
    recall = hits / n_g
    f1 = 0.0 if hits == 0 else 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


def metrics_elevation(est: TerrainModel, gt: GroundTruthMap, include_invalid: bool = False,
                      sentinel: float = -999.0) -> Tuple[float, float]:
    """
    Mean absolute elevation error E and coverage Rc over GT-traversable cells.

    A GT cell is covered when the estimate holds a valid elevation there.
    Uncovered cells lower Rc; they enter E as |sentinel - H^G| only when
    ``include_invalid`` is set. E is NaN when nothing is covered and invalid
    cells are excluded.

    Raises:
        UndefinedMetricError: If the ground truth has no traversable cell
    """
    _check_geometry(est.elevation.shape, gt.labels.shape)
    truth = gt.traversable
    n_g = int(truth.sum())
    if n_g == 0:
        raise UndefinedMetricError("Ground truth has no traversable cell; elevation metrics undefined")

    covered = truth & est.valid & np.isfinite(est.elevation)
    coverage = int(covered.sum()) / n_g
    errors = np.abs(est.elevation[covered] - gt.elevation[covered])

    if include_invalid:
        missed = truth & ~covered
        total = float(errors.sum()) + float(np.abs(sentinel - gt.elevation[missed]).sum())
        return total / n_g, coverage
    if errors.size == 0:
        return math.nan, coverage
    return float(errors.mean()), coverage


def elevation_rmse(est: TerrainModel, gt: GroundTruthMap) -> float:
    """Root mean squared error over covered GT-traversable cells (NaN when none)."""
    _check_geometry(est.elevation.shape, gt.labels.shape)
    covered = gt.traversable & est.valid & np.isfinite(est.elevation)
    if not covered.any():
        return math.nan
    diff = est.elevation[covered] - gt.elevation[covered]
    return float(np.sqrt(np.mean(diff * diff)))


def _finite_or_none(value: float) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


def evaluate_frame(costmap: CostMap, model: TerrainModel, gt: GroundTruthMap,
                   frame_id: Optional[int] = None, variant: Optional[str] = None,
                   include_invalid: bool = False, sentinel: float = -999.0) -> MetricReport:
    """
    All metrics for one frame. Undefined metrics are reported as None with a
    warning instead of raising.
    """
    precision = recall = f1 = None
    try:
        precision, recall, f1 = metrics_traversability(costmap, gt)
    except UndefinedMetricError as e:
        logger.warning(f"Frame {frame_id}: {e}")

    error = coverage = rmse = None
    try:
        error, coverage = metrics_elevation(model, gt, include_invalid, sentinel)
        rmse = elevation_rmse(model, gt)
    except UndefinedMetricError as e:
        logger.warning(f"Frame {frame_id}: {e}")

    return MetricReport(
        frame_id=frame_id,
        variant=variant,
        precision=precision,
        recall=recall,
        f1=f1,
        error=_finite_or_none(error),
        rmse=_finite_or_none(rmse),
        coverage=coverage,
    )


def reports_frame(reports: Iterable[MetricReport]) -> pd.DataFrame:
    """One row per report, metric columns as floats (NaN for undefined)."""
    rows = [r.model_dump(exclude={'timing_ms'}) for r in reports]
    frame = pd.DataFrame(rows, columns=["frame_id", "variant", *METRIC_COLUMNS])
    for column in METRIC_COLUMNS:
        frame[column] = pd.to_numeric(frame[column], errors='coerce').astype(float)
    return frame


def summarize_reports(reports: Iterable[MetricReport]) -> pd.DataFrame:
    """
    Per-variant means of every metric plus the number of frames.

    Reports without a variant are grouped under "default".
    """
    frame = reports_frame(reports)
    if frame.empty:
        return pd.DataFrame(columns=["variant", "frames", *METRIC_COLUMNS])
    frame["variant"] = frame["variant"].fillna("default")
    summary = frame.groupby("variant", sort=False)[list(METRIC_COLUMNS)].mean()
    summary.insert(0, "frames", frame.groupby("variant", sort=False).size())
    return summary.reset_index()
