"""
Frame-by-frame terrain mapping pipeline.

rectify -> integrate -> BGK inference -> traversability, with per-stage
timing. Frames are processed strictly in order because the map is stateful.
"""

import logging
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Optional, Union

import scipy.fft

from ..bgk.inference import TerrainModel, infer_dense_terrain
from ..dataio.readers import DataFormatError, FrameRecord
from ..fusion.filters import FusionError
from ..fusion.grid_map import MapSnapshot, RollingGridMap
from ..geometry.core import GeometryError
from ..preprocess.rectify import ScanFrame, rectify_scan
from ..preprocess.segmentation import PreprocessError
from ..traversability.analysis import CostMap, analyze_terrain
from ..utils.logging import PerformanceMonitor, ProductionLogger, make_stage_timer
from .schema import PipelineConfig

STAGES = ("rectify", "integrate", "bgk", "traversability")


class PipelineError(Exception):
    """Base exception for pipeline runs."""
    pass


class MissingPoseError(PipelineError):
    """Raised when a frame without a pose reaches the pipeline."""
    pass


@dataclass(frozen=True, eq=False)
class FrameResult:
    """
    Output of one processed frame.

    Attributes:
        frame_id: Sequence index of the frame
        terrain: Dense terrain model after inference
        costmap: Traversability labels and costs after region growing
        timing: Stage durations in ms plus ``total`` (their sum)
        points: Number of points in the frame
        snapshot: Fused map state the terrain was inferred from
    """
    frame_id: int
    terrain: TerrainModel
    costmap: CostMap
    timing: Dict[str, float] = field(default_factory=dict)
    points: int = 0
    snapshot: Optional[MapSnapshot] = None


class TerrainPipeline:
    """Stateful pipeline owning one rolling grid map."""

    def __init__(self, config: Optional[PipelineConfig] = None,
                 logger: Optional[ProductionLogger] = None,
                 monitor: Optional[PerformanceMonitor] = None):
        self.config = config or PipelineConfig()
        self.logger = logger
        self.monitor = monitor
        self._log = logging.getLogger(__name__)
        self.limits = self.config.kinematic_limits()
        self.bgk = self.config.bgk_config()
        self.grid = RollingGridMap(
            map_size_m=self.config.map_size_m,
            cell_size_m=self.config.cell_size_m,
            settings=self.config.fusion_settings(),
        )
        self.frames_processed = 0

    def _workers(self):
        if self.config.single_threaded:
            return scipy.fft.set_workers(1)
        return nullcontext()

    def process_frame(self, scan: ScanFrame) -> FrameResult:
        """
        Run every stage on one frame.

        Raises:
            MissingPoseError: If the frame has no pose
            PreprocessError, GeometryError: If the frame cannot be rectified
            FusionError: If the rectified frame cannot be fused
        """
        if scan.frame_pose is None:
            raise MissingPoseError(f"Frame {scan.frame_id} has no pose")

        timer = make_stage_timer(self.config.timing_enabled)
        with self._workers():
            with timer.stage("rectify"):
                upright = rectify_scan(scan, scan.frame_pose, scan.end_pose or scan.frame_pose)
            with timer.stage("integrate"):
                self.grid.integrate_frame(upright)
                snapshot = self.grid.snapshot()
            with timer.stage("bgk"):
                terrain = infer_dense_terrain(snapshot, self.bgk)
            with timer.stage("traversability"):
                costmap = analyze_terrain(terrain, self.limits, snapshot.anchor.vehicle_cell,
                                          self.config.height_diff_threshold_m)

        self.frames_processed += 1
        timing = timer.breakdown()
        if self.monitor is not None:
            self.monitor.log_frame(scan.frame_id, timing, len(scan))
        self._log.debug(
            f"Frame {scan.frame_id}: valid={int(terrain.valid.sum())} "
            f"traversable={int(costmap.traversable.sum())}"
        )
        return FrameResult(frame_id=scan.frame_id, terrain=terrain, costmap=costmap,
                           timing=timing, points=len(scan), snapshot=snapshot)


def _load(item: Union[ScanFrame, FrameRecord]) -> ScanFrame:
    if isinstance(item, ScanFrame):
        return item
    return item.load()


def run_pipeline(config: PipelineConfig, sequence: Iterable[Union[ScanFrame, FrameRecord]],
                 logger: Optional[ProductionLogger] = None,
                 monitor: Optional[PerformanceMonitor] = None,
                 pipeline: Optional[TerrainPipeline] = None) -> Iterator[FrameResult]:
    """
    Stream of results for a sequence of frames.

    Malformed frames and frames without a pose are skipped with a warning;
    the stream continues with the next frame.

    Args:
        config: Pipeline configuration
        sequence: ScanFrames, or FrameRecords loaded lazily
        logger: Optional production logger
        monitor: Optional performance monitor receiving per-frame timing
        pipeline: Existing pipeline to continue; a fresh one otherwise

    Yields:
        FrameResult per successfully processed frame
    """
    log = logging.getLogger(__name__)
    pipeline = pipeline or TerrainPipeline(config, logger, monitor)
    skipped = 0
    for item in sequence:
        try:
            scan = _load(item)
        except DataFormatError as e:
            skipped += 1
            log.warning(f"Skipping malformed frame: {e}")
            continue
        if scan.frame_pose is None:
            skipped += 1
            log.warning(f"Skipping frame {scan.frame_id}: no pose")
            continue
        try:
            result = pipeline.process_frame(scan)
        except (PreprocessError, GeometryError, FusionError) as e:
            skipped += 1
            log.warning(f"Skipping frame {scan.frame_id}: {e}")
            continue
        yield result

    if skipped:
        log.warning(f"{skipped} frame(s) skipped")
    log.info(f"Processed {pipeline.frames_processed} frame(s)")
