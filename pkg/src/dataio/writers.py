"""
Writers for map grids, previews, metrics, paths and synthetic sequences.

Every writer produces identical bytes for identical inputs.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..geometry.core import GridIndex, Pose6, pose_to_matrix
from ..preprocess.rectify import ScanFrame
from .readers import DataIOError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
GRID_FORMAT = "%.6f"


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_grid_csv(path: PathLike, grid: np.ndarray, valid: Optional[np.ndarray] = None,
                   sentinel: float = -999.0) -> Path:
    """N rows of N comma-separated values; invalid or non-finite cells hold the sentinel."""
    path = _prepare(path)
    grid = np.asarray(grid, dtype=float)
    ok = np.isfinite(grid) if valid is None else (np.asarray(valid, dtype=bool) & np.isfinite(grid))
    np.savetxt(path, np.where(ok, grid, sentinel), fmt=GRID_FORMAT, delimiter=",")
    return path


def write_pgm(path: PathLike, grid: np.ndarray, valid: Optional[np.ndarray] = None) -> Path:
    """
    8-bit binary PGM preview. Valid cells are scaled linearly from their
    min (1) to max (255); invalid cells are 0. The scaling is recorded in
    the comment line.
    """
    path = _prepare(path)
    grid = np.asarray(grid, dtype=float)
    ok = np.isfinite(grid) if valid is None else (np.asarray(valid, dtype=bool) & np.isfinite(grid))
    pixels = np.zeros(grid.shape, dtype=np.uint8)
    if ok.any():
        lo = float(grid[ok].min())
        hi = float(grid[ok].max())
        span = hi - lo
        scaled = np.full(grid.shape, 128.0) if span == 0 else 1.0 + 254.0 * (grid - lo) / span
        pixels[ok] = np.clip(np.rint(scaled[ok]), 1, 255).astype(np.uint8)
    else:
        lo = hi = 0.0
    rows, cols = grid.shape
    header = f"P5\n# min={lo:.6f} max={hi:.6f}\n{cols} {rows}\n255\n".encode("ascii")
    path.write_bytes(header + pixels.tobytes())
    return path


def write_metrics_jsonl(path: PathLike, reports: Iterable, append: bool = False) -> Path:
    """One JSON object per report per line; timing is left out so reruns match."""
    path = _prepare(path)
    with open(path, "a" if append else "w", encoding="utf-8") as f:
        for report in reports:
            f.write(report.model_dump_json(exclude={"timing_ms"}) + "\n")
    return path


def write_path_csv(path: PathLike, cells: Sequence[GridIndex]) -> Path:
    path = _prepare(path)
    frame = pd.DataFrame([c.as_tuple() for c in cells], columns=["row", "col"])
    frame.to_csv(path, index=False)
    return path


def write_poses(path: PathLike, poses: Sequence[Pose6]) -> Path:
    """KITTI pose rows (12 values each)."""
    path = _prepare(path)
    rows = np.array([pose_to_matrix(p)[:3, :].reshape(-1) for p in poses]).reshape(-1, 12)
    np.savetxt(path, rows, fmt="%.9e", delimiter=" ")
    return path


def write_velodyne_bin(path: PathLike, points: np.ndarray, intensity: Optional[np.ndarray] = None) -> Path:
    path = _prepare(path)
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if intensity is None:
        intensity = np.zeros(points.shape[0])
    records = np.column_stack([points, np.asarray(intensity, dtype=float).reshape(-1)]).astype('<f4')
    records.tofile(path)
    return path


def write_labels(path: PathLike, labels: np.ndarray) -> Path:
    path = _prepare(path)
    np.asarray(labels).astype('<u4').tofile(path)
    return path


def write_sequence(out_dir: PathLike, frames: Sequence[ScanFrame]) -> Path:
    """
    Write a sequence as velodyne/*.bin, labels/*.label, poses.txt and a
    manifest.env that points at them.

    Raises:
        DataIOError: If a frame has no pose
    """
    out_dir = Path(out_dir)
    poses: List[Pose6] = []
    has_labels = any(f.labels is not None for f in frames)
    for frame in frames:
        if frame.frame_pose is None:
            raise DataIOError(f"Frame {frame.frame_id} has no pose")
        stem = f"{frame.frame_id:06d}"
        write_velodyne_bin(out_dir / "velodyne" / f"{stem}.bin", frame.points)
        if frame.labels is not None:
            write_labels(out_dir / "labels" / f"{stem}.label", frame.labels)
        poses.append(frame.frame_pose)
    write_poses(out_dir / "poses.txt", poses)

    lines = ["frames=velodyne/*.bin", "poses=poses.txt"]
    if has_labels:
        lines.append("labels=labels")
    manifest = out_dir / "manifest.env"
    manifest.write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote {len(frames)} frames to {out_dir}")
    return manifest


def write_frame_outputs(out_dir: PathLike, result, sentinel: float = -999.0) -> List[Path]:
    """Elevation, variance and cost grids plus an elevation preview for one FrameResult."""
    out_dir = Path(out_dir)
    stem = f"{result.frame_id:06d}"
    terrain = result.terrain
    costmap = result.costmap
    return [
        write_grid_csv(out_dir / "elevation" / f"{stem}.csv", terrain.elevation, terrain.valid, sentinel),
        write_grid_csv(out_dir / "variance" / f"{stem}.csv", terrain.variance, terrain.valid, sentinel),
        write_grid_csv(out_dir / "cost" / f"{stem}.csv", costmap.cost, costmap.traversable, sentinel),
        write_pgm(out_dir / "preview" / f"{stem}.pgm", terrain.elevation, terrain.valid),
    ]
