"""
Readers for point clouds, labels, poses, sequence manifests and grid files.

Formats:
    velodyne .bin   little-endian float32 quadruples x, y, z, intensity
    points .csv     header x,y,z[,t]; t is the time fraction of the sweep
    .label          little-endian uint32 per point, semantic id in the low 16 bits
    poses.txt       12 floats per line, row-major 3 x 4 [R|t]
    manifest        key-value file with frames=<glob>, poses=<file>, labels=<dir>
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from ..geometry.core import InvalidArgumentError, Pose6, pose_from_matrix
from ..preprocess.rectify import ScanFormatError, ScanFrame

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
POINT_SUFFIXES = (".bin", ".csv")


class DataIOError(Exception):
    """Base exception for file input and output."""
    pass


class DataFormatError(DataIOError):
    """Raised when a file is missing or does not match its format."""
    pass


def read_velodyne_bin(path: PathLike) -> np.ndarray:
    """
    K x 3 points from a KITTI velodyne file (intensity dropped).

    Raises:
        DataFormatError: Missing file or size not a multiple of 16 bytes
    """
    path = Path(path)
    try:
        raw = np.fromfile(path, dtype='<f4')
    except OSError as e:
        raise DataFormatError(f"Cannot read point file {path}: {e}")
    if raw.size % 4 != 0:
        raise DataFormatError(f"{path}: {raw.size} floats is not a whole number of x,y,z,i records")
    points = raw.reshape(-1, 4)[:, :3].astype(np.float64)
    if not np.all(np.isfinite(points)):
        raise DataFormatError(f"{path}: non-finite coordinates")
    return points


def read_csv_points(path: PathLike) -> tuple:
    """
    Points and optional time fractions from a CSV with header x,y,z[,t].

    Returns:
        (K x 3 points, fractions or None)

    Raises:
        DataFormatError: Missing columns or non-numeric values
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFormatError(f"Cannot read point file {path}: {e}")
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in ("x", "y", "z") if c not in frame.columns]
    if missing:
        raise DataFormatError(f"{path}: missing columns {missing}")
    try:
        points = frame[["x", "y", "z"]].to_numpy(dtype=np.float64)
        fractions = frame["t"].to_numpy(dtype=np.float64) if "t" in frame.columns else None
    except (TypeError, ValueError) as e:
        raise DataFormatError(f"{path}: non-numeric values ({e})")
    if not np.all(np.isfinite(points)):
        raise DataFormatError(f"{path}: non-finite coordinates")
    return points, fractions


def read_labels(path: PathLike) -> np.ndarray:
    """Semantic ids (low 16 bits) of a SemanticKITTI .label file."""
    path = Path(path)
    try:
        raw = np.fromfile(path, dtype='<u4')
    except OSError as e:
        raise DataFormatError(f"Cannot read label file {path}: {e}")
    return (raw & 0xFFFF).astype(np.int64)


def read_poses(path: PathLike, frame_period: float = 0.1) -> List[Pose6]:
    """
    One pose per non-empty line; the timestamp of line i is i·frame_period.

    Raises:
        DataFormatError: A line without exactly 12 numbers or with an improper rotation
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise DataFormatError(f"Cannot read pose file {path}: {e}")

    poses = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            values = np.array([float(v) for v in line.split()], dtype=float)
        except ValueError:
            raise DataFormatError(f"{path}:{number}: non-numeric pose entry")
        if values.size != 12:
            raise DataFormatError(f"{path}:{number}: expected 12 values, got {values.size}")
        try:
            poses.append(pose_from_matrix(values, timestamp=len(poses) * frame_period))
        except InvalidArgumentError as e:
            raise DataFormatError(f"{path}:{number}: {e}")
    return poses


def read_grid_csv(path: PathLike, sentinel: float = -999.0) -> np.ndarray:
    """N x N grid from CSV; sentinel entries become NaN."""
    path = Path(path)
    try:
        grid = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise DataFormatError(f"Cannot read grid file {path}: {e}")
    return np.where(grid == sentinel, np.nan, grid)


@dataclass(frozen=True)
class Manifest:
    """Resolved locations of a sequence."""
    frames: List[Path]
    poses: Optional[Path] = None
    labels: Optional[Path] = None


def read_manifest(path: PathLike) -> Manifest:
    """
    Parse a sequence manifest. Relative locations resolve against the
    manifest's directory; ``frames`` may be a glob or a directory.

    Raises:
        DataFormatError: Missing file, missing ``frames`` key or no frame files
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"Manifest {path} not found")
    values = {k.lower(): v for k, v in dotenv_values(path).items() if v}
    if "frames" not in values:
        raise DataFormatError(f"{path}: 'frames' entry is required")

    base = path.parent
    pattern = values["frames"]
    target = base / pattern
    if target.is_dir():
        frames = sorted(p for p in target.iterdir() if p.suffix.lower() in POINT_SUFFIXES)
    else:
        frames = sorted(p for p in base.glob(pattern) if p.suffix.lower() in POINT_SUFFIXES)
    if not frames:
        raise DataFormatError(f"{path}: no frame files match '{pattern}'")

    poses = base / values["poses"] if "poses" in values else None
    labels = base / values["labels"] if "labels" in values else None
    return Manifest(frames=frames, poses=poses, labels=labels)


@dataclass(frozen=True)
class FrameRecord:
    """A frame on disk; ``load`` reads it and raises DataFormatError when malformed."""
    frame_id: int
    path: Path
    pose: Optional[Pose6] = None
    end_pose: Optional[Pose6] = None
    label_path: Optional[Path] = None

    def load(self) -> ScanFrame:
        fractions = None
        if self.path.suffix.lower() == ".csv":
            points, fractions = read_csv_points(self.path)
        else:
            points = read_velodyne_bin(self.path)

        labels = None
        if self.label_path is not None and self.label_path.is_file():
            labels = read_labels(self.label_path)
            if labels.size != points.shape[0]:
                raise DataFormatError(
                    f"{self.label_path}: {labels.size} labels for {points.shape[0]} points"
                )
        try:
            return ScanFrame(points=points, frame_pose=self.pose, frame_id=self.frame_id,
                             fractions=fractions, labels=labels, end_pose=self.end_pose)
        except ScanFormatError as e:
            raise DataFormatError(f"{self.path}: {e}")


class SequenceReader:
    """
    Frames of a sequence in manifest order, paired with their poses and labels.

    Frames beyond the end of the pose file get no pose.
    """

    def __init__(self, manifest: Union[Manifest, PathLike], frame_period: float = 0.1):
        self.manifest = manifest if isinstance(manifest, Manifest) else read_manifest(manifest)
        self.poses: List[Pose6] = []
        if self.manifest.poses is not None:
            self.poses = read_poses(self.manifest.poses, frame_period)
        if self.poses and len(self.poses) != len(self.manifest.frames):
            logger.warning(f"{len(self.manifest.frames)} frames but {len(self.poses)} poses")

    def __len__(self) -> int:
        return len(self.manifest.frames)

    def _pose(self, index: int) -> Optional[Pose6]:
        return self.poses[index] if index < len(self.poses) else None

    def __iter__(self) -> Iterator[FrameRecord]:
        for i, path in enumerate(self.manifest.frames):
            label_path = None
            if self.manifest.labels is not None:
                label_path = self.manifest.labels / f"{path.stem}.label"
            yield FrameRecord(
                frame_id=i,
                path=path,
                pose=self._pose(i),
                end_pose=self._pose(i + 1) or self._pose(i),
                label_path=label_path,
            )

    def load_all(self) -> List[ScanFrame]:
        """Every frame loaded; malformed ones raise."""
        return [record.load() for record in self]
