"""
File formats: KITTI-style point clouds, labels and poses in; grids, previews,
metrics and paths out.
"""

from .readers import (
    DataIOError,
    DataFormatError,
    Manifest,
    FrameRecord,
    SequenceReader,
    read_velodyne_bin,
    read_csv_points,
    read_labels,
    read_poses,
    read_grid_csv,
    read_manifest,
)
from .writers import (
    write_grid_csv,
    write_pgm,
    write_metrics_jsonl,
    write_path_csv,
    write_poses,
    write_velodyne_bin,
    write_labels,
    write_sequence,
    write_frame_outputs,
)

__all__ = [
    "DataIOError",
    "DataFormatError",
    "Manifest",
    "FrameRecord",
    "SequenceReader",
    "read_velodyne_bin",
    "read_csv_points",
    "read_labels",
    "read_poses",
    "read_grid_csv",
    "read_manifest",
    "write_grid_csv",
    "write_pgm",
    "write_metrics_jsonl",
    "write_path_csv",
    "write_poses",
    "write_velodyne_bin",
    "write_labels",
    "write_sequence",
    "write_frame_outputs",
]
