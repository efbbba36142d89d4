"""
Unit tests for point cloud, pose, manifest and grid file handling.
"""

import numpy as np
import pytest

from src.dataio import (
    DataFormatError,
    DataIOError,
    FrameRecord,
    SequenceReader,
    read_csv_points,
    read_grid_csv,
    read_labels,
    read_manifest,
    read_poses,
    read_velodyne_bin,
    write_grid_csv,
    write_labels,
    write_path_csv,
    write_pgm,
    write_poses,
    write_sequence,
    write_velodyne_bin,
)
from src.geometry.core import GridIndex, Pose6
from src.preprocess.rectify import ScanFrame


def frames_with_poses(count=3, labelled=True):
    frames = []
    for i in range(count):
        points = np.array([[1.0 + i, 2.0, -1.5], [0.5, -0.25, -1.75]])
        labels = np.array([40, 48]) if labelled else None
        frames.append(ScanFrame(points=points, frame_pose=Pose6.from_translation(i * 0.5, 0.0, 1.73, timestamp=i * 0.1),
                                frame_id=i, labels=labels))
    return frames


class TestPointFiles:
    """Test point cloud and label readers."""

    def test_velodyne_values(self, temp_test_dir):
        """Test xyz survive a velodyne file at float32 precision and intensity is dropped."""
        points = np.array([[1.25, -3.5, 0.125], [10.0, 20.0, -1.73]])
        path = write_velodyne_bin(temp_test_dir / "000000.bin", points, intensity=np.array([0.3, 0.9]))

        loaded = read_velodyne_bin(path)

        assert loaded.shape == (2, 3)
        assert np.allclose(loaded, points, atol=1e-5)

    def test_velodyne_truncated(self, temp_test_dir):
        """Test a file that is not a whole number of records raises."""
        path = temp_test_dir / "broken.bin"
        np.arange(5, dtype='<f4').tofile(path)

        with pytest.raises(DataFormatError):
            read_velodyne_bin(path)

    def test_velodyne_missing(self, temp_test_dir):
        """Test a missing file raises DataFormatError."""
        with pytest.raises(DataFormatError):
            read_velodyne_bin(temp_test_dir / "absent.bin")

    def test_csv_with_fractions(self, temp_test_dir):
        """Test CSV points with a time column."""
        path = temp_test_dir / "points.csv"
        path.write_text("x, y, z, t\n1.0,2.0,-1.7,0.0\n3.0,4.0,-1.6,0.5\n")

        points, fractions = read_csv_points(path)

        assert points.shape == (2, 3)
        assert points[1, 1] == 4.0
        assert fractions.tolist() == [0.0, 0.5]

    def test_csv_without_fractions(self, temp_test_dir):
        """Test fractions are None without a t column."""
        path = temp_test_dir / "points.csv"
        path.write_text("x,y,z\n1.0,2.0,-1.7\n")

        _, fractions = read_csv_points(path)

        assert fractions is None

    def test_csv_missing_column(self, temp_test_dir):
        """Test a CSV lacking z raises."""
        path = temp_test_dir / "points.csv"
        path.write_text("x,y\n1.0,2.0\n")

        with pytest.raises(DataFormatError):
            read_csv_points(path)

    def test_labels_keep_semantic_bits(self, temp_test_dir):
        """Test the instance id in the high 16 bits is stripped."""
        path = write_labels(temp_test_dir / "000000.label", np.array([(7 << 16) | 40, 48]))

        assert read_labels(path).tolist() == [40, 48]


class TestPoseFiles:
    """Test KITTI pose files."""

    def test_poses_and_timestamps(self, temp_test_dir):
        """Test translations and frame-period timestamps of written poses."""
        poses = [Pose6.from_translation(0.0, 0.0, 1.73), Pose6.from_translation(2.5, -1.0, 1.8)]
        path = write_poses(temp_test_dir / "poses.txt", poses)

        loaded = read_poses(path, frame_period=0.1)

        assert len(loaded) == 2
        assert np.allclose(loaded[1].translation, [2.5, -1.0, 1.8])
        assert loaded[1].timestamp == pytest.approx(0.1)

    def test_short_line_raises(self, temp_test_dir):
        """Test a line with 11 values raises."""
        path = temp_test_dir / "poses.txt"
        path.write_text("1 0 0 0 0 1 0 0 0 0 1\n")

        with pytest.raises(DataFormatError):
            read_poses(path)

    def test_reflection_raises(self, temp_test_dir):
        """Test an improper rotation raises DataFormatError."""
        path = temp_test_dir / "poses.txt"
        path.write_text("-1 0 0 0 0 1 0 0 0 0 1 0\n")

        with pytest.raises(DataFormatError):
            read_poses(path)

    def test_blank_lines_skipped(self, temp_test_dir):
        """Test blank lines do not count as frames."""
        path = temp_test_dir / "poses.txt"
        path.write_text("1 0 0 0 0 1 0 0 0 0 1 0\n\n1 0 0 1 0 1 0 0 0 0 1 0\n")

        loaded = read_poses(path)

        assert len(loaded) == 2
        assert loaded[1].translation[0] == pytest.approx(1.0)


class TestGridFiles:
    """Test grid CSV and preview output."""

    def test_grid_sentinel(self, temp_test_dir):
        """Test invalid cells are written as the sentinel and read back as NaN."""
        grid = np.array([[1.5, 2.0], [np.nan, 0.25]])
        valid = np.array([[True, False], [True, True]])
        path = write_grid_csv(temp_test_dir / "grid.csv", grid, valid)

        assert path.read_text().splitlines()[0] == "1.500000,-999.000000"
        loaded = read_grid_csv(path)
        assert loaded[0, 0] == 1.5
        assert np.isnan(loaded[0, 1]) and np.isnan(loaded[1, 0])
        assert loaded[1, 1] == 0.25

    def test_pgm_constant_grid(self, temp_test_dir):
        """Test a constant grid maps to 128 and invalid cells to 0."""
        grid = np.ones((3, 2))
        grid[2, 1] = np.nan

        data = write_pgm(temp_test_dir / "preview.pgm", grid).read_bytes()

        header = b"P5\n# min=1.000000 max=1.000000\n2 3\n255\n"
        assert data == header + bytes([128, 128, 128, 128, 128, 0])

    def test_pgm_scaling(self, temp_test_dir):
        """Test the minimum maps to 1 and the maximum to 255."""
        grid = np.array([[0.0, 1.0], [2.0, 5.0]])
        valid = np.array([[True, True], [True, False]])

        data = write_pgm(temp_test_dir / "preview.pgm", grid, valid).read_bytes()

        assert data.endswith(bytes([1, 128, 255, 0]))
        assert b"# min=0.000000 max=2.000000\n" in data

    def test_path_csv(self, temp_test_dir):
        """Test a path is written as row,col lines."""
        path = write_path_csv(temp_test_dir / "path.csv", [GridIndex(0, 1), GridIndex(1, 2)])

        assert path.read_text().splitlines() == ["row,col", "0,1", "1,2"]


class TestManifest:
    """Test sequence manifests."""

    def test_glob_and_relative_paths(self, temp_test_dir):
        """Test a glob selects point files in name order and paths resolve next to the manifest."""
        scans = temp_test_dir / "scans"
        scans.mkdir()
        for name in ("000001.bin", "000000.bin", "notes.txt"):
            (scans / name).write_bytes(b"")
        manifest = temp_test_dir / "manifest.env"
        manifest.write_text("frames=scans/*\nposes=poses.txt\n")

        result = read_manifest(manifest)

        assert [p.name for p in result.frames] == ["000000.bin", "000001.bin"]
        assert result.poses == temp_test_dir / "poses.txt"
        assert result.labels is None

    def test_frames_directory(self, temp_test_dir):
        """Test frames may name a directory."""
        scans = temp_test_dir / "scans"
        scans.mkdir()
        (scans / "a.csv").write_text("x,y,z\n")
        manifest = temp_test_dir / "manifest.env"
        manifest.write_text("frames=scans\n")

        assert [p.name for p in read_manifest(manifest).frames] == ["a.csv"]

    def test_missing_frames_key(self, temp_test_dir):
        """Test a manifest without frames raises."""
        manifest = temp_test_dir / "manifest.env"
        manifest.write_text("poses=poses.txt\n")

        with pytest.raises(DataFormatError):
            read_manifest(manifest)

    def test_no_matching_frames(self, temp_test_dir):
        """Test a glob matching nothing raises."""
        manifest = temp_test_dir / "manifest.env"
        manifest.write_text("frames=scans/*.bin\n")

        with pytest.raises(DataFormatError):
            read_manifest(manifest)

    def test_missing_manifest(self, temp_test_dir):
        """Test a missing manifest raises."""
        with pytest.raises(DataFormatError):
            read_manifest(temp_test_dir / "absent.env")


class TestSequenceFiles:
    """Test writing and reading whole sequences."""

    def test_sequence_read_back(self, temp_test_dir):
        """Test frames, poses and labels of a written sequence are read back in order."""
        frames = frames_with_poses()
        manifest = write_sequence(temp_test_dir / "seq", frames)

        reader = SequenceReader(manifest)
        loaded = reader.load_all()

        assert len(reader) == 3
        assert [f.frame_id for f in loaded] == [0, 1, 2]
        assert np.allclose(loaded[2].points, frames[2].points, atol=1e-5)
        assert loaded[1].labels.tolist() == [40, 48]
        assert np.allclose(loaded[1].frame_pose.translation, [0.5, 0.0, 1.73])
        assert np.allclose(loaded[0].end_pose.translation, [0.5, 0.0, 1.73])
        assert loaded[2].end_pose is loaded[2].frame_pose

    def test_sequence_bytes_repeat(self, temp_test_dir):
        """Test writing the same frames twice gives identical files."""
        frames = frames_with_poses(2)
        write_sequence(temp_test_dir / "a", frames)
        write_sequence(temp_test_dir / "b", frames)

        for name in ("poses.txt", "manifest.env", "velodyne/000001.bin", "labels/000001.label"):
            assert (temp_test_dir / "a" / name).read_bytes() == (temp_test_dir / "b" / name).read_bytes()

    def test_unlabelled_sequence_has_no_labels_entry(self, temp_test_dir):
        """Test the manifest only names labels when frames carry them."""
        manifest = write_sequence(temp_test_dir / "seq", frames_with_poses(labelled=False))

        assert "labels" not in manifest.read_text()
        assert SequenceReader(manifest).load_all()[0].labels is None

    def test_frame_without_pose_raises(self, temp_test_dir):
        """Test a frame with no pose cannot be written."""
        frame = ScanFrame(points=np.zeros((1, 3)), frame_pose=None)

        with pytest.raises(DataIOError):
            write_sequence(temp_test_dir / "seq", [frame])

    def test_frames_beyond_poses_have_none(self, temp_test_dir):
        """Test frames past the end of the pose file get no pose."""
        manifest = write_sequence(temp_test_dir / "seq", frames_with_poses())
        write_poses(temp_test_dir / "seq" / "poses.txt", [Pose6.identity(), Pose6.identity()])

        records = list(SequenceReader(manifest))

        assert records[1].pose is not None
        assert records[2].pose is None

    def test_label_count_mismatch(self, temp_test_dir):
        """Test a label file with the wrong length raises on load."""
        points = write_velodyne_bin(temp_test_dir / "000000.bin", np.zeros((3, 3)))
        labels = write_labels(temp_test_dir / "000000.label", np.array([40, 40]))
        record = FrameRecord(frame_id=0, path=points, pose=Pose6.identity(), label_path=labels)

        with pytest.raises(DataFormatError):
            record.load()
