"""
Integration tests for the command-line interface.
"""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from src.cli.commands import VERSION, cli, parse_assignments, parse_cell, CLIError
from src.dataio.writers import write_grid_csv
from src.geometry.core import GridIndex
from tests.fixtures.scenes import SceneFixtures

VEHICLE = "39,40"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scene_file(tmp_path):
    """Two-frame flat scene with the ring sensor as JSON."""
    path = tmp_path / "scene.json"
    path.write_text(SceneFixtures.small_scene("flat", frames=2).model_dump_json())
    return path


@pytest.fixture
def sequence(runner, cli_overrides, scene_file, tmp_path):
    """Synthetic sequence written by the synth command; returns its manifest."""
    out = tmp_path / "sequence"
    result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "synth", "flat", str(out),
                                 "--scene-file", str(scene_file)])
    assert result.exit_code == 0, result.output
    return out / "manifest.env"


class TestArgumentParsing:
    """Test helpers behind the command options."""

    def test_assignments(self):
        """Test KEY=VALUE pairs are upper-cased and stripped."""
        assert parse_assignments(["cell_size_m = 0.4", "LOG_LEVEL=debug"]) == {
            "CELL_SIZE_M": "0.4", "LOG_LEVEL": "debug",
        }

    def test_bad_assignment(self):
        """Test an entry without '=' raises."""
        with pytest.raises(CLIError):
            parse_assignments(["CELL_SIZE_M"])

    def test_cell(self):
        """Test ROW,COL parsing."""
        assert parse_cell("39,40") == GridIndex(39, 40)
        with pytest.raises(CLIError):
            parse_cell("39")


class TestSynthAndRun:
    """Test writing, processing and planning on a synthetic sequence."""

    def test_synth_writes_sequence_and_ground_truth(self, sequence):
        """Test the sequence, labels and ground truth grids are written."""
        root = sequence.parent

        assert (root / "velodyne" / "000001.bin").exists()
        assert (root / "labels" / "000000.label").exists()
        assert (root / "poses.txt").read_text().count("\n") == 2
        labels = np.loadtxt(root / "ground_truth" / "labels.csv", delimiter=",")
        assert labels.shape == (80, 80)

    def test_run_writes_frame_outputs(self, runner, cli_overrides, sequence, tmp_path):
        """Test per-frame grids, previews and the timing table."""
        out = tmp_path / "maps"

        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out),
                                     "run", str(sequence)])

        assert result.exit_code == 0, result.output
        assert "Processed 2 frame(s)" in result.output
        for kind, suffix in (("elevation", "csv"), ("variance", "csv"), ("cost", "csv"), ("preview", "pgm")):
            assert (out / kind / f"000001.{suffix}").exists()
        elevation = np.loadtxt(out / "elevation" / "000001.csv", delimiter=",")
        assert elevation.shape == (80, 80)
        assert (out / "timing.csv").read_text().startswith("frame_id,points,")

    def test_run_is_repeatable(self, runner, cli_overrides, sequence, tmp_path):
        """Test two runs over the same sequence write identical grids."""
        for name in ("a", "b"):
            result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir",
                                         str(tmp_path / name), "run", str(sequence)])
            assert result.exit_code == 0, result.output

        for kind in ("elevation", "cost"):
            a = (tmp_path / "a" / kind / "000001.csv").read_bytes()
            b = (tmp_path / "b" / kind / "000001.csv").read_bytes()
            assert a == b

    def test_run_without_writing(self, runner, cli_overrides, sequence, tmp_path):
        """Test --no-write leaves the output directory without grids."""
        out = tmp_path / "maps"

        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out),
                                     "run", str(sequence), "--no-write"])

        assert result.exit_code == 0, result.output
        assert not (out / "elevation").exists()

    def test_run_reports_stage_times(self, runner, cli_overrides, sequence, tmp_path):
        """Test a run ends with the mean stage time table."""
        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(tmp_path / "maps"),
                                     "run", str(sequence), "--no-write"])

        assert result.exit_code == 0, result.output
        assert "Mean stage time" in result.output
        assert "total" in result.output

    def test_dry_run_prints_configuration(self, runner, cli_overrides, sequence, tmp_path):
        """Test --dry-run validates and prints the settings without processing frames."""
        out = tmp_path / "maps"

        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out),
                                     "run", str(sequence), "--dry-run"])

        assert result.exit_code == 0, result.output
        assert "Configuration" in result.output
        assert "fusion" in result.output
        assert "Processed" not in result.output
        assert not (out / "timing.csv").exists()

    def test_bad_log_level_fails_validation(self, runner, cli_overrides, sequence):
        """Test a command exits with 1 before processing when validation fails."""
        result = runner.invoke(cli, [*cli_overrides, "--set", "LOG_LEVEL=chatty", "run", str(sequence), "--dry-run"])

        assert result.exit_code == 1
        assert "LOG_LEVEL" in result.output

    def test_plan_on_run_output(self, runner, cli_overrides, sequence, tmp_path):
        """Test planning from the vehicle cell on a cost map written by run."""
        out = tmp_path / "maps"
        runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out), "run", str(sequence)])

        result = runner.invoke(cli, [*cli_overrides, "--output-dir", str(out), "plan",
                                     str(out / "cost" / "000000.csv"), "--start", VEHICLE, "--goal", "39,44"])

        assert result.exit_code == 0, result.output
        lines = (out / "path.csv").read_text().splitlines()
        assert lines[0] == "row,col"
        assert lines[1] == VEHICLE
        assert lines[-1] == "39,44"


class TestEvalAndAblate:
    """Test evaluation and ablation commands."""

    def test_eval_scene_file(self, runner, cli_overrides, scene_file, tmp_path):
        """Test scoring a synthetic scene writes one metrics line per frame."""
        out = tmp_path / "eval"

        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out),
                                     "eval", "--scene-file", str(scene_file)])

        assert result.exit_code == 0, result.output
        lines = (out / "metrics.jsonl").read_text().splitlines()
        assert len(lines) == 2
        report = json.loads(lines[0])
        assert report["precision"] == 1.0
        assert report["variant"] == "ndt+BF+EV@0.2"
        assert "timing_ms" not in report

    def test_eval_labelled_manifest(self, runner, cli_overrides, sequence, tmp_path):
        """Test scoring a labelled sequence against ground truth assembled from its labels."""
        out = tmp_path / "eval"

        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out),
                                     "eval", str(sequence), "--radius", "20"])

        assert result.exit_code == 0, result.output
        assert len((out / "metrics.jsonl").read_text().splitlines()) == 2

    def test_eval_metrics_repeatable(self, runner, cli_overrides, scene_file, tmp_path):
        """Test the metrics file is byte-identical across runs."""
        for name in ("a", "b"):
            result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir",
                                         str(tmp_path / name), "eval", "--scene-file", str(scene_file)])
            assert result.exit_code == 0, result.output

        assert (tmp_path / "a" / "metrics.jsonl").read_bytes() == (tmp_path / "b" / "metrics.jsonl").read_bytes()

    def test_ablate_cell_sizes(self, runner, cli_overrides, scene_file, tmp_path):
        """Test the ablation table has one row per variant and a separate timing table."""
        out = tmp_path / "ablation"

        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(out),
                                     "ablate", "--scene-file", str(scene_file), "--cell-sizes", "0.2,0.4"])

        assert result.exit_code == 0, result.output
        rows = (out / "ablation.csv").read_text().splitlines()
        assert len(rows) == 17
        assert "mean_frame_ms" not in rows[0]
        assert len((out / "ablation_timing.csv").read_text().splitlines()) == 17


class TestFailures:
    """Test exit codes of failing commands."""

    def test_version(self, runner):
        """Test --version prints the version."""
        result = runner.invoke(cli, ["--version"])

        assert result.exit_code == 0
        assert VERSION in result.output

    def test_bad_override(self, runner, cli_overrides, scene_file):
        """Test a malformed --set exits with 1."""
        result = runner.invoke(cli, [*cli_overrides, "--set", "BROKEN", "eval", "--scene-file", str(scene_file)])

        assert result.exit_code == 1

    def test_invalid_grid(self, runner, cli_overrides, scene_file):
        """Test a cell size that does not divide the map exits with 1."""
        result = runner.invoke(cli, [*cli_overrides, "--cell-size", "0.3", "eval", "--scene-file", str(scene_file)])

        assert result.exit_code == 1
        assert "Configuration Error" in result.output

    def test_eval_needs_input(self, runner, cli_overrides):
        """Test eval without manifest or scene exits with 1."""
        result = runner.invoke(cli, [*cli_overrides, "eval"])

        assert result.exit_code == 1

    def test_infeasible_plan(self, runner, cli_overrides, tmp_path):
        """Test planning across a wall exits with 1."""
        cost = np.full((5, 5), 0.3)
        cost[:, 2] = np.nan
        cost_csv = write_grid_csv(tmp_path / "cost.csv", cost)

        result = runner.invoke(cli, [*cli_overrides, "--output-dir", str(tmp_path), "plan", str(cost_csv),
                                     "--start", "0,0", "--goal", "4,4"])

        assert result.exit_code == 1
        assert not (tmp_path / "path.csv").exists()

    def test_plan_respects_elevation_edges(self, runner, cli_overrides, tmp_path):
        """Test a curb in the elevation grid blocks a plan the cost grid alone allows."""
        cost_csv = write_grid_csv(tmp_path / "cost.csv", np.full((8, 8), 0.3))
        elevation_csv = write_grid_csv(tmp_path / "elevation.csv", SceneFixtures.step_heights(8, 4, 0.3))
        args = [*cli_overrides, "--output-dir", str(tmp_path), "plan", str(cost_csv),
                "--start", "3,1", "--goal", "3,6"]

        costs_only = runner.invoke(cli, args)
        with_edges = runner.invoke(cli, [*args, "--elevation", str(elevation_csv)])

        assert costs_only.exit_code == 0, costs_only.output
        assert with_edges.exit_code == 1
        assert "No path" in with_edges.output

    def test_bad_cell_sizes(self, runner, cli_overrides, scene_file, tmp_path):
        """Test an unparsable cell size list exits with 1."""
        result = runner.invoke(cli, [*cli_overrides, "--map-size", "16", "--output-dir", str(tmp_path),
                                     "ablate", "--scene-file", str(scene_file), "--cell-sizes", "0.2,fine"])

        assert result.exit_code == 1
