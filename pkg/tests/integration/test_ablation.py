"""
Integration tests for the ablation harness.
"""

import numpy as np
import pytest

from src.evaluation.scene import synth_sequence
from src.pipeline.ablation import ABLATION_COLUMNS, ablation_grid, evaluate_run, run_ablation
from src.pipeline.schema import PipelineConfig
from tests.fixtures.scenes import SceneFixtures


class TestAblationGrid:
    """Test the variant grid."""

    def test_grid_order_and_size(self):
        """Test 24 variants from NDT with every switch on to KF with every switch off."""
        variants = ablation_grid(PipelineConfig(map_size_m=16.0))

        names = [v.variant_name() for v in variants]
        assert len(names) == 24
        assert len(set(names)) == 24
        assert names[0] == "ndt+BF+EV@0.1"
        assert names[-1] == "kf@0.4"

    def test_grid_keeps_other_settings(self):
        """Test variants inherit every setting the grid does not vary."""
        base = PipelineConfig(map_size_m=16.0, kernel_radius_m=0.8, seed=4)

        for variant in ablation_grid(base, cell_sizes=(0.2,)):
            assert variant.kernel_radius_m == 0.8
            assert variant.seed == 4
            assert variant.map_size_m == 16.0


class TestRunAblation:
    """Test whole ablation runs on a short flat sequence."""

    def test_full_ablation_table(self, small_config):
        """Test one row per variant with every frame evaluated."""
        table = run_ablation(small_config, SceneFixtures.small_scene("flat", frames=2))

        assert list(table.columns) == ABLATION_COLUMNS
        assert len(table) == 24
        assert (table["frames"] == 2).all()
        assert np.allclose(table["precision"], 1.0)
        assert (table["coverage"] > 0.0).all()

    def test_curb_ablation_ordering(self, small_config):
        """Test BF+EV has no larger elevation error than neither and leads the NDT rows on F1."""
        table = run_ablation(small_config, SceneFixtures.small_scene("curb", frames=2), cell_sizes=(0.2,))
        rows = table.set_index("variant")

        assert len(table) == 8
        assert rows.loc["ndt+BF+EV@0.2", "error"] <= rows.loc["ndt@0.2", "error"]
        ndt_f1 = rows.loc[["ndt+BF+EV@0.2", "ndt+BF@0.2", "ndt+EV@0.2", "ndt@0.2"], "f1"]
        assert rows.loc["ndt+BF+EV@0.2", "f1"] >= ndt_f1.max() - 0.02

    def test_monitor_times_each_variant(self, small_config, mock_performance_monitor):
        """Test every variant runs inside its own measure_time block."""
        run_ablation(small_config, SceneFixtures.small_scene("flat", frames=2), cell_sizes=(0.2,),
                     monitor=mock_performance_monitor)

        names = [c.args[0] for c in mock_performance_monitor.measure_time.call_args_list]
        assert len(names) == 8
        assert names[0] == "ablation_ndt+BF+EV@0.2"
        assert names[-1] == "ablation_kf@0.2"
        assert mock_performance_monitor.measure_time.return_value.__exit__.call_count == 8

    def test_evaluate_run_attaches_timing(self, small_config):
        """Test reports carry the stage timing of their frame."""
        terrain, frames = synth_sequence(SceneFixtures.small_scene("flat", frames=2))

        reports, results = evaluate_run(small_config, frames, terrain, variant="base")

        assert [r.frame_id for r in reports] == [0, 1]
        assert all(r.variant == "base" for r in reports)
        assert reports[1].timing_ms == results[1].timing

    @pytest.mark.performance
    def test_coarse_cells_run_faster(self, small_config):
        """Test 0.4 m cells process a frame faster than 0.1 m cells."""
        table = run_ablation(small_config, SceneFixtures.small_scene("flat", frames=2), cell_sizes=(0.1, 0.4))

        coarse = table.loc[table["cell_size_m"] == 0.4, "mean_frame_ms"].mean()
        fine = table.loc[table["cell_size_m"] == 0.1, "mean_frame_ms"].mean()
        assert coarse < fine
