"""
Unit tests for configuration, the pipeline schema and logging utilities.
"""

import logging
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.pipeline.schema import PipelineConfig
from src.utils.config import Config, ConfigurationError
from src.utils.logging import (
    NullStageTimer,
    PerformanceMonitor,
    ProductionLogger,
    StageTimer,
    make_stage_timer,
    setup_logging,
)


@pytest.fixture
def clean_env(monkeypatch):
    """Remove TERRAIN_ variables the host environment may carry."""
    import os
    for key in list(os.environ):
        if key.startswith("TERRAIN_"):
            monkeypatch.delenv(key, raising=False)
    return monkeypatch


@pytest.fixture
def config_file(tmp_path):
    """Configuration file with a few keys set."""
    path = tmp_path / "pipeline.env"
    path.write_text(
        "# terrain settings\n"
        "CELL_SIZE_M=0.4\n"
        "FUSION_MODE=KF\n"
        "BILATERAL_FILTER=false\n"
        "OUTPUT_DIR=results\n"
    )
    return path


class TestConfig:
    """Test configuration lookup and validation."""

    def test_defaults(self, clean_env):
        """Test built-in defaults without file, environment or overrides."""
        config = Config()

        assert config.map_size_m == 80.0
        assert config.cell_size_m == 0.2
        assert config.height_diff_threshold_m == 0.4
        assert config.variance_threshold == 0.1
        assert config.bilateral_variance == 0.1
        assert config.kernel_radius_m == 1.0
        assert config.similarity_angle_deg == 10.0
        assert config.concavity_angle_deg == 80.0
        assert config.fusion_mode == "ndt"
        assert config.overhang_height_m is None
        assert config.planner_cost_weight == 5.0

    def test_file_values(self, clean_env, config_file):
        """Test values are read from the configuration file."""
        config = Config(config_file)

        assert config.cell_size_m == 0.4
        assert config.fusion_mode == "kf"
        assert config.bilateral_filter is False

    def test_relative_path_resolved_against_file(self, clean_env, config_file):
        """Test relative paths from the file are resolved next to it."""
        config = Config(config_file)
        assert config.output_dir == config_file.parent / "results"

    def test_environment_beats_file(self, clean_env, config_file):
        """Test TERRAIN_ variables override the file."""
        clean_env.setenv("TERRAIN_CELL_SIZE_M", "0.1")

        assert Config(config_file).cell_size_m == 0.1

    def test_overrides_beat_environment(self, clean_env, config_file):
        """Test command-line overrides win over environment and file."""
        clean_env.setenv("TERRAIN_CELL_SIZE_M", "0.1")

        config = Config(config_file, overrides={"cell_size_m": 0.5})

        assert config.cell_size_m == 0.5

    def test_missing_file_raises(self, tmp_path):
        """Test an explicit file that does not exist raises."""
        with pytest.raises(ConfigurationError):
            Config(tmp_path / "absent.env")

    def test_malformed_float_raises(self, clean_env):
        """Test a non-numeric float value raises ConfigurationError."""
        config = Config(overrides={"CELL_SIZE_M": "fine"})
        with pytest.raises(ConfigurationError):
            _ = config.cell_size_m

    def test_malformed_bool_raises(self, clean_env):
        """Test an unknown boolean spelling raises ConfigurationError."""
        config = Config(overrides={"BILATERAL_FILTER": "maybe"})
        with pytest.raises(ConfigurationError):
            _ = config.bilateral_filter

    def test_required_key_missing(self, clean_env):
        """Test a required key without default raises."""
        with pytest.raises(ConfigurationError):
            Config().get_str("SCENE_NAME")

    def test_pipeline_config_from_values(self, clean_env, config_file):
        """Test the validated pipeline configuration carries the file values."""
        pipeline = Config(config_file).pipeline_config()

        assert pipeline.cell_size_m == 0.4
        assert pipeline.fusion_mode == "kf"
        assert not pipeline.bilateral_filter
        assert pipeline.side_cells == 200

    def test_pipeline_config_rejects_odd_grid(self, clean_env):
        """Test a map size that is not an even multiple of the cell size raises."""
        config = Config(overrides={"MAP_SIZE_M": "80", "CELL_SIZE_M": "0.3"})
        with pytest.raises(ConfigurationError):
            config.pipeline_config()

    def test_validate_configuration_log_level(self, clean_env):
        """Test an unknown log level fails validation."""
        with pytest.raises(ConfigurationError):
            Config(overrides={"LOG_LEVEL": "chatty"}).validate_configuration()
        assert Config().validate_configuration()

    def test_summary(self, clean_env):
        """Test the summary groups the main settings."""
        summary = Config().get_summary()

        assert summary['map'] == {'W': 80.0, 'omega': 0.2}
        assert summary['traversability']['lambda'] == 5.0
        assert summary['config_file'] is None


class TestPipelineConfig:
    """Test the pydantic pipeline configuration."""

    def test_defaults(self):
        """Test default grid, overhang threshold and variant name."""
        config = PipelineConfig()

        assert config.side_cells == 400
        assert config.overhang_threshold == pytest.approx(2.3)
        assert config.variant_name() == "ndt+BF+EV@0.2"

    def test_overrides_and_variant_name(self):
        """Test with_overrides validates and renames the variant."""
        config = PipelineConfig().with_overrides(bilateral_filter=False, cell_size_m=0.4, fusion_mode="KF")

        assert config.variant_name() == "kf+EV@0.4"
        assert config.side_cells == 200

    def test_explicit_overhang(self):
        """Test an explicit T_o replaces h_u + 0.5."""
        assert PipelineConfig(overhang_height_m=1.0).overhang_threshold == 1.0

    @pytest.mark.parametrize("kwargs", [
        {"cell_size_m": 0.3},
        {"kernel_radius_m": 0.1},
        {"similarity_angle_deg": 95.0},
        {"fusion_mode": "mean"},
    ])
    def test_invalid_values(self, kwargs):
        """Test invalid combinations are rejected."""
        with pytest.raises(ValidationError):
            PipelineConfig(**kwargs)

    def test_frozen(self):
        """Test the configuration cannot be mutated."""
        config = PipelineConfig()
        with pytest.raises(ValidationError):
            config.cell_size_m = 0.4

    def test_component_settings(self):
        """Test derived settings of the fusion, inference and traversability stages."""
        config = PipelineConfig(kernel_radius_m=0.8, bilateral_variance=0.05, fusion_mode="kf",
                                kf_measurement_noise=0.02)

        bgk = config.bgk_config()
        fusion = config.fusion_settings()
        limits = config.kinematic_limits()

        assert bgk.kernel_radius == 0.8
        assert bgk.bilateral_variance == 0.05
        assert fusion.mode == "kf"
        assert fusion.overhang_height == pytest.approx(2.3)
        assert fusion.kf.measurement_noise == 0.02
        assert limits.similarity_angle_deg == 10.0
        assert limits.lidar_height == 1.73


class TestStageTimer:
    """Test per-stage frame timing."""

    def test_total_is_sum_of_stages(self):
        """Test the total equals the sum of the stage times."""
        timer = StageTimer()
        with timer.stage("fusion"):
            sum(range(1000))
        with timer.stage("bgk"):
            sum(range(1000))
        with timer.stage("fusion"):
            pass

        breakdown = timer.breakdown()

        assert set(breakdown) == {"fusion", "bgk", "total"}
        assert breakdown["total"] == pytest.approx(breakdown["fusion"] + breakdown["bgk"])
        assert all(v >= 0.0 for v in breakdown.values())

    def test_null_timer_records_zero(self):
        """Test the disabled timer keeps stage names with zero time."""
        timer = make_stage_timer(False)
        with timer.stage("bgk"):
            pass

        assert isinstance(timer, NullStageTimer)
        assert timer.breakdown() == {"bgk": 0.0, "total": 0.0}
        assert isinstance(make_stage_timer(True), StageTimer)


class TestPerformanceMonitor:
    """Test frame and resource monitoring."""

    def setup_method(self):
        """Set up a monitor with a quiet logger."""
        self.monitor = PerformanceMonitor(logger=logging.getLogger("test.performance"))

    def test_frame_summary(self):
        """Test frame timings are averaged per stage."""
        self.monitor.log_frame(0, {"fusion": 2.0, "total": 2.0}, points=100)
        self.monitor.log_frame(1, {"fusion": 4.0, "total": 4.0}, points=120)

        summary = self.monitor.get_performance_summary()

        assert summary['frames'] == 2
        assert summary['mean_stage_ms']['fusion'] == pytest.approx(3.0)

    def test_measure_time_records_metric(self):
        """Test measure_time stores a duration metric."""
        with self.monitor.measure_time("infer"):
            pass

        metrics = self.monitor.metrics
        assert len(metrics['infer_duration']) == 1
        assert metrics['infer_duration'][0]['value'] >= 0.0

    def test_system_resources_recorded(self):
        """Test resource logging appends memory and CPU samples."""
        self.monitor.log_system_resources()

        assert len(self.monitor.metrics['memory_usage']) == 1
        assert self.monitor.metrics['memory_usage'][0]['rss'] > 0


class TestProductionLogger:
    """Test logging setup."""

    def test_file_logging_creates_component_logs(self, temp_test_dir):
        """Test run and component log files are created in the log directory."""
        log_dir = temp_test_dir / "logs"
        ProductionLogger(log_dir=str(log_dir), enable_console=False, enable_file=True)

        logging.getLogger("terrain.fusion").info("ROLL shift=(1,0)")
        for handler in logging.getLogger("terrain.fusion").handlers:
            handler.flush()

        assert (log_dir / "terrain_mapping.log").exists()
        assert "ROLL" in (log_dir / "fusion.log").read_text()
        assert (log_dir / "bgk.log").exists()

    def test_setup_logging_without_files(self, mock_config, temp_test_dir):
        """Test disabled file logging creates no directory."""
        mock_config.log_dir = temp_test_dir / "unused"

        logger = setup_logging(mock_config)

        assert isinstance(logger, ProductionLogger)
        assert not Path(mock_config.log_dir).exists()
        assert logger.get_logger("terrain.bgk").name == "terrain.bgk"
