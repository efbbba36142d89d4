"""
Pytest configuration and shared fixtures for the terrain mapping tests.
Provides common test fixtures, mock objects, and test utilities.
"""

import logging
import logging.handlers
import pytest
from pathlib import Path
from unittest.mock import Mock, MagicMock

# Import the modules we're testing
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

import colorlog

from src.utils.config import Config
from src.utils.logging import ProductionLogger, PerformanceMonitor
from src.pipeline.schema import PipelineConfig
from src.traversability.analysis import KinematicLimits
from tests.fixtures.scenes import SceneFixtures


@pytest.fixture
def mock_config():
    """Create a mock configuration for testing."""
    config = Mock(spec=Config)

    # map and thresholds
    config.map_size_m = 16.0
    config.cell_size_m = 0.2
    config.height_diff_threshold_m = 0.4
    config.variance_threshold = 0.1
    config.bilateral_variance = 0.1
    config.kernel_radius_m = 1.0
    config.similarity_angle_deg = 10.0
    config.concavity_angle_deg = 80.0

    # Logging configuration
    config.log_level = "DEBUG"
    config.log_dir = Path("./test_logs")
    config.log_max_file_size = 1024 * 1024  # 1MB
    config.log_backup_count = 2
    config.log_enable_console = False  # Disable console logging in tests
    config.log_enable_file = False

    return config


@pytest.fixture
def mock_logger():
    """Create a mock logger for testing."""
    logger = Mock(spec=ProductionLogger)
    logger.debug = Mock()
    logger.info = Mock()
    logger.warning = Mock()
    logger.error = Mock()
    return logger


@pytest.fixture
def mock_performance_monitor():
    """Create a mock performance monitor for testing."""
    monitor = Mock(spec=PerformanceMonitor)
    monitor.record_metric = Mock()
    monitor.log_frame = Mock()
    monitor.measure_time = Mock()

    # Mock the context manager for measure_time
    mock_context = MagicMock()
    mock_context.__enter__ = Mock(return_value=mock_context)
    mock_context.__exit__ = Mock(return_value=None)
    monitor.measure_time.return_value = mock_context

    return monitor


@pytest.fixture
def small_config(tmp_path):
    """Default configuration on a 16 m map writing into a temporary directory."""
    return PipelineConfig(map_size_m=16.0, output_dir=tmp_path / "output")


@pytest.fixture
def limits():
    """Default kinematic limits."""
    return KinematicLimits()


@pytest.fixture
def flat_scene():
    """Two-frame flat scene with the ring sensor."""
    return SceneFixtures.small_scene("flat", frames=2)


@pytest.fixture
def curb_scene():
    """Two-frame curb scene with the ring sensor."""
    return SceneFixtures.small_scene("curb", frames=2)


@pytest.fixture
def temp_test_dir(tmp_path):
    """Create a temporary directory for test files."""
    test_dir = tmp_path / "terrain_tests"
    test_dir.mkdir()
    return test_dir


@pytest.fixture
def cli_overrides(tmp_path):
    """--set arguments that keep CLI runs quiet and inside tmp_path."""
    return [
        "--set", "LOG_ENABLE_FILE=false",
        "--set", "LOG_ENABLE_CONSOLE=false",
        "--set", f"LOG_DIR={tmp_path / 'logs'}",
    ]


@pytest.fixture(autouse=True)
def reset_logging():
    """Detach handlers a ProductionLogger installs so tests do not leak them."""
    yield
    for name in [None, *ProductionLogger.COMPONENTS]:
        target = logging.getLogger(name)
        for handler in list(target.handlers):
            installed = isinstance(handler, logging.handlers.RotatingFileHandler) or isinstance(
                handler.formatter, colorlog.ColoredFormatter)
            if installed:
                target.removeHandler(handler)
                handler.close()


# Pytest configuration
def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "unit: mark test as a unit test"
    )
    config.addinivalue_line(
        "markers", "integration: mark test as an integration test"
    )
    config.addinivalue_line(
        "markers", "slow: mark test as slow running"
    )
    config.addinivalue_line(
        "markers", "performance: mark test as a timing comparison"
    )


def pytest_collection_modifyitems(config, items):
    """Modify test collection to add markers based on test location."""
    for item in items:
        # Add unit marker to tests in unit/ directory
        if "unit" in str(item.fspath):
            item.add_marker(pytest.mark.unit)

        # Add integration marker to tests in integration/ directory
        if "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)

        # Add slow marker to tests that run whole sequences
        if "ablation" in item.name or "sequence" in item.name:
            item.add_marker(pytest.mark.slow)
