"""
Logging configuration for the terrain mapping pipeline.
Provides logging setup with console and rotating file handlers, per-stage
frame timing and resource monitoring.
"""

import logging
import logging.handlers
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Optional
import colorlog
from datetime import datetime


class ProductionLogger:
    """
    Logging setup for pipeline runs with a colored console handler, a rotating
    run log and separate component logs for fusion, inference and timing.
    """

    COMPONENTS = {
        'terrain.fusion': ("fusion.log", 'FUSION'),
        'terrain.bgk': ("bgk.log", 'BGK'),
        'terrain.performance': ("performance.log", 'PERF'),
    }

    def __init__(self,
                 app_name: str = "terrain_mapping",
                 log_dir: str = "./logs",
                 log_level: str = "INFO",
                 max_file_size: int = 10 * 1024 * 1024,  # 10MB
                 backup_count: int = 5,
                 enable_console: bool = True,
                 enable_file: bool = True):

        self.app_name = app_name
        self.log_dir = Path(log_dir)
        self.log_level = getattr(logging, log_level.upper())
        self.max_file_size = max_file_size
        self.backup_count = backup_count
        self.enable_console = enable_console
        self.enable_file = enable_file

        if self.enable_file:
            self.log_dir.mkdir(parents=True, exist_ok=True)

        self._setup_root_logger()
        if self.enable_file:
            self._setup_component_loggers()

    def _setup_root_logger(self):
        """Configure root logger with console and file handlers."""
        root_logger = logging.getLogger()
        root_logger.setLevel(self.log_level)
        root_logger.handlers.clear()

        if self.enable_console:
            console_handler = colorlog.StreamHandler(sys.stderr)
            console_handler.setLevel(self.log_level)
            console_formatter = colorlog.ColoredFormatter(
                '%(log_color)s%(asctime)s [%(levelname)8s] %(name)s: %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S',
                log_colors={
                    'DEBUG': 'cyan',
                    'INFO': 'green',
                    'WARNING': 'yellow',
                    'ERROR': 'red',
                    'CRITICAL': 'red,bg_white',
                }
            )
            console_handler.setFormatter(console_formatter)
            root_logger.addHandler(console_handler)

        if self.enable_file:
            file_handler = logging.handlers.RotatingFileHandler(
                self.log_dir / f"{self.app_name}.log",
                maxBytes=self.max_file_size,
                backupCount=self.backup_count
            )
            file_handler.setLevel(self.log_level)
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s [%(levelname)8s] %(name)s [%(process)d:%(thread)d] %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            ))
            root_logger.addHandler(file_handler)

    def _setup_component_loggers(self):
        """Attach a dedicated rotating file to each pipeline component logger."""
        for name, (filename, tag) in self.COMPONENTS.items():
            component_logger = logging.getLogger(name)
            for handler in list(component_logger.handlers):
                component_logger.removeHandler(handler)
                handler.close()
            handler = logging.handlers.RotatingFileHandler(
                self.log_dir / filename,
                maxBytes=self.max_file_size,
                backupCount=self.backup_count
            )
            handler.setFormatter(logging.Formatter(f'%(asctime)s [%(levelname)s] {tag}: %(message)s'))
            component_logger.addHandler(handler)

    def get_logger(self, name: str = None) -> logging.Logger:
        """Get a logger instance."""
        if name:
            return logging.getLogger(name)
        return logging.getLogger()

    def debug(self, message: str, *args, **kwargs):
        """Log debug message."""
        logging.getLogger().debug(message, *args, **kwargs)

    def info(self, message: str, *args, **kwargs):
        """Log info message."""
        logging.getLogger().info(message, *args, **kwargs)

    def warning(self, message: str, *args, **kwargs):
        """Log warning message."""
        logging.getLogger().warning(message, *args, **kwargs)

    def error(self, message: str, *args, **kwargs):
        """Log error message."""
        logging.getLogger().error(message, *args, **kwargs)


class StageTimer:
    """
    Accumulates wall-clock milliseconds per pipeline stage for one frame.
    The reported total is the sum of the stage times.
    """

    def __init__(self):
        self._stages: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            self._stages[name] = self._stages.get(name, 0.0) + elapsed_ms

    def breakdown(self) -> Dict[str, float]:
        result = dict(self._stages)
        result['total'] = sum(self._stages.values())
        return result


class NullStageTimer(StageTimer):
    """Timer that records every stage as 0.0 ms without reading the clock."""

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        self._stages.setdefault(name, 0.0)
        yield


def make_stage_timer(enabled: bool) -> StageTimer:
    return StageTimer() if enabled else NullStageTimer()


class PerformanceMonitor:
    """
    Performance monitoring and metrics collection for pipeline runs.
    """

    def __init__(self, logger=None):
        self.logger = logger or logging.getLogger('terrain.performance')
        self.metrics = {
            'frame_times': [],
            'memory_usage': [],
            'cpu_usage': []
        }
        self.start_time = datetime.now()

    def log_frame(self, frame_id: int, timing: Dict[str, float], points: int = 0):
        """Log the per-stage timing of one processed frame."""
        self.metrics['frame_times'].append({
            'frame_id': frame_id,
            'points': points,
            **timing,
        })

        stages = " ".join(f"{name}_ms={value:.2f}" for name, value in timing.items())
        self.logger.info(f"FRAME id={frame_id} points={points} {stages}")

    def log_system_resources(self):
        """Log current system resource usage."""
        try:
            import psutil
            process = psutil.Process()

            memory_info = process.memory_info()
            cpu_percent = process.cpu_percent()

            self.metrics['memory_usage'].append({
                'rss': memory_info.rss,
                'vms': memory_info.vms,
                'timestamp': datetime.now()
            })

            self.metrics['cpu_usage'].append({
                'cpu_percent': cpu_percent,
                'timestamp': datetime.now()
            })

            self.logger.info(
                f"RESOURCES memory_rss={memory_info.rss/1024/1024:.1f}MB "
                f"memory_vms={memory_info.vms/1024/1024:.1f}MB cpu={cpu_percent:.1f}%"
            )

        except ImportError:
            self.logger.warning("psutil not available for resource monitoring")
        except Exception as e:
            self.logger.error(f"Failed to log system resources: {e}")

    def get_performance_summary(self) -> dict:
        """Summarize frame throughput and mean stage times."""
        frames = self.metrics['frame_times']
        summary = {
            'uptime_seconds': (datetime.now() - self.start_time).total_seconds(),
            'frames': len(frames),
            'mean_stage_ms': {},
        }
        if frames:
            stage_names = [k for k in frames[0] if k not in ('frame_id', 'points')]
            for name in stage_names:
                values = [f.get(name, 0.0) for f in frames]
                summary['mean_stage_ms'][name] = sum(values) / len(values)
        return summary

    def record_metric(self, metric_name: str, value: float):
        """Record a metric value."""
        if metric_name not in self.metrics:
            self.metrics[metric_name] = []

        self.metrics[metric_name].append({
            'value': value,
            'timestamp': datetime.now()
        })

        self.logger.debug(f"METRIC {metric_name}={value}")

    @contextmanager
    def measure_time(self, operation_name: str) -> Iterator[None]:
        """Context manager for measuring operation time."""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            duration = time.perf_counter() - start_time
            self.record_metric(f"{operation_name}_duration", duration)
            self.logger.info(f"TIMING {operation_name}={duration:.3f}s")


def setup_logging(config) -> ProductionLogger:
    """
    Setup logging for a pipeline run using configuration.

    Args:
        config: Configuration instance

    Returns:
        ProductionLogger instance
    """
    return ProductionLogger(
        log_level=config.log_level,
        log_dir=str(config.log_dir),
        max_file_size=config.log_max_file_size,
        backup_count=config.log_backup_count,
        enable_console=config.log_enable_console,
        enable_file=config.log_enable_file,
    )
