"""
Configuration management for the terrain mapping pipeline.
Loads settings from a key-value file, environment variables and command-line
overrides, with validation and the standard defaults.
"""

import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union
from dotenv import dotenv_values
from pydantic import ValidationError
import logging


class ConfigurationError(Exception):
    """Raised when configuration is invalid or missing."""
    pass


ENV_PREFIX = "TERRAIN_"


class Config:
    """
    Configuration manager for the terrain pipeline.

    Lookup order for every key (highest first):
        1. command-line overrides passed as ``overrides``
        2. environment variables named ``TERRAIN_<KEY>``
        3. the key-value configuration file
        4. the built-in default
    """

    def __init__(self,
                 config_file: Optional[Union[str, Path]] = None,
                 overrides: Optional[Mapping[str, Any]] = None,
                 env_prefix: str = ENV_PREFIX):
        """
        Initialize configuration manager.

        Args:
            config_file: Path to a key-value file (``KEY=value`` per line)
            overrides: Values taking precedence over file and environment
            env_prefix: Prefix for environment variable overrides

        Raises:
            ConfigurationError: If an explicitly given file cannot be read
        """
        self.logger = logging.getLogger(__name__)
        self.env_prefix = env_prefix
        self.config_file = Path(config_file) if config_file else None
        self._file_values: Dict[str, str] = {}
        self._overrides: Dict[str, str] = {
            str(k).upper(): str(v) for k, v in (overrides or {}).items() if v is not None
        }

        if self.config_file is not None:
            if not self.config_file.is_file():
                raise ConfigurationError(f"Configuration file {self.config_file} not found")
            try:
                values = dotenv_values(self.config_file)
            except (OSError, UnicodeDecodeError) as e:
                raise ConfigurationError(f"Cannot read configuration file {self.config_file}: {e}")
            self._file_values = {k.upper(): v for k, v in values.items() if v is not None}
            self.logger.info(f"Loaded configuration from {self.config_file}")

    def _lookup(self, key: str) -> Optional[str]:
        key = key.upper()
        if key in self._overrides:
            return self._overrides[key]
        env_value = os.getenv(f"{self.env_prefix}{key}")
        if env_value is not None:
            return env_value
        return self._file_values.get(key)

    def get_str(self, key: str, default: Optional[str] = None) -> str:
        """Get string configuration value."""
        value = self._lookup(key)
        if value is None:
            if default is None:
                raise ConfigurationError(f"Required configuration key '{key}' not found")
            return default
        return value

    def get_int(self, key: str, default: Optional[int] = None) -> int:
        """Get integer configuration value."""
        value = self._lookup(key)
        if value is None:
            if default is None:
                raise ConfigurationError(f"Required configuration key '{key}' not found")
            return default

        try:
            return int(value)
        except ValueError:
            raise ConfigurationError(f"Configuration key '{key}' must be an integer, got '{value}'")

    def get_float(self, key: str, default: Optional[float] = None) -> float:
        """Get float configuration value."""
        value = self._lookup(key)
        if value is None:
            if default is None:
                raise ConfigurationError(f"Required configuration key '{key}' not found")
            return default

        try:
            return float(value)
        except ValueError:
            raise ConfigurationError(f"Configuration key '{key}' must be a float, got '{value}'")

    def get_optional_float(self, key: str) -> Optional[float]:
        """Get float configuration value, or None when the key is unset."""
        if self._lookup(key) is None:
            return None
        return self.get_float(key)

    def get_bool(self, key: str, default: Optional[bool] = None) -> bool:
        """Get boolean configuration value."""
        value = self._lookup(key)
        if value is None:
            if default is None:
                raise ConfigurationError(f"Required configuration key '{key}' not found")
            return default

        lowered = value.strip().lower()
        if lowered in ('true', '1', 'yes', 'on', 'enabled'):
            return True
        if lowered in ('false', '0', 'no', 'off', 'disabled'):
            return False
        raise ConfigurationError(f"Configuration key '{key}' must be a boolean, got '{value}'")

    def get_path(self, key: str, default: Optional[Union[str, Path]] = None) -> Path:
        """Get path configuration value, relative paths resolved against the config file."""
        value = self._lookup(key)
        if value is None:
            if default is None:
                raise ConfigurationError(f"Required configuration key '{key}' not found")
            value = str(default)

        path = Path(value)
        if not path.is_absolute() and self.config_file is not None and key.upper() in self._file_values \
                and key.upper() not in self._overrides:
            path = self.config_file.parent / path
        return path

    # Map geometry (W, ω)
    @property
    def map_size_m(self) -> float:
        return self.get_float("MAP_SIZE_M", 80.0)

    @property
    def cell_size_m(self) -> float:
        return self.get_float("CELL_SIZE_M", 0.2)

    # Segmentation and fusion (T_h, T_Σ; T_o = h_u + 0.5)
    @property
    def height_diff_threshold_m(self) -> float:
        return self.get_float("HEIGHT_DIFF_THRESHOLD_M", 0.4)

    @property
    def variance_threshold(self) -> float:
        return self.get_float("VARIANCE_THRESHOLD", 0.1)

    @property
    def vehicle_height_m(self) -> float:
        return self.get_float("VEHICLE_HEIGHT_M", 1.8)

    @property
    def overhang_height_m(self) -> Optional[float]:
        return self.get_optional_float("OVERHANG_HEIGHT_M")

    @property
    def lidar_height_m(self) -> float:
        return self.get_float("LIDAR_HEIGHT_M", 1.73)

    @property
    def fusion_mode(self) -> str:
        return self.get_str("FUSION_MODE", "ndt").lower()

    @property
    def min_observations(self) -> int:
        return self.get_int("MIN_OBSERVATIONS", 3)

    @property
    def kf_a(self) -> float:
        return self.get_float("KF_A", 1.0)

    @property
    def kf_c(self) -> float:
        return self.get_float("KF_C", 1.0)

    @property
    def kf_process_noise(self) -> float:
        return self.get_float("KF_PROCESS_NOISE", 0.01)

    @property
    def kf_measurement_noise(self) -> float:
        return self.get_float("KF_MEASUREMENT_NOISE", 0.01)

    @property
    def kf_distance_scaled_noise(self) -> bool:
        return self.get_bool("KF_DISTANCE_SCALED_NOISE", True)

    # BGK inference (Σ_w, l)
    @property
    def bilateral_variance(self) -> float:
        return self.get_float("BILATERAL_VARIANCE", 0.1)

    @property
    def kernel_radius_m(self) -> float:
        return self.get_float("KERNEL_RADIUS_M", 1.0)

    @property
    def bilateral_filter(self) -> bool:
        return self.get_bool("BILATERAL_FILTER", True)

    @property
    def estimated_variance(self) -> bool:
        return self.get_bool("ESTIMATED_VARIANCE", True)

    @property
    def variance_floor(self) -> float:
        return self.get_float("VARIANCE_FLOOR", 1e-4)

    @property
    def bgk_backend(self) -> str:
        return self.get_str("BGK_BACKEND", "fft").lower()

    # Traversability (T_α, T_θ)
    @property
    def similarity_angle_deg(self) -> float:
        return self.get_float("SIMILARITY_ANGLE_DEG", 10.0)

    @property
    def concavity_angle_deg(self) -> float:
        return self.get_float("CONCAVITY_ANGLE_DEG", 80.0)

    @property
    def planner_cost_weight(self) -> float:
        return self.get_float("PLANNER_COST_WEIGHT", 5.0)

    # Evaluation and output
    @property
    def invalid_sentinel(self) -> float:
        return self.get_float("INVALID_SENTINEL", -999.0)

    @property
    def include_invalid_in_error(self) -> bool:
        return self.get_bool("INCLUDE_INVALID_IN_ERROR", False)

    @property
    def seed(self) -> int:
        return self.get_int("SEED", 0)

    @property
    def output_dir(self) -> Path:
        return self.get_path("OUTPUT_DIR", "./output")

    @property
    def timing_enabled(self) -> bool:
        return self.get_bool("TIMING_ENABLED", True)

    @property
    def single_threaded(self) -> bool:
        return self.get_bool("SINGLE_THREADED", False)

    # Logging Configuration
    @property
    def log_level(self) -> str:
        return self.get_str("LOG_LEVEL", "INFO").upper()

    @property
    def log_dir(self) -> Path:
        return self.get_path("LOG_DIR", "./logs")

    @property
    def log_max_file_size(self) -> int:
        return self.get_int("LOG_MAX_FILE_SIZE", 10 * 1024 * 1024)  # 10MB

    @property
    def log_backup_count(self) -> int:
        return self.get_int("LOG_BACKUP_COUNT", 5)

    @property
    def log_enable_console(self) -> bool:
        return self.get_bool("LOG_ENABLE_CONSOLE", True)

    @property
    def log_enable_file(self) -> bool:
        return self.get_bool("LOG_ENABLE_FILE", True)

    def pipeline_config(self):
        """
        Build the validated pipeline configuration.

        Returns:
            PipelineConfig populated from this configuration

        Raises:
            ConfigurationError: If any value is missing, malformed or out of range
        """
        from ..pipeline.schema import PipelineConfig

        try:
            return PipelineConfig(
                map_size_m=self.map_size_m,
                cell_size_m=self.cell_size_m,
                height_diff_threshold_m=self.height_diff_threshold_m,
                variance_threshold=self.variance_threshold,
                bilateral_variance=self.bilateral_variance,
                kernel_radius_m=self.kernel_radius_m,
                similarity_angle_deg=self.similarity_angle_deg,
                concavity_angle_deg=self.concavity_angle_deg,
                vehicle_height_m=self.vehicle_height_m,
                overhang_height_m=self.overhang_height_m,
                lidar_height_m=self.lidar_height_m,
                fusion_mode=self.fusion_mode,
                bilateral_filter=self.bilateral_filter,
                estimated_variance=self.estimated_variance,
                min_observations=self.min_observations,
                planner_cost_weight=self.planner_cost_weight,
                invalid_sentinel=self.invalid_sentinel,
                include_invalid_in_error=self.include_invalid_in_error,
                variance_floor=self.variance_floor,
                bgk_backend=self.bgk_backend,
                kf_a=self.kf_a,
                kf_c=self.kf_c,
                kf_process_noise=self.kf_process_noise,
                kf_measurement_noise=self.kf_measurement_noise,
                kf_distance_scaled_noise=self.kf_distance_scaled_noise,
                seed=self.seed,
                output_dir=self.output_dir,
                timing_enabled=self.timing_enabled,
                single_threaded=self.single_threaded,
            )
        except ValidationError as e:
            problems = "\n".join(
                f"- {'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise ConfigurationError(f"Configuration validation failed:\n{problems}")

    def validate_configuration(self) -> bool:
        """
        Validate all configuration values.

        Returns:
            bool: True if configuration is valid

        Raises:
            ConfigurationError: If configuration is invalid
        """
        errors = []

        try:
            valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
            if self.log_level not in valid_levels:
                errors.append(f"LOG_LEVEL must be one of {valid_levels}")
        except ConfigurationError as e:
            errors.append(str(e))

        try:
            self.pipeline_config()
        except ConfigurationError as e:
            errors.append(str(e))

        if errors:
            raise ConfigurationError("Configuration validation failed:\n" + "\n".join(f"- {error}" for error in errors))

        return True

    def get_summary(self) -> dict:
        """Get configuration summary for logging/debugging."""
        return {
            'config_file': str(self.config_file) if self.config_file else None,
            'map': {
                'W': self.map_size_m,
                'omega': self.cell_size_m,
            },
            'fusion': {
                'mode': self.fusion_mode,
                'T_h': self.height_diff_threshold_m,
                'T_sigma': self.variance_threshold,
                'min_obs': self.min_observations,
            },
            'bgk': {
                'l': self.kernel_radius_m,
                'sigma_w': self.bilateral_variance,
                'bilateral_filter': self.bilateral_filter,
                'estimated_variance': self.estimated_variance,
            },
            'traversability': {
                'T_alpha': self.similarity_angle_deg,
                'T_theta': self.concavity_angle_deg,
                'lambda': self.planner_cost_weight,
            },
            'logging': {
                'level': self.log_level,
                'directory': str(self.log_dir),
                'console_enabled': self.log_enable_console,
            },
        }
