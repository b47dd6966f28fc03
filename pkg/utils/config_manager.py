"""
Configuration Manager Utility
System settings from config/*.yaml and flat key = value run files
"""

import math
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import ValidationError

from models.run_config import RunConfig
from utils.exceptions import ConfigError

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
THREADS_ENV = "SQUINTLOC_THREADS"


class ConfigManager:
    """Loads every YAML file in the config directory"""

    def __init__(self, config_dir: Union[str, Path] = DEFAULT_CONFIG_DIR):
        self.config_dir = Path(config_dir)
        self.configs: Dict[str, Dict[str, Any]] = {}
        self.load_all_configs()

    def load_all_configs(self):
        """Load all configuration files from config directory"""
        if not self.config_dir.is_dir():
            return
        for config_file in sorted(self.config_dir.glob("*.yaml")):
            self.load_config(config_file.stem)

    def load_config(self, config_name: str) -> Dict[str, Any]:
        """Load a specific configuration file"""
        yaml_path = self.config_dir / f"{config_name}.yaml"
        try:
            if yaml_path.exists():
                with open(yaml_path, 'r') as f:
                    config = yaml.safe_load(f) or {}
            else:
                config = {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Failed to load config {config_name}: {str(e)}") from e
        self.configs[config_name] = config
        return config

    def get_config(self, config_name: str) -> Dict[str, Any]:
        """Get a configuration by name"""
        if config_name not in self.configs:
            self.load_config(config_name)
        return self.configs.get(config_name, {})

    def get_value(self, config_name: str, key_path: str, default: Any = None) -> Any:
        """Get a specific value from configuration using dot notation"""
        value = self.get_config(config_name)
        for key in key_path.split('.'):
            if isinstance(value, dict):
                value = value.get(key)
            else:
                return default
        return value if value is not None else default

    def set_value(self, config_name: str, key_path: str, value: Any):
        """Set a specific value in configuration using dot notation"""
        config = self.configs.setdefault(config_name, {})
        keys = key_path.split('.')
        for key in keys[:-1]:
            config = config.setdefault(key, {})
        config[keys[-1]] = value


class SystemConfig:
    """System configuration accessors"""

    def __init__(self, config_manager: Optional[ConfigManager] = None):
        self.config_manager = config_manager or ConfigManager()

    def get_app_name(self) -> str:
        return self.config_manager.get_value('system', 'app.name', 'squintloc')

    def get_app_version(self) -> str:
        return str(self.config_manager.get_value('system', 'app.version', '1.0.0'))

    def get_log_level(self) -> str:
        return self.config_manager.get_value('system', 'logging.level', 'INFO')

    def get_log_file(self) -> Optional[str]:
        """Log file path; empty means console only"""
        return self.config_manager.get_value('system', 'logging.file', None) or None

    def get_log_format(self) -> str:
        return self.config_manager.get_value(
            'system', 'logging.format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    def get_thread_count(self) -> int:
        """Worker threads; SQUINTLOC_THREADS overrides the file, 0 means one per CPU"""
        raw = os.environ.get(THREADS_ENV)
        if raw is not None and raw.strip():
            try:
                threads = int(raw)
            except ValueError as e:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
        else:
            threads = int(self.config_manager.get_value('system', 'experiments.threads', 1))
        if threads < 0:
            raise ConfigError(f"thread count must be >= 0, got {threads}")
        return threads if threads > 0 else (os.cpu_count() or 1)

    def get_desk_trials(self) -> int:
        return int(self.config_manager.get_value('system', 'experiments.desk_trials', 200))

    def get_desk_subcarriers(self) -> int:
        return int(self.config_manager.get_value('system', 'experiments.desk_subcarriers', 512))

    def get_speed_of_light(self) -> float:
        return float(self.config_manager.get_value('system', 'physics.speed_of_light_mps', 3e8))


def _coerce(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in ('inf', '+inf', '-inf'):
        return -math.inf if value.strip().startswith('-') else math.inf
    if isinstance(value, list):
        return [_coerce(v) for v in value]
    return value


def parse_run_text(text: str) -> Dict[str, Any]:
    """key = value lines; '#' starts a comment, values are read as YAML scalars or lists"""
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition('=')
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _coerce(yaml.safe_load(value.strip())) if value.strip() else None
        except yaml.YAMLError as e:
            raise ConfigError(f"line {lineno}: cannot parse value for {key!r}") from e
    return values


def build_run_config(values: Dict[str, Any], system: Optional[SystemConfig] = None) -> RunConfig:
    """Validate parsed run values; c_mps, trials and m_intervals fall back to the system settings"""
    values = {k: v for k, v in values.items() if v is not None}
    if system is not None:
        values.setdefault('c_mps', system.get_speed_of_light())
        values.setdefault('trials', system.get_desk_trials())
        values.setdefault('m_intervals', system.get_desk_subcarriers() - 1)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        where = '.'.join(str(p) for p in first.get('loc', ())) or 'config'
        raise ConfigError(f"{where}: {first.get('msg')} ({e.error_count()} error(s))") from e


def load_run_config(path: Union[str, Path], system: Optional[SystemConfig] = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    return build_run_config(parse_run_text(text), system)
