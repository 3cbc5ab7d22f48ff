import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from ..config import Settings
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Aliases accepted in config files and on the command line
_ALIASES = {
    'tol': ('f_tolerance', 'x_tolerance'),
    'tolerance': ('f_tolerance', 'x_tolerance'),
    'max_iter': ('max_iterations',),
    'workers': ('threads',),
    'directory': ('log_dir',),
}


class Config:
    """Runtime configuration.

    Starts from the packaged defaults in ``Settings``, then merges an optional
    user file (YAML, JSON or TOML with identical keys), then command-line
    overrides. Sections such as ``[optimizer]`` or ``[scan]`` are flattened.
    """

    def __init__(self, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
        optimizer = Settings.OPTIMIZER_DEFAULTS
        self.settings: Dict[str, Any] = {
            'seed': int(optimizer['seed']),
            'restarts': int(optimizer['restarts']),
            'max_iterations': int(optimizer['max_iterations']),
            'f_tolerance': float(optimizer['f_tolerance']),
            'x_tolerance': float(optimizer['x_tolerance']),
            'initial_step': float(optimizer['initial_step']),
            'adaptive': bool(optimizer['adaptive']),
            'threads': Settings.SCAN_DEFAULTS.get('threads') or os.cpu_count() or 1,
            'format': Settings.SCAN_DEFAULTS['format'],
            'output': None,
            'max_dimension': int(Settings.LIMITS['max_dimension']),
            'log_dir': Settings.LOGGING.get('directory'),
            'console_level': Settings.LOGGING.get('console_level', 'INFO'),
            'file_level': Settings.LOGGING.get('file_level', 'DEBUG'),
        }
        self.source: Optional[str] = None
        if path:
            self.merge(self.load_file(path))
            self.source = str(path)
        if overrides:
            self.merge(overrides)

    @staticmethod
    def load_file(path: str) -> Dict[str, Any]:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        suffix = path.suffix.lower()
        try:
            if suffix == '.toml':
                with open(path, 'rb') as f:
                    data = tomllib.load(f)
            else:
                with open(path, 'r', encoding='utf-8') as f:
                    data = json.load(f) if suffix == '.json' else yaml.safe_load(f)
        except (OSError, ValueError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        flat: Dict[str, Any] = {}
        for key, value in data.items():
            if isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        return flat

    def merge(self, values: Dict[str, Any]) -> None:
        """Merge values over the current settings; None means 'not given'"""
        for key, value in values.items():
            if value is None:
                continue
            key = key.replace('-', '_')
            for target in _ALIASES.get(key, (key,)):
                if target not in self.settings:
                    raise ConfigError(f"unknown configuration key '{key}'")
                self.settings[target] = value

    def get(self, key: str) -> Any:
        """Get a configuration value"""
        return self.settings.get(key)

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value"""
        self.merge({key: value})

    def optimizer_config(self):
        from ..models.optimizer_model import OptimizerConfig

        return OptimizerConfig.from_mapping(self.settings)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.settings)
