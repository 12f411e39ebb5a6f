"""Configuration management for the degenerate coercivity lab"""
import copy
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .core.errors import ConfigurationError

WORKERS_ENV = "DEGEN_WORKERS"

# Default configuration structure
DEFAULT_CONFIG = {
    "problem": {
        "N": 3,
        "theta": 0.75,
        "gamma": 2.4,
        "amp": 1.0,
        "coef": "const:1",
        "mode": "ball",
        "rmin": 0.01,
        "inner_value": None,
        "outer_radius": 1.0,
        "source_table": None,
    },
    "mesh": {
        "M": 512,
        "grading": 3.0,
    },
    "solver": {
        "method": "picard",
        "tol_update": 1e-10,
        "max_iter": 200,
        "damping": 1.0,
        "damping_floor": 0.0625,
        "residual_slack": 1.0,
        "stall_limit": 8,
        "stall_ratio": 0.99,
    },
    "sequence": {
        "schedule": [2.0 ** j for j in range(11)],
        "workers": None,
    },
    "analysis": {
        "k_list": [1.0, 2.0, 4.0, 8.0],
        "m": None,
        "rho": None,
        "samples": 100000,
        "seed": 0,
        "window": [1e-4, 1e-2],
        "q_range": [1.0, 2.0],
        "refinements": [256, 512, 1024, 2048],
        "delta": 0.05,
        "bumps": [[0.2, 0.8], [0.1, 0.5], [0.3, 0.9], [0.4, 0.7], [0.5, 0.95]],
    },
    "phase": {
        "theta_steps": 200,
        "m_steps": 200,
        "m_min": 1,
        "m_max": None,
    },
    "output": {
        "format": "csv",
    },
    "logging": {
        "level": "WARNING",
        "file": None,
    },
}


def _coerce(value: Any) -> Any:
    """YAML 1.1 reads 1e-10 as a string; turn such numerals into floats"""
    if isinstance(value, dict):
        return {k: _coerce(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_coerce(v) for v in value]
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def parse_pairs(text: str) -> Dict[str, Any]:
    """Parse `dotted.key = value` lines; values are typed YAML scalars"""
    config: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        try:
            parsed = _coerce(yaml.safe_load(value)) if value else None
        except yaml.YAMLError as e:
            raise ConfigurationError(f"line {lineno}: cannot parse value {value!r}: {e}") from e
        node = config
        keys = key.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"line {lineno}: {key} conflicts with an earlier value")
        node[keys[-1]] = parsed
    return config


# Configuration management class
class ConfigManager:
    """Built-in defaults overlaid by an optional config file"""

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path else None
        self.config = self._load()

    def _load(self) -> Dict[str, Any]:
        """Load configuration from file"""
        config = copy.deepcopy(DEFAULT_CONFIG)
        if self.config_path is None:
            return config
        if not self.config_path.exists():
            raise ConfigurationError(f"config file not found: {self.config_path}")

        text = self.config_path.read_text(encoding="utf-8")
        if self.config_path.suffix in (".yaml", ".yml"):
            try:
                user_config = yaml.safe_load(text) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"invalid YAML in {self.config_path}: {e}") from e
            if not isinstance(user_config, dict):
                raise ConfigurationError(f"{self.config_path} must hold a mapping")
        else:
            user_config = parse_pairs(text)
        user_config = _coerce(user_config)

        # Merge with defaults
        self._deep_merge(config, user_config)
        return config

    # Helper method for deep merging dictionaries
    def _deep_merge(self, base: dict, override: dict):
        """Deep merge override into base"""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._deep_merge(base[key], value)
            else:
                base[key] = value

    # Get configuration value by dot-notation key
    def get(self, key: str, default: Any = None) -> Any:
        """Get config value by dot-notation key"""
        value = self.config
        for k in key.split('.'):
            if isinstance(value, dict):
                value = value.get(k)
            else:
                return default
        return value if value is not None else default

    # Set configuration value by dot-notation key
    def set(self, key: str, value: Any):
        """Set config value by dot-notation key"""
        keys = key.split('.')
        config = self.config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    # Apply command-line values that were actually given
    def override(self, values: Dict[str, Any]):
        """Set every dot-notation key whose value is not None"""
        for key, value in values.items():
            if value is not None:
                self.set(key, value)

    def workers(self) -> int:
        """Pool size: sequence.workers, else $DEGEN_WORKERS, else the CPU count"""
        configured = self.get("sequence.workers")
        if configured is not None:
            return int(configured)
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        return os.cpu_count() or 1
