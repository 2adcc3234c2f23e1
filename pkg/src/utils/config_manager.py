import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

import appdirs

from ..utils.logging_setup import APP_NAME, get_logger, set_console_level

logger = get_logger('utils.config_manager')

MAX_ELEMENTS_ENV = "CEFORGE_MAX_ELEMENTS"


class ConfigManager:
    _default_instance: Optional['ConfigManager'] = None

    DEFAULT_CONFIG: Dict[str, Any] = {
        "limits": {
            "max_elements": 20,
            "max_downsets": 64,
        },
        "search": {
            "budget": 10000,
        },
        "run": {
            "jobs": 1,
        },
        "logging": {
            "console_level": "WARNING",
        },
    }

    def __init__(self, config_dir: Optional[Path] = None, persist: bool = True):
        self.app_name = APP_NAME
        self.config_dir = Path(config_dir) if config_dir is not None else Path(appdirs.user_config_dir(APP_NAME))
        self.config_file = self.config_dir / "config.json"
        self.persist = persist

        if self.persist:
            try:
                self.config_dir.mkdir(parents=True, exist_ok=True)
            except OSError as e:
                logger.error(f"Cannot create config directory {self.config_dir}: {e}")
                self.persist = False

        self.config = self.load_config()
        self._apply_env_overrides()
        set_console_level(self.get("logging.console_level", "WARNING"))

    @classmethod
    def default(cls) -> 'ConfigManager':
        """Process-wide instance used when callers do not pass explicit bounds."""
        if cls._default_instance is None:
            cls._default_instance = cls()
        return cls._default_instance

    @classmethod
    def reset_default(cls, instance: Optional['ConfigManager'] = None) -> None:
        cls._default_instance = instance

    @staticmethod
    def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        merged = copy.deepcopy(base)
        for key, value in override.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = ConfigManager._merge(merged[key], value)
            else:
                merged[key] = value
        return merged

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from file or fall back to defaults"""
        if self.config_file.exists():
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    return self._merge(self.DEFAULT_CONFIG, json.load(f))
            except Exception as e:
                logger.error(f"Error loading config: {e}")
        return copy.deepcopy(self.DEFAULT_CONFIG)

    def _apply_env_overrides(self) -> None:
        raw = os.getenv(MAX_ELEMENTS_ENV)
        if raw is None:
            return
        try:
            value = int(raw)
        except ValueError:
            logger.error(f"Ignoring {MAX_ELEMENTS_ENV}={raw!r}: not an integer")
            return
        if value < 0:
            logger.error(f"Ignoring {MAX_ELEMENTS_ENV}={raw!r}: negative")
            return
        self.config["limits"]["max_elements"] = value

    def save_config(self) -> None:
        """Save current configuration to file"""
        if not self.persist:
            return
        try:
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=4)
        except Exception as e:
            logger.error(f"Error saving config: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dotted key"""
        value: Any = self.config
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by dotted key"""
        keys = key.split('.')
        config = self.config
        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value
        if key == "logging.console_level":
            set_console_level(value)
        self.save_config()

    @property
    def max_elements(self) -> int:
        return int(self.get("limits.max_elements", 20))

    @property
    def max_downsets(self) -> int:
        return int(self.get("limits.max_downsets", 64))

    @property
    def budget(self) -> int:
        return int(self.get("search.budget", 10000))
