"""User configuration of cpathlab.

The configuration is a JSON object stored under the user config directory (or any file given with
``--config`` or ``CPATHLAB_CONFIG``). Missing keys take the defaults below and a broken file is logged
and ignored, so the command-line tool always starts.
"""

import os
import json
import logging
from typing import Any, Dict, Optional

from platformdirs import user_cache_dir, user_config_dir

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES: Dict[str, float] = {
    "rank_tol": 1e-8,
    "trace_tol": 1e-9,
    "corrector_tol": 1e-11,
    "barrier_tol_abs": 1e-12,
    "barrier_tol_rel": 1e-8,
    "feas_tol": 1e-10,
    "fd_step": 1e-5,
    "fd_tol": 1e-5,
}


class Config:
    """Configuration values of cpathlab backed by a JSON file.

    Keys read by the library:

    | Key          | Meaning                                                          |
    |--------------|------------------------------------------------------------------|
    | cache_dir    | Default directory of traces and reports (OS cache dir if unset)  |
    | log_level    | Level name of the console logger of the command-line tool        |
    | tolerances   | Object overriding entries of DEFAULT_TOLERANCES by name          |

    Other keys are kept and saved back untouched.
    """

    def __init__(self, app_name: str = "cpathlab", config_file: Optional[str] = None):
        """Build the configuration from defaults and the config file.

        Args:
            app_name (str): Name used for the platform config and cache directories.
            config_file (Optional[str]): Path of the JSON file; defaults to ``config.json`` in the
                user config directory.

        """
        self.app_name: str = app_name
        self.config_file: str = config_file or os.path.join(user_config_dir(app_name), "config.json")
        self._data: Dict[str, Any] = {
            "cache_dir": user_cache_dir(app_name),
            "log_level": "WARNING",
            "tolerances": {},
        }
        if os.path.isdir(self.config_file):
            logger.warning(f"The config_file path '{self.config_file}' is a directory, not a file. Using default.")
            return
        self.load_config()

    def load_config(self) -> None:
        """Merge the config file into the current values and create the cache directory."""
        self._data.update(self._read_file())
        self._ensure_cache_dir()

    def _read_file(self) -> Dict[str, Any]:
        if not os.path.exists(self.config_file):
            return {}
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                content = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Failed to load configuration file {self.config_file}: {e}")
            return {}
        if not isinstance(content, dict):
            logger.error(f"Failed to load configuration file {self.config_file}: expected a JSON object.")
            return {}
        return content

    def _ensure_cache_dir(self) -> None:
        cache_dir = self.cache_dir
        try:
            os.makedirs(cache_dir, exist_ok=True)
        except FileExistsError:
            logger.error(f"The cache_dir path '{cache_dir}' exists and is not a directory.")
        except OSError as e:
            logger.error(f"Cannot create cache_dir '{cache_dir}': {e}")

    def save_config(self) -> None:
        """Write all current values to the config file, logging failures."""
        try:
            os.makedirs(os.path.dirname(self.config_file) or ".", exist_ok=True)
            with open(self.config_file, "w", encoding="utf-8") as f:
                json.dump(self._data, f, indent=4)
        except OSError as e:
            logger.error(f"Failed to save configuration file {self.config_file}: {e}")

    def set_param(self, key: str, value: Any) -> None:
        """Set the value of ``key``."""
        self._data[key] = value

    def get_param(self, key: str) -> Optional[Any]:
        """Return the value of ``key``, or None."""
        return self._data.get(key)

    @property
    def cache_dir(self) -> str:
        """Directory where traces and reports go when no output path is given."""
        return self.get_param("cache_dir")

    @property
    def log_level(self) -> int:
        """Console log level as a logging constant; unknown names give WARNING."""
        level = logging.getLevelName(str(self.get_param("log_level") or "WARNING").upper())
        return level if isinstance(level, int) else logging.WARNING

    @property
    def tolerances(self) -> Dict[str, float]:
        """DEFAULT_TOLERANCES with the overrides of the ``tolerances`` key applied.

        Unknown names and values that are not positive numbers are ignored with a warning.
        """
        merged = dict(DEFAULT_TOLERANCES)
        overrides = self.get_param("tolerances") or {}
        if not isinstance(overrides, dict):
            logger.warning("Ignoring 'tolerances' configuration entry: expected an object.")
            return merged
        for key, value in overrides.items():
            if key not in merged:
                logger.warning(f"Ignoring unknown tolerance '{key}' in configuration.")
                continue
            try:
                tol = float(value)
            except (TypeError, ValueError):
                tol = float("nan")
            if not tol > 0:
                logger.warning(f"Ignoring tolerance '{key}' = {value!r}: expected a positive number.")
                continue
            merged[key] = tol
        return merged
