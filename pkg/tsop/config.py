"""
Tool configuration loaded from tsop.yaml.

Lookup order for the file:
  1. explicit path argument (must exist)
  2. TSOP_CONFIG environment variable (must exist)
  3. tsop.yaml in the repo root; defaults apply when absent

TSOP_LOG_LEVEL overrides logging.level regardless of the file.
"""

import copy
import logging
import os
from typing import Optional

import yaml

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), "..", "tsop.yaml")

DEFAULTS = {
    "logging":   {"level": "INFO"},
    "automaton": {"format": "dot"},
    "generate":  {"out_dir": "generated"},
    "simulate":  {"threads": 0, "join_timeout": 5.0},
}


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[str] = None) -> dict:
    """
    Return the effective configuration.

    Args:
        path: Explicit tsop.yaml path. Raises FileNotFoundError if missing.

    Returns:
        DEFAULTS merged with the file contents and environment overrides.
    """
    explicit = path or os.environ.get("TSOP_CONFIG")
    if explicit:
        with open(explicit) as f:
            loaded = yaml.safe_load(f) or {}
        logger.debug("Loaded config from %s", explicit)
    elif os.path.exists(DEFAULT_CONFIG_PATH):
        with open(DEFAULT_CONFIG_PATH) as f:
            loaded = yaml.safe_load(f) or {}
    else:
        loaded = {}

    config = _merge(DEFAULTS, loaded)

    level = os.environ.get("TSOP_LOG_LEVEL")
    if level:
        config["logging"]["level"] = level.upper()
    return config
