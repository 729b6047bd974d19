"""
Config cache module.

Keeps the parsed solver and corpus configuration in memory so solvers and
request handlers do not re-read YAML on every call.
"""

import os
from threading import Lock
from typing import Any, Dict, Optional

import yaml


def _config_dir() -> str:
    return os.environ.get(
        "DCD_CONFIG_DIR",
        os.path.join(os.path.dirname(__file__), "config"),
    )


class SolverConfigCache:
    """Thread-safe configuration cache."""

    def __init__(self):
        self._solver_config: Optional[Dict[str, Any]] = None
        self._corpus_config: Optional[Dict[str, Any]] = None
        self._lock = Lock()

    def _load(self, name: str) -> Dict[str, Any]:
        path = os.path.join(_config_dir(), name)
        with open(path, "r") as f:
            return yaml.safe_load(f) or {}

    def get_solver_config(self) -> Dict[str, Any]:
        """Get cached solver config, loading from disk if not cached."""
        if self._solver_config is None:
            with self._lock:
                if self._solver_config is None:  # Double-check locking
                    self._solver_config = self._load("solver.yaml")
        return self._solver_config

    def get_corpus_config(self) -> Dict[str, Any]:
        """Get cached default corpus config."""
        if self._corpus_config is None:
            with self._lock:
                if self._corpus_config is None:
                    self._corpus_config = self._load("corpus.yaml")
        return self._corpus_config

    def get_oracle_budget(self) -> Dict[str, int]:
        """
        Oracle size limits, with DCD_ORACLE_MAX_* environment overrides.

        Returns:
            Dict with max_vertices, max_k and max_d
        """
        budget = dict(self.get_solver_config().get("oracle", {}))
        for key in ("max_vertices", "max_k", "max_d"):
            override = os.environ.get(f"DCD_ORACLE_{key.upper()}")
            if override is not None:
                budget[key] = int(override)
        budget.setdefault("max_vertices", 16)
        budget.setdefault("max_k", 6)
        budget.setdefault("max_d", 3)
        return budget

    def get_section(self, section: str) -> Dict[str, Any]:
        return self.get_solver_config().get(section, {})

    def get_schema_version(self) -> int:
        return int(self.get_solver_config().get("schema_version", 1))

    def clear_cache(self):
        """Clear all cached data (useful for testing)."""
        with self._lock:
            self._solver_config = None
            self._corpus_config = None


# Global cache instance
config_cache = SolverConfigCache()
