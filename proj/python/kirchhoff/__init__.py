"""Nonlocal fourth-order plate solver."""

from ._core import S, Config, ConfigError, SolverError, audit, config_hash, run, solve, sweep

__all__ = ["S", "Config", "ConfigError", "SolverError", "audit", "config_hash", "run", "solve", "sweep"]
