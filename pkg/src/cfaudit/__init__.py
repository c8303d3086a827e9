"""Simulator for control-flow auditing with partial, contention-aware log reporting."""

from .sim import Mode, Workload, run_simulation

__version__ = "0.1.0"
