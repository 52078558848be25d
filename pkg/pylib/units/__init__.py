"""Simulation-rule units (pure functions; no engine state, no IO)."""

from .allocation_rules import incast_target, interleave_allocation
from .metrics_rules import Summary, compute_ratio, compute_summary, trace_stats
