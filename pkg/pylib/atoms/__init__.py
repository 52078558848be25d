"""Atomic utilities (no IO, no config, no engine state)."""
