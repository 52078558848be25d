from __future__ import annotations

from typing import Optional, Tuple

from models.types import EcnConfig


def mark_probability(occupancy: int, cfg: EcnConfig) -> float:
    """RED-style marking curve over queue occupancy in bytes.

    Below kmin nothing is marked, at or above kmax everything is, and the
    probability ramps linearly up to pmax in between.
    """
    if occupancy < cfg.kmin:
        return 0.0
    if occupancy >= cfg.kmax:
        return 1.0
    span = cfg.kmax - cfg.kmin
    return cfg.pmax * (occupancy - cfg.kmin) / span


def should_mark(occupancy: int, cfg: EcnConfig, u: float) -> bool:
    """u is a uniform draw in [0, 1)."""
    p = mark_probability(occupancy, cfg)
    if p <= 0.0:
        return False
    if p >= 1.0:
        return True
    return u < p


def validate_ecn(cfg: EcnConfig, capacity: Optional[int]) -> Tuple[bool, str]:
    if cfg.kmin < 0 or cfg.kmin > cfg.kmax:
        return False, "need 0 <= kmin <= kmax"
    if capacity is not None and cfg.kmax > capacity:
        return False, "kmax exceeds queue capacity"
    if not (0 < cfg.pmax <= 1):
        return False, "pmax must be in (0, 1]"
    return True, ""
