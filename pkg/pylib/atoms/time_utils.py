from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation

PS_PER_NS = 1000

DURATION_UNITS = {
    "ns": 1,
    "us": 1_000,
    "ms": 1_000_000,
    "s": 1_000_000_000,
}

_DURATION_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(ns|us|ms|s)\s*$")


def parse_duration(text: str) -> int:
    """Parse '10us', '1.5ms', '250ns' into integer nanoseconds.

    A unit suffix is mandatory; a bare number raises ValueError.
    """
    m = _DURATION_RE.match(str(text))
    if not m:
        raise ValueError(f"duration needs a unit suffix (ns, us, ms, s): {text!r}")
    try:
        value = Decimal(m.group(1)) * DURATION_UNITS[m.group(2)]
    except InvalidOperation as e:
        raise ValueError(f"bad duration: {text!r}") from e
    if value != value.to_integral_value():
        raise ValueError(f"duration is not a whole number of ns: {text!r}")
    return int(value)


def format_duration(ns: int) -> str:
    """Inverse of parse_duration using the largest unit that divides exactly."""
    ns = int(ns)
    if ns == 0:
        return "0ns"
    for unit in ("s", "ms", "us"):
        scale = DURATION_UNITS[unit]
        if ns % scale == 0:
            return f"{ns // scale}{unit}"
    return f"{ns}ns"


def ns_to_ps(ns: int) -> int:
    return int(ns) * PS_PER_NS


def ps_to_ns(ps: int) -> float:
    return ps / PS_PER_NS
