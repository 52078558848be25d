from __future__ import annotations

import re
from decimal import Decimal

SIZE_UNITS = {
    "": 1,
    "b": 1,
    "kb": 1_000,
    "mb": 1_000_000,
    "gb": 1_000_000_000,
    "kib": 1 << 10,
    "mib": 1 << 20,
    "gib": 1 << 30,
}

RATE_UNITS = {
    "bps": 1,
    "kbps": 1_000,
    "mbps": 1_000_000,
    "gbps": 1_000_000_000,
    "tbps": 1_000_000_000_000,
}

_NUM_UNIT_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*([A-Za-z]*)\s*$")


def _split(text: str) -> tuple[Decimal, str]:
    m = _NUM_UNIT_RE.match(str(text))
    if not m:
        raise ValueError(f"not a number with unit: {text!r}")
    return Decimal(m.group(1)), m.group(2).lower()


def parse_size(text: str | int) -> int:
    """'16MiB' -> 16777216; a bare integer is bytes."""
    if isinstance(text, int):
        return text
    value, unit = _split(text)
    if unit not in SIZE_UNITS:
        raise ValueError(f"unknown size unit in {text!r}")
    out = value * SIZE_UNITS[unit]
    if out != out.to_integral_value():
        raise ValueError(f"size is not a whole number of bytes: {text!r}")
    return int(out)


def parse_rate(text: str | int) -> int:
    """'200Gbps' -> 200_000_000_000 bits per second. A unit is required."""
    if isinstance(text, int):
        return text
    value, unit = _split(text)
    if unit not in RATE_UNITS:
        raise ValueError(f"rate needs a unit suffix (bps, Mbps, Gbps, ...): {text!r}")
    out = value * RATE_UNITS[unit]
    if out != out.to_integral_value():
        raise ValueError(f"rate is not a whole number of bps: {text!r}")
    return int(out)


def format_size(n: int) -> str:
    """Binary-suffixed size, exact: 4096 -> '4KiB', 100 -> '100B'."""
    n = int(n)
    for unit, scale in (("GiB", 1 << 30), ("MiB", 1 << 20), ("KiB", 1 << 10)):
        if n and n % scale == 0:
            return f"{n // scale}{unit}"
    return f"{n}B"


def format_rate(bps: int) -> str:
    bps = int(bps)
    for unit, scale in (("Tbps", 10**12), ("Gbps", 10**9), ("Mbps", 10**6), ("Kbps", 10**3)):
        if bps and bps % scale == 0:
            return f"{bps // scale}{unit}"
    return f"{bps}bps"


def fmt_float(v: float | None, digits: int = 6) -> str:
    """Fixed-point text for CSV cells; None becomes ''."""
    if v is None:
        return ""
    return f"{v:.{digits}f}"
