from __future__ import annotations

from typing import Iterable

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 finalization round over a 64-bit value."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix(seed: int, *values: int) -> int:
    """Fold integers into a seed; order matters."""
    h = splitmix64(int(seed) & MASK64)
    for v in values:
        h = splitmix64(h ^ (int(v) & MASK64))
    return h


def mix_text(seed: int, parts: Iterable[str]) -> int:
    """Seed derivation from string coordinates (sweep cells)."""
    h = splitmix64(int(seed) & MASK64)
    for part in parts:
        for b in str(part).encode("utf-8"):
            h = splitmix64(h ^ b)
        h = splitmix64(h ^ 0xFF)
    return h
