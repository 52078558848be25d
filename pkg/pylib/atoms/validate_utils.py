from __future__ import annotations

from typing import Any, Iterable


def in_choices(v: Any, choices: Iterable[Any]) -> bool:
    return v in set(choices)


def is_positive_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


def is_probability(v: Any, *, allow_zero: bool = False) -> bool:
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        return False
    return (0 <= v <= 1) if allow_zero else (0 < v <= 1)
