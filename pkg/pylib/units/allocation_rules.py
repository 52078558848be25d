from __future__ import annotations

from typing import List, Sequence, Tuple, TypeVar

from models.errors import InvalidParameterError

T = TypeVar("T")


def interleave_allocation(nodes: Sequence[T]) -> Tuple[List[T], List[T]]:
    """Even positions become victims, odd positions aggressors."""
    if len(nodes) < 2 or len(nodes) % 2:
        raise InvalidParameterError(f"need an even node count >= 2, got {len(nodes)}")
    victims = list(nodes[0::2])
    aggressors = list(nodes[1::2])
    return victims, aggressors


def incast_target(aggressors: Sequence[T]) -> T:
    """The last aggressor receives the incast."""
    if not aggressors:
        raise InvalidParameterError("no aggressor to receive the incast")
    return aggressors[-1]
