from __future__ import annotations

from typing import Iterable, List, Tuple

from models.errors import InvalidParameterError
from models.types import CollectiveKind, CollectiveSchedule, Transfer


def ring_allgather(n: int, block: int) -> CollectiveSchedule:
    """n-1 rounds; in every round rank i forwards one block to rank i+1."""
    if n < 1:
        raise InvalidParameterError("ring allgather needs at least one rank")
    if n >= 2 and block < 1:
        raise InvalidParameterError("block must be at least 1 byte")
    rounds = tuple(
        tuple(Transfer(i, (i + 1) % n, block) for i in range(n))
        for _ in range(n - 1)
    )
    return CollectiveSchedule(kind=CollectiveKind.ALLGATHER, n=n, rounds=rounds)


def alltoall_blocks(n: int, vector: int) -> List[int]:
    """Per-destination block sizes in send order; remainder rides on the last one."""
    block = vector // n
    blocks = [block] * (n - 1)
    blocks[-1] += vector - block * n
    return blocks


def linear_alltoall(n: int, vector: int, window: int = 4) -> CollectiveSchedule:
    """Rank i sends vector/n to i+1, i+2, ... (mod n), `window` at a time."""
    if n < 2:
        raise InvalidParameterError("alltoall needs at least two ranks")
    if vector < n:
        raise InvalidParameterError(f"vector ({vector} B) smaller than rank count ({n})")
    if window < 1:
        raise InvalidParameterError("alltoall window must be >= 1")
    blocks = alltoall_blocks(n, vector)
    transfers: List[Transfer] = []
    for i in range(n):
        for k in range(1, n):
            transfers.append(Transfer(i, (i + k) % n, blocks[k - 1]))
    return CollectiveSchedule(kind=CollectiveKind.ALLTOALL, n=n, rounds=(tuple(transfers),), window=window)


def incast(senders: Iterable[int], target: int, size: int, n: int | None = None) -> CollectiveSchedule:
    """Every sender pushes `size` bytes to target in a single round."""
    senders = sorted(set(senders))
    if not senders:
        raise InvalidParameterError("incast needs at least one sender")
    if target in senders:
        raise InvalidParameterError("incast target cannot also be a sender")
    if size < 1:
        raise InvalidParameterError("incast size must be at least 1 byte")
    ranks = max(max(senders), target) + 1 if n is None else n
    round0 = tuple(Transfer(s, target, size) for s in senders)
    return CollectiveSchedule(kind=CollectiveKind.INCAST, n=ranks, rounds=(round0,))


def permutation(n: int, size: int) -> CollectiveSchedule:
    """Rank i sends to rank (i + n/2) mod n; every rank sends and receives once."""
    if n < 2:
        raise InvalidParameterError("permutation needs at least two ranks")
    if size < 1:
        raise InvalidParameterError("permutation size must be at least 1 byte")
    shift = max(1, n // 2)
    round0 = tuple(Transfer(i, (i + shift) % n, size) for i in range(n))
    return CollectiveSchedule(kind=CollectiveKind.PERMUTATION, n=n, rounds=(round0,))


def check_schedule(sched: CollectiveSchedule) -> Tuple[bool, str]:
    for t in sched.transfers:
        if t.src == t.dst:
            return False, f"rank {t.src} sends to itself"
        if t.size <= 0:
            return False, "transfer with no bytes"
        if not (0 <= t.src < sched.n and 0 <= t.dst < sched.n):
            return False, f"transfer {t} references an unknown rank"
    return True, ""
