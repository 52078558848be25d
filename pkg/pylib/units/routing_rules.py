from __future__ import annotations

from typing import Dict, List, Mapping, Sequence, Tuple

from models.errors import InvalidParameterError
from models.types import FlowID, FlowMatrix, LinkID, NodeID, Path
from pylib.atoms.hash_utils import mix


def flow_hash_key(src_index: int, dst_index: int) -> int:
    """Stable per-pair key, the simulated analogue of a 5-tuple."""
    return (int(src_index) << 32) | int(dst_index)


def ecmp_index(key: int, seed: int, n: int) -> int:
    if n <= 0:
        raise InvalidParameterError("ecmp over an empty path set")
    return mix(seed, key) % n


def deterministic_index(dst_index: int, n: int) -> int:
    """Destination-mod-k over the minimal paths."""
    if n <= 0:
        raise InvalidParameterError("deterministic routing over an empty path set")
    return int(dst_index) % n


def first_hop(path: Path) -> LinkID:
    return path[0] if path else -1


def path_load(path: Path, load: Mapping[LinkID, float]) -> Tuple[float, float]:
    """(worst link, total) load along a path; an empty path carries nothing."""
    if not path:
        return 0.0, 0.0
    values = [float(load.get(link, 0)) for link in path]
    return max(values), sum(values)


def adaptive_index(
    paths: Sequence[Path],
    minimal: Sequence[bool],
    load: Mapping[LinkID, float],
    bias_bytes: float,
) -> int:
    """Least-loaded minimal path, judged over every link of the path.

    A path scores its most loaded link first, then the sum over its links.
    Non-minimal paths are only candidates once every minimal path has a link
    above bias_bytes. Ties go to the lowest first-hop link id, then to the
    lexicographically smaller path.
    """
    if not paths:
        raise InvalidParameterError("adaptive routing over an empty path set")

    def score(i: int) -> Tuple[float, float, LinkID, Path]:
        worst, total = path_load(paths[i], load)
        return worst, total, first_hop(paths[i]), paths[i]

    mins = [i for i, m in enumerate(minimal) if m]
    nonmins = [i for i, m in enumerate(minimal) if not m]
    best_min = min(mins, key=score) if mins else None
    if best_min is not None:
        all_hot = all(score(i)[0] > bias_bytes for i in mins)
        if not (all_hot and nonmins):
            return best_min
    best_non = min(nonmins, key=score)
    if best_min is None:
        return best_non
    # detour only pays off if its worst link is actually less loaded
    return best_non if score(best_non)[0] < score(best_min)[0] else best_min


def nslb_assign(matrix: FlowMatrix, uplinks_per_edge: Mapping[NodeID, Sequence[LinkID]]) -> FlowMatrix:
    """Collision-free uplink assignment per source edge.

    Existing assignments of flows still in the matrix are kept; new flows
    go to the least-loaded uplink (lowest id on ties); afterwards flows move
    off the most-loaded uplink until loads differ by at most one. The result
    depends only on the matrix contents.
    """
    by_src: Dict[NodeID, List[FlowID]] = {}
    for fid, (src_edge, dst_edge) in matrix.flows.items():
        if src_edge == dst_edge:
            continue
        by_src.setdefault(src_edge, []).append(fid)

    assignment: Dict[FlowID, LinkID] = {}
    for src_edge in sorted(by_src):
        ups = sorted(uplinks_per_edge.get(src_edge, ()))
        if not ups:
            raise InvalidParameterError(f"edge {src_edge} has no uplinks")
        members: Dict[LinkID, List[FlowID]] = {u: [] for u in ups}
        pending: List[FlowID] = []
        for fid in sorted(by_src[src_edge]):
            prev = matrix.assignment.get(fid)
            if prev in members:
                members[prev].append(fid)
            else:
                pending.append(fid)
        for fid in pending:
            u = min(ups, key=lambda x: (len(members[x]), x))
            members[u].append(fid)
        while True:
            hi = max(ups, key=lambda x: (len(members[x]), -x))
            lo = min(ups, key=lambda x: (len(members[x]), x))
            if len(members[hi]) - len(members[lo]) <= 1:
                break
            moved = max(members[hi])
            members[hi].remove(moved)
            members[lo].append(moved)
        for u, fids in members.items():
            for fid in fids:
                assignment[fid] = u

    return FlowMatrix(flows=dict(matrix.flows), rates=dict(matrix.rates), assignment=assignment)


def uplink_loads(matrix: FlowMatrix) -> Dict[LinkID, int]:
    loads: Dict[LinkID, int] = {}
    for u in matrix.assignment.values():
        loads[u] = loads.get(u, 0) + 1
    return loads
