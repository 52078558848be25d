"""
fabsim v1.0 - 拓撲服務模組

功能：建構單交換機、leaf-spine、三層 fat-tree、dragonfly / dragonfly+ 拓撲，
      並列舉邊緣交換機之間的候選路徑（最短 + 單次繞行）
"""
from __future__ import annotations

import itertools
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

import config_manager
from models.errors import InternalError, InvalidParameterError
from models.types import (
    Link, LinkID, NodeID, Path, PathPolicy, PathSet, SwitchInfo, Topology,
)
from services.logger_service import get_logger

logger = get_logger('fabsim.topology')

DEFAULT_LATENCY_NS = 100


# ===== 建構輔助 =====

class _Builder:
    """累積節點與鏈路；鏈路 id 依加入順序遞增"""

    def __init__(self, name: str, latency_ns: int) -> None:
        if latency_ns < 0:
            raise InvalidParameterError("link latency must be >= 0")
        self.name = name
        self.latency_ns = latency_ns
        self.endpoints: List[NodeID] = []
        self.switches: Dict[NodeID, SwitchInfo] = {}
        self.links: List[Link] = []
        self.attachment: Dict[NodeID, NodeID] = {}
        self.host_uplink: Dict[NodeID, LinkID] = {}
        self.host_downlink: Dict[NodeID, LinkID] = {}

    def switch(self, sid: NodeID, tier: str, group: Optional[int] = None) -> NodeID:
        self.switches[sid] = SwitchInfo(sid, tier, group)
        return sid

    def link(self, a: NodeID, b: NodeID, rate: int, kind: str = 'fabric') -> Tuple[LinkID, LinkID]:
        if rate <= 0:
            raise InvalidParameterError("link rate must be > 0")
        fwd = Link(len(self.links), a, b, int(rate), self.latency_ns, kind)
        self.links.append(fwd)
        rev = Link(len(self.links), b, a, int(rate), self.latency_ns, kind)
        self.links.append(rev)
        return fwd.id, rev.id

    def endpoint(self, edge: NodeID, rate: int) -> NodeID:
        eid = f"h{len(self.endpoints)}"
        self.endpoints.append(eid)
        up, down = self.link(eid, edge, rate, 'host')
        self.attachment[eid] = edge
        self.host_uplink[eid] = up
        self.host_downlink[eid] = down
        return eid

    def build(self) -> Topology:
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(self.endpoints, kind='endpoint')
        for sid, info in self.switches.items():
            graph.add_node(sid, kind='switch', tier=info.tier, group=info.group)
        for link in self.links:
            graph.add_edge(link.src, link.dst, key=link.id, capacity=link.capacity_bps, latency=link.latency_ns)

        sg = nx.DiGraph()
        sg.add_nodes_from(self.switches)
        for link in self.links:
            if link.src in self.switches and link.dst in self.switches:
                if sg.has_edge(link.src, link.dst):
                    sg[link.src][link.dst]['links'].append(link.id)
                else:
                    sg.add_edge(link.src, link.dst, links=[link.id])

        topo = Topology(
            name=self.name,
            endpoints=tuple(self.endpoints),
            switches=dict(self.switches),
            links=tuple(self.links),
            attachment=dict(self.attachment),
            graph=graph,
            host_uplink=dict(self.host_uplink),
            host_downlink=dict(self.host_downlink),
            switch_graph=sg,
        )
        ok, msg = check_topology(topo)
        if not ok:
            raise InternalError(f"{self.name}: {msg}")
        return topo


def check_topology(topo: Topology) -> Tuple[bool, str]:
    """結構性檢查：連通、每端點單一邊緣交換機、容量/延遲為正"""
    if not topo.switches:
        return False, "no switches"
    for e in topo.endpoints:
        edge = topo.attachment.get(e)
        if edge not in topo.switches:
            return False, f"endpoint {e} not attached to a switch"
        ups = [l for l in topo.links if l.src == e]
        if len(ups) != 1:
            return False, f"endpoint {e} has {len(ups)} uplinks"
    for link in topo.links:
        if link.capacity_bps <= 0:
            return False, f"link {link.id} has non-positive capacity"
        if link.latency_ns < 0:
            return False, f"link {link.id} has negative latency"
    if topo.graph.number_of_nodes() > 1 and not nx.is_strongly_connected(topo.graph):
        return False, "graph is not connected"
    return True, ""


# ===== 建構函數 =====

def build_single_switch(n: int, rate: int, *, latency_ns: int = DEFAULT_LATENCY_NS) -> Topology:
    """n 個端點掛在同一台交換機"""
    if n < 1:
        raise InvalidParameterError("single switch needs at least one endpoint")
    b = _Builder('single-switch', latency_ns)
    sw = b.switch('sw0', 'edge')
    for _ in range(n):
        b.endpoint(sw, rate)
    return b.build()


def build_leaf_spine(leaves: int, spines: int, nodes_per_leaf: int, rate: int, *,
                     spine_links: int = 1, latency_ns: int = DEFAULT_LATENCY_NS) -> Topology:
    """每個 leaf 與每個 spine 之間 spine_links 條鏈路"""
    if min(leaves, spines, nodes_per_leaf, spine_links) < 1:
        raise InvalidParameterError("leaf-spine counts must all be >= 1")
    b = _Builder('leaf-spine', latency_ns)
    leaf_ids = [b.switch(f'leaf{i}', 'leaf', i) for i in range(leaves)]
    spine_ids = [b.switch(f'spine{j}', 'spine') for j in range(spines)]
    for leaf in leaf_ids:
        for _ in range(nodes_per_leaf):
            b.endpoint(leaf, rate)
    for leaf in leaf_ids:
        for spine in spine_ids:
            for _ in range(spine_links):
                b.link(leaf, spine, rate)
    return b.build()


def fat_tree_uplinks(nodes_per_edge: int, taper: float) -> int:
    """縮減上行鏈路數（四捨五入、至少一條）實現 taper"""
    return max(1, int(round(nodes_per_edge / taper)))


def build_fat_tree(pods: int, nodes_per_edge: int, taper: float, rate: int, *,
                   edges_per_pod: int = 2, latency_ns: int = DEFAULT_LATENCY_NS) -> Topology:
    """三層 fat-tree；edge 層以上行鏈路數實現 taper，agg/core 層不阻塞"""
    if taper < 1:
        raise InvalidParameterError("taper must be >= 1")
    if min(pods, nodes_per_edge, edges_per_pod) < 1:
        raise InvalidParameterError("fat-tree counts must all be >= 1")
    uplinks = fat_tree_uplinks(nodes_per_edge, taper)
    b = _Builder('fat-tree', latency_ns)

    edges: List[List[NodeID]] = []
    aggs: List[List[NodeID]] = []
    for p in range(pods):
        edges.append([b.switch(f'e{p}.{i}', 'edge', p) for i in range(edges_per_pod)])
        aggs.append([b.switch(f'a{p}.{j}', 'agg', p) for j in range(uplinks)])
    # core 群組 j 服務每個 pod 的第 j 台 agg
    cores = [[b.switch(f'c{j}.{k}', 'core') for k in range(edges_per_pod)] for j in range(uplinks)]

    for p in range(pods):
        for edge in edges[p]:
            for _ in range(nodes_per_edge):
                b.endpoint(edge, rate)
    for p in range(pods):
        for edge in edges[p]:
            for agg in aggs[p]:
                b.link(edge, agg, rate)
    for p in range(pods):
        for j, agg in enumerate(aggs[p]):
            for core in cores[j]:
                b.link(agg, core, rate)
    return b.build()


def build_dragonfly(groups: int, routers_per_group: int, nodes_per_router: int, rate: int, *,
                    plus: bool = False, global_links_per_router: Optional[int] = None,
                    latency_ns: int = DEFAULT_LATENCY_NS) -> Topology:
    """Dragonfly：群組內全互連、每對群組一條全域鏈路

    plus=True 時群組內部為兩層 leaf/spine，端點掛 leaf，全域鏈路掛 spine。
    """
    if min(groups, routers_per_group, nodes_per_router) < 1:
        raise InvalidParameterError("dragonfly counts must all be >= 1")
    if plus and routers_per_group < 2:
        raise InvalidParameterError("dragonfly+ needs at least one leaf and one spine per group")

    b = _Builder('dragonfly+' if plus else 'dragonfly', latency_ns)
    gateways: List[List[NodeID]] = []   # 可掛全域鏈路的交換機

    for g in range(groups):
        if plus:
            spines = routers_per_group // 2
            leaves = routers_per_group - spines
            leaf_ids = [b.switch(f'l{g}.{i}', 'leaf', g) for i in range(leaves)]
            spine_ids = [b.switch(f's{g}.{i}', 'spine', g) for i in range(spines)]
            for leaf in leaf_ids:
                for _ in range(nodes_per_router):
                    b.endpoint(leaf, rate)
            for leaf in leaf_ids:
                for spine in spine_ids:
                    b.link(leaf, spine, rate)
            gateways.append(spine_ids)
        else:
            routers = [b.switch(f'r{g}.{i}', 'router', g) for i in range(routers_per_group)]
            for r in routers:
                for _ in range(nodes_per_router):
                    b.endpoint(r, rate)
            for r1, r2 in itertools.combinations(routers, 2):
                b.link(r1, r2, rate)
            gateways.append(routers)

    if groups > 1:
        slots = groups - 1
        per_router = global_links_per_router
        if per_router is None:
            per_router = math.ceil(slots / len(gateways[0]))
        if per_router < 1 or per_router * len(gateways[0]) < slots:
            raise InvalidParameterError(
                f"{len(gateways[0])} routers x {per_router} global ports cannot reach {slots} other groups")

        def gateway(g: int, other: int) -> NodeID:
            k = other if other < g else other - 1
            return gateways[g][k // per_router]

        for g1, g2 in itertools.combinations(range(groups), 2):
            b.link(gateway(g1, g2), gateway(g2, g1), rate, 'global')

    return b.build()


# ===== 預設組 =====

def build_from_preset(preset: str, overrides: Optional[Mapping[str, Any]] = None, *,
                      latency_ns: int = DEFAULT_LATENCY_NS) -> Topology:
    """依預設組名稱建構；overrides 可覆寫任何建構參數"""
    if preset not in config_manager.TOPOLOGY_PRESETS:
        raise InvalidParameterError(f"unknown topology preset: {preset}")
    entry = config_manager.TOPOLOGY_PRESETS[preset]
    params = dict(entry['params'])
    params.update({k: v for k, v in (overrides or {}).items() if v is not None})
    builder = entry['builder']
    rate = int(params.pop('rate'))

    if builder == 'single_switch':
        topo = build_single_switch(params['n'], rate, latency_ns=latency_ns)
    elif builder == 'leaf_spine':
        topo = build_leaf_spine(params['leaves'], params['spines'], params['nodes_per_leaf'], rate,
                                spine_links=params.get('spine_links', 1), latency_ns=latency_ns)
    elif builder == 'fat_tree':
        topo = build_fat_tree(params['pods'], params['nodes_per_edge'], params['taper'], rate,
                              edges_per_pod=params.get('edges_per_pod', 2), latency_ns=latency_ns)
    elif builder == 'dragonfly':
        topo = build_dragonfly(params['groups'], params['routers_per_group'], params['nodes_per_router'], rate,
                               plus=bool(params.get('plus', False)),
                               global_links_per_router=params.get('global_links_per_router'),
                               latency_ns=latency_ns)
    else:
        raise InternalError(f"preset {preset} names unknown builder {builder}")

    logger.debug(f"built {preset}: {len(topo.endpoints)} endpoints, {len(topo.switches)} switches, "
                 f"{len(topo.links)} links")
    return Topology(
        name=preset, endpoints=topo.endpoints, switches=topo.switches, links=topo.links,
        attachment=topo.attachment, graph=topo.graph, host_uplink=topo.host_uplink,
        host_downlink=topo.host_downlink, switch_graph=topo.switch_graph,
    )


# ===== 路徑列舉 =====

def _link_min(sg: nx.DiGraph, node_path: Sequence[NodeID]) -> Path:
    """節點路徑 → 字典序最小的鏈路序列（平行鏈路取最小 id）"""
    return tuple(min(sg[u][v]['links']) for u, v in zip(node_path, node_path[1:]))


def _link_expand(sg: nx.DiGraph, node_path: Sequence[NodeID]) -> List[Path]:
    """節點路徑 → 所有平行鏈路組合"""
    hops = [sorted(sg[u][v]['links']) for u, v in zip(node_path, node_path[1:])]
    return [tuple(combo) for combo in itertools.product(*hops)]


def _shortest_node_paths(topo: Topology, a: NodeID, b: NodeID) -> List[List[NodeID]]:
    key = ('nodes', a, b)
    cached = topo.path_cache.get(key)
    if cached is None:
        try:
            cached = sorted(nx.all_shortest_paths(topo.switch_graph, a, b))
        except nx.NetworkXNoPath as e:
            raise InternalError(f"no path between {a} and {b}") from e
        topo.path_cache[key] = cached
    return cached


def _is_dragonfly(topo: Topology) -> bool:
    return any(l.kind == 'global' for l in topo.links) or any(
        s.tier == 'router' for s in topo.switches.values())


def _nonminimal(topo: Topology, se: NodeID, de: NodeID, min_hops: int) -> List[Path]:
    """經一個中繼點的繞行路徑；dragonfly 每個中繼群組一條，其它拓撲每台邊緣交換機一條"""
    sg = topo.switch_graph
    dragonfly = _is_dragonfly(topo)
    edges = set(topo.attachment.values())
    skip_groups = {topo.switches[se].group, topo.switches[de].group} if dragonfly else set()

    best: Dict[Any, Tuple[int, Path]] = {}
    for w in sorted(topo.switches):
        if w in (se, de):
            continue
        if dragonfly:
            if topo.switches[w].group in skip_groups:
                continue
            key = ('group', topo.switches[w].group)
        else:
            if w not in edges:
                continue
            key = ('switch', w)
        for p1 in _shortest_node_paths(topo, se, w):
            for p2 in _shortest_node_paths(topo, w, de):
                nodes = p1 + p2[1:]
                if len(set(nodes)) != len(nodes):
                    continue
                hops = len(nodes) - 1
                if hops <= min_hops:
                    continue
                cand = (hops, _link_min(sg, nodes))
                if key not in best or cand < best[key]:
                    best[key] = cand
    return sorted(p for _, p in best.values())


def enumerate_paths(topo: Topology, src: NodeID, dst: NodeID,
                    policy: PathPolicy = PathPolicy.MINIMAL) -> PathSet:
    """列舉 src 與 dst 所在邊緣交換機之間的候選路徑

    最短路徑依鏈路 id 字典序排列在前；policy=ALL 時再附上每個中繼
    群組/交換機至多一條的單次繞行路徑。
    """
    if src == dst:
        raise InvalidParameterError("source and destination are the same endpoint")
    if src not in topo.attachment or dst not in topo.attachment:
        raise InvalidParameterError(f"unknown endpoint in ({src}, {dst})")
    se, de = topo.attachment[src], topo.attachment[dst]
    key = ('pathset', se, de, PathPolicy(policy))
    cached = topo.path_cache.get(key)
    if cached is not None:
        return cached

    if se == de:
        result = PathSet(se, de, ((),), (True,))
    else:
        sg = topo.switch_graph
        minimal = sorted({p for nodes in _shortest_node_paths(topo, se, de) for p in _link_expand(sg, nodes)})
        paths: List[Path] = list(minimal)
        flags = [True] * len(minimal)
        if PathPolicy(policy) == PathPolicy.ALL:
            extra = _nonminimal(topo, se, de, len(minimal[0]))
            paths.extend(extra)
            flags.extend([False] * len(extra))
        result = PathSet(se, de, tuple(paths), tuple(flags))

    topo.path_cache[key] = result
    return result


def full_route(topo: Topology, src: NodeID, dst: NodeID, path: Path) -> Tuple[LinkID, ...]:
    """端點到端點的鏈路序列：主機上行 + 交換機路徑 + 主機下行"""
    return (topo.host_uplink[src],) + tuple(path) + (topo.host_downlink[dst],)


def check_route(topo: Topology, route: Sequence[LinkID]) -> bool:
    """鏈路序列是否首尾相接"""
    if not route:
        return False
    for a, b in zip(route, route[1:]):
        if not (0 <= a < len(topo.links) and 0 <= b < len(topo.links)):
            return False
        if topo.links[a].dst != topo.links[b].src:
            return False
    return 0 <= route[-1] < len(topo.links)


def edge_capacity_summary(topo: Topology) -> Dict[NodeID, Tuple[int, int]]:
    """每台邊緣交換機的 (下行總容量, 上行總容量)"""
    out: Dict[NodeID, Tuple[int, int]] = {}
    for edge in topo.edge_switches:
        down = sum(l.capacity_bps for l in topo.links if l.src == edge and l.dst not in topo.switches)
        up = sum(l.capacity_bps for l in topo.links if l.src == edge and l.dst in topo.switches)
        out[edge] = (down, up)
    return out


def describe(topo: Topology) -> Dict[str, Any]:
    tiers: Dict[str, int] = {}
    for info in topo.switches.values():
        tiers[info.tier] = tiers.get(info.tier, 0) + 1
    return {
        'name': topo.name,
        'endpoints': len(topo.endpoints),
        'switches': len(topo.switches),
        'links': len(topo.links),
        'tiers': tiers,
    }
