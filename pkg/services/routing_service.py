"""
fabsim v1.0 - 負載平衡服務模組

功能：deterministic / ECMP / 自適應（最短 + 繞行）/ NSLB 路徑選擇，
      以及排空後換路（reroute_with_drain）
"""
from __future__ import annotations

from typing import Any, Dict, Mapping, Optional, Sequence

from models.errors import InvalidParameterError
from models.types import (
    FlowMatrix, LbVariant, LinkID, NodeID, Path, PathPolicy, PathSet, RoutingPolicy,
)
from pylib.atoms.time_utils import PS_PER_NS
from pylib.units import routing_rules
from services import topology_service
from services.logger_service import get_logger

logger = get_logger('fabsim.routing')

DEFAULT_BUFFER_CELLS = 64


# ===== 選擇函數 =====

def ecmp_select(flow: Any, paths: PathSet, seed: int) -> Path:
    """依 (來源, 目的) 雜湊挑路徑；同一對端點永遠得到同一條"""
    if len(paths) == 0:
        raise InvalidParameterError("ecmp over an empty path set")
    key = routing_rules.flow_hash_key(flow.src_index, flow.dst_index)
    return paths.paths[routing_rules.ecmp_index(key, seed, len(paths))]


def deterministic_select(flow: Any, paths: PathSet) -> Path:
    minimal = paths.minimal_paths
    if not minimal:
        raise InvalidParameterError("deterministic routing over an empty path set")
    return minimal[routing_rules.deterministic_index(flow.dst_index, len(minimal))]


def adaptive_select(flow: Any, paths: PathSet, load: Mapping[LinkID, float], bias_bytes: float) -> Path:
    """整條路徑負載最低的最短路徑；所有最短路徑都有鏈路超過門檻時才考慮繞行"""
    if len(paths) == 0:
        raise InvalidParameterError("adaptive routing over an empty path set")
    return paths.paths[routing_rules.adaptive_index(paths.paths, paths.minimal, load, bias_bytes)]


def nslb_assign(matrix: FlowMatrix, uplinks_per_edge: Mapping[NodeID, Sequence[LinkID]]) -> FlowMatrix:
    return routing_rules.nslb_assign(matrix, uplinks_per_edge)


def reroute_with_drain(engine: Any, flow: Any, new_path: Path) -> None:
    engine.reroute_with_drain(flow, new_path)


# ===== 路由器（掛在引擎上） =====

class Router:
    """每個引擎一個；持有策略狀態（流矩陣、雜湊種子、佔用量快照）"""

    def __init__(self, engine: Any, policy: RoutingPolicy) -> None:
        self.engine = engine
        self.policy = policy
        self.variant = LbVariant(policy.variant)
        self.path_policy = PathPolicy.ALL if self.variant == LbVariant.ADAPTIVE else PathPolicy.MINIMAL
        self.reroutes = 0

    def paths_for(self, flow: Any) -> PathSet:
        return topology_service.enumerate_paths(self.engine.topo, flow.src, flow.dst, self.path_policy)

    def select(self, flow: Any) -> Path:
        paths = self.paths_for(flow)
        if self.variant == LbVariant.ECMP:
            return ecmp_select(flow, PathSet(paths.src_edge, paths.dst_edge, paths.minimal_paths,
                                             (True,) * len(paths.minimal_paths)), self.policy.seed)
        return deterministic_select(flow, paths)

    def on_flow_start(self, flow: Any) -> None:
        pass

    def on_flow_finish(self, flow: Any) -> None:
        pass

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {'lb': self.variant.value}
        if self.variant == LbVariant.ECMP:
            out['seed'] = self.policy.seed
        return out


class AdaptiveRouter(Router):
    """出發時依整條路徑的負載估計選路，之後每 interval 重新評估並排空換路

    一條鏈路的負載 = 佇列佔用量 + 已排到該鏈路上、尚未送出的流量位元組；
    後者讓同一時刻出發的流不會全擠上同一條空路徑。
    """

    def __init__(self, engine: Any, policy: RoutingPolicy) -> None:
        super().__init__(engine, policy)
        settings = engine.settings
        buffer_cells = settings.buffer_cells if settings.buffer_cells is not None else DEFAULT_BUFFER_CELLS
        self.bias_bytes = policy.bias * buffer_cells * settings.cell_bytes
        self.cell_bytes = settings.cell_bytes
        self.active: Dict[int, Any] = {}
        self._snapshot: Dict[LinkID, int] = {}
        self._snapshot_ps: Optional[int] = None
        if policy.interval_ns <= 0:
            raise InvalidParameterError("adaptive interval must be > 0")
        if policy.staleness_ns < 0:
            raise InvalidParameterError("adaptive staleness must be >= 0")
        engine.every(policy.interval_ns * PS_PER_NS, self.tick)

    def occupancy(self) -> Mapping[LinkID, int]:
        """即時佔用量；設定 staleness 時改用最多舊 staleness 的快照"""
        if self.policy.staleness_ns <= 0:
            return _LiveOccupancy(self.engine.ports)
        now = self.engine.now_ps
        if self._snapshot_ps is None or now - self._snapshot_ps >= self.policy.staleness_ns * PS_PER_NS:
            self._snapshot = self.engine.occupancy_snapshot()
            self._snapshot_ps = now
        return self._snapshot

    def load(self, exclude: Optional[int] = None) -> Dict[LinkID, float]:
        """每條鏈路的負載估計；exclude 的流不計入（換路時評估自己以外的負載）"""
        out: Dict[LinkID, float] = {link: float(b) for link, b in self.occupancy().items() if b}
        for fid, flow in self.active.items():
            if fid == exclude:
                continue
            owed = flow.size - flow.sent
            if owed <= 0:
                continue
            path = flow.pending_route[0] if flow.pending_route else flow.path
            for link in path:
                out[link] = out.get(link, 0.0) + owed
        return out

    def select(self, flow: Any) -> Path:
        return adaptive_select(flow, self.paths_for(flow), self.load(exclude=flow.id), self.bias_bytes)

    def on_flow_start(self, flow: Any) -> None:
        if flow.path:
            self.active[flow.id] = flow

    def on_flow_finish(self, flow: Any) -> None:
        self.active.pop(flow.id, None)

    def tick(self) -> None:
        for fid in sorted(self.active):
            flow = self.active[fid]
            if flow.draining or flow.sent >= flow.size:
                continue
            load = self.load(exclude=fid)
            best = adaptive_select(flow, self.paths_for(flow), load, self.bias_bytes)
            if best == flow.path:
                continue
            here = routing_rules.path_load(flow.path, load)[0]
            there = routing_rules.path_load(best, load)[0]
            if there + self.cell_bytes <= here:
                self.reroutes += 1
                reroute_with_drain(self.engine, flow, best)

    def describe(self) -> Dict[str, Any]:
        p = self.policy
        return {'lb': self.variant.value, 'interval_ns': p.interval_ns, 'bias': p.bias,
                'staleness_ns': p.staleness_ns}


class _LiveOccupancy(Mapping[LinkID, int]):
    """埠佔用量的唯讀視圖（不複製）"""

    def __init__(self, ports: Mapping[LinkID, Any]) -> None:
        self._ports = ports

    def __getitem__(self, link: LinkID) -> int:
        return self._ports[link].occupancy

    def get(self, link: LinkID, default: int = 0) -> int:
        port = self._ports.get(link)
        return default if port is None else port.occupancy

    def __iter__(self):
        return iter(self._ports)

    def __len__(self) -> int:
        return len(self._ports)


class NslbRouter(Router):
    """流矩陣驅動的無碰撞上行指派；活動的跨邊緣流集合改變時重算"""

    def __init__(self, engine: Any, policy: RoutingPolicy) -> None:
        super().__init__(engine, policy)
        topo = engine.topo
        self.uplinks = {edge: topo.uplinks_of(edge) for edge in topo.edge_switches}
        self.matrix = FlowMatrix()
        self.flows: Dict[int, Any] = {}

    def _path_on_uplink(self, flow: Any, uplink: LinkID, others: int) -> Optional[Path]:
        minimal = self.paths_for(flow).minimal_paths
        matches = [p for p in minimal if p and p[0] == uplink]
        if not matches:
            return None
        return matches[others % len(matches)]

    def _fallback(self, flow: Any) -> Path:
        return deterministic_select(flow, self.paths_for(flow))

    def _recompute(self) -> Dict[int, LinkID]:
        before = dict(self.matrix.assignment)
        self.matrix = nslb_assign(self.matrix, self.uplinks)
        return {fid: u for fid, u in self.matrix.assignment.items() if before.get(fid) != u}

    def _uplink_count(self, uplink: LinkID, exclude: int) -> int:
        return sum(1 for fid, u in self.matrix.assignment.items() if u == uplink and fid < exclude)

    def select(self, flow: Any) -> Path:
        topo = self.engine.topo
        se, de = topo.edge_of(flow.src), topo.edge_of(flow.dst)
        if se == de:
            return ()
        flows = dict(self.matrix.flows)
        flows[flow.id] = (se, de)
        rates = dict(self.matrix.rates)
        rates[flow.id] = float(flow.conn.line_bps)
        self.matrix = FlowMatrix(flows=flows, rates=rates, assignment=dict(self.matrix.assignment))
        self.flows[flow.id] = flow
        changed = self._recompute()
        self._apply(changed, skip=flow.id)
        uplink = self.matrix.assignment[flow.id]
        path = self._path_on_uplink(flow, uplink, self._uplink_count(uplink, flow.id))
        return path if path is not None else self._fallback(flow)

    def _apply(self, changed: Mapping[int, LinkID], skip: int = -1) -> None:
        for fid in sorted(changed):
            if fid == skip:
                continue
            flow = self.flows.get(fid)
            if flow is None or flow.done or flow.sent >= flow.size:
                continue
            path = self._path_on_uplink(flow, changed[fid], self._uplink_count(changed[fid], fid))
            if path is not None and path != flow.path:
                self.reroutes += 1
                reroute_with_drain(self.engine, flow, path)

    def on_flow_finish(self, flow: Any) -> None:
        if flow.id not in self.matrix.flows:
            return
        flows = {k: v for k, v in self.matrix.flows.items() if k != flow.id}
        rates = {k: v for k, v in self.matrix.rates.items() if k != flow.id}
        assignment = {k: v for k, v in self.matrix.assignment.items() if k != flow.id}
        self.flows.pop(flow.id, None)
        self.matrix = FlowMatrix(flows=flows, rates=rates, assignment=assignment)
        self._apply(self._recompute())

    def loads(self) -> Dict[LinkID, int]:
        return routing_rules.uplink_loads(self.matrix)


_ROUTERS = {
    LbVariant.DETERMINISTIC: Router,
    LbVariant.ECMP: Router,
    LbVariant.ADAPTIVE: AdaptiveRouter,
    LbVariant.NSLB: NslbRouter,
}


def make_router(engine: Any, policy: RoutingPolicy) -> Router:
    cls = _ROUTERS.get(LbVariant(policy.variant))
    if cls is None:
        raise InvalidParameterError(f"unknown lb variant: {policy.variant}")
    return cls(engine, policy)
