"""
fabsim v1.0 - 離散事件引擎

功能：整數時鐘事件佇列、cell 級儲存轉送、逐埠佇列、credit / PFC 無損流控、
      ECN / FECN 掛鉤、流完成回呼、事件追蹤與摘要、吞吐量探針

一個 Engine 實例嚴格單執行緒；不同實例之間沒有共享的可變狀態。
"""
from __future__ import annotations

import hashlib
import heapq
import random
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Deque, Dict, List, Optional, Tuple

from models.errors import InternalError, InvalidParameterError
from models.types import (
    CcConfig, EngineSettings, FlowControl, LinkID, NodeID, Path, RoutingPolicy,
    ThroughputTrace, Topology,
)
from pylib.atoms.hash_utils import mix
from pylib.atoms.time_utils import PS_PER_NS
from services import congestion_service, routing_service, topology_service
from services.logger_service import PerformanceLogger, get_logger

logger = get_logger('fabsim.engine')
perf = PerformanceLogger()

TRACE_HEADER = 'time,event_kind,link,flow,occupancy'


# ===== 時間換算 =====

def serialization_time_ns(size: int, rate_bps: int) -> Fraction:
    """size×8/rate，精確有理數（4096 B @ 100 Gb/s = 327.68 ns）"""
    return Fraction(size * 8 * 10 ** 9, rate_bps)


def serialization_time_ps(size: int, rate_bps: int) -> int:
    return -(-(size * 8 * 10 ** 12) // rate_bps)


def to_ps(t_ns: Any) -> int:
    """ns（int / Fraction / float）→ 整數 ps，向上取整"""
    if isinstance(t_ns, int):
        return t_ns * PS_PER_NS
    v = Fraction(t_ns) * PS_PER_NS
    return -(-v.numerator // v.denominator)


def format_ps(t_ps: int) -> str:
    return f"{t_ps // PS_PER_NS}.{t_ps % PS_PER_NS:03d}"


def validate_settings(settings: EngineSettings) -> None:
    if settings.cell_bytes < 1:
        raise InvalidParameterError("cell size must be >= 1 byte")
    if settings.buffer_cells is not None and settings.buffer_cells < 1:
        raise InvalidParameterError("buffer must hold at least one cell")
    if settings.link_latency_ns < 0:
        raise InvalidParameterError("link latency must be >= 0")
    if FlowControl(settings.flow_control) == FlowControl.PFC:
        if settings.xon_cells >= settings.xoff_cells:
            raise InvalidParameterError(
                f"pfc xon ({settings.xon_cells}) must be below xoff ({settings.xoff_cells})")
        if settings.xon_cells < 0:
            raise InvalidParameterError("pfc xon must be >= 0")
        if settings.buffer_cells is not None and settings.xoff_cells > settings.buffer_cells:
            raise InvalidParameterError(
                f"pfc xoff ({settings.xoff_cells}) exceeds buffer ({settings.buffer_cells} cells)")


# ===== 執行期物件 =====

class Cell:
    """傳輸單位；route 為送出當下流的路由，hop 為目前所在鏈路的索引"""

    __slots__ = ('flow', 'seq', 'size', 'ecn', 'route', 'hop')

    def __init__(self, flow: 'Flow', seq: int, size: int, route: Tuple[LinkID, ...]) -> None:
        self.flow = flow
        self.seq = seq
        self.size = size
        self.ecn = False
        self.route = route
        self.hop = 0


class Connection:
    """(來源, 目的) 端點對；擁塞控制狀態與配速以連線為單位保存"""

    __slots__ = ('id', 'src', 'dst', 'line_bps', 'next_eligible_ps', 'feedback_delay_ps',
                 'active_flows', 'dcqcn', 'ib', 'caps', 'last_cnp_sent_ps', 'last_feedback_ps',
                 'timer_pending')

    def __init__(self, cid: int, src: NodeID, dst: NodeID, line_bps: int) -> None:
        self.id = cid
        self.src = src
        self.dst = dst
        self.line_bps = line_bps
        self.next_eligible_ps = 0
        self.feedback_delay_ps = 0
        self.active_flows = 0
        self.dcqcn = None
        self.ib = None
        self.caps: Dict[int, float] = {}
        self.last_cnp_sent_ps: Optional[int] = None
        self.last_feedback_ps: Optional[int] = None
        self.timer_pending = False


class Flow:
    """一次傳輸：來源、目的、位元組數、路徑、完成時間"""

    __slots__ = ('id', 'src', 'dst', 'size', 'sent', 'delivered', 'path', 'route', 'pending_route',
                 'conn', 'start_ps', 'finish_ps', 'next_seq', 'last_seq', 'in_flight', 'tag',
                 'callbacks', 'src_index', 'dst_index', 'reroutes')

    def __init__(self, fid: int, src: NodeID, dst: NodeID, size: int, tag: Any = None) -> None:
        self.id = fid
        self.src = src
        self.dst = dst
        self.size = size
        self.sent = 0
        self.delivered = 0
        self.path: Path = ()
        self.route: Tuple[LinkID, ...] = ()
        self.pending_route: Optional[Tuple[Path, Tuple[LinkID, ...]]] = None
        self.conn: Optional[Connection] = None
        self.start_ps: Optional[int] = None
        self.finish_ps: Optional[int] = None
        self.next_seq = 0
        self.last_seq = -1
        self.in_flight = 0
        self.tag = tag
        self.callbacks: List[Callable[['Flow'], None]] = []
        self.src_index = -1
        self.dst_index = -1
        self.reroutes = 0

    @property
    def done(self) -> bool:
        return self.finish_ps is not None

    @property
    def draining(self) -> bool:
        return self.pending_route is not None

    @property
    def start_ns(self) -> Optional[float]:
        return None if self.start_ps is None else self.start_ps / PS_PER_NS

    @property
    def finish_ns(self) -> Optional[float]:
        return None if self.finish_ps is None else self.finish_ps / PS_PER_NS

    @property
    def duration_ns(self) -> Optional[float]:
        if self.finish_ps is None or self.start_ps is None:
            return None
        return (self.finish_ps - self.start_ps) / PS_PER_NS

    def __repr__(self) -> str:
        return f"Flow({self.id}, {self.src}->{self.dst}, {self.delivered}/{self.size})"


class PortQueue:
    """鏈路來源端的出口佇列

    佔用量以 bytes 與 cells 兩種方式記錄；reserved 為上游已開始序列化、
    尚未抵達的 cell 數，credits = capacity − cells − reserved。
    主機上行埠沒有佇列，cell 直接由 NIC 送出。
    """

    __slots__ = ('id', 'link', 'queue', 'occupancy', 'cells', 'reserved', 'capacity', 'credits',
                 'busy', 'paused', 'waiters', 'ecn', 'contrib', 'throttled', 'quiet', 'max_cells',
                 'pauses', 'is_host', 'tx_bytes', 'capacity_bytes')

    def __init__(self, link: Any, capacity: Optional[int], is_host: bool, cell_bytes: int) -> None:
        self.id = link.id
        self.capacity_bytes = None if capacity is None else capacity * cell_bytes
        self.link = link
        self.queue: Deque[Cell] = deque()
        self.occupancy = 0
        self.cells = 0
        self.reserved = 0
        self.capacity = capacity
        self.credits = capacity
        self.busy = False
        self.paused = False
        self.waiters: Dict[Any, Callable[[], None]] = {}
        self.ecn = None
        self.contrib: Dict[int, int] = {}
        self.throttled: set = set()
        self.quiet = 0
        self.max_cells = 0
        self.pauses = 0
        self.is_host = is_host
        self.tx_bytes = 0

    def __repr__(self) -> str:
        return f"PortQueue(link={self.id}, cells={self.cells}, reserved={self.reserved})"


class Nic:
    """端點網卡：對其活動流輪詢，並遵守每條連線的配速"""

    __slots__ = ('endpoint', 'port', 'flows', 'wake_ps')

    def __init__(self, endpoint: NodeID, port: PortQueue) -> None:
        self.endpoint = endpoint
        self.port = port
        self.flows: Deque[Flow] = deque()
        self.wake_ps: Optional[int] = None


@dataclass
class EngineStats:
    injected_bytes: int = 0
    delivered_bytes: int = 0
    events: int = 0
    flows_started: int = 0
    flows_completed: int = 0
    pauses: int = 0
    max_occupancy: Dict[LinkID, int] = field(default_factory=dict)
    digest: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'injected_bytes': self.injected_bytes,
            'delivered_bytes': self.delivered_bytes,
            'events': self.events,
            'flows_started': self.flows_started,
            'flows_completed': self.flows_completed,
            'pauses': self.pauses,
            'max_occupancy_cells': max(self.max_occupancy.values(), default=0),
            'digest': self.digest,
        }


class ThroughputProbe:
    """依 selector 收集送達的位元組，每個 cell 攤在其最後一跳序列化區間"""

    def __init__(self, label: str, interval_ns: int, selector: Callable[[Flow], bool],
                 capacity_bps: float = 0.0) -> None:
        if interval_ns <= 0:
            raise InvalidParameterError("probe interval must be > 0")
        self.label = label
        self.interval_ps = interval_ns * PS_PER_NS
        self.interval_ns = interval_ns
        self.selector = selector
        self.capacity_bps = capacity_bps
        self.buckets: Dict[int, float] = {}

    def record(self, flow: Flow, t0_ps: int, t1_ps: int, size: int) -> None:
        if not self.selector(flow):
            return
        if t1_ps <= t0_ps:
            i = t1_ps // self.interval_ps
            self.buckets[i] = self.buckets.get(i, 0.0) + size
            return
        span = t1_ps - t0_ps
        i = t0_ps // self.interval_ps
        while i * self.interval_ps < t1_ps:
            lo = max(t0_ps, i * self.interval_ps)
            hi = min(t1_ps, (i + 1) * self.interval_ps)
            if hi > lo:
                self.buckets[i] = self.buckets.get(i, 0.0) + size * (hi - lo) / span
            i += 1

    def to_trace(self) -> ThroughputTrace:
        if not self.buckets:
            return ThroughputTrace(self.label, float(self.interval_ns), (), self.capacity_bps)
        first, last = min(self.buckets), max(self.buckets)
        samples = tuple(
            (float(i * self.interval_ns), self.buckets.get(i, 0.0) * 8 * 1e9 / self.interval_ns)
            for i in range(first, last + 1)
        )
        return ThroughputTrace(self.label, float(self.interval_ns), samples, self.capacity_bps)


# ===== 引擎 =====

class Engine:
    """cell 級儲存轉送模擬器

    Args:
        topo: 拓撲（唯讀共享）
        settings: cell 大小、緩衝、流控模式、是否記錄追蹤
        cc: 擁塞控制設定
        lb: 路徑選擇策略
        seed: ECN / FECN 機率標記用的亂數種子
    """

    def __init__(self, topo: Topology, settings: EngineSettings = EngineSettings(),
                 cc: CcConfig = CcConfig(), lb: RoutingPolicy = RoutingPolicy(),
                 seed: int = 1, *, digest: Optional[bool] = None) -> None:
        validate_settings(settings)
        self.topo = topo
        self.settings = settings
        self.pfc = FlowControl(settings.flow_control) == FlowControl.PFC
        self.rng = random.Random(mix(seed, 0xECB))
        self.seed = seed

        self.now_ps = 0
        self._heap: List[Tuple[int, int, Callable[..., None], Tuple[Any, ...]]] = []
        self._seq = 0
        self._stopped = False
        self._periodic: List[List[Any]] = []

        self.stats = EngineStats()
        self._trace_on = settings.trace
        self._digest_on = settings.trace if digest is None else digest
        self._hasher = hashlib.blake2b(digest_size=16)
        self.trace: List[str] = []
        self.probes: List[ThroughputProbe] = []

        self.ports: Dict[LinkID, PortQueue] = {}
        self.switch_ports: List[PortQueue] = []
        for link in topo.links:
            is_host = link.src not in topo.switches
            port = PortQueue(link, None if is_host else settings.buffer_cells, is_host, settings.cell_bytes)
            self.ports[link.id] = port
            if not is_host:
                self.switch_ports.append(port)
        self.nics: Dict[NodeID, Nic] = {
            e: Nic(e, self.ports[topo.host_uplink[e]]) for e in topo.endpoints
        }
        self._endpoint_index = {e: i for i, e in enumerate(topo.endpoints)}

        self.connections: Dict[Tuple[NodeID, NodeID], Connection] = {}
        self.connections_by_id: List[Connection] = []
        self.flows: List[Flow] = []
        self.active_flows = 0

        self.cc = congestion_service.make_controller(self, cc)
        for port in self.switch_ports:
            self.cc.configure_port(port)
        self.router = routing_service.make_router(self, lb)

    # ----- 時鐘 / 事件 -----

    @property
    def now_ns(self) -> float:
        return self.now_ps / PS_PER_NS

    def schedule(self, t_ns: Any, fn: Callable[..., None], *args: Any) -> None:
        """在絕對時間 t_ns 執行 fn(*args)；同時間依插入順序"""
        self.schedule_ps(to_ps(t_ns), fn, *args)

    def schedule_ps(self, t_ps: int, fn: Callable[..., None], *args: Any) -> None:
        if t_ps < self.now_ps:
            raise InternalError(f"event scheduled in the past ({t_ps} < {self.now_ps} ps)")
        heapq.heappush(self._heap, (t_ps, self._seq, fn, args))
        self._seq += 1

    def every(self, interval_ps: int, fn: Callable[[], None]) -> None:
        """週期任務；只在有活動流時執行"""
        if interval_ps <= 0:
            raise InvalidParameterError("periodic interval must be > 0")
        self._periodic.append([interval_ps, fn, False])

    def _arm_periodic(self) -> None:
        for task in self._periodic:
            if not task[2]:
                task[2] = True
                self.schedule_ps(self.now_ps + task[0], self._run_periodic, task)

    def _run_periodic(self, task: List[Any]) -> None:
        if self.active_flows == 0:
            task[2] = False
            return
        task[1]()
        self.schedule_ps(self.now_ps + task[0], self._run_periodic, task)

    def stop(self) -> None:
        """下一個事件前停止 run_until（穩態攻擊流永不靜止時使用）"""
        self._stopped = True

    def run_until(self, t_ns: Optional[Any] = None) -> float:
        """處理所有時間 ≤ t_ns 的事件；t_ns 為 None 時跑到事件佇列為空"""
        limit = None if t_ns is None else to_ps(t_ns)
        heap = self._heap
        started = time.perf_counter()
        processed = 0
        self._stopped = False
        while heap and not self._stopped:
            if limit is not None and heap[0][0] > limit:
                break
            t_ps, _, fn, args = heapq.heappop(heap)
            if t_ps < self.now_ps:
                raise InternalError("event time went backwards")
            self.now_ps = t_ps
            fn(*args)
            processed += 1
        self.stats.events += processed
        if self._digest_on:
            self.stats.digest = self._hasher.hexdigest()
        perf.log_run(self.topo.name, processed, self.now_ns, (time.perf_counter() - started) * 1000)
        return self.now_ns

    @property
    def pending_events(self) -> int:
        return len(self._heap)

    # ----- 追蹤 -----

    def record(self, kind: str, link: LinkID, flow: int, occupancy: int) -> None:
        if not self._digest_on:
            return
        line = f"{format_ps(self.now_ps)},{kind},{link},{flow},{occupancy}"
        self._hasher.update(line.encode('ascii'))
        self._hasher.update(b'\n')
        if self._trace_on:
            self.trace.append(line)

    def trace_lines(self) -> List[str]:
        return [TRACE_HEADER] + self.trace

    def add_probe(self, probe: ThroughputProbe) -> ThroughputProbe:
        self.probes.append(probe)
        return probe

    # ----- 流 -----

    def connection(self, src: NodeID, dst: NodeID) -> Connection:
        key = (src, dst)
        conn = self.connections.get(key)
        if conn is None:
            line = self.topo.links[self.topo.host_uplink[src]].capacity_bps
            conn = Connection(len(self.connections_by_id), src, dst, line)
            self.connections[key] = conn
            self.connections_by_id.append(conn)
            self.cc.attach(conn)
        return conn

    def create_flow(self, src: NodeID, dst: NodeID, size: int, *, path: Optional[Path] = None,
                    tag: Any = None, on_complete: Optional[Callable[[Flow], None]] = None) -> Flow:
        """建立尚未注入的流；path 為交換機層級路徑，None 表示交給路由策略"""
        if src not in self.nics or dst not in self.nics:
            raise InvalidParameterError(f"unknown endpoint in ({src}, {dst})")
        if src == dst:
            raise InvalidParameterError("flow source and destination are the same endpoint")
        if size < 0:
            raise InvalidParameterError("flow size must be >= 0")
        flow = Flow(len(self.flows), src, dst, int(size), tag)
        flow.src_index = self._endpoint_index[src]
        flow.dst_index = self._endpoint_index[dst]
        flow.conn = self.connection(src, dst)
        if path is not None:
            self._set_path(flow, tuple(path))
        if on_complete is not None:
            flow.callbacks.append(on_complete)
        self.flows.append(flow)
        return flow

    def _set_path(self, flow: Flow, path: Path) -> None:
        route = topology_service.full_route(self.topo, flow.src, flow.dst, path)
        if not topology_service.check_route(self.topo, route):
            raise InvalidParameterError(f"path {path} is not contiguous from {flow.src} to {flow.dst}")
        if self.topo.links[route[0]].src != flow.src or self.topo.links[route[-1]].dst != flow.dst:
            raise InvalidParameterError(f"path {path} does not join {flow.src} and {flow.dst}")
        flow.path = path
        flow.route = route

    def inject_flow(self, flow: Flow) -> Flow:
        """開始發送；零位元組的流在開始時間即完成"""
        if flow.start_ps is not None:
            raise InvalidParameterError(f"flow {flow.id} already injected")
        if not flow.route:
            self._set_path(flow, self.router.select(flow))
        flow.start_ps = self.now_ps
        self.stats.flows_started += 1
        self.active_flows += 1
        flow.conn.active_flows += 1
        if flow.conn.feedback_delay_ps == 0:
            flow.conn.feedback_delay_ps = sum(self.topo.links[l].latency_ns for l in flow.route) * PS_PER_NS
        self.router.on_flow_start(flow)
        self._arm_periodic()
        if flow.size == 0:
            self.schedule_ps(self.now_ps, self._complete, flow)
            return flow
        nic = self.nics[flow.src]
        nic.flows.append(flow)
        self._try_nic(nic)
        return flow

    def start_flow(self, src: NodeID, dst: NodeID, size: int, **kwargs: Any) -> Flow:
        return self.inject_flow(self.create_flow(src, dst, size, **kwargs))

    def reroute_with_drain(self, flow: Flow, path: Path) -> None:
        """換路徑：在舊路徑上的 cell 全部送達前不送新 cell"""
        if flow.done or tuple(path) == flow.path:
            return
        route = topology_service.full_route(self.topo, flow.src, flow.dst, tuple(path))
        if not topology_service.check_route(self.topo, route):
            raise InvalidParameterError(f"path {path} is not contiguous")
        flow.reroutes += 1
        self.record('reroute', route[1] if len(route) > 1 else route[0], flow.id, flow.in_flight)
        if flow.in_flight == 0:
            flow.path, flow.route = tuple(path), route
            flow.pending_route = None
            self._try_nic(self.nics[flow.src])
        else:
            flow.pending_route = (tuple(path), route)

    # ----- 流控 -----

    def _can_enter(self, port: PortQueue) -> bool:
        if self.pfc:
            return not port.paused
        return port.credits is None or port.credits > 0

    def credit_update(self, port: PortQueue, delta: int) -> None:
        """上游送出 −1，下游出列 +1；歸還 credit 時喚醒等待者"""
        if port.credits is None:
            if delta > 0:
                self._wake(port)
            return
        port.credits += delta
        if port.credits < 0:
            raise InternalError(f"negative credits on link {port.id}")
        if port.capacity is not None and port.credits > port.capacity:
            raise InternalError(f"credits above capacity on link {port.id}")
        if delta > 0 and not self.pfc:
            self._wake(port)

    def pfc_pause_resume(self, port: PortQueue) -> None:
        """佔用量（含在途保留）≥ XOFF 暫停上游；≤ XON 恢復"""
        if not self.pfc:
            return
        level = port.cells + port.reserved
        if not port.paused and level >= self.settings.xoff_cells:
            port.paused = True
            port.pauses += 1
            self.stats.pauses += 1
            self.record('pause', port.id, -1, port.cells)
        elif port.paused and level <= self.settings.xon_cells:
            port.paused = False
            self.record('resume', port.id, -1, port.cells)
            self._wake(port)

    def _reserve(self, port: PortQueue) -> None:
        port.reserved += 1
        self.credit_update(port, -1)
        self.pfc_pause_resume(port)

    def _wake(self, port: PortQueue) -> None:
        waiters = port.waiters
        while waiters and self._can_enter(port):
            key = next(iter(waiters))
            fn = waiters.pop(key)
            fn()

    # ----- 傳輸 -----

    def _try_nic(self, nic: Nic) -> None:
        up = nic.port
        if up.busy or not nic.flows:
            return
        now = self.now_ps
        earliest: Optional[int] = None
        flows = nic.flows
        for _ in range(len(flows)):
            flow = flows[0]
            flows.rotate(-1)
            if flow.draining or flow.sent >= flow.size:
                continue
            conn = flow.conn
            if conn.next_eligible_ps > now:
                if earliest is None or conn.next_eligible_ps < earliest:
                    earliest = conn.next_eligible_ps
                continue
            down = self.ports[flow.route[1]]
            if not self._can_enter(down):
                down.waiters[nic] = lambda nic=nic: self._try_nic(nic)
                continue
            size = min(self.settings.cell_bytes, flow.size - flow.sent)
            cell = Cell(flow, flow.next_seq, size, flow.route)
            flow.next_seq += 1
            flow.sent += size
            flow.in_flight += 1
            if flow.sent >= flow.size:
                flows.pop()
            self.stats.injected_bytes += size
            self._reserve(down)
            ser = serialization_time_ps(size, up.link.capacity_bps)
            conn.next_eligible_ps = now + self.cc.gap_ps(conn, size, ser)
            self._transmit(up, cell, ser)
            return
        if earliest is not None and (nic.wake_ps is None or earliest < nic.wake_ps or nic.wake_ps < now):
            nic.wake_ps = earliest
            self.schedule_ps(earliest, self._nic_wake, nic, earliest)

    def _nic_wake(self, nic: Nic, when: int) -> None:
        if nic.wake_ps == when:
            nic.wake_ps = None
        self._try_nic(nic)

    def _try_port(self, port: PortQueue) -> None:
        if port.busy or not port.queue:
            return
        cell = port.queue[0]
        nxt = cell.hop + 1
        if nxt < len(cell.route):
            down = self.ports[cell.route[nxt]]
            if not self._can_enter(down):
                down.waiters[port] = lambda port=port: self._try_port(port)
                return
            self._reserve(down)
        port.queue.popleft()
        self._transmit(port, cell, serialization_time_ps(cell.size, port.link.capacity_bps))

    def transmit_cell(self, link: LinkID, cell: Cell) -> None:
        """把 cell 放上鏈路；鏈路忙或下游無空間時排隊等候"""
        port = self.ports[link]
        if port.is_host:
            raise InvalidParameterError("host uplinks are fed by the nic, not by transmit_cell")
        port.queue.append(cell)
        port.cells += 1
        port.occupancy += cell.size
        self._try_port(port)

    def _transmit(self, port: PortQueue, cell: Cell, ser_ps: int) -> None:
        port.busy = True
        port.tx_bytes += cell.size
        self.schedule_ps(self.now_ps + ser_ps, self._tx_done, port, cell, ser_ps)

    def _tx_done(self, port: PortQueue, cell: Cell, ser_ps: int) -> None:
        port.busy = False
        arrive_ps = self.now_ps + port.link.latency_ns * PS_PER_NS
        if port.is_host:
            self.record('inject', port.id, cell.flow.id, 0)
        else:
            port.cells -= 1
            port.occupancy -= cell.size
            self.record('dequeue', port.id, cell.flow.id, port.cells)
        if cell.hop + 1 < len(cell.route):
            self.schedule_ps(arrive_ps, self._arrive, cell)
        else:
            self.schedule_ps(arrive_ps, self._deliver, cell, ser_ps)
        if port.is_host:
            self._try_nic(self.nics[port.link.src])
        else:
            self.credit_update(port, 1)
            self.pfc_pause_resume(port)
            self._try_port(port)

    def _arrive(self, cell: Cell, port: Optional[PortQueue] = None) -> None:
        cell.hop += 1
        if port is None:
            port = self.ports[cell.route[cell.hop]]
        port.reserved -= 1
        if port.reserved < 0:
            raise InternalError(f"arrival without reservation on link {port.id}")
        self.cc.on_enqueue(port, cell)
        port.queue.append(cell)
        port.cells += 1
        port.occupancy += cell.size
        if port.capacity is not None and port.cells > port.capacity:
            raise InternalError(f"queue overflow on link {port.id}: {port.cells} > {port.capacity} cells")
        if port.cells > port.max_cells:
            port.max_cells = port.cells
        self.record('enqueue', port.id, cell.flow.id, port.cells)
        self._try_port(port)

    def _deliver(self, cell: Cell, ser_ps: int) -> None:
        flow = cell.flow
        if cell.seq != flow.last_seq + 1:
            raise InternalError(f"flow {flow.id} delivered seq {cell.seq} after {flow.last_seq}")
        flow.last_seq = cell.seq
        flow.delivered += cell.size
        flow.in_flight -= 1
        self.stats.delivered_bytes += cell.size
        self.record('deliver', cell.route[-1], flow.id, flow.delivered)
        for probe in self.probes:
            probe.record(flow, self.now_ps - ser_ps, self.now_ps, cell.size)
        self.cc.on_deliver(cell)
        if flow.pending_route is not None and flow.in_flight == 0:
            flow.path, flow.route = flow.pending_route
            flow.pending_route = None
            self._try_nic(self.nics[flow.src])
        if flow.delivered >= flow.size:
            self._complete(flow)

    def _complete(self, flow: Flow) -> None:
        if flow.finish_ps is not None:
            return
        if flow.delivered != flow.size:
            raise InternalError(f"flow {flow.id} completed with {flow.delivered}/{flow.size} bytes")
        flow.finish_ps = self.now_ps
        self.active_flows -= 1
        flow.conn.active_flows -= 1
        self.stats.flows_completed += 1
        self.record('complete', -1, flow.id, flow.size)
        self.router.on_flow_finish(flow)
        self.cc.on_flow_finish(flow)
        for cb in flow.callbacks:
            cb(flow)

    # ----- 查詢 -----

    def occupancy(self, link: LinkID) -> int:
        return self.ports[link].occupancy

    def occupancy_snapshot(self) -> Dict[LinkID, int]:
        return {p.id: p.occupancy for p in self.switch_ports}

    def check_invariants(self) -> None:
        """無損與容量檢查；違反時拋 InternalError"""
        for port in self.switch_ports:
            if port.capacity is not None and port.cells + port.reserved > port.capacity:
                raise InternalError(f"link {port.id} holds more than its capacity")
            if port.occupancy < 0 or port.cells < 0:
                raise InternalError(f"negative occupancy on link {port.id}")
        delivered = sum(f.delivered for f in self.flows)
        if delivered != self.stats.delivered_bytes:
            raise InternalError("delivered byte counters disagree")
        for f in self.flows:
            if f.done and (f.delivered != f.size or f.sent != f.size):
                raise InternalError(f"flow {f.id} lost bytes")

    def finalize_stats(self) -> EngineStats:
        self.stats.max_occupancy = {p.id: p.max_cells for p in self.switch_ports}
        if self._digest_on:
            self.stats.digest = self._hasher.hexdigest()
        return self.stats
