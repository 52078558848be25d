"""
fabsim v1.0 - 集體通訊服務模組

功能：ring AllGather、linear AlltoAll、Incast、Permutation 排程，
      排程展開為帶相依的流，並在引擎中執行
"""
from __future__ import annotations

from typing import Any, Callable, Dict, List, Optional, Sequence

from models.errors import InternalError, InvalidParameterError
from models.types import (
    CollectiveKind, CollectiveSchedule, FlowPlan, FlowSpec, NodeID, Topology,
)
from pylib.atoms.time_utils import PS_PER_NS
from pylib.units import schedule_rules
from services.logger_service import get_logger

logger = get_logger('fabsim.collectives')


# ===== 排程 =====

def ring_allgather(n: int, block: int) -> CollectiveSchedule:
    return schedule_rules.ring_allgather(n, block)


def linear_alltoall(n: int, vector: int, window: int = 4) -> CollectiveSchedule:
    return schedule_rules.linear_alltoall(n, vector, window)


def incast(senders: Sequence[int], target: int, size: int, n: Optional[int] = None) -> CollectiveSchedule:
    return schedule_rules.incast(senders, target, size, n)


def permutation(n: int, size: int) -> CollectiveSchedule:
    return schedule_rules.permutation(n, size)


def build_schedule(kind: CollectiveKind, n: int, size: int, *, window: int = 4) -> CollectiveSchedule:
    """依種類建立 n 個 rank 的排程

    incast 以最後一個 rank 為目標、其餘 rank 為來源；size 對 AllGather 是每個
    rank 的區塊，對 AlltoAll 是每個 rank 的總傳送量。
    """
    kind = CollectiveKind(kind)
    if kind == CollectiveKind.ALLGATHER:
        return ring_allgather(n, size)
    if kind == CollectiveKind.ALLTOALL:
        return linear_alltoall(n, size, window)
    if kind == CollectiveKind.INCAST:
        if n < 2:
            raise InvalidParameterError("incast needs a target and at least one sender")
        return incast(range(n - 1), n - 1, size, n)
    if kind == CollectiveKind.PERMUTATION:
        return permutation(n, size)
    raise InvalidParameterError(f"unknown collective: {kind}")


def schedule_to_flows(sched: CollectiveSchedule, topo: Topology, participants: Sequence[NodeID]) -> FlowPlan:
    """每個傳輸變成一個 FlowSpec

    分輪排程：rank 在第 r+1 輪的傳送要等它在第 r 輪的收發都完成。
    管線化排程（window）：rank 的第 k 個傳送要等第 k−window 個完成。
    路徑在流開始時才由路由策略決定。
    """
    ok, msg = schedule_rules.check_schedule(sched)
    if not ok:
        raise InvalidParameterError(msg)
    if len(participants) < sched.n:
        raise InvalidParameterError(f"schedule has {sched.n} ranks but only {len(participants)} participants")
    for rank in range(sched.n):
        if participants[rank] not in topo.attachment:
            raise InvalidParameterError(f"rank {rank} maps to unknown endpoint {participants[rank]}")

    rank_of = {participants[r]: r for r in range(sched.n)}
    specs: List[FlowSpec] = []
    if sched.window is None:
        prev: List[FlowSpec] = []
        for r, transfers in enumerate(sched.rounds):
            cur: List[FlowSpec] = []
            for t in transfers:
                deps = tuple(f.index for f in prev if t.src in (f.rank, rank_of[f.dst]))
                spec = FlowSpec(len(specs), participants[t.src], participants[t.dst], t.size,
                                deps=deps, round=r, rank=t.src)
                specs.append(spec)
                cur.append(spec)
            prev = cur
    else:
        per_rank: Dict[int, List[int]] = {}
        for r, transfers in enumerate(sched.rounds):
            for t in transfers:
                issued = per_rank.setdefault(t.src, [])
                deps = (issued[-sched.window],) if len(issued) >= sched.window else ()
                spec = FlowSpec(len(specs), participants[t.src], participants[t.dst], t.size,
                                deps=deps, round=r, rank=t.src)
                issued.append(spec.index)
                specs.append(spec)
    return FlowPlan(kind=sched.kind, flows=tuple(specs))


# ===== 執行 =====

class CollectiveRun:
    """在引擎中執行一個 FlowPlan；全部流完成時呼叫 on_complete(run)"""

    def __init__(self, engine: Any, plan: FlowPlan, *, tag: Any = None,
                 on_complete: Optional[Callable[['CollectiveRun'], None]] = None) -> None:
        self.engine = engine
        self.plan = plan
        self.tag = tag
        self.on_complete = on_complete
        self.start_ps: Optional[int] = None
        self.finish_ps: Optional[int] = None
        self.flows: Dict[int, Any] = {}
        self._waiting: Dict[int, int] = {}
        self._dependents: Dict[int, List[int]] = {}
        self._remaining = len(plan.flows)
        for spec in plan.flows:
            self._waiting[spec.index] = len(spec.deps)
            for d in spec.deps:
                self._dependents.setdefault(d, []).append(spec.index)

    @property
    def duration_ns(self) -> Optional[float]:
        if self.start_ps is None or self.finish_ps is None:
            return None
        return (self.finish_ps - self.start_ps) / PS_PER_NS

    @property
    def done(self) -> bool:
        return self.finish_ps is not None

    def start(self) -> 'CollectiveRun':
        if self.start_ps is not None:
            raise InternalError("collective already started")
        self.start_ps = self.engine.now_ps
        if not self.plan.flows:
            self.engine.schedule_ps(self.engine.now_ps, self._finish)
            return self
        for spec in self.plan.flows:
            if not spec.deps:
                self._launch(spec)
        return self

    def _launch(self, spec: FlowSpec) -> None:
        flow = self.engine.create_flow(spec.src, spec.dst, spec.size, tag=(self.tag, spec.rank),
                                       on_complete=lambda f, i=spec.index: self._flow_done(i))
        self.flows[spec.index] = flow
        self.engine.inject_flow(flow)

    def _flow_done(self, index: int) -> None:
        self._remaining -= 1
        for child in self._dependents.get(index, ()):
            self._waiting[child] -= 1
            if self._waiting[child] == 0:
                self._launch(self.plan.flows[child])
        if self._remaining == 0:
            self._finish()

    def _finish(self) -> None:
        self.finish_ps = self.engine.now_ps
        if self.on_complete:
            self.on_complete(self)


def pipeline_estimate_ns(kind: CollectiveKind, n: int, size: int, rate_bps: int, *,
                         cell_bytes: int, hops: int, latency_ns: int) -> float:
    """無競爭時的解析完成時間（儲存轉送 cell 管線）

    AllGather：(n−1) 輪，每輪 block 序列化 + (hops−1) 個 cell 時間 + 路徑延遲。
    """
    cell_ns = min(cell_bytes, size) * 8 * 1e9 / rate_bps
    per_round = size * 8 * 1e9 / rate_bps + (hops - 1) * cell_ns + hops * latency_ns
    if CollectiveKind(kind) == CollectiveKind.ALLGATHER:
        return (n - 1) * per_round
    return per_round
