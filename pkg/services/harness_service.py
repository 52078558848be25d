"""
fabsim v1.0 - 實驗流程服務模組

功能：受害者/攻擊者交錯配置、基準與擁塞執行、穩態與突發注入、
      迭代統計與比值、參數掃描（多執行緒、逐格種子）、具名情境
"""
from __future__ import annotations

import itertools
import json
import threading
import time
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import config
import config_manager
from models.errors import InternalError, InvalidParameterError
from models.types import (
    BurstSpec, BurstUnit, CcConfig, CcVariant, CollectiveKind, DcqcnParams, EcnConfig,
    EngineSettings, ExperimentSpec, FlowGranularParams, FlowPlan, IbCcParams, InjectionMode,
    LbVariant, NodeID, ResultRow, RoutingPolicy, RunRecord, ThroughputTrace, Topology, TopologySpec,
)
from pylib.atoms.format_utils import format_size
from pylib.atoms.hash_utils import MASK64, mix_text
from pylib.atoms.time_utils import PS_PER_NS, format_duration
from pylib.units import allocation_rules, metrics_rules
from services import collective_service, topology_service
from services.engine_service import Engine, ThroughputProbe
from services.logger_service import PerformanceLogger, get_logger
from services.scheduler_service import TaskQueue

logger = get_logger('fabsim.harness')
perf = PerformanceLogger()


# ===== 配置 =====

# 受害者與攻擊者各至少兩個：ring 與 incast 都需要兩個 rank
MIN_NODES = 4


def interleave_allocation(nodes: Sequence[NodeID]) -> Tuple[List[NodeID], List[NodeID]]:
    """偶數位置給受害者、奇數位置給攻擊者"""
    return allocation_rules.interleave_allocation(nodes)


def validate_spec(spec: ExperimentSpec) -> None:
    if spec.iterations < 1:
        raise InvalidParameterError("iterations must be >= 1")
    if not 0 <= spec.warmup < spec.iterations:
        raise InvalidParameterError(f"warmup ({spec.warmup}) must be below iterations ({spec.iterations})")
    if spec.nodes < MIN_NODES or spec.nodes % 2:
        raise InvalidParameterError(f"node count must be even and >= 4, got {spec.nodes}")
    if not spec.vectors:
        raise InvalidParameterError("vector list is empty")
    if any(v < 1 for v in spec.vectors):
        raise InvalidParameterError("vector sizes must be >= 1 byte")
    if CollectiveKind(spec.victim) not in (CollectiveKind.ALLGATHER, CollectiveKind.ALLTOALL):
        raise InvalidParameterError(f"victim collective must be allgather or alltoall, got {spec.victim}")
    burst = spec.burst
    if InjectionMode(spec.injection) == InjectionMode.BURSTY:
        if burst.length < 1:
            raise InvalidParameterError("burst length must be >= 1")
        if burst.gap_ns is not None and burst.gap_ns < 0:
            raise InvalidParameterError("idle gap must be >= 0")


def build_topology(spec: ExperimentSpec) -> Topology:
    return topology_service.build_from_preset(spec.topology.preset, spec.topology.params,
                                              latency_ns=spec.engine.link_latency_ns)


def allocate(spec: ExperimentSpec, topo: Topology) -> Tuple[List[NodeID], List[NodeID]]:
    if spec.nodes > len(topo.endpoints):
        raise InvalidParameterError(
            f"{spec.nodes} nodes requested but {topo.name} has {len(topo.endpoints)} endpoints")
    return interleave_allocation(list(topo.endpoints[:spec.nodes]))


def victim_plan(spec: ExperimentSpec, topo: Topology, victims: Sequence[NodeID], vector: int) -> FlowPlan:
    sched = collective_service.build_schedule(spec.victim, len(victims), vector, window=spec.alltoall_window)
    return collective_service.schedule_to_flows(sched, topo, victims)


def aggressor_plan(spec: ExperimentSpec, topo: Topology, aggressors: Sequence[NodeID],
                   size: Optional[int] = None) -> FlowPlan:
    """incast 目標排在最後一個 rank，其餘攻擊者為來源"""
    size = spec.aggressor_size if size is None else size
    ranks = list(aggressors)
    if CollectiveKind(spec.aggressor) == CollectiveKind.INCAST:
        target = allocation_rules.incast_target(ranks)
        ranks = [a for a in ranks if a != target] + [target]
    sched = collective_service.build_schedule(spec.aggressor, len(ranks), size, window=spec.alltoall_window)
    return collective_service.schedule_to_flows(sched, topo, ranks)


def bytes_per_rank(plan: FlowPlan) -> int:
    return sum(f.size for f in plan.flows if f.rank == 0)


# ===== 執行 =====

class VictimLoop:
    """受害者連續執行 iterations 次集體通訊，前一次完成即開始下一次"""

    def __init__(self, engine: Engine, plan: FlowPlan, iterations: int,
                 on_done: Optional[Callable[[], None]] = None) -> None:
        self.engine = engine
        self.plan = plan
        self.iterations = iterations
        self.on_done = on_done
        self.times_ns: List[float] = []

    def start(self) -> None:
        collective_service.CollectiveRun(self.engine, self.plan, tag='victim', on_complete=self._next).start()

    def _next(self, run: collective_service.CollectiveRun) -> None:
        self.times_ns.append(run.duration_ns)
        if len(self.times_ns) < self.iterations:
            self.start()
        elif self.on_done:
            self.on_done()


class AggressorDriver:
    """攻擊者注入：穩態無限迴圈，或突發（k 次集體通訊 / 一段時間）與閒置交替"""

    def __init__(self, engine: Engine, plan: FlowPlan, mode: InjectionMode, burst: BurstSpec) -> None:
        self.engine = engine
        self.plan = plan
        self.mode = InjectionMode(mode)
        self.burst = burst
        self.collectives = 0
        self.bursts = 0
        self._in_burst = 0
        self._burst_start_ps = 0
        self._burst_end_ps = 0
        self._active_ps = 0
        self._active_since: Optional[int] = None

    def start(self) -> None:
        self._begin_burst()

    def _begin_burst(self) -> None:
        self.bursts += 1
        self._in_burst = 0
        self._burst_start_ps = self.engine.now_ps
        self._active_since = self.engine.now_ps
        if self.burst.unit == BurstUnit.NS:
            self._burst_end_ps = self.engine.now_ps + self.burst.length * PS_PER_NS
        self._launch()

    def _launch(self) -> None:
        collective_service.CollectiveRun(self.engine, self.plan, tag='aggressor', on_complete=self._done).start()

    def _done(self, run: collective_service.CollectiveRun) -> None:
        self.collectives += 1
        self._in_burst += 1
        if self.mode == InjectionMode.STEADY:
            self._launch()
            return
        if self.burst.unit == BurstUnit.COLLECTIVES:
            more = self._in_burst < self.burst.length
        else:
            more = self.engine.now_ps < self._burst_end_ps
        if more:
            self._launch()
            return
        self._active_ps += self.engine.now_ps - self._active_since
        self._active_since = None
        if self.burst.gap_ns is None:
            return
        self.engine.schedule_ps(self.engine.now_ps + self.burst.gap_ns * PS_PER_NS, self._begin_burst)

    def active_fraction(self, end_ps: int) -> float:
        """[0, end_ps] 內攻擊者處於突發期的比例"""
        if end_ps <= 0:
            return 0.0
        active = self._active_ps
        if self._active_since is not None:
            active += end_ps - self._active_since
        return min(1.0, active / end_ps)


@dataclass
class RunOutcome:
    record: RunRecord
    engine: Engine
    active_fraction: float = 0.0
    throughput: Optional[ThroughputTrace] = None
    wall_ms: float = 0.0

    @property
    def trace_lines(self) -> List[str]:
        return self.engine.trace_lines()


def execute(spec: ExperimentSpec, vector: Optional[int] = None, *, congested: bool,
            seed: Optional[int] = None, probe_interval_ns: Optional[int] = None,
            topo: Optional[Topology] = None) -> RunOutcome:
    """跑一次受害者（可選擇加上攻擊者）；回傳紀錄與引擎"""
    validate_spec(spec)
    vector = max(spec.vectors) if vector is None else vector
    seed = spec.seed if seed is None else seed
    topo = build_topology(spec) if topo is None else topo
    victims, aggressors = allocate(spec, topo)
    vplan = victim_plan(spec, topo, victims, vector)

    started = time.perf_counter()
    engine = Engine(topo, spec.engine, spec.cc, spec.lb, seed)
    probe = None
    if probe_interval_ns:
        first = victims[0]
        cap = topo.links[topo.host_uplink[first]].capacity_bps
        probe = engine.add_probe(ThroughputProbe(
            f"victim {first}", probe_interval_ns,
            lambda f, src=first: f.src == src and isinstance(f.tag, tuple) and f.tag[0] == 'victim', cap))

    driver = None
    loop = VictimLoop(engine, vplan, spec.iterations, on_done=engine.stop)
    if congested:
        driver = AggressorDriver(engine, aggressor_plan(spec, topo, aggressors), spec.injection, spec.burst)
        driver.start()
    loop.start()
    engine.run_until(None)
    engine.check_invariants()
    engine.finalize_stats()

    if len(loop.times_ns) != spec.iterations:
        raise InternalError(f"victim finished {len(loop.times_ns)} of {spec.iterations} iterations")
    record = RunRecord(times_ns=tuple(loop.times_ns), warmup=spec.warmup, bytes_per_rank=bytes_per_rank(vplan))
    if any(t <= 0 for t in record.times_ns):
        raise InternalError("non-positive iteration time")
    wall_ms = (time.perf_counter() - started) * 1000
    return RunOutcome(
        record=record,
        engine=engine,
        active_fraction=driver.active_fraction(engine.now_ps) if driver else 0.0,
        throughput=probe.to_trace() if probe else None,
        wall_ms=wall_ms,
    )


def run_baseline(spec: ExperimentSpec, vector: Optional[int] = None, *, seed: Optional[int] = None) -> RunRecord:
    """受害者單獨執行，攻擊者節點閒置"""
    return execute(spec, vector, congested=False, seed=seed).record


def run_congested(spec: ExperimentSpec, vector: Optional[int] = None, *, seed: Optional[int] = None) -> RunRecord:
    """受害者與攻擊者同時開始；受害者量測方式與基準相同"""
    return execute(spec, vector, congested=True, seed=seed).record


def compute_ratio(baseline: RunRecord, congested: RunRecord) -> float:
    return metrics_rules.compute_ratio(baseline, congested)


# ===== 掃描 =====

@dataclass(frozen=True)
class SweepAxes:
    """空的軸沿用模板的值"""
    nodes: Tuple[int, ...] = ()
    vectors: Tuple[int, ...] = ()
    aggressors: Tuple[CollectiveKind, ...] = ()
    bursts: Tuple[BurstSpec, ...] = ()
    gaps: Tuple[Optional[int], ...] = ()


@dataclass(frozen=True)
class Cell:
    spec: ExperimentSpec
    vector: int

    @property
    def coords(self) -> Tuple[str, ...]:
        s = self.spec
        return (s.topology.preset, str(s.nodes), s.victim.value, str(self.vector), s.aggressor.value,
                s.injection.value, burst_label(s), gap_label(s), s.cc.variant.value, s.lb.variant.value)

    @property
    def name(self) -> str:
        return '/'.join(self.coords)


def burst_label(spec: ExperimentSpec) -> str:
    if InjectionMode(spec.injection) == InjectionMode.STEADY:
        return ''
    if spec.burst.unit == BurstUnit.COLLECTIVES:
        return f"{spec.burst.length} collectives"
    return format_duration(spec.burst.length)


def gap_label(spec: ExperimentSpec) -> str:
    if InjectionMode(spec.injection) == InjectionMode.STEADY:
        return ''
    return 'inf' if spec.burst.gap_ns is None else format_duration(spec.burst.gap_ns)


def cell_seed(master: int, coords: Iterable[str]) -> int:
    """由主種子與格座標導出；同一格永遠同一個種子"""
    return mix_text(master, coords) & MASK64


def expand_cells(template: ExperimentSpec, axes: SweepAxes = SweepAxes()) -> List[Cell]:
    nodes = axes.nodes or (template.nodes,)
    vectors = axes.vectors or tuple(template.vectors)
    aggressors = axes.aggressors or (template.aggressor,)
    bursty = InjectionMode(template.injection) == InjectionMode.BURSTY
    bursts = (axes.bursts or (template.burst,)) if bursty else (template.burst,)
    gaps = (axes.gaps or (template.burst.gap_ns,)) if bursty else (template.burst.gap_ns,)
    # 攻擊者訊息大小固定為整個掃描中最大的向量
    agg_bytes = template.aggressor_bytes if template.aggressor_bytes is not None else max(vectors)
    cells = []
    for n, v, a, b, g in itertools.product(nodes, vectors, aggressors, bursts, gaps):
        burst = replace(b, gap_ns=g) if bursty else template.burst
        spec = replace(template, nodes=n, vectors=(v,), aggressor=CollectiveKind(a), burst=burst,
                       aggressor_bytes=agg_bytes)
        cells.append(Cell(spec, v))
    keys = [c.coords for c in cells]
    if len(set(keys)) != len(keys):
        raise InvalidParameterError("sweep axes contain duplicate values")
    return cells


class _BaselineCache:
    """同一 (節點數, 向量) 的基準只算一次；結果與計算順序無關"""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.records: Dict[Tuple[Any, ...], RunRecord] = {}

    def get(self, spec: ExperimentSpec, vector: int) -> RunRecord:
        key = (spec.topology.preset, tuple(sorted(spec.topology.params.items())), spec.nodes,
               spec.victim.value, vector, spec.cc, spec.lb, spec.engine, spec.iterations, spec.warmup,
               spec.alltoall_window, spec.seed)
        with self.lock:
            hit = self.records.get(key)
        if hit is not None:
            return hit
        seed = cell_seed(spec.seed, ('baseline', spec.topology.preset, str(spec.nodes), spec.victim.value,
                                     str(vector)))
        record = run_baseline(spec, vector, seed=seed)
        with self.lock:
            self.records.setdefault(key, record)
        return record


def _row_for(cell: Cell, seed: int) -> ResultRow:
    s = cell.spec
    return ResultRow(
        topology=s.topology.preset, nodes=s.nodes, victim=s.victim.value, vector_bytes=cell.vector,
        aggressor=s.aggressor.value, injection=s.injection.value, burst_length=burst_label(s),
        idle_gap=gap_label(s), cc=s.cc.variant.value, lb=s.lb.variant.value, seed=seed,
    )


def run_cell(cell: Cell, *, baseline_only: bool = False, cache: Optional[_BaselineCache] = None) -> ResultRow:
    """一格：基準 + 擁塞 + 比值"""
    seed = cell_seed(cell.spec.seed, cell.coords)
    row = _row_for(cell, seed)
    cache = cache or _BaselineCache()
    base = cache.get(cell.spec, cell.vector)
    bsum = metrics_rules.summarize_record(base)
    row.baseline_mean_ns = bsum.mean
    row.baseline_gbps = metrics_rules.bandwidth_gbps(base.bytes_per_rank, bsum.mean)
    if baseline_only:
        row.stdev_ns, row.p50_ns, row.p99_ns = bsum.std, bsum.p50, bsum.p99
        return row
    cong = run_congested(cell.spec, cell.vector, seed=seed)
    csum = metrics_rules.summarize_record(cong)
    row.congested_mean_ns = csum.mean
    row.congested_gbps = metrics_rules.bandwidth_gbps(cong.bytes_per_rank, csum.mean)
    row.ratio = compute_ratio(base, cong)
    row.stdev_ns, row.p50_ns, row.p99_ns = csum.std, csum.p50, csum.p99
    return row


def failed_row(cell: Cell, error: BaseException) -> ResultRow:
    row = _row_for(cell, cell_seed(cell.spec.seed, cell.coords))
    row.status = f"failed: {error}"
    return row


def sweep(template: ExperimentSpec, axes: SweepAxes = SweepAxes(), *, threads: Optional[int] = None,
          baseline_only: bool = False, skip: Optional[Set[Tuple[str, ...]]] = None,
          on_row: Optional[Callable[[ResultRow, Cell], None]] = None) -> List[ResultRow]:
    """每格一組（基準, 擁塞, 比值）

    格與格之間互不共享引擎；結果依格的順序交給 on_row（單一收集者）。
    單格失敗記錄為 failed，不中止整個掃描。skip 內的格座標直接略過。
    """
    validate_spec(template)
    cells = [c for c in expand_cells(template, axes) if not skip or c.coords not in skip]
    cache = _BaselineCache()
    tq = TaskQueue(threads or config.THREADS)
    for cell in cells:
        tq.add(cell.name, run_cell, cell, baseline_only=baseline_only, cache=cache)

    rows: List[ResultRow] = []

    def collect(task) -> None:
        cell = cells[len(rows)]
        row = task.result if task.ok else failed_row(cell, task.error)
        perf.log_slow_cell(cell.name, task.duration_ms)
        rows.append(row)
        if on_row:
            on_row(row, cell)

    tq.run(collect)
    logger.info(f"sweep finished: {len(rows)} cells, {sum(1 for r in rows if r.status != 'ok')} failed")
    return rows


# ===== 情境 =====

@lru_cache(maxsize=1)
def adversarial_ecmp_seed() -> int:
    """碰撞種子：fixture 內列出的每一對端點都雜湊到同一條 leaf0 上行"""
    path = Path(config.ECMP_FIXTURE)
    try:
        return int(json.loads(path.read_text(encoding='utf-8'))['seed'])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InvalidParameterError(f"adversarial ecmp fixture {path}: {exc}") from exc


# 每對 leaf-spine 兩條鏈路；destination-mod-k 讓 incast 流全走目標 leaf 的 down1，
# 受害者進入目標 leaf 走 down0，只在來源 leaf 的上行與一條攻擊流共用佇列
_INCAST_TOPOLOGY = TopologySpec('nanjing-ls', {
    'leaves': 8, 'spines': 1, 'nodes_per_leaf': 2, 'spine_links': 2, 'rate': 100_000_000_000,
})

# 每台 edge 4 個端點配 3 條上行（約 1.33:1）；受害者與攻擊者交錯，
# 每台 edge 只有一條受害流與至多兩條攻擊流離開，整條路徑看負載才找得到空路徑
_TAPERED_TOPOLOGY = TopologySpec('cresco8-ft', {'nodes_per_edge': 4, 'taper': 1.33})

_BURST_TOPOLOGY = TopologySpec('nanjing-ls', {
    'leaves': 4, 'spines': 1, 'nodes_per_leaf': 4, 'spine_links': 1, 'rate': 100_000_000_000,
})


def cc_config(variant: str, preset: str = 'stable') -> CcConfig:
    """由 CC_PRESETS 組出 CcConfig"""
    variant = CcVariant(variant)
    if variant == CcVariant.NONE:
        return CcConfig()
    table = config_manager.CC_PRESETS[variant.value]
    if preset not in table:
        raise InvalidParameterError(f"cc {variant.value} has no preset {preset}")
    p = dict(table[preset])
    if variant == CcVariant.DCQCN:
        ecn = EcnConfig(kmin=p.pop('kmin'), kmax=p.pop('kmax'), pmax=p.pop('pmax'))
        return CcConfig(variant=variant, preset=preset, dcqcn=DcqcnParams(ecn=ecn, **p))
    if variant == CcVariant.IB:
        return CcConfig(variant=variant, preset=preset, ib=IbCcParams(**p))
    return CcConfig(variant=variant, preset=preset, flow_granular=FlowGranularParams(**p))


def _scenarios() -> Dict[str, ExperimentSpec]:
    kib = 1024
    nanjing = ExperimentSpec(
        topology=TopologySpec('nanjing-ls'), nodes=8, victim=CollectiveKind.ALLTOALL,
        vectors=(256 * kib,), aggressor=CollectiveKind.ALLTOALL,
    )
    incast = ExperimentSpec(
        topology=_INCAST_TOPOLOGY, nodes=16, victim=CollectiveKind.ALLGATHER, vectors=(32 * kib,),
        aggressor=CollectiveKind.INCAST, aggressor_bytes=256 * kib,
        lb=RoutingPolicy(LbVariant.DETERMINISTIC),
    )
    fat_tree = ExperimentSpec(
        topology=TopologySpec('cresco8-ft'), nodes=32, victim=CollectiveKind.ALLGATHER,
        vectors=(32 * kib,), cc=cc_config('dcqcn'),
    )
    tapered = ExperimentSpec(
        topology=_TAPERED_TOPOLOGY, nodes=16, victim=CollectiveKind.ALLGATHER,
        vectors=(32 * kib,), aggressor=CollectiveKind.ALLTOALL, aggressor_bytes=256 * kib,
        alltoall_window=1,
    )
    burst_grid = ExperimentSpec(
        topology=_BURST_TOPOLOGY, nodes=16, victim=CollectiveKind.ALLGATHER, vectors=(32 * kib,),
        aggressor=CollectiveKind.INCAST, aggressor_bytes=64 * kib, injection=InjectionMode.BURSTY,
        burst=BurstSpec(BurstUnit.COLLECTIVES, 1, 10_000), cc=cc_config('dcqcn'),
    )
    return {
        'nslb-nanjing': replace(nanjing, lb=RoutingPolicy(LbVariant.NSLB)),
        'ecmp-nanjing-adversarial': replace(nanjing, lb=RoutingPolicy(LbVariant.ECMP, seed=adversarial_ecmp_seed())),
        'incast-cc-none': incast,
        'incast-cc-dcqcn': replace(incast, cc=cc_config('dcqcn')),
        'incast-cc-flow_granular': replace(incast, cc=cc_config('flow_granular')),
        'fat-tree-incast': replace(fat_tree, aggressor=CollectiveKind.INCAST),
        'fat-tree-alltoall': replace(fat_tree, aggressor=CollectiveKind.ALLTOALL),
        'tapered-adaptive': replace(tapered, lb=RoutingPolicy(LbVariant.ADAPTIVE)),
        'tapered-deterministic': replace(tapered, lb=RoutingPolicy(LbVariant.DETERMINISTIC)),
        'burst-grid': burst_grid,
    }


BURST_GRID_AXES = SweepAxes(
    bursts=(BurstSpec(BurstUnit.COLLECTIVES, 1), BurstSpec(BurstUnit.COLLECTIVES, 4),
            BurstSpec(BurstUnit.COLLECTIVES, 16)),
    gaps=(2_000, 20_000, 200_000),
)


def scenario_names() -> List[str]:
    return sorted(_scenarios())


def scenario(name: str, *, iterations: Optional[int] = None, warmup: Optional[int] = None) -> ExperimentSpec:
    """具名情境；iterations / warmup 可縮小以加快測試"""
    table = _scenarios()
    if name not in table:
        raise InvalidParameterError(f"unknown scenario: {name}")
    spec = table[name]
    if iterations is not None:
        spec = replace(spec, iterations=iterations)
    if warmup is not None:
        spec = replace(spec, warmup=warmup)
    return spec


def sawtooth_trace(cc: CcConfig, *, senders: int = 2, size: int = 4 * 1024 * 1024,
                   rate: int = 100_000_000_000, interval_ns: int = 5_000,
                   settings: EngineSettings = EngineSettings()) -> ThroughputTrace:
    """senders 個端點同時送往同一端點（單交換機），回傳第一個來源的吞吐量序列"""
    if senders < 1:
        raise InvalidParameterError("need at least one sender")
    topo = topology_service.build_single_switch(senders + 1, rate, latency_ns=settings.link_latency_ns)
    engine = Engine(topo, settings, cc, RoutingPolicy(), seed=1)
    first, target = topo.endpoints[0], topo.endpoints[-1]
    probe = engine.add_probe(ThroughputProbe(f"{first}->{target}", interval_ns,
                                             lambda f: f.src == first, rate))
    for src in topo.endpoints[:-1]:
        engine.start_flow(src, target, size)
    engine.run_until(None)
    engine.check_invariants()
    return probe.to_trace()


def describe_spec(spec: ExperimentSpec) -> Dict[str, Any]:
    """寫入 sidecar 的實驗描述（含所有套用的預設值）"""
    return {
        'topology': {'preset': spec.topology.preset, 'params': dict(spec.topology.params)},
        'nodes': spec.nodes,
        'victim': spec.victim.value,
        'vectors': list(spec.vectors),
        'vector_semantics': 'allgather: per-rank block; alltoall: per-rank send buffer',
        'aggressor': spec.aggressor.value,
        'aggressor_bytes': spec.aggressor_size,
        'aggressor_bytes_human': format_size(spec.aggressor_size),
        'injection': spec.injection.value,
        'burst_length': burst_label(spec),
        'idle_gap': gap_label(spec),
        'cc': spec.cc.variant.value,
        'cc_preset': spec.cc.preset,
        'lb': spec.lb.variant.value,
        'lb_seed': spec.lb.seed,
        'engine': {
            'cell_bytes': spec.engine.cell_bytes,
            'buffer_cells': spec.engine.buffer_cells,
            'flow_control': spec.engine.flow_control.value,
            'xoff_cells': spec.engine.xoff_cells,
            'xon_cells': spec.engine.xon_cells,
            'link_latency_ns': spec.engine.link_latency_ns,
        },
        'alltoall_window': spec.alltoall_window,
        'iterations': spec.iterations,
        'warmup': spec.warmup,
        'seed': spec.seed,
    }
