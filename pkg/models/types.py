"""
fabsim v1.0 - 類型定義

統一類型定義：拓撲、路徑、流、擁塞控制狀態、實驗規格、結果
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple

# ============================================================
# 1. 基礎類型別名
# ============================================================

NodeID = str
LinkID = int
FlowID = int
Path = Tuple[LinkID, ...]

JSON = Dict[str, Any]


# ============================================================
# 2. 枚舉定義
# ============================================================

class CcVariant(str, Enum):
    """擁塞控制策略"""
    NONE = 'none'
    DCQCN = 'dcqcn'
    IB = 'ib'
    FLOW_GRANULAR = 'flow_granular'


class LbVariant(str, Enum):
    """負載平衡策略"""
    DETERMINISTIC = 'deterministic'
    ECMP = 'ecmp'
    ADAPTIVE = 'adaptive'
    NSLB = 'nslb'


class FlowControl(str, Enum):
    """鏈路層無損流控"""
    CREDIT = 'credit'
    PFC = 'pfc'


class PathPolicy(str, Enum):
    MINIMAL = 'minimal-only'
    ALL = 'minimal-and-nonminimal'


class CollectiveKind(str, Enum):
    ALLGATHER = 'allgather'
    ALLTOALL = 'alltoall'
    INCAST = 'incast'
    PERMUTATION = 'permutation'


class InjectionMode(str, Enum):
    STEADY = 'steady'
    BURSTY = 'bursty'


class BurstUnit(str, Enum):
    """突發長度單位：集體通訊次數或奈秒"""
    COLLECTIVES = 'collectives'
    NS = 'ns'


# ============================================================
# 3. 拓撲
# ============================================================

@dataclass(frozen=True)
class Link:
    """單向鏈路（雙向鏈路以兩條 Link 表示）"""
    id: LinkID
    src: NodeID
    dst: NodeID
    capacity_bps: int
    latency_ns: int
    kind: str = 'fabric'   # host / fabric / global


@dataclass(frozen=True)
class SwitchInfo:
    id: NodeID
    tier: str               # edge / leaf / spine / agg / core / router
    group: Optional[int] = None


@dataclass(frozen=True)
class Topology:
    """容量化有向圖；建構後不可變，可跨執行緒唯讀共享"""
    name: str
    endpoints: Tuple[NodeID, ...]
    switches: Mapping[NodeID, SwitchInfo]
    links: Tuple[Link, ...]
    attachment: Mapping[NodeID, NodeID]
    graph: Any = field(default=None, compare=False, repr=False)   # networkx.MultiDiGraph
    host_uplink: Mapping[NodeID, LinkID] = field(default_factory=dict, compare=False, repr=False)
    host_downlink: Mapping[NodeID, LinkID] = field(default_factory=dict, compare=False, repr=False)
    switch_graph: Any = field(default=None, compare=False, repr=False)   # networkx.DiGraph, parallel links in "links"
    path_cache: Dict[Any, Any] = field(default_factory=dict, compare=False, repr=False)

    def endpoint_index(self, endpoint: NodeID) -> int:
        return self.endpoints.index(endpoint)

    def edge_of(self, endpoint: NodeID) -> NodeID:
        return self.attachment[endpoint]

    def uplinks_of(self, switch: NodeID) -> List[LinkID]:
        """Switch-to-switch links leaving a switch, by id."""
        return sorted(
            link.id for link in self.links
            if link.src == switch and link.dst in self.switches
        )

    @property
    def edge_switches(self) -> List[NodeID]:
        return sorted(set(self.attachment.values()))


@dataclass(frozen=True)
class PathSet:
    """候選路徑集合：每條路徑為交換機間鏈路 id 序列"""
    src_edge: NodeID
    dst_edge: NodeID
    paths: Tuple[Path, ...]
    minimal: Tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def minimal_paths(self) -> Tuple[Path, ...]:
        return tuple(p for p, m in zip(self.paths, self.minimal) if m)

    @property
    def nonminimal_paths(self) -> Tuple[Path, ...]:
        return tuple(p for p, m in zip(self.paths, self.minimal) if not m)


# ============================================================
# 4. 擁塞控制參數 / 狀態
# ============================================================

@dataclass(frozen=True)
class EcnConfig:
    kmin: int        # bytes
    kmax: int        # bytes
    pmax: float


@dataclass(frozen=True)
class DcqcnParams:
    g: float = 1 / 16
    timer_ns: int = 55_000
    cnp_interval_ns: int = 50_000
    fast_recovery_steps: int = 5
    ai_bps: int = 5_000_000_000
    min_rate_bps: int = 100_000_000
    ecn: EcnConfig = EcnConfig(kmin=8 * 4096, kmax=48 * 4096, pmax=0.2)


@dataclass(frozen=True)
class DcqcnState:
    current: float       # bps
    target: float        # bps
    alpha: float
    line_rate: float
    stage: int = 0       # recovery steps since last CNP
    min_rate: float = 100_000_000.0


@dataclass(frozen=True)
class IbCcParams:
    threshold: int = 16 * 4096          # bytes
    mark_probability: float = 0.5
    ipd_step_ns: int = 100
    max_ipd_ns: int = 10_000
    recovery_decrement_ns: int = 100
    recovery_interval_ns: int = 10_000


@dataclass(frozen=True)
class IbCcState:
    ipd_ns: int = 0
    mark_probability: float = 0.5
    recovery_decrement_ns: int = 100


@dataclass(frozen=True)
class FlowGranularParams:
    window_ns: int = 2_000
    threshold: int = 8 * 4096           # bytes
    cap_scale: float = 0.9
    release_windows: int = 16


@dataclass(frozen=True)
class FlowGranularCcState:
    """某個擁塞埠的流貢獻表與節流集合"""
    contributions: Mapping[FlowID, int] = field(default_factory=dict)
    throttle: FrozenSet[FlowID] = frozenset()
    caps: Mapping[FlowID, float] = field(default_factory=dict)
    fair_share_bps: float = 0.0
    congested: bool = False


@dataclass(frozen=True)
class CcConfig:
    variant: CcVariant = CcVariant.NONE
    preset: str = 'stable'
    dcqcn: DcqcnParams = DcqcnParams()
    ib: IbCcParams = IbCcParams()
    flow_granular: FlowGranularParams = FlowGranularParams()


# ============================================================
# 5. 負載平衡
# ============================================================

@dataclass(frozen=True)
class RoutingPolicy:
    variant: LbVariant = LbVariant.DETERMINISTIC
    seed: int = 0
    interval_ns: int = 5_000
    bias: float = 0.5                   # non-minimal threshold, fraction of queue capacity
    staleness_ns: int = 0


@dataclass(frozen=True)
class FlowMatrix:
    """(來源邊緣, 目的邊緣) 需求 + 流到上行鏈路的指派"""
    flows: Mapping[FlowID, Tuple[NodeID, NodeID]] = field(default_factory=dict)
    rates: Mapping[FlowID, float] = field(default_factory=dict)
    assignment: Mapping[FlowID, LinkID] = field(default_factory=dict)

    @property
    def demand(self) -> Dict[Tuple[NodeID, NodeID], Tuple[int, float]]:
        out: Dict[Tuple[NodeID, NodeID], Tuple[int, float]] = {}
        for fid, pair in self.flows.items():
            count, rate = out.get(pair, (0, 0.0))
            out[pair] = (count + 1, rate + self.rates.get(fid, 0.0))
        return out


# ============================================================
# 6. 集體通訊
# ============================================================

@dataclass(frozen=True)
class Transfer:
    src: int        # rank
    dst: int        # rank
    size: int       # bytes


@dataclass(frozen=True)
class CollectiveSchedule:
    """rounds 依序執行；window 不為 None 時為單一階段的管線化傳送"""
    kind: CollectiveKind
    n: int
    rounds: Tuple[Tuple[Transfer, ...], ...]
    window: Optional[int] = None

    @property
    def transfers(self) -> List[Transfer]:
        return [t for r in self.rounds for t in r]

    @property
    def total_bytes(self) -> int:
        return sum(t.size for t in self.transfers)


@dataclass(frozen=True)
class FlowSpec:
    """schedule_to_flows 的輸出：一個傳輸 + 其前置相依"""
    index: int
    src: NodeID
    dst: NodeID
    size: int
    deps: Tuple[int, ...] = ()
    round: int = 0
    rank: int = 0


@dataclass(frozen=True)
class FlowPlan:
    kind: CollectiveKind
    flows: Tuple[FlowSpec, ...]

    def __len__(self) -> int:
        return len(self.flows)


# ============================================================
# 7. 引擎 / 實驗規格
# ============================================================

@dataclass(frozen=True)
class EngineSettings:
    cell_bytes: int = 4096
    buffer_cells: Optional[int] = 64     # None = unbounded
    flow_control: FlowControl = FlowControl.CREDIT
    xoff_cells: int = 48
    xon_cells: int = 32
    link_latency_ns: int = 100
    trace: bool = False


@dataclass(frozen=True)
class BurstSpec:
    unit: BurstUnit = BurstUnit.COLLECTIVES
    length: int = 1                      # collectives or ns
    gap_ns: Optional[int] = 0            # None = infinite gap


@dataclass(frozen=True)
class TopologySpec:
    preset: str = 'haicgu-sw'
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentSpec:
    topology: TopologySpec = TopologySpec()
    nodes: int = 8
    victim: CollectiveKind = CollectiveKind.ALLGATHER
    vectors: Tuple[int, ...] = (32 * 1024,)
    aggressor: CollectiveKind = CollectiveKind.ALLTOALL
    aggressor_bytes: Optional[int] = None
    injection: InjectionMode = InjectionMode.STEADY
    burst: BurstSpec = BurstSpec()
    cc: CcConfig = CcConfig()
    lb: RoutingPolicy = RoutingPolicy()
    engine: EngineSettings = EngineSettings()
    alltoall_window: int = 4
    iterations: int = 1000
    warmup: int = 100
    seed: int = 1

    @property
    def retained(self) -> int:
        return self.iterations - self.warmup

    @property
    def aggressor_size(self) -> int:
        return self.aggressor_bytes if self.aggressor_bytes is not None else max(self.vectors)


# ============================================================
# 8. 結果
# ============================================================

@dataclass(frozen=True)
class RunRecord:
    """每次迭代的受害者完成時間（ns）；統計只看保留的迭代"""
    times_ns: Tuple[float, ...]
    warmup: int
    bytes_per_rank: int = 0

    @property
    def retained(self) -> Tuple[float, ...]:
        return self.times_ns[self.warmup:]


@dataclass(frozen=True)
class ThroughputTrace:
    label: str
    interval_ns: float
    samples: Tuple[Tuple[float, float], ...]     # (time ns, bps)
    capacity_bps: float = 0.0


@dataclass
class ResultRow:
    """ResultTable 的一列；欄位順序即 CSV 欄位順序"""
    topology: str
    nodes: int
    victim: str
    vector_bytes: int
    aggressor: str
    injection: str
    burst_length: str
    idle_gap: str
    cc: str
    lb: str
    baseline_mean_ns: Optional[float] = None
    congested_mean_ns: Optional[float] = None
    ratio: Optional[float] = None
    stdev_ns: Optional[float] = None
    p50_ns: Optional[float] = None
    p99_ns: Optional[float] = None
    seed: int = 0
    baseline_gbps: Optional[float] = None
    congested_gbps: Optional[float] = None
    status: str = 'ok'

    @property
    def key(self) -> Tuple[Any, ...]:
        return (self.topology, self.nodes, self.victim, self.vector_bytes, self.aggressor,
                self.injection, self.burst_length, self.idle_gap, self.cc, self.lb, self.seed)

    @property
    def slowdown(self) -> Optional[float]:
        """擁塞 / 基準 時間，即 1 / ratio"""
        return 1.0 / self.ratio if self.ratio else None


RESULT_COLUMNS: Tuple[str, ...] = (
    'topology', 'nodes', 'victim', 'vector_bytes', 'aggressor', 'injection',
    'burst_length', 'idle_gap', 'cc', 'lb',
    'baseline_mean_ns', 'congested_mean_ns', 'ratio', 'stdev_ns', 'p50_ns', 'p99_ns',
    'seed', 'baseline_gbps', 'congested_gbps', 'status',
)
