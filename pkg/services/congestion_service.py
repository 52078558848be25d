"""
fabsim v1.0 - 擁塞控制服務模組

功能：ECN 標記、DCQCN 速率控制、InfiniBand FECN/BECN + 封包間隔、
      Slingshot 式逐流節流；引擎透過 CongestionController 介面呼叫
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

from models.errors import InternalError, InvalidParameterError
from models.types import (
    CcConfig, CcVariant, DcqcnParams, DcqcnState, FlowGranularCcState,
    FlowGranularParams, IbCcParams, IbCcState,
)
from pylib.units import dcqcn_rules, ecn_rules, flow_granular_rules, ib_cc_rules
from pylib.atoms.time_utils import PS_PER_NS
from services.logger_service import get_logger

logger = get_logger('fabsim.cc')


# ===== 規則包裝（對應各 CC 操作） =====

def ecn_mark_on_enqueue(queue: Any, cell: Any, rng: Any) -> Any:
    """依佇列佔用量標記 ECN；佔用量取入列前的值"""
    if queue.ecn is None:
        return cell
    occ = queue.occupancy
    p = ecn_rules.mark_probability(occ, queue.ecn)
    if p >= 1.0:
        cell.ecn = True
    elif p > 0.0 and rng.random() < p:
        cell.ecn = True
    return cell


def dcqcn_on_cnp(state: DcqcnState, params: DcqcnParams) -> DcqcnState:
    return dcqcn_rules.on_cnp(state, params)


def dcqcn_recover(state: DcqcnState, params: DcqcnParams) -> DcqcnState:
    return dcqcn_rules.recover(state, params)


@dataclass(frozen=True)
class Becn:
    """反向壅塞通知：送達來源的時間與所屬連線"""
    conn_id: int
    time_ps: int
    seq: int


def ib_on_fecn(cell: Any, now_ps: int, reverse_delay_ps: int) -> Optional[Becn]:
    """帶 FECN 的 cell 送達目的端 → 一個 BECN，經反向路徑延遲回到來源"""
    if not cell.ecn:
        return None
    return Becn(cell.flow.conn.id, now_ps + reverse_delay_ps, cell.seq)


def ib_apply_ipd(state: IbCcState, becn: Optional[Becn], params: IbCcParams) -> IbCcState:
    """收到 BECN 加大間隔；becn 為 None 代表一個無 BECN 的恢復週期"""
    if becn is None:
        return ib_cc_rules.recover(state)
    return ib_cc_rules.apply_becn(state, params)


def flow_granular_update(port: Any, window_ns: int, params: FlowGranularParams,
                         slack_bytes: int = 0) -> FlowGranularCcState:
    """以最近一個視窗的貢獻表重建節流集合；slack_bytes 通常是一個 cell"""
    return flow_granular_rules.select_throttled(
        port.contrib,
        capacity_bps=port.link.capacity_bps,
        window_ns=window_ns,
        occupancy=port.occupancy,
        threshold=params.threshold,
        cap_scale=params.cap_scale,
        slack_bytes=slack_bytes,
    )


# ===== 控制器 =====

class CongestionController:
    """cc = none：不標記、不回饋，連線一律以線速注入"""

    variant = CcVariant.NONE

    def __init__(self, engine: Any, cfg: CcConfig) -> None:
        self.engine = engine
        self.cfg = cfg

    def configure_port(self, port: Any) -> None:
        pass

    def attach(self, conn: Any) -> None:
        pass

    def on_enqueue(self, port: Any, cell: Any) -> None:
        pass

    def on_deliver(self, cell: Any) -> None:
        pass

    def on_flow_finish(self, flow: Any) -> None:
        pass

    def rate_bps(self, conn: Any) -> float:
        return conn.line_bps

    def gap_ps(self, conn: Any, size: int, ser_ps: int) -> int:
        """同一連線相鄰兩個 cell 的最小發送間隔"""
        rate = self.rate_bps(conn)
        if rate >= conn.line_bps:
            return ser_ps
        return max(ser_ps, int(math.ceil(size * 8 * 10 ** 12 / rate)))

    def describe(self) -> Dict[str, Any]:
        return {'cc': self.variant.value}


class DcqcnController(CongestionController):
    """ECN 標記 + 接收端 CNP（每 cnp_interval 至多一個）+ 來源端速率狀態機"""

    variant = CcVariant.DCQCN

    def __init__(self, engine: Any, cfg: CcConfig) -> None:
        super().__init__(engine, cfg)
        self.params = cfg.dcqcn
        self.cnps = 0

    def configure_port(self, port: Any) -> None:
        ok, msg = ecn_rules.validate_ecn(self.params.ecn, port.capacity_bytes)
        if not ok:
            raise InvalidParameterError(f"ecn on link {port.id}: {msg}")
        port.ecn = self.params.ecn

    def attach(self, conn: Any) -> None:
        conn.dcqcn = dcqcn_rules.initial_state(conn.line_bps, self.params)

    def on_enqueue(self, port: Any, cell: Any) -> None:
        ecn_mark_on_enqueue(port, cell, self.engine.rng)

    def on_deliver(self, cell: Any) -> None:
        if not cell.ecn:
            return
        conn = cell.flow.conn
        now = self.engine.now_ps
        interval = self.params.cnp_interval_ns * PS_PER_NS
        if conn.last_cnp_sent_ps is not None and now - conn.last_cnp_sent_ps < interval:
            return
        conn.last_cnp_sent_ps = now
        self.engine.schedule_ps(now + conn.feedback_delay_ps, self._on_cnp, conn)

    def _on_cnp(self, conn: Any) -> None:
        self.cnps += 1
        conn.dcqcn = self._checked(conn, dcqcn_on_cnp(conn.dcqcn, self.params))
        conn.last_feedback_ps = self.engine.now_ps
        self.engine.record('cnp', -1, conn.id, 0)
        if not conn.timer_pending:
            conn.timer_pending = True
            self.engine.schedule_ps(self.engine.now_ps + self.params.timer_ns * PS_PER_NS, self._on_timer, conn)

    def _on_timer(self, conn: Any) -> None:
        period = self.params.timer_ns * PS_PER_NS
        now = self.engine.now_ps
        conn.timer_pending = False
        if now - conn.last_feedback_ps < period:
            conn.timer_pending = True
            self.engine.schedule_ps(conn.last_feedback_ps + period, self._on_timer, conn)
            return
        conn.dcqcn = self._checked(conn, dcqcn_recover(conn.dcqcn, self.params))
        if not dcqcn_rules.is_recovered(conn.dcqcn):
            conn.timer_pending = True
            self.engine.schedule_ps(now + period, self._on_timer, conn)

    @staticmethod
    def _checked(conn: Any, state: DcqcnState) -> DcqcnState:
        if not dcqcn_rules.check_state(state):
            raise InternalError(f"dcqcn state of connection {conn.id} out of range: {state}")
        return state

    def rate_bps(self, conn: Any) -> float:
        return conn.dcqcn.current

    def describe(self) -> Dict[str, Any]:
        p = self.params
        return {
            'cc': self.variant.value, 'preset': self.cfg.preset, 'g': p.g, 'timer_ns': p.timer_ns,
            'cnp_interval_ns': p.cnp_interval_ns, 'fast_recovery_steps': p.fast_recovery_steps,
            'ai_bps': p.ai_bps, 'min_rate_bps': p.min_rate_bps,
            'kmin': p.ecn.kmin, 'kmax': p.ecn.kmax, 'pmax': p.ecn.pmax,
        }


class IbController(CongestionController):
    """交換機 FECN 標記 → 目的端回 BECN → 來源加大封包間隔（IPD）"""

    variant = CcVariant.IB

    def __init__(self, engine: Any, cfg: CcConfig) -> None:
        super().__init__(engine, cfg)
        self.params = cfg.ib
        self.becns = 0
        if not 0.0 <= self.params.mark_probability <= 1.0:
            raise InvalidParameterError("ib mark probability must be in [0, 1]")

    def attach(self, conn: Any) -> None:
        conn.ib = ib_cc_rules.initial_state(self.params)

    def on_enqueue(self, port: Any, cell: Any) -> None:
        if port.occupancy < self.params.threshold:
            return
        if ib_cc_rules.should_mark_fecn(port.occupancy, self.params, self.engine.rng.random()):
            cell.ecn = True

    def on_deliver(self, cell: Any) -> None:
        conn = cell.flow.conn
        becn = ib_on_fecn(cell, self.engine.now_ps, conn.feedback_delay_ps)
        if becn is not None:
            self.engine.schedule_ps(becn.time_ps, self._on_becn, conn, becn)

    def _on_becn(self, conn: Any, becn: Becn) -> None:
        self.becns += 1
        conn.ib = ib_apply_ipd(conn.ib, becn, self.params)
        conn.last_feedback_ps = self.engine.now_ps
        self.engine.record('becn', -1, conn.id, conn.ib.ipd_ns)
        if not conn.timer_pending:
            conn.timer_pending = True
            self.engine.schedule_ps(
                self.engine.now_ps + self.params.recovery_interval_ns * PS_PER_NS, self._on_timer, conn)

    def _on_timer(self, conn: Any) -> None:
        period = self.params.recovery_interval_ns * PS_PER_NS
        now = self.engine.now_ps
        conn.timer_pending = False
        if now - conn.last_feedback_ps >= period:
            conn.ib = ib_apply_ipd(conn.ib, None, self.params)
        if conn.ib.ipd_ns > 0:
            conn.timer_pending = True
            self.engine.schedule_ps(now + period, self._on_timer, conn)

    def rate_bps(self, conn: Any) -> float:
        cell_ns = self.engine.settings.cell_bytes * 8 * 1e9 / conn.line_bps
        return ib_cc_rules.effective_rate(conn.line_bps, cell_ns, conn.ib.ipd_ns)

    def gap_ps(self, conn: Any, size: int, ser_ps: int) -> int:
        return ser_ps + conn.ib.ipd_ns * PS_PER_NS

    def describe(self) -> Dict[str, Any]:
        p = self.params
        return {
            'cc': self.variant.value, 'preset': self.cfg.preset, 'threshold': p.threshold,
            'mark_probability': p.mark_probability, 'ipd_step_ns': p.ipd_step_ns,
            'max_ipd_ns': p.max_ipd_ns, 'recovery_decrement_ns': p.recovery_decrement_ns,
            'recovery_interval_ns': p.recovery_interval_ns,
        }


class FlowGranularController(CongestionController):
    """交換機逐埠記錄每條連線的貢獻量，只節流達到公平份額的來源

    擁塞視窗內仍達公平份額的已節流來源再降一次（乘 cap_scale，下限為公平份額的
    MIN_CAP_FRACTION）；安靜視窗內上限除以 cap_scale 回升，回到線速即解除。
    """

    variant = CcVariant.FLOW_GRANULAR

    def __init__(self, engine: Any, cfg: CcConfig) -> None:
        super().__init__(engine, cfg)
        self.params = cfg.flow_granular
        if self.params.window_ns <= 0:
            raise InvalidParameterError("flow-granular window must be > 0")
        if not 0.0 < self.params.cap_scale <= 1.0:
            raise InvalidParameterError("flow-granular cap_scale must be in (0, 1]")
        self.throttle_events = 0
        engine.every(self.params.window_ns * PS_PER_NS, self.tick)

    def attach(self, conn: Any) -> None:
        conn.caps = {}

    def on_enqueue(self, port: Any, cell: Any) -> None:
        cid = cell.flow.conn.id
        port.contrib[cid] = port.contrib.get(cid, 0) + cell.size

    def tick(self) -> None:
        window = self.params.window_ns
        slack = self.engine.settings.cell_bytes
        for port in self.engine.switch_ports:
            if not port.contrib and not port.throttled:
                continue
            state = flow_granular_update(port, window, self.params, slack)
            if state.congested:
                port.quiet = 0
                for cid in sorted(state.throttle):
                    self._throttle(port, cid, state)
            elif port.throttled:
                if port.occupancy <= self.params.threshold:
                    port.quiet += 1
                    self._relax(port)
                else:
                    port.quiet = 0
                if port.throttled and port.quiet >= self.params.release_windows:
                    self._release(port)
            port.contrib = {}

    def _throttle(self, port: Any, cid: int, state: FlowGranularCcState) -> None:
        conn = self.engine.connections_by_id[cid]
        fresh = state.caps[cid]
        if cid in port.throttled:
            conn.caps[port.id] = flow_granular_rules.tighten_cap(
                conn.caps[port.id], fresh, self.params.cap_scale, state.fair_share_bps)
            return
        self.throttle_events += 1
        self.engine.record('throttle', port.id, cid, port.occupancy)
        port.throttled.add(cid)
        conn.caps[port.id] = fresh

    def _relax(self, port: Any) -> None:
        conns = self.engine.connections_by_id
        for cid in sorted(port.throttled):
            conn = conns[cid]
            cap = flow_granular_rules.relax_cap(conn.caps[port.id], self.params.cap_scale, conn.line_bps)
            if cap >= conn.line_bps:
                self._drop(port, cid)
            else:
                conn.caps[port.id] = cap

    def _release(self, port: Any) -> None:
        for cid in sorted(port.throttled):
            self._drop(port, cid)
        port.quiet = 0

    def _drop(self, port: Any, cid: int) -> None:
        self.engine.connections_by_id[cid].caps.pop(port.id, None)
        port.throttled.discard(cid)
        self.engine.record('release', port.id, cid, port.occupancy)

    def rate_bps(self, conn: Any) -> float:
        if not conn.caps:
            return conn.line_bps
        return min(conn.line_bps, min(conn.caps.values()))

    def describe(self) -> Dict[str, Any]:
        p = self.params
        return {
            'cc': self.variant.value, 'preset': self.cfg.preset, 'window_ns': p.window_ns,
            'threshold': p.threshold, 'cap_scale': p.cap_scale, 'release_windows': p.release_windows,
        }


_CONTROLLERS = {
    CcVariant.NONE: CongestionController,
    CcVariant.DCQCN: DcqcnController,
    CcVariant.IB: IbController,
    CcVariant.FLOW_GRANULAR: FlowGranularController,
}


def make_controller(engine: Any, cfg: CcConfig) -> CongestionController:
    """依 cc 變體建立控制器"""
    cls = _CONTROLLERS.get(CcVariant(cfg.variant))
    if cls is None:
        raise InvalidParameterError(f"unknown cc variant: {cfg.variant}")
    return cls(engine, cfg)
