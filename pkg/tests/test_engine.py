"""離散事件引擎：時序、無損流控、換路、追蹤"""
import pytest

from models.errors import InternalError, InvalidParameterError
from models.types import EngineSettings, FlowControl
from services import topology_service
from services.engine_service import (
    TRACE_HEADER, Engine, ThroughputProbe, serialization_time_ps, validate_settings,
)
from services.harness_service import cc_config

G100 = 100_000_000_000
CELL = 4096
CELL_NS = 327.68


def _single(n=4, **settings):
    topo = topology_service.build_single_switch(n, G100)
    return Engine(topo, EngineSettings(**settings))


def _alone_ns(cells):
    # 兩跳儲存轉送：整個流的序列化 + 最後一個 cell 再序列化一次 + 兩段延遲
    return (cells + 1) * CELL_NS + 200


def test_serialization_time():
    assert serialization_time_ps(CELL, G100) == 327_680
    assert serialization_time_ps(1, 3) == 2_666_666_666_667


def test_single_flow_matches_store_and_forward():
    engine = _single()
    flow = engine.start_flow('h0', 'h1', 10 * CELL)
    engine.run_until()
    assert flow.done
    assert flow.duration_ns == pytest.approx(3804.48)
    assert flow.duration_ns == pytest.approx(_alone_ns(10))
    engine.check_invariants()


def test_one_byte_flow():
    engine = _single()
    flow = engine.start_flow('h0', 'h1', 1)
    engine.run_until()
    assert flow.duration_ns == pytest.approx(0.08 + 0.08 + 200)


def test_two_senders_share_one_egress():
    engine = _single(3)
    a = engine.start_flow('h0', 'h2', 100 * CELL)
    b = engine.start_flow('h1', 'h2', 100 * CELL)
    engine.run_until()
    alone = _alone_ns(100)
    for flow in (a, b):
        assert 1.9 * alone < flow.duration_ns < 2.1 * alone
    assert engine.stats.delivered_bytes == 200 * CELL
    engine.check_invariants()


def test_credit_flow_control_bounds_queue():
    engine = _single(4, buffer_cells=4)
    flows = [engine.start_flow(src, 'h3', 50 * CELL) for src in ('h0', 'h1', 'h2')]
    engine.run_until()
    stats = engine.finalize_stats()
    assert all(f.done and f.delivered == f.size for f in flows)
    assert max(stats.max_occupancy.values()) <= 4
    assert stats.pauses == 0
    engine.check_invariants()


def test_pfc_pauses_and_stays_lossless():
    engine = _single(4, buffer_cells=8, flow_control=FlowControl.PFC, xoff_cells=6, xon_cells=3)
    flows = [engine.start_flow(src, 'h3', 50 * CELL) for src in ('h0', 'h1', 'h2')]
    engine.run_until()
    stats = engine.finalize_stats()
    assert stats.pauses > 0
    assert all(f.done for f in flows)
    assert max(stats.max_occupancy.values()) <= 8
    assert stats.delivered_bytes == 150 * CELL
    engine.check_invariants()


def test_one_mebibyte_flow_matches_the_closed_form():
    engine = _single()
    flow = engine.start_flow('h0', 'h1', 1024 * 1024)
    engine.run_until()
    assert flow.duration_ns == pytest.approx(_alone_ns(256), rel=1e-3)
    assert flow.duration_ns == pytest.approx(84413.76)


def test_incast_without_cc_gives_the_victim_no_more_than_its_share():
    engine = _single(5)
    shares = []

    def snapshot(_):
        if not shares:
            total = sum(f.delivered for f in flows)
            shares.append(flows[-1].delivered / total)

    flows = [engine.start_flow(src, 'h4', 64 * CELL, on_complete=snapshot) for src in ('h0', 'h1', 'h2', 'h3')]
    engine.run_until()
    assert engine.cc.rate_bps(flows[-1].conn) == flows[-1].conn.line_bps
    assert shares[0] <= 1 / 4 + 0.05


def _two_leaf_incast(**settings):
    # h0（leaf0）與 h2（leaf1）送往 h4（leaf2），各走不同的 spine 下行；只有 h4 的下行超額
    topo = topology_service.build_leaf_spine(3, 1, 2, G100, spine_links=2)
    a = topology_service.enumerate_paths(topo, 'h0', 'h4').minimal_paths[0]
    b = next(p for p in topology_service.enumerate_paths(topo, 'h2', 'h4').minimal_paths if p[-1] != a[-1])
    engine = Engine(topo, EngineSettings(**settings))
    flows = [engine.start_flow('h0', 'h4', 200 * CELL, path=a), engine.start_flow('h2', 'h4', 200 * CELL, path=b)]
    engine.run_until()
    assert all(f.done for f in flows)
    engine.check_invariants()
    return engine, a, topology_service.full_route(topo, 'h0', 'h4', a)[-1]


def test_pfc_pause_spreads_away_from_the_destination():
    engine, path, downlink = _two_leaf_incast(flow_control=FlowControl.PFC, buffer_cells=8,
                                              xoff_cells=6, xon_cells=3)
    assert engine.ports[downlink].pauses > 0
    assert path[0] != downlink
    # leaf0 上行只載一條線速流，它的暫停來自下游回壓
    assert engine.ports[path[0]].pauses > 0


def test_credit_backpressure_reaches_three_hops_up():
    engine, path, downlink = _two_leaf_incast(buffer_cells=4)
    stats = engine.finalize_stats()
    assert stats.max_occupancy[downlink] == 4
    assert stats.max_occupancy[path[0]] == 4
    assert max(stats.max_occupancy.values()) <= 4
    assert stats.pauses == 0


def test_zero_size_flow_completes_at_start():
    engine = _single()
    done = []
    flow = engine.start_flow('h0', 'h1', 0, on_complete=done.append)
    engine.run_until()
    assert done == [flow]
    assert flow.duration_ns == 0
    assert engine.stats.delivered_bytes == 0


def test_flow_argument_errors():
    engine = _single()
    with pytest.raises(InvalidParameterError):
        engine.start_flow('h0', 'h0', 10)
    with pytest.raises(InvalidParameterError):
        engine.start_flow('h0', 'h7', 10)
    with pytest.raises(InvalidParameterError):
        engine.start_flow('h0', 'h1', -1)
    flow = engine.start_flow('h0', 'h1', 10)
    with pytest.raises(InvalidParameterError):
        engine.inject_flow(flow)


def test_explicit_path_must_join_endpoints():
    topo = topology_service.build_leaf_spine(2, 2, 1, G100)
    engine = Engine(topo)
    other = topology_service.enumerate_paths(topo, 'h1', 'h0').paths[0]
    with pytest.raises(InvalidParameterError):
        engine.start_flow('h0', 'h1', CELL, path=other)


def test_events_cannot_go_back_in_time():
    engine = _single()
    engine.schedule(1000, lambda: None)
    engine.run_until()
    assert engine.now_ns == 1000
    with pytest.raises(InternalError):
        engine.schedule(500, lambda: None)


def test_run_until_stops_at_limit():
    engine = _single()
    flow = engine.start_flow('h0', 'h1', 10 * CELL)
    engine.run_until(1000)
    assert not flow.done
    assert engine.pending_events > 0
    engine.run_until()
    assert flow.done


def test_reroute_drains_old_path_first():
    topo = topology_service.build_leaf_spine(2, 2, 1, G100)
    engine = Engine(topo)
    first, second = topology_service.enumerate_paths(topo, 'h0', 'h1').paths
    flow = engine.start_flow('h0', 'h1', 40 * CELL, path=first)
    engine.schedule(2000, engine.reroute_with_drain, flow, second)
    engine.run_until()
    assert flow.done
    assert flow.reroutes == 1
    assert flow.path == second
    assert flow.pending_route is None
    old, new = engine.ports[first[0]], engine.ports[second[0]]
    assert old.tx_bytes > 0 and new.tx_bytes > 0
    assert old.tx_bytes + new.tx_bytes == 40 * CELL
    engine.check_invariants()


def test_reroute_to_same_path_is_a_no_op():
    topo = topology_service.build_leaf_spine(2, 2, 1, G100)
    engine = Engine(topo)
    first = topology_service.enumerate_paths(topo, 'h0', 'h1').paths[0]
    flow = engine.start_flow('h0', 'h1', 4 * CELL, path=first)
    engine.reroute_with_drain(flow, first)
    engine.run_until()
    assert flow.reroutes == 0


def test_probe_never_exceeds_capacity():
    engine = _single()
    probe = engine.add_probe(ThroughputProbe('h0', 1_000, lambda f: f.src == 'h0', G100))
    engine.start_flow('h0', 'h1', 100 * CELL)
    engine.run_until()
    trace = probe.to_trace()
    assert trace.samples
    assert all(rate <= G100 * (1 + 1e-9) for _, rate in trace.samples)
    carried = sum(rate * trace.interval_ns / 8e9 for _, rate in trace.samples)
    assert carried == pytest.approx(100 * CELL)


def test_probe_interval_must_be_positive():
    with pytest.raises(InvalidParameterError):
        ThroughputProbe('x', 0, lambda f: True)


def test_trace_lines_are_ordered():
    engine = _single(trace=True)
    engine.start_flow('h0', 'h1', 3 * CELL)
    engine.run_until()
    lines = engine.trace_lines()
    assert lines[0] == TRACE_HEADER
    kinds = [line.split(',')[1] for line in lines[1:]]
    assert kinds.count('deliver') == 3
    assert kinds[-1] == 'complete'
    times = [float(line.split(',')[0]) for line in lines[1:]]
    assert times == sorted(times)


def _incast_digest(seed):
    topo = topology_service.build_single_switch(5, G100)
    engine = Engine(topo, EngineSettings(), cc_config('dcqcn', 'unstable'), seed=seed, digest=True)
    flows = [engine.start_flow(src, 'h4', 64 * CELL) for src in ('h0', 'h1', 'h2', 'h3')]
    engine.run_until()
    engine.check_invariants()
    return engine.finalize_stats().digest, [f.finish_ps for f in flows]


def test_same_seed_same_digest():
    first = _incast_digest(7)
    assert first[0]
    assert _incast_digest(7) == first


def test_digest_off_by_default():
    engine = _single()
    engine.start_flow('h0', 'h1', CELL)
    engine.run_until()
    assert engine.finalize_stats().digest == ''
    assert engine.trace_lines() == [TRACE_HEADER]


@pytest.mark.parametrize('settings', [
    EngineSettings(cell_bytes=0),
    EngineSettings(buffer_cells=0),
    EngineSettings(link_latency_ns=-1),
    EngineSettings(flow_control=FlowControl.PFC, xoff_cells=10, xon_cells=10),
    EngineSettings(flow_control=FlowControl.PFC, buffer_cells=8, xoff_cells=16, xon_cells=4),
])
def test_invalid_settings(settings):
    with pytest.raises(InvalidParameterError):
        validate_settings(settings)
