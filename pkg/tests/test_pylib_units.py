import math

import numpy as np
import pytest

from models.errors import InvalidParameterError
from models.types import (
    CollectiveKind, DcqcnParams, EcnConfig, FlowMatrix, IbCcParams, RunRecord, ThroughputTrace,
)
from pylib.units import allocation_rules, dcqcn_rules, ecn_rules, flow_granular_rules, ib_cc_rules
from pylib.units import metrics_rules, routing_rules, schedule_rules


# ===== ECN =====

def test_ecn_marking_curve():
    cfg = EcnConfig(kmin=100, kmax=300, pmax=0.2)
    assert ecn_rules.mark_probability(50, cfg) == 0.0
    assert ecn_rules.mark_probability(200, cfg) == pytest.approx(0.1)
    assert ecn_rules.mark_probability(300, cfg) == 1.0
    assert ecn_rules.should_mark(200, cfg, 0.05)
    assert not ecn_rules.should_mark(200, cfg, 0.5)
    assert not ecn_rules.should_mark(10, cfg, 0.0)


def test_ecn_mark_rate_matches_the_curve():
    cfg = EcnConfig(kmin=100, kmax=300, pmax=1.0)
    draws = np.random.default_rng(2024).random(100_000)
    marked = sum(ecn_rules.should_mark(200, cfg, float(u)) for u in draws)
    assert marked / len(draws) == pytest.approx(0.5, abs=0.02)


def test_ecn_validation():
    assert ecn_rules.validate_ecn(EcnConfig(100, 300, 0.2), 400) == (True, "")
    assert not ecn_rules.validate_ecn(EcnConfig(300, 100, 0.2), None)[0]
    assert not ecn_rules.validate_ecn(EcnConfig(0, 500, 0.5), 400)[0]
    assert not ecn_rules.validate_ecn(EcnConfig(0, 100, 0.0), None)[0]


# ===== DCQCN =====

PARAMS = DcqcnParams(g=0.5, fast_recovery_steps=1, ai_bps=10_000_000_000, min_rate_bps=1_000_000_000)


def test_dcqcn_cut_uses_alpha_before_update():
    s = dcqcn_rules.initial_state(100e9, PARAMS)
    s = dcqcn_rules.on_cnp(s, PARAMS)
    assert s.current == pytest.approx(50e9)
    assert s.target == pytest.approx(100e9)
    assert s.alpha == pytest.approx(1.0)
    assert s.stage == 0


def test_dcqcn_fast_then_additive_recovery():
    s = dcqcn_rules.on_cnp(dcqcn_rules.initial_state(100e9, PARAMS), PARAMS)
    s = dcqcn_rules.recover(s, PARAMS)
    assert s.current == pytest.approx(75e9)
    assert s.alpha == pytest.approx(0.5)
    s = dcqcn_rules.recover(s, PARAMS)
    assert s.current == pytest.approx(87.5e9)
    for _ in range(40):
        s = dcqcn_rules.recover(s, PARAMS)
    assert dcqcn_rules.is_recovered(s)
    assert dcqcn_rules.check_state(s)


def test_dcqcn_rate_never_below_floor():
    s = dcqcn_rules.initial_state(100e9, PARAMS)
    for _ in range(30):
        s = dcqcn_rules.on_cnp(s, PARAMS)
    assert s.current == pytest.approx(1e9)
    assert dcqcn_rules.check_state(s)


# ===== InfiniBand CC =====

IB = IbCcParams(threshold=1000, mark_probability=0.5, ipd_step_ns=100, max_ipd_ns=250,
                recovery_decrement_ns=60)


def test_ib_becn_steps_and_caps_delay():
    s = ib_cc_rules.initial_state(IB)
    delays = []
    for _ in range(3):
        s = ib_cc_rules.apply_becn(s, IB)
        delays.append(s.ipd_ns)
    assert delays == [100, 200, 250]
    assert ib_cc_rules.recover(s).ipd_ns == 190


def test_ib_recovery_stops_at_zero():
    s = ib_cc_rules.apply_becn(ib_cc_rules.initial_state(IB), IB)
    for _ in range(5):
        s = ib_cc_rules.recover(s)
    assert s.ipd_ns == 0


def test_ib_fecn_threshold():
    assert not ib_cc_rules.should_mark_fecn(999, IB, 0.0)
    assert ib_cc_rules.should_mark_fecn(1000, IB, 0.4)
    assert not ib_cc_rules.should_mark_fecn(1000, IB, 0.6)


def test_ib_effective_rate():
    assert ib_cc_rules.effective_rate(100e9, 327.68, 0) == pytest.approx(100e9)
    assert ib_cc_rules.effective_rate(100e9, 327.68, 327.68) == pytest.approx(50e9)


# ===== 逐流節流 =====

def test_flow_granular_throttles_only_heavy_hitters():
    state = flow_granular_rules.select_throttled(
        {1: 10_000, 2: 1_000, 3: 0},
        capacity_bps=100e9, window_ns=1_000, occupancy=10_000, threshold=4096, cap_scale=0.9,
    )
    assert state.fair_share_bps == pytest.approx(50e9)
    assert state.throttle == frozenset({1})
    assert state.caps[1] == pytest.approx(45e9)
    assert 2 not in state.caps


def test_flow_granular_idle_below_threshold():
    state = flow_granular_rules.select_throttled(
        {1: 10_000, 2: 1_000}, capacity_bps=100e9, window_ns=1_000, occupancy=100, threshold=4096,
    )
    assert state.throttle == frozenset()
    assert state.fair_share_bps == pytest.approx(50e9)


def test_flow_granular_spares_the_light_flow_among_seven_heavy():
    # 100G, 2us 視窗：公平份額 12.5G 即每視窗 3125 B
    contributions = {fid: 3125 for fid in range(1, 8)}
    contributions[8] = 390
    state = flow_granular_rules.select_throttled(
        contributions, capacity_bps=100e9, window_ns=2_000, occupancy=64 * 4096, threshold=8 * 4096,
        cap_scale=0.9,
    )
    assert state.congested
    assert state.fair_share_bps == pytest.approx(12.5e9)
    assert state.throttle == frozenset(range(1, 8))
    assert 8 not in state.caps


def test_flow_granular_slack_counts_whole_cells():
    kwargs = dict(capacity_bps=100e9, window_ns=2_000, occupancy=64 * 4096, threshold=8 * 4096)
    strict = flow_granular_rules.select_throttled({1: 4 * 4096, 2: 3 * 4096}, **kwargs)
    assert strict.throttle == frozenset({1})
    loose = flow_granular_rules.select_throttled({1: 4 * 4096, 2: 3 * 4096}, slack_bytes=4096, **kwargs)
    assert loose.throttle == frozenset({1, 2})


def test_flow_granular_never_throttles_a_lone_flow():
    state = flow_granular_rules.select_throttled(
        {1: 50_000, 2: 0}, capacity_bps=100e9, window_ns=2_000, occupancy=64 * 4096, threshold=4096,
    )
    assert not state.congested
    assert state.throttle == frozenset()
    assert state.fair_share_bps == pytest.approx(100e9)


def test_flow_granular_cap_tightens_then_relaxes():
    share = 10e9
    cap = flow_granular_rules.tighten_cap(9e9, 9e9, 0.9, share)
    assert cap == pytest.approx(8.1e9)
    for _ in range(100):
        cap = flow_granular_rules.tighten_cap(cap, 9e9, 0.9, share)
    assert cap == pytest.approx(share * flow_granular_rules.MIN_CAP_FRACTION)
    assert flow_granular_rules.relax_cap(9e9, 0.9, 100e9) == pytest.approx(10e9)
    assert flow_granular_rules.relax_cap(99e9, 0.9, 100e9) == 100e9


def test_fair_share():
    assert flow_granular_rules.fair_share(100.0, 4) == 25.0
    assert flow_granular_rules.fair_share(100.0, 0) == 100.0


# ===== 路由規則 =====

def test_ecmp_index_is_stable():
    key = routing_rules.flow_hash_key(3, 7)
    assert key == (3 << 32) | 7
    picks = {routing_rules.ecmp_index(key, 11, 8) for _ in range(5)}
    assert len(picks) == 1 and 0 <= picks.pop() < 8
    with pytest.raises(InvalidParameterError):
        routing_rules.ecmp_index(key, 11, 0)


def test_deterministic_index():
    assert routing_rules.deterministic_index(5, 4) == 1
    with pytest.raises(InvalidParameterError):
        routing_rules.deterministic_index(5, 0)


def test_adaptive_prefers_least_loaded_minimal():
    paths = [(1, 10), (2, 20), (3, 30, 40)]
    minimal = [True, True, False]
    assert routing_rules.adaptive_index(paths, minimal, {1: 500, 2: 100, 3: 0}, 1000) == 1
    assert routing_rules.adaptive_index(paths, minimal, {}, 1000) == 0


def test_adaptive_detours_only_when_all_minimal_are_hot():
    paths = [(1, 10), (2, 20), (3, 30, 40)]
    minimal = [True, True, False]
    assert routing_rules.adaptive_index(paths, minimal, {1: 5000, 2: 4000, 3: 0}, 1000) == 2
    assert routing_rules.adaptive_index(paths, minimal, {1: 5000, 2: 4000, 3: 9000}, 1000) == 1


def test_adaptive_sees_congestion_past_the_first_hop():
    paths = [(1, 10), (2, 20)]
    load = {10: 5000}
    assert routing_rules.path_load(paths[0], load) == (5000.0, 5000.0)
    assert routing_rules.path_load((), load) == (0.0, 0.0)
    assert routing_rules.adaptive_index(paths, [True, True], load, 1000) == 1
    # 最壞鏈路相同時比總和
    assert routing_rules.adaptive_index(paths, [True, True], {1: 900, 10: 900, 20: 900}, 1000) == 1


def test_nslb_balances_new_flows():
    matrix = FlowMatrix(
        flows={0: ('a', 'b'), 1: ('a', 'b'), 2: ('a', 'b'), 3: ('a', 'b'), 4: ('a', 'a')},
        assignment={0: 11},
    )
    out = routing_rules.nslb_assign(matrix, {'a': [10, 11]})
    assert out.assignment == {0: 11, 1: 10, 2: 10, 3: 11}
    assert routing_rules.uplink_loads(out) == {10: 2, 11: 2}


def test_nslb_moves_newest_flows_off_hot_uplink():
    matrix = FlowMatrix(
        flows={i: ('a', 'b') for i in range(4)},
        assignment={i: 10 for i in range(4)},
    )
    out = routing_rules.nslb_assign(matrix, {'a': [10, 11]})
    assert out.assignment == {0: 10, 1: 10, 2: 11, 3: 11}
    assert routing_rules.nslb_assign(out, {'a': [10, 11]}).assignment == out.assignment


def test_nslb_requires_uplinks():
    matrix = FlowMatrix(flows={0: ('a', 'b')})
    with pytest.raises(InvalidParameterError):
        routing_rules.nslb_assign(matrix, {'a': []})


# ===== 排程 =====

def test_ring_allgather_rounds():
    sched = schedule_rules.ring_allgather(4, 100)
    assert sched.kind == CollectiveKind.ALLGATHER
    assert len(sched.rounds) == 3
    assert [(t.src, t.dst) for t in sched.rounds[0]] == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert sched.total_bytes == 1200
    assert schedule_rules.ring_allgather(1, 100).rounds == ()


def test_linear_alltoall():
    sched = schedule_rules.linear_alltoall(4, 1000, window=2)
    assert sched.window == 2
    assert len(sched.transfers) == 12
    assert [t.dst for t in sched.transfers[:3]] == [1, 2, 3]
    assert schedule_rules.alltoall_blocks(4, 1001) == [250, 250, 251]
    with pytest.raises(InvalidParameterError):
        schedule_rules.linear_alltoall(4, 3)


def test_incast_and_permutation():
    sched = schedule_rules.incast([2, 0, 1], 3, 100)
    assert sched.n == 4
    assert [(t.src, t.dst) for t in sched.transfers] == [(0, 3), (1, 3), (2, 3)]
    with pytest.raises(InvalidParameterError):
        schedule_rules.incast([0, 3], 3, 100)
    perm = schedule_rules.permutation(4, 10)
    assert [(t.src, t.dst) for t in perm.transfers] == [(0, 2), (1, 3), (2, 0), (3, 1)]


def test_check_schedule_flags_self_sends():
    sched = schedule_rules.ring_allgather(3, 10)
    assert schedule_rules.check_schedule(sched) == (True, "")
    bad = schedule_rules.incast([0], 1, 10, n=1)
    ok, msg = schedule_rules.check_schedule(bad)
    assert not ok and 'unknown rank' in msg


# ===== 配置 =====

def test_interleave_allocation():
    victims, aggressors = allocation_rules.interleave_allocation(['a', 'b', 'c', 'd'])
    assert victims == ['a', 'c']
    assert aggressors == ['b', 'd']
    assert allocation_rules.incast_target(aggressors) == 'd'
    with pytest.raises(InvalidParameterError):
        allocation_rules.interleave_allocation(['a', 'b', 'c'])


# ===== 統計 =====

def test_compute_summary():
    s = metrics_rules.compute_summary([1.0, 2.0, 3.0, 4.0])
    assert s.count == 4
    assert s.mean == pytest.approx(2.5)
    assert s.p50 == pytest.approx(2.5)
    assert s.std == pytest.approx(math.sqrt(1.25))
    assert (s.minimum, s.maximum) == (1.0, 4.0)
    with pytest.raises(InvalidParameterError):
        metrics_rules.compute_summary([])


def test_ratio_ignores_warmup():
    base = RunRecord(times_ns=(10.0, 10.0, 20.0, 20.0), warmup=2)
    cong = RunRecord(times_ns=(1.0, 1.0, 40.0, 40.0), warmup=2)
    assert metrics_rules.compute_ratio(base, cong) == pytest.approx(0.5)
    assert metrics_rules.compute_ratio(base, base) == 1.0
    with pytest.raises(InvalidParameterError):
        metrics_rules.compute_ratio(RunRecord((), 0), base)


def test_bandwidth_gbps():
    assert metrics_rules.bandwidth_gbps(1000, 100.0) == pytest.approx(80.0)
    assert metrics_rules.bandwidth_gbps(1000, 0.0) == 0.0


def test_trace_stats_counts_oscillations():
    samples = ((0.0, 0.0), (1.0, 10.0), (2.0, 20.0), (3.0, 10.0), (4.0, 20.0), (5.0, 10.0), (6.0, 0.0))
    stats = metrics_rules.trace_stats(ThroughputTrace('t', 1.0, samples, 20.0))
    assert stats.mean_bps == pytest.approx(14.0)
    assert stats.peak_to_trough == pytest.approx(2.0)
    assert stats.cycles == 2
    assert stats.cov == pytest.approx(math.sqrt(24.0) / 14.0)


def test_trace_stats_flat_and_empty():
    flat = metrics_rules.trace_stats(ThroughputTrace('t', 1.0, ((0.0, 5.0), (1.0, 5.0), (2.0, 5.0))))
    assert (flat.cov, flat.peak_to_trough, flat.cycles) == (0.0, 1.0, 0)
    with pytest.raises(InvalidParameterError):
        metrics_rules.trace_stats(ThroughputTrace('t', 1.0, ()))
