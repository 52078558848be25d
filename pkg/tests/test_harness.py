"""
fabsim v1.0 - 實驗流程測試

測試項目：
1. 配置與驗證
2. 基準 / 擁塞執行與比值
3. 掃描展開、逐格種子、平行掃描
4. 具名情境（slow）
"""
import unittest
from dataclasses import replace

import pytest

from models.errors import InvalidParameterError
from models.types import (
    BurstSpec, BurstUnit, CollectiveKind, ExperimentSpec, InjectionMode, RunRecord, TopologySpec,
)
from pylib.units import allocation_rules, metrics_rules
from services import harness_service

from .test_base import AssertMixin

KIB = 1024


def _small(**kwargs):
    spec = ExperimentSpec(topology=TopologySpec('haicgu-sw'), nodes=4, vectors=(32 * KIB,),
                          iterations=5, warmup=1)
    return replace(spec, **kwargs)


class TestAllocation(unittest.TestCase):

    def test_interleaved_victims_and_aggressors(self):
        spec = _small()
        topo = harness_service.build_topology(spec)
        victims, aggressors = harness_service.allocate(spec, topo)
        self.assertEqual(victims, ['h0', 'h2'])
        self.assertEqual(aggressors, ['h1', 'h3'])

    def test_more_nodes_than_endpoints(self):
        spec = _small(nodes=12)
        topo = harness_service.build_topology(spec)
        with self.assertRaises(InvalidParameterError):
            harness_service.allocate(spec, topo)

    def test_incast_lands_on_the_last_aggressor(self):
        spec = _small(nodes=8, aggressor=CollectiveKind.INCAST)
        topo = harness_service.build_topology(spec)
        _, aggressors = harness_service.allocate(spec, topo)
        plan = harness_service.aggressor_plan(spec, topo, aggressors)
        target = allocation_rules.incast_target(aggressors)
        self.assertEqual(target, 'h7')
        self.assertEqual({f.dst for f in plan.flows}, {target})
        self.assertEqual({f.src for f in plan.flows}, {'h1', 'h3', 'h5'})

    def test_validate_spec(self):
        bad = [
            _small(nodes=3),
            _small(nodes=2),
            _small(iterations=5, warmup=5),
            _small(vectors=()),
            _small(victim=CollectiveKind.INCAST),
            _small(injection=InjectionMode.BURSTY, burst=BurstSpec(BurstUnit.COLLECTIVES, 0)),
        ]
        for spec in bad:
            with self.assertRaises(InvalidParameterError):
                harness_service.validate_spec(spec)


class TestRuns(unittest.TestCase, AssertMixin):

    def test_baseline_matches_uncontended_ring(self):
        record = harness_service.run_baseline(_small())
        self.assertEqual(len(record.times_ns), 5)
        self.assertEqual(len(record.retained), 4)
        self.assertEqual(record.bytes_per_rank, 32 * KIB)
        for t in record.times_ns:
            self.assertAlmostEqual(t, 3149.12, places=6)

    def test_ratio_of_a_run_with_itself(self):
        record = harness_service.run_baseline(_small())
        self.assertEqual(harness_service.compute_ratio(record, record), 1.0)

    def test_disjoint_aggressors_do_not_interfere(self):
        # 單交換機上受害者與攻擊者沒有共用鏈路
        spec = _small()
        base = harness_service.run_baseline(spec)
        cong = harness_service.run_congested(spec)
        self.assertAlmostEqual(harness_service.compute_ratio(base, cong), 1.0, places=9)

    def test_execute_with_probe(self):
        outcome = harness_service.execute(_small(), congested=True, probe_interval_ns=1_000)
        self.assertIsNotNone(outcome.throughput)
        self.assertTrue(outcome.throughput.samples)
        self.assertGreater(outcome.active_fraction, 0.0)
        self.assertEqual(outcome.trace_lines[0], 'time,event_kind,link,flow,occupancy')

    def test_bursty_aggressor_idles(self):
        spec = _small(injection=InjectionMode.BURSTY, aggressor=CollectiveKind.INCAST,
                      burst=BurstSpec(BurstUnit.COLLECTIVES, 1, 20_000))
        outcome = harness_service.execute(spec, congested=True)
        self.assertLess(outcome.active_fraction, 1.0)

    def test_ratio_ignores_warmup(self):
        base = RunRecord(times_ns=(1.0, 10.0, 10.0), warmup=1)
        cong = RunRecord(times_ns=(99.0, 20.0, 20.0), warmup=1)
        self.assertEqual(harness_service.compute_ratio(base, cong), 0.5)


class TestSweep(unittest.TestCase):

    def test_expand_cells(self):
        cells = harness_service.expand_cells(
            _small(), harness_service.SweepAxes(nodes=(4, 6), vectors=(1 * KIB, 2 * KIB)))
        self.assertEqual(len(cells), 4)
        self.assertEqual([(c.spec.nodes, c.vector) for c in cells],
                         [(4, 1 * KIB), (4, 2 * KIB), (6, 1 * KIB), (6, 2 * KIB)])
        self.assertTrue(all(c.spec.aggressor_bytes == 2 * KIB for c in cells))

    def test_duplicate_axis_values(self):
        with self.assertRaises(InvalidParameterError):
            harness_service.expand_cells(_small(), harness_service.SweepAxes(nodes=(4, 4)))

    def test_burst_axes_only_apply_to_bursty(self):
        cells = harness_service.expand_cells(_small(), harness_service.BURST_GRID_AXES)
        self.assertEqual(len(cells), 1)
        bursty = _small(injection=InjectionMode.BURSTY)
        cells = harness_service.expand_cells(bursty, harness_service.BURST_GRID_AXES)
        self.assertEqual(len(cells), 9)
        self.assertEqual(cells[0].coords[6:8], ('1 collectives', '2us'))

    def test_cell_seed_is_stable_per_cell(self):
        a, b = harness_service.expand_cells(_small(), harness_service.SweepAxes(nodes=(4, 6)))
        self.assertEqual(harness_service.cell_seed(1, a.coords), harness_service.cell_seed(1, a.coords))
        self.assertNotEqual(harness_service.cell_seed(1, a.coords), harness_service.cell_seed(1, b.coords))
        self.assertNotEqual(harness_service.cell_seed(1, a.coords), harness_service.cell_seed(2, a.coords))

    def test_sweep_rows_arrive_in_cell_order(self):
        seen = []
        rows = harness_service.sweep(
            _small(iterations=3), harness_service.SweepAxes(vectors=(4 * KIB, 8 * KIB, 16 * KIB)),
            threads=3, on_row=lambda row, cell: seen.append(cell.vector))
        self.assertEqual(seen, [4 * KIB, 8 * KIB, 16 * KIB])
        self.assertEqual([r.vector_bytes for r in rows], seen)
        for row in rows:
            self.assertEqual(row.status, 'ok')
            self.assertAlmostEqual(row.ratio, 1.0, places=9)

    def test_sweep_is_independent_of_thread_count(self):
        axes = harness_service.SweepAxes(vectors=(4 * KIB, 8 * KIB))
        one = harness_service.sweep(_small(iterations=3), axes, threads=1)
        two = harness_service.sweep(_small(iterations=3), axes, threads=2)
        self.assertEqual(one, two)

    def test_failed_cell_does_not_stop_the_sweep(self):
        rows = harness_service.sweep(_small(iterations=3), harness_service.SweepAxes(nodes=(4, 12)), threads=2)
        self.assertEqual(rows[0].status, 'ok')
        self.assertTrue(rows[1].status.startswith('failed'))
        self.assertIsNone(rows[1].ratio)

    def test_skip_and_baseline_only(self):
        template = _small(iterations=3)
        axes = harness_service.SweepAxes(vectors=(4 * KIB, 8 * KIB))
        first = harness_service.expand_cells(template, axes)[0]
        rows = harness_service.sweep(template, axes, threads=1, baseline_only=True, skip={first.coords})
        self.assertEqual([r.vector_bytes for r in rows], [8 * KIB])
        self.assertIsNone(rows[0].ratio)
        self.assertIsNotNone(rows[0].baseline_mean_ns)

    def test_describe_spec_lists_defaults(self):
        described = harness_service.describe_spec(_small())
        self.assertEqual(described['engine']['cell_bytes'], 4096)
        self.assertEqual(described['aggressor_bytes'], 32 * KIB)
        self.assertEqual(described['lb'], 'deterministic')


# ===== 具名情境 =====

def _ratio(name, iterations=20, warmup=5):
    spec = harness_service.scenario(name, iterations=iterations, warmup=warmup)
    base = harness_service.run_baseline(spec)
    cong = harness_service.run_congested(spec)
    return harness_service.compute_ratio(base, cong)


def test_unknown_scenario():
    with pytest.raises(InvalidParameterError):
        harness_service.scenario('nope')


def test_scenario_names():
    assert 'nslb-nanjing' in harness_service.scenario_names()
    assert len(harness_service.scenario_names()) == 10


@pytest.mark.slow
def test_nslb_keeps_victim_unaffected():
    assert _ratio('nslb-nanjing') >= 0.95


@pytest.mark.slow
def test_colliding_ecmp_hurts_victim():
    assert _ratio('ecmp-nanjing-adversarial') <= 0.75


@pytest.mark.slow
def test_flow_granular_beats_no_cc_under_incast():
    none = _ratio('incast-cc-none', iterations=100, warmup=20)
    dcqcn = _ratio('incast-cc-dcqcn', iterations=100, warmup=20)
    granular = _ratio('incast-cc-flow_granular', iterations=100, warmup=20)
    assert none <= 0.5
    assert granular >= dcqcn >= none
    assert granular >= 0.8


@pytest.mark.slow
def test_alltoall_aggressor_is_gentler_than_incast_on_fat_tree():
    incast = _ratio('fat-tree-incast')
    alltoall = _ratio('fat-tree-alltoall')
    assert alltoall - incast >= 0.10


@pytest.mark.slow
def test_adaptive_routing_avoids_intermediate_contention():
    deterministic = _ratio('tapered-deterministic')
    adaptive = _ratio('tapered-adaptive')
    assert adaptive >= deterministic
    assert adaptive >= 0.9


@pytest.mark.slow
@pytest.mark.parametrize('name', ['fat-tree-incast', 'fat-tree-alltoall', 'tapered-adaptive',
                                  'tapered-deterministic'])
def test_large_topology_scenarios_complete(name):
    ratio = _ratio(name, iterations=4, warmup=1)
    assert 0.0 < ratio <= 1.05


@pytest.mark.slow
def test_burst_grid():
    template = harness_service.scenario('burst-grid', iterations=20, warmup=5)
    rows = harness_service.sweep(template, harness_service.BURST_GRID_AXES, threads=2)
    assert len(rows) == 9
    assert all(r.status == 'ok' for r in rows)
    assert all(0.0 < r.ratio <= 1.05 for r in rows)
    assert {r.burst_length for r in rows} == {'1 collectives', '4 collectives', '16 collectives'}
    assert {r.idle_gap for r in rows} == {'2us', '20us', '200us'}

    gaps = ['2us', '20us', '200us']
    grid = {(r.burst_length, r.idle_gap): r.ratio for r in rows}
    for burst in ('1 collectives', '4 collectives', '16 collectives'):
        line = [grid[(burst, gap)] for gap in gaps]
        # 間隔越長受害者越不受影響（容許 5% 雜訊）
        assert all(b >= a - 0.05 for a, b in zip(line, line[1:])), (burst, line)
    shortest = min(ratio for (_, gap), ratio in grid.items() if gap == '2us')
    assert shortest <= min(grid.values())


def test_summary_uses_retained_iterations():
    record = harness_service.run_baseline(_small())
    summary = metrics_rules.summarize_record(record)
    assert summary.count == 4
