"""擁塞控制在引擎中的行為：回饋、節流、鋸齒振盪"""
from types import SimpleNamespace

import pytest

from models.errors import InternalError, InvalidParameterError
from models.types import CcConfig, CcVariant, DcqcnState
from pylib.units import dcqcn_rules, metrics_rules
from services import congestion_service, topology_service
from services.engine_service import Engine
from services.harness_service import cc_config, sawtooth_trace

G100 = 100_000_000_000
CELL = 4096


def _incast(cc, senders=3, cells=64):
    topo = topology_service.build_single_switch(senders + 1, G100)
    engine = Engine(topo, cc=cc)
    target = topo.endpoints[-1]
    flows = [engine.start_flow(src, target, cells * CELL) for src in topo.endpoints[:-1]]
    engine.run_until()
    engine.check_invariants()
    assert all(f.done for f in flows)
    return engine


def test_no_cc_never_slows_a_connection():
    engine = _incast(CcConfig())
    assert engine.cc.variant == CcVariant.NONE
    for conn in engine.connections_by_id:
        assert engine.cc.rate_bps(conn) == conn.line_bps


def test_dcqcn_sends_cnps_under_incast():
    engine = _incast(cc_config('dcqcn', 'unstable'))
    assert engine.cc.cnps > 0
    for conn in engine.connections_by_id:
        assert conn.dcqcn.current <= conn.line_bps
    assert engine.cc.describe()['preset'] == 'unstable'


def test_ib_becns_raise_the_delay():
    engine = _incast(cc_config('ib', 'unstable'))
    assert engine.cc.becns > 0


def test_flow_granular_throttles_someone():
    engine = _incast(cc_config('flow_granular'), cells=256)
    assert engine.cc.throttle_events > 0


def test_unknown_preset():
    with pytest.raises(InvalidParameterError):
        cc_config('flow_granular', 'unstable')


def test_controller_factory():
    topo = topology_service.build_single_switch(2, G100)
    engine = Engine(topo)
    ctl = congestion_service.make_controller(engine, cc_config('ib'))
    assert isinstance(ctl, congestion_service.IbController)
    assert ctl.describe()['cc'] == 'ib'


def test_ib_unstable_oscillates_and_stable_does_less():
    unstable = metrics_rules.trace_stats(sawtooth_trace(cc_config('ib', 'unstable')))
    stable = metrics_rules.trace_stats(sawtooth_trace(cc_config('ib', 'stable')))
    assert unstable.peak_to_trough >= 2
    assert unstable.cycles >= 3
    assert stable.cov < 0.10
    assert stable.cov < unstable.cov


def test_sawtooth_needs_a_sender():
    with pytest.raises(InvalidParameterError):
        sawtooth_trace(cc_config('ib'), senders=0)


def test_dcqcn_state_stays_in_range_through_an_incast():
    engine = _incast(cc_config('dcqcn', 'unstable'), senders=7, cells=256)
    assert engine.cc.cnps > 0
    for conn in engine.connections_by_id:
        assert dcqcn_rules.check_state(conn.dcqcn)


def test_out_of_range_dcqcn_state_is_an_internal_error():
    bad = DcqcnState(current=2 * G100, target=G100, alpha=0.5, line_rate=G100)
    with pytest.raises(InternalError):
        congestion_service.DcqcnController._checked(SimpleNamespace(id=7), bad)
