"""拓撲建構與路徑列舉"""
import pytest

import config_manager
from models.errors import InvalidParameterError
from models.types import PathPolicy
from services import topology_service

G100 = 100_000_000_000
G200 = 200_000_000_000


def test_single_switch_layout():
    topo = topology_service.build_single_switch(4, G100)
    assert topo.endpoints == ('h0', 'h1', 'h2', 'h3')
    assert list(topo.switches) == ['sw0']
    assert len(topo.links) == 8
    assert topology_service.check_topology(topo) == (True, '')
    paths = topology_service.enumerate_paths(topo, 'h0', 'h3')
    assert paths.paths == ((),)


def test_leaf_spine_parallel_links_multiply_paths():
    topo = topology_service.build_leaf_spine(2, 2, 4, G200, spine_links=2)
    assert len(topo.endpoints) == 8
    assert len(topo.links) == 16 + 2 * 2 * 2 * 2
    assert topo.uplinks_of('leaf0') == [16, 18, 20, 22]
    paths = topology_service.enumerate_paths(topo, 'h0', 'h4')
    assert len(paths.minimal_paths) == 8
    assert list(paths.paths) == sorted(paths.paths)
    assert all(len(p) == 2 for p in paths.paths)
    # 同一個 leaf 下的端點不經過 spine
    assert topology_service.enumerate_paths(topo, 'h0', 'h1').paths == ((),)


def test_fat_tree_taper_reduces_uplinks():
    topo = topology_service.build_from_preset('cresco8-ft')
    assert len(topo.endpoints) == 40
    assert topology_service.fat_tree_uplinks(5, 1.67) == 3
    down, up = topology_service.edge_capacity_summary(topo)['e0.0']
    assert down == 5 * G200
    assert up == 3 * G200
    # 跨 pod：3 台 agg × 每組 2 台 core
    paths = topology_service.enumerate_paths(topo, 'h0', topo.endpoints[-1])
    assert len(paths.minimal_paths) == 6
    assert all(len(p) == 4 for p in paths.minimal_paths)


def test_dragonfly_nonminimal_paths_are_longer():
    topo = topology_service.build_from_preset('lumi-df')
    assert len(topo.endpoints) == 32
    assert sum(1 for l in topo.links if l.kind == 'global') == 2 * 6
    src, dst = topo.endpoints[0], topo.endpoints[-1]
    minimal = topology_service.enumerate_paths(topo, src, dst, PathPolicy.MINIMAL)
    full = topology_service.enumerate_paths(topo, src, dst, PathPolicy.ALL)
    assert full.minimal_paths == minimal.paths
    assert full.nonminimal_paths
    shortest = min(len(p) for p in minimal.paths)
    assert all(len(p) > shortest for p in full.nonminimal_paths)
    assert full.minimal[:len(minimal)] == (True,) * len(minimal)


def test_dragonfly_plus_groups():
    topo = topology_service.build_from_preset('leonardo-dfp')
    assert len(topo.endpoints) == 32
    tiers = topology_service.describe(topo)['tiers']
    assert tiers == {'leaf': 8, 'spine': 8}


@pytest.mark.parametrize('preset', config_manager.preset_names())
def test_every_preset_builds_connected(preset):
    topo = topology_service.build_from_preset(preset)
    assert topo.name == preset
    assert topology_service.check_topology(topo)[0]
    a, b = topo.endpoints[0], topo.endpoints[-1]
    for path in topology_service.enumerate_paths(topo, a, b, PathPolicy.ALL).paths:
        assert topology_service.check_route(topo, topology_service.full_route(topo, a, b, path))


def test_preset_overrides():
    topo = topology_service.build_from_preset('nanjing-ls', {'leaves': 4, 'spines': 1, 'nodes_per_leaf': 2,
                                                             'spine_links': 1, 'rate': G100})
    assert len(topo.endpoints) == 8
    assert {l.capacity_bps for l in topo.links} == {G100}


def test_builder_errors():
    with pytest.raises(InvalidParameterError):
        topology_service.build_single_switch(0, G100)
    with pytest.raises(InvalidParameterError):
        topology_service.build_fat_tree(2, 4, 0.5, G100)
    with pytest.raises(InvalidParameterError):
        topology_service.build_leaf_spine(2, 2, 2, 0)
    with pytest.raises(InvalidParameterError):
        topology_service.build_from_preset('no-such-system')


def test_enumerate_paths_errors():
    topo = topology_service.build_single_switch(2, G100)
    with pytest.raises(InvalidParameterError):
        topology_service.enumerate_paths(topo, 'h0', 'h0')
    with pytest.raises(InvalidParameterError):
        topology_service.enumerate_paths(topo, 'h0', 'h9')


def test_check_route_rejects_gaps():
    topo = topology_service.build_leaf_spine(2, 1, 1, G100)
    route = topology_service.full_route(topo, 'h0', 'h1', topology_service.enumerate_paths(topo, 'h0', 'h1').paths[0])
    assert topology_service.check_route(topo, route)
    assert not topology_service.check_route(topo, (route[0], route[-1]))
    assert not topology_service.check_route(topo, ())
