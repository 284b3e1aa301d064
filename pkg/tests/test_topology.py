import pytest

from defragsim.topology import (
    Direction, GpuId, LinkKind, TopologyError, make_two_tier, path_between,
)


def test_paper_scale_cluster():
    topo = make_two_tier(16, 8, 8, 16, 400e9, 400e9, 16)
    assert topo.total_gpus == 1024
    assert topo.oversubscription_ratio == pytest.approx(4.0)


def test_degenerate_singleton():
    topo = make_two_tier(1, 1, 1, 1, 1e9, 1e9, 1)
    assert topo.total_gpus == 1
    assert topo.oversubscription_ratio == pytest.approx(1.0)


def test_motivating_example_cluster():
    topo = make_two_tier(8, 4, 1, 2, 1.0, 1.0, 2)
    assert topo.total_gpus == 32
    assert topo.num_racks == 8
    assert topo.uplinks_per_tor == 2


def test_zero_counts_rejected():
    with pytest.raises(TopologyError):
        make_two_tier(0, 8, 8, 16, 400e9, 400e9, 16)
    with pytest.raises(TopologyError):
        make_two_tier(16, 8, 8, 16, 0.0, 400e9, 16)


def test_uplinks_spine_divisibility():
    with pytest.raises(TopologyError):
        make_two_tier(2, 2, 2, 3, 1e9, 1e9, 2)
    # equal counts always fine
    make_two_tier(2, 2, 2, 3, 1e9, 1e9, 3)


def test_same_host_path_is_empty():
    topo = make_two_tier(2, 2, 8, 2, 400e9, 400e9, 2)
    path = path_between(topo, GpuId(0, 0, 0), GpuId(0, 0, 5))
    assert path == []


def test_same_rack_path_two_links():
    topo = make_two_tier(2, 2, 8, 2, 400e9, 400e9, 2)
    path = path_between(topo, GpuId(0, 0, 0), GpuId(0, 1, 3))
    assert len(path) == 2
    assert all(link.kind is LinkKind.HOST_NIC for link in path)
    assert path[0].direction is Direction.UP
    assert path[1].direction is Direction.DOWN


def test_cross_rack_path_structure():
    # Enumerate all cross-rack pairs in a 2-rack toy topology.
    topo = make_two_tier(2, 2, 2, 2, 400e9, 400e9, 2)
    for src_host in range(2):
        for dst_host in range(2):
            for s in range(2):
                for d in range(2):
                    path = path_between(topo, GpuId(0, src_host, s),
                                        GpuId(1, dst_host, d), 1, 0)
                    assert len(path) == 4
                    uplinks = [l for l in path
                               if l.kind is LinkKind.TOR_UPLINK]
                    assert len(uplinks) == 2
                    assert {l.rack for l in uplinks} == {0, 1}


def test_uplink_out_of_range():
    topo = make_two_tier(2, 2, 2, 2, 400e9, 400e9, 2)
    with pytest.raises(TopologyError):
        path_between(topo, GpuId(0, 0, 0), GpuId(1, 0, 0), 5, 0)


def test_src_equals_dst_rejected():
    topo = make_two_tier(2, 2, 2, 2, 400e9, 400e9, 2)
    with pytest.raises(TopologyError):
        path_between(topo, GpuId(0, 0, 0), GpuId(0, 0, 0))


@pytest.mark.parametrize("racks,hosts,gpus,uplinks,ratio", [
    (16, 8, 8, 16, 4.0),
    (16, 8, 8, 64, 1.0),
    (32, 2, 8, 1, 16.0),
    (8, 4, 8, 8, 4.0),
])
def test_oversubscription_grid(racks, hosts, gpus, uplinks, ratio):
    topo = make_two_tier(racks, hosts, gpus, uplinks, 400e9, 400e9, uplinks)
    assert topo.oversubscription_ratio == pytest.approx(ratio)
