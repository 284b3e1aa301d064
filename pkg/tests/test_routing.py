import random
from collections import defaultdict

import pytest

from defragsim.routing import (
    FlowDemand, RoutingAssignment, SPRAY_COLOR, check_proper_coloring,
    edge_color, hopcroft_karp, make_strategy, stable_hash,
)


def test_hopcroft_karp_perfect_matching():
    adj = {0: [10, 11], 1: [10], 2: [11, 12]}
    matching = hopcroft_karp(adj)
    assert len(matching) == 3
    assert len(set(matching.values())) == 3


def test_hopcroft_karp_maximum_not_perfect():
    adj = {0: [10], 1: [10]}
    matching = hopcroft_karp(adj)
    assert len(matching) == 1


def test_edge_color_single_flow():
    colors, delta = edge_color([(0, 1)])
    assert delta == 1
    assert colors == [0]


def test_edge_color_star_needs_degree_colors():
    edges = [(0, r) for r in range(1, 6)]
    colors, delta = edge_color(edges)
    assert delta == 5
    assert sorted(colors) == list(range(5))
    assert check_proper_coloring(edges, colors)


def test_edge_color_random_multigraphs_delta_optimal():
    rng = random.Random(123)
    for trial in range(300):
        num_tors = rng.randint(2, 10)
        num_edges = rng.randint(1, 40)
        edges = []
        for _ in range(num_edges):
            u = rng.randrange(num_tors)
            v = rng.randrange(num_tors)
            while v == u:
                v = rng.randrange(num_tors)
            edges.append((u, v))
        out_deg, in_deg = defaultdict(int), defaultdict(int)
        for u, v in edges:
            out_deg[u] += 1
            in_deg[v] += 1
        delta_expect = max(max(out_deg.values()), max(in_deg.values()))
        colors, delta = edge_color(edges)
        assert delta == delta_expect
        assert len(set(colors)) <= delta
        assert check_proper_coloring(edges, colors)


def dp(key, job, src, dst):
    return FlowDemand(key=key, job_id=job, src_rack=src, dst_rack=dst)


def test_perfect_routing_isolates_within_uplinks():
    strategy = make_strategy("perfect")
    flows = [dp((1, i), 1, 0, i + 1) for i in range(3)]
    a = strategy.assign(flows, uplinks=4)
    used = [a.color_of(f.key) for f in flows]
    assert len(set(used)) == 3  # star: pairwise distinct at the hub


def test_perfect_routing_collapses_when_overloaded():
    strategy = make_strategy("perfect")
    flows = [dp((1, i), 1, 0, i + 1) for i in range(6)]
    a = strategy.assign(flows, uplinks=2)
    assert all(0 <= a.color_of(f.key) < 2 for f in flows)
    per_uplink = defaultdict(int)
    for f in flows:
        per_uplink[a.color_of(f.key)] += 1
    assert max(per_uplink.values()) == 3  # round-robin collapse is even


def test_perfect_routing_mice_round_robin():
    strategy = make_strategy("perfect")
    mice = [FlowDemand(key=("pp", i), job_id=1, src_rack=0, dst_rack=1,
                       kind="pp") for i in range(4)]
    a = strategy.assign(mice, uplinks=2)
    assert [a.color_of(m.key) for m in mice] == [0, 1, 0, 1]


def test_ecmp_deterministic():
    strategy = make_strategy("ecmp")
    flows = [dp((7, i), 7, 0, 1) for i in range(10)]
    a1 = strategy.assign(flows, uplinks=4)
    a2 = strategy.assign(flows, uplinks=4)
    assert a1.colors == a2.colors


def test_ecmp_single_uplink_all_collide():
    strategy = make_strategy("ecmp")
    flows = [dp((7, i), 7, 0, 1) for i in range(5)]
    a = strategy.assign(flows, uplinks=1)
    assert all(c == 0 for c in a.colors.values())


def test_ecmp_collision_probability_half():
    # 2 flows on 2 uplinks collide about half the time over random tuples
    rng = random.Random(99)
    collisions = 0
    trials = 10_000
    for _ in range(trials):
        k1 = (rng.random(), rng.random())
        k2 = (rng.random(), rng.random())
        if stable_hash(k1) % 2 == stable_hash(k2) % 2:
            collisions += 1
    assert collisions / trials == pytest.approx(0.5, abs=0.05)


def test_crux_single_job_no_sharing():
    strategy = make_strategy("crux")
    flows = [dp((1, i), 1, 0, 1) for i in range(2)]
    a = strategy.assign(flows, uplinks=2, utilization={1: 0.9})
    assert a.color_of((1, 0)) != a.color_of((1, 1))


def test_crux_two_jobs_same_tor_pair_disjoint():
    strategy = make_strategy("crux")
    flows = [dp((1, 0), 1, 0, 1), dp((2, 0), 2, 0, 1)]
    a = strategy.assign(flows, uplinks=2, utilization={1: 0.5, 2: 0.5})
    assert a.color_of((1, 0)) != a.color_of((2, 0))


def test_crux_greedy_can_miss_isolation():
    # Three ToRs, 2 uplinks. The high-utilization job uses colors at ToRs
    # 0 and 1 first; a constructed follow-up job then cannot avoid
    # sharing at ToR 0 under greedy order, while edge coloring isolates.
    strategy = make_strategy("crux")
    flows = [
        dp((1, 0), 1, 0, 1), dp((1, 1), 1, 1, 0),
        dp((2, 0), 2, 0, 2), dp((2, 1), 2, 2, 0),
        dp((3, 0), 3, 0, 1),
    ]
    a = strategy.assign(flows, uplinks=3,
                        utilization={1: 0.9, 2: 0.8, 3: 0.7})
    perfect = make_strategy("perfect").assign(flows, uplinks=3)
    # perfect always isolates here (max degree 3 <= 3 uplinks)
    src_seen, dst_seen = set(), set()
    for f in flows:
        c = perfect.color_of(f.key)
        assert (f.src_rack, c) not in src_seen
        assert (f.dst_rack, c) not in dst_seen
        src_seen.add((f.src_rack, c))
        dst_seen.add((f.dst_rack, c))


def test_sglb_balanced_no_moves():
    strategy = make_strategy("sglb")
    flows = [dp((1, 0), 1, 0, 1), dp((2, 0), 2, 0, 1)]
    a = RoutingAssignment(colors={(1, 0): 0, (2, 0): 1})
    assert strategy.rebalance(flows, uplinks=2, assignment=a) is False


def test_sglb_drains_overloaded_uplink():
    strategy = make_strategy("sglb")
    flows = [dp((1, 0), 1, 0, 1), dp((2, 0), 2, 0, 1)]
    a = RoutingAssignment(colors={(1, 0): 0, (2, 0): 0})
    assert strategy.rebalance(flows, uplinks=2, assignment=a) is True
    assert sorted(a.colors.values()) == [0, 1]
    assert strategy.rebalance(flows, uplinks=2, assignment=a) is False


def test_sglb_converges_from_collided_start():
    strategy = make_strategy("sglb")
    flows = [dp((1, i), 1, 0, 1) for i in range(8)]
    a = RoutingAssignment(colors={f.key: 0 for f in flows})
    for _ in range(len(flows) * 4):
        if not strategy.rebalance(flows, uplinks=4, assignment=a):
            break
    loads = defaultdict(int)
    for f in flows:
        loads[a.color_of(f.key)] += 1
    assert max(loads.values()) <= 2  # ceil(8 / 4)


def test_spray_assigns_aggregate_color():
    strategy = make_strategy("spray")
    flows = [dp((1, 0), 1, 0, 1)]
    a = strategy.assign(flows, uplinks=4)
    assert a.color_of((1, 0)) == SPRAY_COLOR


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError):
        make_strategy("nope")
