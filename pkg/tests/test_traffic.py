import random

import pytest

from manetsim import (
    ClusterAssignment,
    FlowConfig,
    NeighborGraph,
    Packet,
    compute_delay,
    compute_pdr,
    init_flows,
    mark_gateways,
    route_next_hop,
    step_traffic,
)
from manetsim.traffic import (
    DROP_QUEUE_OVERFLOW,
    DROP_ROUTING,
    DROP_ENERGY,
    FlowState,
)


def line_cluster(n=3):
    """Path 0-1-...-(n-1) with node 1 leading everyone it hears."""
    g = NeighborGraph.from_edges(range(n), [(i, i + 1) for i in range(n - 1)])
    a = ClusterAssignment()
    a.set_ch(1)
    for v in g.ids:
        if v != 1 and g.has_edge(v, 1):
            a.set_member(v, 1)
        elif v != 1:
            a.set_ch(v)
    mark_gateways(a, g)
    return g, a


class TestRouteNextHop:
    def test_direct_neighbor_delivery(self):
        g, a = line_cluster()
        assert route_next_hop(a, g, 1, 2) == 2

    def test_member_forwards_to_head(self):
        g, a = line_cluster()
        assert route_next_hop(a, g, 0, 2) == 1

    def test_unreachable_component_is_none(self):
        g = NeighborGraph.from_edges([0, 1, 2], [(0, 1)])
        a = ClusterAssignment()
        a.set_ch(0)
        a.set_member(1, 0)
        a.set_ch(2)
        assert route_next_hop(a, g, 0, 2) is None

    def test_orphan_member_has_no_route(self):
        # member 0 points at head 5 that is out of range
        g = NeighborGraph.from_edges([0, 2, 5], [(0, 2)])
        a = ClusterAssignment()
        a.set_ch(5)
        a.set_member(0, 5)
        a.set_ch(2)
        mark_gateways(a, g)
        # dst 2 is adjacent, so direct delivery still applies
        assert route_next_hop(a, g, 0, 2) == 2

        g2 = NeighborGraph.from_edges([0, 2, 3, 5], [(0, 2), (2, 3)])
        a2 = ClusterAssignment()
        a2.set_ch(5)
        a2.set_member(0, 5)
        a2.set_ch(2)
        a2.set_member(3, 2)
        mark_gateways(a2, g2)
        assert route_next_hop(a2, g2, 0, 3) is None

    def test_two_hop_head_gap_bridged_by_fallback(self):
        # heads 0 and 3 at graph distance 3; members 1, 2 hear one head each,
        # so there is no gateway, yet the connected graph must still deliver.
        g = NeighborGraph.from_edges(range(4), [(0, 1), (1, 2), (2, 3)])
        a = ClusterAssignment()
        a.set_ch(0)
        a.set_member(1, 0)
        a.set_ch(3)
        a.set_member(2, 3)
        mark_gateways(a, g)
        assert a.gateways == set()
        hops = []
        at = 0
        for _ in range(5):
            nxt = route_next_hop(a, g, at, 3)
            assert nxt is not None
            hops.append(nxt)
            at = nxt
            if at == 3:
                break
        assert at == 3
        assert hops == [1, 2, 3]


class TestStepTraffic:
    def test_line_end_to_end_delay(self):
        g, a = line_cluster()
        state = FlowState({0: 2})
        cfg = FlowConfig(rate=1.0, per_hop_delay=1, gen_until=1)
        results = {}
        for tick in range(1, 5):
            results[tick] = step_traffic(state, a, g, cfg, tick)
        delivered = [p for r in results.values() for p in r.delivered]
        assert len(delivered) == 1
        pkt = delivered[0]
        assert pkt.hops == 2
        assert pkt.delay() == 2  # 2 * per_hop_delay

    def test_per_hop_delay_scales_delay(self):
        g, a = line_cluster()
        state = FlowState({0: 2})
        cfg = FlowConfig(rate=1.0, per_hop_delay=3, gen_until=1)
        delivered = []
        for tick in range(1, 10):
            delivered += step_traffic(state, a, g, cfg, tick).delivered
        assert len(delivered) == 1
        assert delivered[0].delay() == 6

    def test_src_equals_dst_instant(self):
        g = NeighborGraph.from_edges([0], [])
        a = ClusterAssignment()
        a.set_ch(0)
        state = FlowState({0: 0})
        cfg = FlowConfig(gen_until=1)
        r = step_traffic(state, a, g, cfg, 1)
        assert len(r.delivered) == 1
        assert r.delivered[0].hops == 0
        assert r.delivered[0].delay() == 0

    def test_queue_overflow_on_simultaneous_arrivals(self):
        # star: members 1 and 2 both forward into head 0 with capacity 1
        g = NeighborGraph.from_edges([0, 1, 2, 3], [(0, 1), (0, 2), (0, 3)])
        a = ClusterAssignment()
        a.set_ch(0)
        for v in (1, 2, 3):
            a.set_member(v, 0)
        state = FlowState({1: 3, 2: 3})
        cfg = FlowConfig(queue_capacity=1, gen_until=1)
        r1 = step_traffic(state, a, g, cfg, 1)  # generation
        assert not r1.dropped
        r2 = step_traffic(state, a, g, cfg, 2)  # both try to enter node 0
        reasons = [p.drop_reason for p in r2.dropped]
        assert reasons == [DROP_QUEUE_OVERFLOW]
        assert state.queues[0]  # one packet made it

    def test_dead_node_drops_queue(self):
        g, a = line_cluster()
        state = FlowState({0: 2})
        cfg = FlowConfig(gen_until=1)
        step_traffic(state, a, g, cfg, 1)
        # node 0 dies with its queued packet
        g2 = NeighborGraph.from_edges([1, 2], [(1, 2)])
        a2 = ClusterAssignment()
        a2.set_ch(1)
        a2.set_member(2, 1)
        r = step_traffic(state, a2, g2, cfg, 2)
        assert [p.drop_reason for p in r.dropped] == [DROP_ENERGY]

    def test_unreachable_destination_drops_routing(self):
        g = NeighborGraph.from_edges([0, 1, 5], [(0, 1)])
        a = ClusterAssignment()
        a.set_ch(0)
        a.set_member(1, 0)
        a.set_ch(5)
        state = FlowState({1: 5})
        cfg = FlowConfig(gen_until=2)
        r1 = step_traffic(state, a, g, cfg, 1)
        r2 = step_traffic(state, a, g, cfg, 2)
        assert [p.drop_reason for p in r2.dropped] == [DROP_ROUTING]

    def test_conservation_and_hop_bound(self):
        rng = random.Random(77)
        ids = list(range(12))
        edges = [(u, v) for u in ids for v in ids if u < v and rng.random() < 0.3]
        g = NeighborGraph.from_edges(ids, edges)
        from manetsim import cluster_setup, NodeAttrs, WeightParams

        attrs = {v: NodeAttrs(10, 0.02, 0, 0, rng.uniform(0, 1)) for v in ids}
        a = cluster_setup(g, attrs, WeightParams())
        mark_gateways(a, g)
        state = init_flows(ids, FlowConfig(), rng)
        cfg = FlowConfig(queue_capacity=10)
        delivered = dropped = 0
        for tick in range(1, 60):
            r = step_traffic(state, a, g, cfg, tick)
            delivered += len(r.delivered)
            dropped += len(r.dropped)
            assert state.sent == delivered + dropped + state.in_flight()
            for p in r.delivered:
                assert p.hops <= len(ids)


def test_compute_pdr():
    assert compute_pdr(0, 0) == 1.0
    assert compute_pdr(80, 100) == pytest.approx(0.8)


def test_compute_delay():
    assert compute_delay([]) == 0.0
    p1 = Packet(0, 1, created_tick=0, delivered_tick=2)
    p2 = Packet(0, 1, created_tick=0, delivered_tick=4)
    assert compute_delay([p1, p2]) == pytest.approx(3.0)


def test_init_flows_deterministic_and_fixed():
    cfg = FlowConfig(source_count=3)
    f1 = init_flows(range(10), cfg, random.Random(5))
    f2 = init_flows(range(10), cfg, random.Random(5))
    assert f1.flows == f2.flows
    assert sorted(f1.flows) == [0, 1, 2]
    assert all(dst != src for src, dst in f1.flows.items())
