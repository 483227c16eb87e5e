"""Constant-bit-rate traffic over the cluster structure.

Forwarding is cluster-based: members hand packets to their head, heads and
gateways relay along the shortest head-level path toward the destination's
cluster.  When the head/gateway overlay does not reach the destination but
the plain graph does, forwarding falls back to a shortest path on the full
graph, so a static connected topology always delivers.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .clustering import ClusterAssignment
from .energy import Role
from .mobility import NeighborGraph

DROP_QUEUE_OVERFLOW = "queue_overflow"
DROP_ROUTING = "routing"
DROP_ENERGY = "energy"


@dataclass
class Packet:
    src: int
    dst: int
    created_tick: int
    hops: int = 0
    ready_at: int = 0
    delivered_tick: Optional[int] = None
    drop_reason: Optional[str] = None

    def delay(self) -> int:
        if self.delivered_tick is None:
            raise ValueError("packet not delivered")
        return self.delivered_tick - self.created_tick


@dataclass(frozen=True)
class FlowConfig:
    """Constant-rate flows with fixed uniform-random destinations.

    ``source_count=None`` makes every node a source; 0 disables traffic.
    ``gen_until`` stops generation after that tick so the pipeline can drain.
    """

    source_count: Optional[int] = None
    rate: float = 1.0
    queue_capacity: int = 50
    per_hop_delay: int = 1
    gen_until: Optional[int] = None

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if self.per_hop_delay < 1:
            raise ValueError("per_hop_delay must be >= 1")


@dataclass
class TrafficTick:
    delivered: list[Packet]
    dropped: list[Packet]
    generated: int
    tx_counts: dict[int, int]
    rx_counts: dict[int, int]


class FlowState:
    """Queues, flow table and rate credit owned by one run."""

    def __init__(self, flows: dict[int, int]):
        self.flows = flows
        self.queues: dict[int, list[Packet]] = {}
        self.credit: dict[int, float] = {src: 0.0 for src in flows}
        self.sent = 0
        self._router: Optional[_Router] = None

    def in_flight(self) -> int:
        return sum(len(q) for q in self.queues.values())


def init_flows(node_ids: Sequence[int], cfg: FlowConfig, rng: random.Random) -> FlowState:
    """Pick sources (lowest ids first) and draw each one a fixed destination."""
    ids = sorted(node_ids)
    count = len(ids) if cfg.source_count is None else min(cfg.source_count, len(ids))
    flows: dict[int, int] = {}
    for src in ids[:count]:
        others = [v for v in ids if v != src]
        flows[src] = rng.choice(others) if others else src
    return FlowState(flows)


class _Router:
    """Per-topology next-hop cache; BFS trees are built lazily per destination."""

    def __init__(self, assign: ClusterAssignment, g: NeighborGraph):
        self._assign = assign
        self._g = g
        self._overlay_base = assign.ch_set() | assign.gateways
        self._overlay: dict[int, dict[int, int]] = {}
        self._full: dict[int, dict[int, int]] = {}

    def _bfs_parents(self, dst: int, allowed: Optional[frozenset[int]]) -> dict[int, int]:
        # parents[v] = the neighbor of v one step closer to dst
        g = self._g
        parents: dict[int, int] = {}
        seen = {dst}
        frontier = deque([dst])
        while frontier:
            u = frontier.popleft()
            for w in g.neighbors(u):
                if w in seen:
                    continue
                if allowed is not None and w not in allowed:
                    continue
                seen.add(w)
                parents[w] = u
                frontier.append(w)
        return parents

    def _overlay_for(self, dst: int) -> dict[int, int]:
        if dst not in self._overlay:
            allowed = frozenset(self._overlay_base | {dst})
            self._overlay[dst] = self._bfs_parents(dst, allowed)
        return self._overlay[dst]

    def _full_for(self, dst: int) -> dict[int, int]:
        if dst not in self._full:
            self._full[dst] = self._bfs_parents(dst, None)
        return self._full[dst]

    def next_hop(self, at: int, dst: int) -> Optional[int]:
        """Loop-free next hop: the cluster overlay where it reaches, the full
        graph where it does not, and no escape hatch for members cut off from
        their head (their cluster route is simply broken that tick)."""
        g = self._g
        if at not in g or dst not in g:
            return None
        if g.has_edge(at, dst):
            return dst
        assign = self._assign
        role = assign.role_of(at) if at in assign else Role.UNASSIGNED
        overlay = self._overlay_for(dst)
        if role is Role.MEMBER and at not in assign.gateways:
            head = assign.head_of(at)
            if head is None or head not in g or not g.has_edge(at, head):
                return None
            if head in overlay:
                return head
            return self._full_for(dst).get(at)
        hop = overlay.get(at)
        if hop is not None:
            return hop
        return self._full_for(dst).get(at)


def route_next_hop(
    assign: ClusterAssignment, g: NeighborGraph, at: int, dst: int
) -> Optional[int]:
    """Next hop of the cluster-based route from ``at`` toward ``dst``.

    Direct neighbors deliver directly; members forward to their head; heads
    and gateways follow the head/gateway overlay, falling back to the full
    graph when the overlay has no path.  None means there is no route.
    """
    return _Router(assign, g).next_hop(at, dst)


def step_traffic(
    state: FlowState,
    assign: ClusterAssignment,
    g: NeighborGraph,
    cfg: FlowConfig,
    tick: int,
    dt: float = 1.0,
    rebuild_routes: bool = True,
) -> TrafficTick:
    """Advance queued packets one hop and generate this tick's new packets.

    Packets advance once every ``per_hop_delay`` ticks, in ascending node-id
    and queue order.  Drops: no route (``routing``), full queue at the next
    hop (``queue_overflow``), or the carrying node left the graph
    (``energy``).  Generation happens after forwarding, so a fresh packet
    first moves one hop one ``per_hop_delay`` later.
    """
    if rebuild_routes or state._router is None:
        state._router = _Router(assign, g)
    router = state._router
    delivered: list[Packet] = []
    dropped: list[Packet] = []
    tx: dict[int, int] = {}
    rx: dict[int, int] = {}

    for node in sorted(state.queues):
        if node not in g:
            for pkt in state.queues[node]:
                pkt.drop_reason = DROP_ENERGY
                dropped.append(pkt)
            del state.queues[node]

    for node in sorted(state.queues):
        queue = state.queues[node]
        if not queue:
            continue
        remaining: list[Packet] = []
        for pkt in queue:
            if tick < pkt.ready_at:
                remaining.append(pkt)
                continue
            hop = router.next_hop(node, pkt.dst)
            if hop is None:
                pkt.drop_reason = DROP_ROUTING
                dropped.append(pkt)
                continue
            pkt.hops += 1
            tx[node] = tx.get(node, 0) + 1
            if hop == pkt.dst:
                pkt.delivered_tick = tick
                delivered.append(pkt)
                rx[hop] = rx.get(hop, 0) + 1
            else:
                dest_queue = state.queues.setdefault(hop, [])
                if len(dest_queue) < cfg.queue_capacity:
                    pkt.ready_at = tick + cfg.per_hop_delay
                    dest_queue.append(pkt)
                    rx[hop] = rx.get(hop, 0) + 1
                else:
                    pkt.drop_reason = DROP_QUEUE_OVERFLOW
                    dropped.append(pkt)
        state.queues[node] = remaining

    generated = 0
    if cfg.gen_until is None or tick <= cfg.gen_until:
        for src in sorted(state.flows):
            if src not in g:
                continue
            state.credit[src] += cfg.rate * dt
            count = int(state.credit[src])
            state.credit[src] -= count
            dst = state.flows[src]
            for _ in range(count):
                state.sent += 1
                generated += 1
                pkt = Packet(src, dst, tick, ready_at=tick + cfg.per_hop_delay)
                if dst == src:
                    pkt.delivered_tick = tick
                    delivered.append(pkt)
                    continue
                queue = state.queues.setdefault(src, [])
                if len(queue) < cfg.queue_capacity:
                    queue.append(pkt)
                else:
                    pkt.drop_reason = DROP_QUEUE_OVERFLOW
                    dropped.append(pkt)
    return TrafficTick(delivered, dropped, generated, tx, rx)


def compute_pdr(delivered_count: int, sent_count: int) -> float:
    """Delivered over sent; 1.0 when nothing was sent (vacuously perfect)."""
    if sent_count == 0:
        return 1.0
    return delivered_count / sent_count


def compute_delay(delivered: Iterable[Packet]) -> float:
    """Mean end-to-end delay in ticks over delivered packets; 0 for none.

    Lost packets would have infinite delay and are excluded by construction.
    """
    delays = [p.delay() for p in delivered if p.delivered_tick is not None]
    if not delays:
        return 0.0
    return sum(delays) / len(delays)
