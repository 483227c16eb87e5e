"""Classic cluster-head election baselines: highest degree, lowest id,
four-index weighted election, and greedy maximal weighted independent set.

All four produce a ClusterAssignment over the same neighbor graph and are
stateless: the engine re-runs them from scratch whenever topology changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .clustering import ClusterAssignment, _greedy_min_weight
from .mobility import NeighborGraph


@dataclass(frozen=True)
class WcaParams:
    """Coefficients of the combined weight plus the target cluster degree."""

    w1: float = 0.2
    w2: float = 0.2
    w3: float = 0.05
    w4: float = 0.05
    ideal_degree: int = 5
    use_degree_difference: bool = True

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "w3", "w4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class WcaAttrs:
    """Graph-derived election inputs: degree, neighbor distance sum, mobility,
    consumed power."""

    degree: int
    dist_sum: float
    mv: float
    pv: float


def wca_weight(a: WcaAttrs, p: WcaParams) -> float:
    delta = abs(a.degree - p.ideal_degree) if p.use_degree_difference else a.degree
    return p.w1 * delta + p.w2 * a.dist_sum + p.w3 * a.mv + p.w4 * a.pv


def highest_degree(g: NeighborGraph) -> ClusterAssignment:
    """Connectivity-first election: the uncovered node with the most uncovered
    neighbors leads (ties to the lowest id) and claims them as members."""
    assign = ClusterAssignment()
    unassigned = set(g.ids)
    while unassigned:
        head = max(sorted(unassigned), key=lambda v: sum(1 for n in g.neighbors(v) if n in unassigned))
        unassigned.discard(head)
        assign.set_ch(head)
        for n in g.neighbors(head):
            if n in unassigned:
                unassigned.discard(n)
                assign.set_member(n, head)
    return assign


def lowest_id(g: NeighborGraph) -> ClusterAssignment:
    """Id-first election: a node unclaimed by any lower-id head becomes a
    head; everyone else follows the lowest-id head it hears.  Nodes hearing
    two or more heads are flagged as gateways."""
    assign = ClusterAssignment()
    claimed: dict[int, list[int]] = {v: [] for v in g.ids}
    for v in g.ids:  # ids are sorted ascending
        if claimed[v]:
            continue
        assign.set_ch(v)
        for n in g.neighbors(v):
            claimed[n].append(v)
    for v in g.ids:
        heads_heard = claimed[v]
        if not heads_heard or assign.is_ch(v):
            continue
        assign.set_member(v, min(heads_heard))
        if len(heads_heard) >= 2:
            assign.gateways.add(v)
    return assign


def wca(g: NeighborGraph, attrs: Mapping[int, WcaAttrs], p: WcaParams) -> ClusterAssignment:
    """Weighted election over degree offset, distance sum, mobility and
    consumed power; min weight leads, claimed neighbors drop out.

    Weights come from the full graph, not the shrinking uncovered subgraph.
    """
    weights = {v: wca_weight(attrs[v], p) for v in g.ids}
    assign = ClusterAssignment()
    for head, members in _greedy_min_weight(g, g.ids, weights):
        assign.set_ch(head)
        for m in members:
            assign.set_member(m, head)
    return assign


def mwis(g: NeighborGraph, weights: Mapping[int, float]) -> ClusterAssignment:
    """Greedy maximal weighted independent set as the head set.

    Repeatedly selects the heaviest node not adjacent to a selected one
    (ties to the lowest id) until no node can be added, so no two heads are
    neighbors and every ordinary node hears at least one head.  Ordinary
    nodes affiliate with their heaviest audible head.
    """
    assign = ClusterAssignment()
    available = set(g.ids)
    selected: list[int] = []
    for v in sorted(g.ids, key=lambda v: (-weights[v], v)):
        if v not in available:
            continue
        selected.append(v)
        available.discard(v)
        for n in g.neighbors(v):
            available.discard(n)
    head_set = set(selected)
    for h in selected:
        assign.set_ch(h)
    for v in g.ids:
        if v in head_set:
            continue
        heads_heard = [n for n in g.neighbors(v) if n in head_set]
        target = max(heads_heard, key=lambda h: (weights[h], -h))
        assign.set_member(v, target)
    return assign
