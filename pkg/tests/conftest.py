"""Shared test utilities: independent oracles and the clustering auditor."""

from __future__ import annotations

import itertools
import random

from manetsim import ClusterAssignment, NeighborGraph, Role


class UnionFind:
    def __init__(self, ids):
        self.parent = {v: v for v in ids}

    def find(self, v):
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, u, v):
        ru, rv = self.find(u), self.find(v)
        if ru != rv:
            self.parent[ru] = rv


def components_by_union_find(ids, edges):
    """Independent connected-components oracle."""
    uf = UnionFind(ids)
    for u, v in edges:
        uf.union(u, v)
    comps: dict[int, set[int]] = {}
    for v in ids:
        comps.setdefault(uf.find(v), set()).add(v)
    return sorted(comps.values(), key=len, reverse=True)


def brute_force_independent_sets(ids, edges):
    """Every independent set of the graph, by exhaustive enumeration."""
    ids = list(ids)
    edge_set = {frozenset(e) for e in edges}
    found = []
    for r in range(len(ids) + 1):
        for combo in itertools.combinations(ids, r):
            if all(frozenset((u, v)) not in edge_set
                   for u, v in itertools.combinations(combo, 2)):
                found.append(frozenset(combo))
    return found


def random_connected_graph(n, rng: random.Random, p=0.4) -> NeighborGraph:
    """Rejection-sample a connected graph on n nodes."""
    ids = list(range(n))
    while True:
        edges = [
            (u, v)
            for u, v in itertools.combinations(ids, 2)
            if rng.random() < p
        ]
        if len(components_by_union_find(ids, edges)[0]) == n:
            return NeighborGraph.from_edges(ids, edges)


def random_graph(n, rng: random.Random, p=0.3) -> NeighborGraph:
    ids = list(range(n))
    edges = [
        (u, v) for u, v in itertools.combinations(ids, 2) if rng.random() < p
    ]
    return NeighborGraph.from_edges(ids, edges)


def assert_valid_assignment(assign: ClusterAssignment, g: NeighborGraph, context=""):
    """Role exclusivity plus member-head existence; raises AssertionError."""
    assert set(assign.nodes()) == set(g.ids), f"{context}: node sets differ"
    for v in assign.nodes():
        role = assign.role_of(v)
        assert role in (Role.CH, Role.MEMBER, Role.UNASSIGNED), f"{context}: bad role {role}"
        if role is Role.MEMBER:
            h = assign.head_of(v)
            assert h is not None, f"{context}: member {v} has no head"
            assert h in assign, f"{context}: member {v} points at missing node {h}"
            assert assign.is_ch(h), f"{context}: member {v} points at non-head {h}"
        if role is Role.CH:
            assert assign.head_of(v) == v, f"{context}: head {v} not its own head"


class ClusteringAuditor:
    """Engine observer asserting the valid-clustering invariant every tick.

    Tracks member-head pairs across ticks so that freshly (re)affiliated
    members can be checked for adjacency at affiliation time.
    """

    def __init__(self):
        self.prev_pairs: dict[int, int] = {}
        self.violations: list[str] = []
        self.ch_sets: list[frozenset[int]] = []
        self.epochs: list[int] = []

    def __call__(self, ctx):
        assign, g = ctx.assign, ctx.graph
        if g is None or assign is None:
            self.prev_pairs = {}
            return
        self.ch_sets.append(assign.ch_set())
        self.epochs.append(assign.epoch)
        if set(assign.nodes()) != set(g.ids):
            self.violations.append(f"tick {ctx.tick}: assignment/graph node mismatch")
        pairs: dict[int, int] = {}
        for v in assign.nodes():
            role = assign.role_of(v)
            if role is Role.MEMBER:
                h = assign.head_of(v)
                if h is None or h not in assign or not assign.is_ch(h):
                    self.violations.append(f"tick {ctx.tick}: member {v} -> invalid head {h}")
                    continue
                pairs[v] = h
                if self.prev_pairs.get(v) != h and not g.has_edge(v, h):
                    self.violations.append(
                        f"tick {ctx.tick}: member {v} affiliated to non-neighbor {h}"
                    )
            elif role is Role.CH:
                if assign.head_of(v) != v:
                    self.violations.append(f"tick {ctx.tick}: head {v} not self-led")
        self.prev_pairs = pairs
