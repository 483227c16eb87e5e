"""Random-waypoint node movement and geometric neighbor discovery."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Kinematics:
    """Motion state of one node.

    ``position == waypoint`` means the node is parked at its target and is
    either pausing or about to draw a new leg.  ``distance_traveled`` and
    ``elapsed`` accumulate over the whole run and feed the mean-speed metric.
    """

    position: Position
    waypoint: Position
    speed: float = 0.0
    pause_remaining: float = 0.0
    distance_traveled: float = 0.0
    elapsed: float = 0.0


def initial_kinematics(position: Position, pause: float = 0.0) -> Kinematics:
    """Spawn a node parked at ``position`` with an initial pause budget."""
    return Kinematics(position=position, waypoint=position, pause_remaining=pause)


def rwp_step(
    k: Kinematics,
    dt: float,
    area: tuple[float, float],
    speed_range: tuple[float, float],
    pause: float,
    rng: random.Random,
) -> Kinematics:
    """Advance one node by ``dt`` seconds of random-waypoint motion.

    A moving node travels ``speed * dt`` toward its waypoint, clamping at the
    waypoint; reaching it arms a fresh pause of ``pause`` seconds.  A parked
    node burns down its pause, then draws a new uniform waypoint inside
    ``area`` and a new uniform speed from ``speed_range`` and starts moving.
    Draw order per leg is waypoint x, waypoint y, speed.

    ``speed_range[0]`` must be strictly positive: a zero minimum makes the
    long-run average speed decay toward zero instead of a stationary value.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    speed_min, speed_max = speed_range
    if speed_min <= 0:
        raise ValueError(f"speed_min must be > 0, got {speed_min}")

    elapsed = k.elapsed + dt
    if k.position == k.waypoint:
        if k.pause_remaining > 0:
            return replace(
                k,
                pause_remaining=max(0.0, k.pause_remaining - dt),
                elapsed=elapsed,
            )
        waypoint = Position(rng.uniform(0.0, area[0]), rng.uniform(0.0, area[1]))
        speed = rng.uniform(speed_min, speed_max)
    else:
        waypoint = k.waypoint
        speed = k.speed

    distance = k.position.distance_to(waypoint)
    step = speed * dt
    if step >= distance:
        return replace(
            k,
            position=waypoint,
            waypoint=waypoint,
            speed=speed,
            pause_remaining=pause,
            distance_traveled=k.distance_traveled + distance,
            elapsed=elapsed,
        )
    frac = step / distance
    moved = Position(
        k.position.x + (waypoint.x - k.position.x) * frac,
        k.position.y + (waypoint.y - k.position.y) * frac,
    )
    return replace(
        k,
        position=moved,
        waypoint=waypoint,
        speed=speed,
        pause_remaining=0.0,
        distance_traveled=k.distance_traveled + step,
        elapsed=elapsed,
    )


def mean_speed(k: Kinematics) -> float:
    """Average speed since spawn: total distance over total time, 0 at start."""
    if k.elapsed <= 0:
        return 0.0
    return k.distance_traveled / k.elapsed


class NeighborGraph:
    """Undirected adjacency over node ids; no self-edges."""

    __slots__ = ("ids", "_nbrs", "_sets")

    def __init__(self, ids: Sequence[int], nbrs: Mapping[int, Sequence[int]]):
        self.ids: tuple[int, ...] = tuple(ids)
        self._nbrs: dict[int, tuple[int, ...]] = {
            v: tuple(sorted(nbrs.get(v, ()))) for v in self.ids
        }
        self._sets: dict[int, frozenset[int]] = {
            v: frozenset(ns) for v, ns in self._nbrs.items()
        }

    @classmethod
    def from_edges(cls, ids: Iterable[int], edges: Iterable[tuple[int, int]]) -> "NeighborGraph":
        ids = sorted(ids)
        nbrs: dict[int, set[int]] = {v: set() for v in ids}
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-edge on node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(ids, {v: sorted(ns) for v, ns in nbrs.items()})

    def __contains__(self, v: int) -> bool:
        return v in self._sets

    def __len__(self) -> int:
        return len(self.ids)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._nbrs[v]

    def degree(self, v: int) -> int:
        return len(self._nbrs[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._sets[u]

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (u, v) for u in self.ids for v in self._nbrs[u] if u < v
        )

    def components(self) -> list[set[int]]:
        """Connected components, largest first (ties by smallest member id)."""
        seen: set[int] = set()
        comps: list[set[int]] = []
        for start in self.ids:
            if start in seen:
                continue
            comp = {start}
            frontier = [start]
            while frontier:
                u = frontier.pop()
                for w in self._nbrs[u]:
                    if w not in comp:
                        comp.add(w)
                        frontier.append(w)
            seen |= comp
            comps.append(comp)
        comps.sort(key=lambda c: (-len(c), min(c)))
        return comps


def pairwise_geometry(
    ids: Sequence[int],
    positions: Mapping[int, Position],
    ranges: Mapping[int, float],
) -> tuple[np.ndarray, np.ndarray]:
    """Distance matrix and mutual-reachability adjacency in ``ids`` order.

    Nodes are adjacent iff their distance is within both transmission
    ranges, which keeps the graph undirected even for heterogeneous ranges.
    """
    xs = np.array([positions[i].x for i in ids], dtype=float)
    ys = np.array([positions[i].y for i in ids], dtype=float)
    rs = np.array([ranges[i] for i in ids], dtype=float)
    dist = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    mutual = np.minimum(rs[:, None], rs[None, :])
    adj = dist <= mutual
    np.fill_diagonal(adj, False)
    return dist, adj


def build_neighbor_graph(
    positions: Mapping[int, Position], ranges: Mapping[int, float]
) -> NeighborGraph:
    """Geometric neighbor graph under the mutual-reachability rule."""
    ids = sorted(positions)
    if not ids:
        raise ValueError("at least one node required")
    _, adj = pairwise_geometry(ids, positions, ranges)
    nbrs: dict[int, list[int]] = {}
    for row, v in enumerate(ids):
        nbrs[v] = [ids[col] for col in np.flatnonzero(adj[row])]
    return NeighborGraph(ids, nbrs)
