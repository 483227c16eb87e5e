"""Tick loop binding mobility, energy, clustering and traffic, plus the
multi-seed sweep harness.

Per-tick order is fixed: mobility, energy drain and death, graph rebuild,
attribute refresh, scheduled arrivals, cluster maintenance or re-election,
traffic, metrics.  A run is a pure function of its config (seed included).
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import baselines, clustering, traffic
from .baselines import WcaAttrs, WcaParams
from .clustering import (
    ChprobParams,
    ClusterAssignment,
    NodeAttrs,
    OrphanState,
    WeightParams,
)
from .energy import EnergyModel, EnergyState, Role, consume_step, consumed_power
from .mobility import (
    Kinematics,
    NeighborGraph,
    Position,
    initial_kinematics,
    mean_speed,
    pairwise_geometry,
    rwp_step,
)
from .traffic import FlowConfig, FlowState, compute_pdr, init_flows, step_traffic

ALGORITHMS = ("paiwca", "wca", "lowest_id", "highest_degree", "mwis")


class ConfigError(ValueError):
    """Raised for invalid or out-of-bounds scenario parameters."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one run; every knob has a desk-scale default.

    Defaults follow the standard parameter table: 50 nodes in 500x500 m,
    per-node ranges drawn from 10-70 m, initial energy from 10-80 J, 0.02 W
    transmission rate, 500 s of simulated time.  ``pause`` defaults to the
    full run length, i.e. a stationary scenario; mobile scenarios lower it.
    """

    node_count: int = 50
    area_width: float = 500.0
    area_height: float = 500.0
    speed_min: float = 1.0
    speed_max: float = 10.0
    pause: float = 500.0
    range_min: float = 10.0
    range_max: float = 70.0
    tx_rate: float = 0.02
    energy_min: float = 10.0
    energy_max: float = 80.0
    sim_time: int = 500
    dt: float = 1.0
    algorithm: str = "paiwca"
    seed: int = 0
    orphan_timeout: int = 5
    max_cluster_size: Optional[int] = None
    arrivals: tuple[tuple[int, int], ...] = ()
    unsafe: bool = False
    weights: WeightParams = field(default_factory=WeightParams)
    chprob: ChprobParams = field(default_factory=ChprobParams)
    energy_model: EnergyModel = field(default_factory=EnergyModel)
    traffic: FlowConfig = field(default_factory=FlowConfig)
    wca: WcaParams = field(default_factory=WcaParams)

    def validate(self) -> None:
        def bound(key: str, value, lo, hi) -> None:
            if not lo <= value <= hi:
                raise ConfigError(
                    f"{key}: {value} outside [{lo}, {hi}]"
                    " (set unsafe=true to override)"
                )

        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"algorithm: unknown value {self.algorithm!r}, expected one of {ALGORITHMS}"
            )
        if self.dt <= 0:
            raise ConfigError(f"dt: must be > 0, got {self.dt}")
        if self.sim_time < 0:
            raise ConfigError(f"sim_time: must be >= 0, got {self.sim_time}")
        if self.area_width <= 0 or self.area_height <= 0:
            raise ConfigError("area_width/area_height: must be > 0")
        if self.speed_min <= 0:
            raise ConfigError(f"speed_min: must be > 0, got {self.speed_min}")
        if self.speed_max < self.speed_min:
            raise ConfigError("speed_max: must be >= speed_min")
        if self.pause < 0:
            raise ConfigError(f"pause: must be >= 0, got {self.pause}")
        if self.range_max < self.range_min:
            raise ConfigError("range_max: must be >= range_min")
        if self.energy_max < self.energy_min:
            raise ConfigError("energy_max: must be >= energy_min")
        if self.energy_min <= 0:
            raise ConfigError("energy_min: must be > 0")
        if self.orphan_timeout < 0:
            raise ConfigError("orphan_timeout: must be >= 0")
        if self.max_cluster_size is not None and self.max_cluster_size < 1:
            raise ConfigError("max_cluster_size: must be >= 1 or unset")
        if self.range_max > self.chprob.tr_max:
            raise ConfigError(
                f"range_max: {self.range_max} exceeds chprob.tr_max {self.chprob.tr_max}"
            )
        seen_ids: set[int] = set()
        for tick, node_id in self.arrivals:
            if tick < 1:
                raise ConfigError(f"arrival_schedule: tick {tick} must be >= 1")
            if node_id < self.node_count or node_id in seen_ids:
                raise ConfigError(
                    f"arrival_schedule: node id {node_id} must be unique and >= node_count"
                )
            seen_ids.add(node_id)
        if not self.unsafe:
            bound("node_count", self.node_count, 10, 300)
            bound("speed_max", self.speed_max, self.speed_min, 100.0)
            bound("range_min", self.range_min, 5.0, 200.0)
            bound("range_max", self.range_max, 5.0, 200.0)
            bound("energy_min", self.energy_min, 10.0, 80.0)
            bound("energy_max", self.energy_max, 10.0, 80.0)

    def source_count(self) -> int:
        if self.traffic.source_count is None:
            return self.node_count
        return self.traffic.source_count


@dataclass(frozen=True)
class NodeState:
    kin: Kinematics
    energy: EnergyState
    tr: float
    tx: float


@dataclass(frozen=True)
class MetricsRecord:
    tick: int
    cluster_count: int
    connectivity: float
    dominant_set_updates: int
    sent: int
    delivered: int
    dropped: int
    throughput: float
    mean_delay: float
    alive_nodes: int


METRIC_FIELDS = tuple(f.name for f in fields(MetricsRecord))


@dataclass(frozen=True)
class RunSummary:
    algorithm: str
    seed: int
    ticks: int
    mean_cluster_count: float
    mean_connectivity: float
    dominant_set_updates: int
    sent: int
    delivered: int
    dropped: int
    pdr: float
    throughput: float
    mean_delay: float
    alive_final: int


@dataclass(frozen=True)
class RunResult:
    config: ScenarioConfig
    initial: MetricsRecord
    series: tuple[MetricsRecord, ...]
    summary: RunSummary


@dataclass
class TickContext:
    """Engine state handed to run observers, mainly for audits in tests."""

    tick: int
    graph: Optional[NeighborGraph]
    assign: Optional[ClusterAssignment]
    attrs: dict[int, NodeAttrs]
    nodes: dict[int, NodeState]


Observer = Callable[[TickContext], None]


def connectivity(g: NeighborGraph) -> float:
    """Share of alive nodes inside the largest connected component."""
    if len(g) == 0:
        raise ValueError("connectivity needs at least one node")
    return len(g.components()[0]) / len(g)


def _geometry(nodes: dict[int, NodeState]) -> tuple[list[int], NeighborGraph, np.ndarray]:
    ids = sorted(nodes)
    positions = {i: nodes[i].kin.position for i in ids}
    ranges = {i: nodes[i].tr for i in ids}
    dist, adj = pairwise_geometry(ids, positions, ranges)
    nbrs = {v: [ids[c] for c in np.flatnonzero(adj[r])] for r, v in enumerate(ids)}
    return ids, NeighborGraph(ids, nbrs), dist


def _node_attrs(nodes: dict[int, NodeState], cfg: ScenarioConfig) -> dict[int, NodeAttrs]:
    out = {}
    for i, ns in nodes.items():
        out[i] = NodeAttrs(
            tr=ns.tr,
            tx=ns.tx,
            mv=mean_speed(ns.kin),
            pv=consumed_power(ns.energy),
            chprob=clustering.compute_chprob(ns.energy, ns.tr, cfg.chprob),
        )
    return out


def _elect(
    cfg: ScenarioConfig,
    ids: list[int],
    graph: NeighborGraph,
    dist: np.ndarray,
    attrs: dict[int, NodeAttrs],
    nodes: dict[int, NodeState],
) -> ClusterAssignment:
    if cfg.algorithm == "paiwca":
        return clustering.cluster_setup(graph, attrs, cfg.weights, cfg.max_cluster_size)
    if cfg.algorithm == "wca":
        index = {v: i for i, v in enumerate(ids)}
        wattrs = {}
        for v in ids:
            row = index[v]
            nbr_rows = [index[n] for n in graph.neighbors(v)]
            dist_sum = float(dist[row, nbr_rows].sum()) if nbr_rows else 0.0
            wattrs[v] = WcaAttrs(graph.degree(v), dist_sum, attrs[v].mv, attrs[v].pv)
        return baselines.wca(graph, wattrs, cfg.wca)
    if cfg.algorithm == "lowest_id":
        return baselines.lowest_id(graph)
    if cfg.algorithm == "highest_degree":
        return baselines.highest_degree(graph)
    if cfg.algorithm == "mwis":
        return baselines.mwis(graph, {v: nodes[v].energy.e_residual for v in ids})
    raise ConfigError(f"algorithm: unknown value {cfg.algorithm!r}")


def _spawn_node(cfg: ScenarioConfig, rng: random.Random) -> NodeState:
    pos = Position(rng.uniform(0.0, cfg.area_width), rng.uniform(0.0, cfg.area_height))
    tr = rng.uniform(cfg.range_min, cfg.range_max)
    e0 = rng.uniform(cfg.energy_min, cfg.energy_max)
    return NodeState(initial_kinematics(pos, cfg.pause), EnergyState(e0, e0), tr, cfg.tx_rate)


def run(cfg: ScenarioConfig, observer: Optional[Observer] = None) -> RunResult:
    """Execute one scenario; fully deterministic given the config."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    nodes: dict[int, NodeState] = {i: _spawn_node(cfg, rng) for i in range(cfg.node_count)}
    pending_arrivals: dict[int, list[int]] = {}
    for tick, node_id in cfg.arrivals:
        pending_arrivals.setdefault(tick, []).append(node_id)

    ids, graph, dist = _geometry(nodes)
    attrs = _node_attrs(nodes, cfg)
    assign = _elect(cfg, ids, graph, dist, attrs, nodes)
    clustering.mark_gateways(assign, graph)
    orphan_state = OrphanState(timeout=cfg.orphan_timeout)

    flows: Optional[FlowState] = None
    if cfg.source_count() > 0 and cfg.sim_time > 0:
        flows = init_flows(ids, cfg.traffic, rng)

    prev_ch = assign.ch_set()
    prev_edges = graph.edge_set()
    updates = 0
    delivered_total = 0
    dropped_total = 0
    delay_sum = 0.0
    prev_tx: dict[int, int] = {}
    prev_rx: dict[int, int] = {}

    def record(tick: int, delivered_this_tick: int) -> MetricsRecord:
        alive = len(nodes)
        return MetricsRecord(
            tick=tick,
            cluster_count=len(assign.ch_set()) if alive else 0,
            connectivity=connectivity(graph) if alive else 0.0,
            dominant_set_updates=updates,
            sent=flows.sent if flows else 0,
            delivered=delivered_total,
            dropped=dropped_total,
            throughput=delivered_this_tick / cfg.dt,
            mean_delay=delay_sum / delivered_total if delivered_total else 0.0,
            alive_nodes=alive,
        )

    initial = record(0, 0)
    if observer:
        observer(TickContext(0, graph, assign, attrs, dict(nodes)))

    series: list[MetricsRecord] = []
    for tick in range(1, cfg.sim_time + 1):
        # 1. mobility
        area = (cfg.area_width, cfg.area_height)
        speed_range = (cfg.speed_min, cfg.speed_max)
        for i in sorted(nodes):
            ns = nodes[i]
            nodes[i] = replace(
                ns, kin=rwp_step(ns.kin, cfg.dt, area, speed_range, cfg.pause, rng)
            )

        # 2. energy drain; exhausted nodes leave the network
        died = []
        for i in sorted(nodes):
            ns = nodes[i]
            role = assign.role_of(i) if i in assign else Role.UNASSIGNED
            drained = consume_step(
                ns.energy, role, cfg.energy_model, cfg.dt,
                prev_tx.get(i, 0), prev_rx.get(i, 0),
            )
            nodes[i] = replace(ns, energy=drained)
            if drained.e_residual <= 0.0:
                died.append(i)
        for i in died:
            del nodes[i]
            assign.remove(i)

        node_set_changed = bool(died)

        # 3/4. geometry and attribute refresh
        if nodes:
            ids, graph, dist = _geometry(nodes)
            attrs = _node_attrs(nodes, cfg)
        else:
            ids, graph, dist, attrs = [], None, None, {}

        # 5. scheduled arrivals
        arrived = pending_arrivals.pop(tick, [])
        for node_id in arrived:
            nodes[node_id] = _spawn_node(cfg, rng)
            node_set_changed = True
            ids, graph, dist = _geometry(nodes)
            attrs = _node_attrs(nodes, cfg)
            if cfg.algorithm == "paiwca":
                assign = clustering.admit_new_node(assign, graph, node_id, attrs, cfg.weights)

        # 6. maintenance (event-gated) or full re-election (baselines)
        edges = graph.edge_set() if graph else frozenset()
        graph_changed = node_set_changed or edges != prev_edges
        assign_before = assign
        if graph is not None:
            if cfg.algorithm == "paiwca":
                orphan_state.received = set(prev_rx)
                assign = clustering.maintain_on_move(
                    assign, graph, attrs, cfg.weights, orphan_state
                )
                assign = clustering.reelect_if_below_threshold(
                    assign, graph, attrs, cfg.weights, cfg.chprob
                )
            elif graph_changed:
                fresh = _elect(cfg, ids, graph, dist, attrs, nodes)
                fresh.epoch = assign.epoch + (1 if fresh.ch_set() != assign.ch_set() else 0)
                assign = fresh
            clustering.mark_gateways(assign, graph)

        # 7. traffic
        delivered_this_tick = 0
        if flows is not None and graph is not None:
            result = step_traffic(
                flows, assign, graph, cfg.traffic, tick, cfg.dt,
                rebuild_routes=graph_changed or assign is not assign_before or tick == 1,
            )
            delivered_this_tick = len(result.delivered)
            delivered_total += delivered_this_tick
            dropped_total += len(result.dropped)
            delay_sum += sum(p.delay() for p in result.delivered)
            prev_tx, prev_rx = result.tx_counts, result.rx_counts
        else:
            prev_tx, prev_rx = {}, {}

        # 8. metrics
        ch = assign.ch_set()
        if ch != prev_ch:
            updates += 1
            prev_ch = ch
        prev_edges = edges
        series.append(record(tick, delivered_this_tick))
        if observer:
            observer(TickContext(tick, graph, assign, attrs, dict(nodes)))

    return RunResult(
        config=cfg,
        initial=initial,
        series=tuple(series),
        summary=_summarize(cfg, initial, series, flows, updates, delivered_total,
                           dropped_total, delay_sum, len(nodes)),
    )


def _summarize(
    cfg: ScenarioConfig,
    initial: MetricsRecord,
    series: Sequence[MetricsRecord],
    flows: Optional[FlowState],
    updates: int,
    delivered_total: int,
    dropped_total: int,
    delay_sum: float,
    alive_final: int,
) -> RunSummary:
    rows = series if series else [initial]
    sent = flows.sent if flows else 0
    ticks = len(series)
    return RunSummary(
        algorithm=cfg.algorithm,
        seed=cfg.seed,
        ticks=ticks,
        mean_cluster_count=statistics.fmean(r.cluster_count for r in rows),
        mean_connectivity=statistics.fmean(r.connectivity for r in rows),
        dominant_set_updates=updates,
        sent=sent,
        delivered=delivered_total,
        dropped=dropped_total,
        pdr=compute_pdr(delivered_total, sent),
        throughput=delivered_total / (ticks * cfg.dt) if ticks else 0.0,
        mean_delay=delay_sum / delivered_total if delivered_total else 0.0,
        alive_final=alive_final,
    )


SWEEP_AXES = ("nodes", "range", "pause")

_SUMMARY_METRICS = (
    ("cluster_count", "mean_cluster_count"),
    ("connectivity", "mean_connectivity"),
    ("dominant_set_updates", "dominant_set_updates"),
    ("pdr", "pdr"),
    ("throughput", "throughput"),
    ("mean_delay", "mean_delay"),
)


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    axis: str
    value: float
    n_seeds: int
    stats: tuple[tuple[str, float, float], ...]  # (metric, mean, std)

    def mean(self, metric: str) -> float:
        for name, mean, _ in self.stats:
            if name == metric:
                return mean
        raise KeyError(metric)

    def std(self, metric: str) -> float:
        for name, _, std in self.stats:
            if name == metric:
                return std
        raise KeyError(metric)


def apply_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "nodes":
        return replace(cfg, node_count=int(value))
    if axis == "range":
        return replace(cfg, range_min=float(value), range_max=float(value))
    if axis == "pause":
        return replace(cfg, pause=float(value))
    raise ConfigError(f"axis: unknown value {axis!r}, expected one of {SWEEP_AXES}")


def sweep(
    base: ScenarioConfig,
    axis: str,
    values: Sequence[float],
    seeds: Sequence[int],
) -> list[SweepRow]:
    """Run the values x seeds grid and aggregate summaries per axis value."""
    if not values or not seeds:
        raise ConfigError("sweep needs non-empty values and seeds")
    rows: list[SweepRow] = []
    for value in values:
        cell = apply_axis(base, axis, value)
        summaries = [run(replace(cell, seed=s)).summary for s in seeds]
        stats = []
        for metric, attr in _SUMMARY_METRICS:
            xs = [float(getattr(s, attr)) for s in summaries]
            mean = statistics.fmean(xs)
            std = statistics.stdev(xs) if len(xs) > 1 else 0.0
            stats.append((metric, mean, std))
        rows.append(SweepRow(base.algorithm, axis, float(value), len(seeds), tuple(stats)))
    return rows
