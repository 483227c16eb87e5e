"""Deterministic MANET clustering simulator.

Probability-gated weighted clustering with event-driven maintenance, four
classic cluster-head election baselines, random-waypoint mobility, a battery
model, cluster-based CBR traffic, and a seeded metrics/sweep pipeline.
"""

__version__ = "0.1.0"

from .baselines import WcaAttrs, WcaParams, highest_degree, lowest_id, mwis, wca
from .clustering import (
    ChprobParams,
    ClusterAssignment,
    NodeAttrs,
    OrphanState,
    WeightParams,
    admit_new_node,
    cluster_setup,
    compute_chprob,
    compute_weight,
    maintain_on_move,
    mark_gateways,
    reelect_if_below_threshold,
)
from .energy import EnergyModel, EnergyState, Role, consume_step, consumed_power
from .engine import (
    ALGORITHMS,
    ConfigError,
    MetricsRecord,
    RunResult,
    RunSummary,
    ScenarioConfig,
    connectivity,
    run,
    sweep,
)
from .mobility import (
    Kinematics,
    NeighborGraph,
    Position,
    build_neighbor_graph,
    initial_kinematics,
    mean_speed,
    rwp_step,
)
from .traffic import (
    FlowConfig,
    FlowState,
    Packet,
    compute_delay,
    compute_pdr,
    init_flows,
    route_next_hop,
    step_traffic,
)

__all__ = [name for name in dir() if not name.startswith("_")]
