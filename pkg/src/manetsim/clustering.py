"""Probability-gated weighted clustering: weights, CHprob, setup, maintenance.

The defining property of the scheme: node weights are computed from per-node
attributes only (range, rate, mobility, consumed power, head probability), so
they are known before any clustering pass starts, and head elections run only
on named events (setup, arrival, boundary exit, head departure, threshold
breach) instead of on every topology change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .energy import EnergyState, Role
from .mobility import NeighborGraph


@dataclass(frozen=True)
class WeightParams:
    """Coefficients of the election weight, smaller weight wins.

    ``include_chprob_term`` subtracts the head probability from the sum, so
    probable heads rank better; disabling it reproduces the plain four-term
    sum.  ``normalize_terms`` divides each term by its scenario maximum so the
    sum is dimensionless; off by default to match the raw-magnitude reading.
    """

    w1: float = 0.2
    w2: float = 0.2
    w3: float = 0.05
    w4: float = 0.05
    include_chprob_term: bool = True
    normalize_terms: bool = False
    tr_max: float = 200.0
    tx_max: float = 0.02
    mv_max: float = 100.0
    pv_max: float = 80.0

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "w3", "w4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ChprobParams:
    """Base probability, floor, and range normalizer for head probability."""

    c_prob: float = 0.05
    p_min: float = 1e-4
    tr_max: float = 200.0
    normalize_range: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.p_min < self.c_prob <= 1:
            raise ValueError(
                f"need 0 < p_min < c_prob <= 1, got p_min={self.p_min} c_prob={self.c_prob}"
            )
        if self.tr_max <= 0:
            raise ValueError("tr_max must be > 0")


@dataclass(frozen=True)
class NodeAttrs:
    """Per-node election inputs: range, rate, mobility, consumed power, chprob."""

    tr: float
    tx: float
    mv: float
    pv: float
    chprob: float


class ClusterAssignment:
    """Partition of nodes into head-led clusters.

    Every member names a head that exists and leads; heads lead their own
    cluster.  ``epoch`` counts operations that changed the head set.
    """

    __slots__ = ("_role", "_head_of", "gateways", "epoch")

    def __init__(
        self,
        role: Optional[Mapping[int, Role]] = None,
        head_of: Optional[Mapping[int, int]] = None,
        gateways: Optional[Iterable[int]] = None,
        epoch: int = 0,
    ):
        self._role: dict[int, Role] = dict(role or {})
        self._head_of: dict[int, int] = dict(head_of or {})
        self.gateways: set[int] = set(gateways or ())
        self.epoch = epoch

    @classmethod
    def all_unassigned(cls, ids: Iterable[int]) -> "ClusterAssignment":
        return cls(role={v: Role.UNASSIGNED for v in ids})

    def copy(self) -> "ClusterAssignment":
        return ClusterAssignment(self._role, self._head_of, self.gateways, self.epoch)

    def __contains__(self, v: int) -> bool:
        return v in self._role

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        return (
            self._role == other._role
            and self._head_of == other._head_of
            and self.gateways == other.gateways
            and self.epoch == other.epoch
        )

    def __repr__(self) -> str:
        return (
            f"ClusterAssignment(heads={sorted(self.ch_set())}, "
            f"members={len(self._head_of)}, epoch={self.epoch})"
        )

    def nodes(self) -> list[int]:
        return sorted(self._role)

    def role_of(self, v: int) -> Role:
        return self._role[v]

    def is_ch(self, v: int) -> bool:
        return self._role.get(v) is Role.CH

    def head_of(self, v: int) -> Optional[int]:
        """The head a member belongs to; a head belongs to itself."""
        if self._role.get(v) is Role.CH:
            return v
        return self._head_of.get(v)

    def heads(self) -> list[int]:
        return sorted(v for v, r in self._role.items() if r is Role.CH)

    def ch_set(self) -> frozenset[int]:
        return frozenset(v for v, r in self._role.items() if r is Role.CH)

    def members_by_head(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for m in sorted(self._head_of):
            out.setdefault(self._head_of[m], []).append(m)
        return out

    def set_ch(self, v: int) -> None:
        self._role[v] = Role.CH
        self._head_of.pop(v, None)

    def set_member(self, v: int, head: int) -> None:
        self._role[v] = Role.MEMBER
        self._head_of[v] = head

    def set_unassigned(self, v: int) -> None:
        self._role[v] = Role.UNASSIGNED
        self._head_of.pop(v, None)

    def remove(self, v: int) -> None:
        self._role.pop(v, None)
        self._head_of.pop(v, None)
        self.gateways.discard(v)


@dataclass
class OrphanState:
    """Per-node counters of consecutive ticks spent with an unreachable head.

    ``received`` holds ids that got a packet last tick; hearing traffic resets
    the countdown toward self-declaration.
    """

    timeout: int = 5
    ticks: dict[int, int] = field(default_factory=dict)
    received: set[int] = field(default_factory=set)


def compute_chprob(e: EnergyState, tr: float, p: ChprobParams) -> float:
    """Head probability from residual energy share and transmission range.

    The range term is divided by ``tr_max`` unless ``normalize_range`` is off;
    the result is floored at ``p_min``.
    """
    if tr > p.tr_max:
        raise ValueError(f"tr {tr} exceeds tr_max {p.tr_max}")
    range_term = tr / p.tr_max if p.normalize_range else tr
    return max(p.p_min, p.c_prob * (e.e_residual / e.e_max) + range_term)


def compute_weight(a: NodeAttrs, w: WeightParams) -> float:
    """Election weight of one node; the minimum-weight node wins."""
    tr, tx, mv, pv = a.tr, a.tx, a.mv, a.pv
    if w.normalize_terms:
        tr /= w.tr_max
        tx /= w.tx_max
        mv /= w.mv_max
        pv /= w.pv_max
    total = w.w1 * tr + w.w2 * tx + w.w3 * mv + w.w4 * pv
    if w.include_chprob_term:
        total -= a.chprob
    return total


def _weights(g: NeighborGraph, attrs: Mapping[int, NodeAttrs], w: WeightParams) -> dict[int, float]:
    return {v: compute_weight(attrs[v], w) for v in g.ids}


def _greedy_min_weight(
    g: NeighborGraph,
    subset: Iterable[int],
    weights: Mapping[int, float],
    max_cluster_size: Optional[int] = None,
) -> list[tuple[int, list[int]]]:
    """Min-weight-first head election restricted to ``subset``.

    The minimum-weight unassigned node (ties to the lowest id) becomes a head
    and claims its still-unassigned neighbors inside the subset; repeats until
    the subset is covered.  Equivalent to re-running argmin each round because
    weights do not depend on the covering state.
    """
    unassigned = set(subset)
    order = sorted(unassigned, key=lambda v: (weights[v], v))
    clusters: list[tuple[int, list[int]]] = []
    for v in order:
        if v not in unassigned:
            continue
        unassigned.discard(v)
        members = [n for n in g.neighbors(v) if n in unassigned]
        if max_cluster_size is not None:
            members = members[: max(max_cluster_size - 1, 0)]
        for m in members:
            unassigned.discard(m)
        clusters.append((v, members))
    return clusters


def cluster_setup(
    g: NeighborGraph,
    attrs: Mapping[int, NodeAttrs],
    w: WeightParams,
    max_cluster_size: Optional[int] = None,
) -> ClusterAssignment:
    """Initial clustering: weights are known up front, min weight leads."""
    weights = _weights(g, attrs, w)
    assign = ClusterAssignment()
    for head, members in _greedy_min_weight(g, g.ids, weights, max_cluster_size):
        assign.set_ch(head)
        for m in members:
            assign.set_member(m, head)
    return assign


def _best_ch_neighbor(
    assign: ClusterAssignment,
    g: NeighborGraph,
    v: int,
    attrs: Mapping[int, NodeAttrs],
) -> Optional[int]:
    # Strongest audible head: highest chprob, ties to the lowest id.
    best = None
    best_key = None
    for n in g.neighbors(v):
        if n in assign and assign.is_ch(n):
            key = (attrs[n].chprob, -n)
            if best_key is None or key > best_key:
                best, best_key = n, key
    return best


def _rehome(
    assign: ClusterAssignment,
    g: NeighborGraph,
    attrs: Mapping[int, NodeAttrs],
    weights: Mapping[int, float],
    orphans: Iterable[int],
) -> None:
    """Re-place nodes that lost their cluster: join an audible head, else run
    a local min-weight election among the leftovers."""
    pending = []
    for m in sorted(orphans):
        target = _best_ch_neighbor(assign, g, m, attrs)
        if target is not None:
            assign.set_member(m, target)
        else:
            pending.append(m)
    for head, members in _greedy_min_weight(g, pending, weights):
        assign.set_ch(head)
        for m in members:
            assign.set_member(m, head)


def admit_new_node(
    assign: ClusterAssignment,
    g: NeighborGraph,
    new_id: int,
    attrs: Mapping[int, NodeAttrs],
    w: WeightParams,
) -> ClusterAssignment:
    """Handle one arriving node without a global re-election.

    An unconnected arrival forms its own singleton cluster.  Otherwise the
    arrival is compared against the strongest audible head: a strictly higher
    chprob takes that cluster over (the old head demotes to member), a lower
    or equal chprob joins as a member.  Cluster members that cannot hear the
    new head are re-homed; no other cluster is touched.
    """
    if new_id in assign:
        raise ValueError(f"node {new_id} is already assigned")
    out = assign.copy()
    before = out.ch_set()
    ch_nbrs = [n for n in g.neighbors(new_id) if n in out and out.is_ch(n)]
    if not ch_nbrs:
        out.set_ch(new_id)
    else:
        target = max(ch_nbrs, key=lambda v: (attrs[v].chprob, -v))
        if attrs[new_id].chprob > attrs[target].chprob:
            old_members = out.members_by_head().get(target, [])
            out.set_ch(new_id)
            out.set_member(target, new_id)
            leftovers = []
            for m in old_members:
                if g.has_edge(m, new_id):
                    out.set_member(m, new_id)
                else:
                    leftovers.append(m)
            if leftovers:
                _rehome(out, g, attrs, _weights(g, attrs, w), leftovers)
        else:
            out.set_member(new_id, target)
    if out.ch_set() != before:
        out.epoch += 1
    return out


def maintain_on_move(
    assign: ClusterAssignment,
    g: NeighborGraph,
    attrs: Mapping[int, NodeAttrs],
    w: WeightParams,
    state: OrphanState,
) -> ClusterAssignment:
    """Per-tick cluster maintenance after a graph rebuild.

    A member that can no longer hear its head joins another audible head if
    one exists.  If its whole cluster lost the head (the head died or kept no
    member in range), the stranded group re-clusters locally with the usual
    min-weight election.  Otherwise the member waits out ``state.timeout``
    ticks; hearing no packets in that time, it declares itself a head.
    """
    # Group members that lost contact with their head, by former head.
    stranded: dict[int, list[int]] = {}
    intact: dict[int, list[int]] = {}
    for m in sorted(assign.nodes()):
        if assign.role_of(m) is not Role.MEMBER:
            continue
        h = assign.head_of(m)
        if h in assign and assign.is_ch(h) and m in g and h in g and g.has_edge(m, h):
            intact.setdefault(h, []).append(m)
        else:
            stranded.setdefault(h, []).append(m)

    if not stranded:
        for m in list(state.ticks):
            state.ticks.pop(m, None)
        return assign

    out = assign.copy()
    before = out.ch_set()
    weights: Optional[dict[int, float]] = None
    for h in sorted(stranded):
        group = stranded[h]
        head_present = h in out and out.is_ch(h)
        departed = (not head_present) or not intact.get(h)
        pending = []
        for m in group:
            target = _best_ch_neighbor(out, g, m, attrs)
            if target is not None:
                out.set_member(m, target)
                state.ticks.pop(m, None)
            else:
                pending.append(m)
        if departed:
            if weights is None:
                weights = _weights(g, attrs, w)
            for head, members in _greedy_min_weight(g, pending, weights):
                out.set_ch(head)
                state.ticks.pop(head, None)
                for m in members:
                    out.set_member(m, head)
                    state.ticks.pop(m, None)
        else:
            for m in pending:
                if m in state.received:
                    state.ticks[m] = 0
                    continue
                state.ticks[m] = state.ticks.get(m, 0) + 1
                if state.ticks[m] > state.timeout:
                    out.set_ch(m)
                    state.ticks.pop(m, None)

    # Timers are meaningful only for members still cut off from their head.
    for m in list(state.ticks):
        if m not in out or out.role_of(m) is not Role.MEMBER:
            state.ticks.pop(m, None)
        else:
            h = out.head_of(m)
            if h in out and out.is_ch(h) and m in g and h in g and g.has_edge(m, h):
                state.ticks.pop(m, None)

    if out.ch_set() != before:
        out.epoch += 1
    return out


def reelect_if_below_threshold(
    assign: ClusterAssignment,
    g: NeighborGraph,
    attrs: Mapping[int, NodeAttrs],
    w: WeightParams,
    p: ChprobParams,
) -> ClusterAssignment:
    """Rotate out heads whose chprob fell below the floor.

    The min-weight member still in range takes over; the failing head demotes
    to member of the new head and is excluded from candidacy.  A head with no
    reachable member keeps its singleton cluster.  With every head at or
    above the floor the assignment is returned unchanged.
    """
    failing = [
        h for h in assign.heads() if attrs[h].chprob < p.p_min
    ]
    if not failing:
        return assign

    out = assign
    before = assign.ch_set()
    weights: Optional[dict[int, float]] = None
    for h in failing:
        members = out.members_by_head().get(h, [])
        candidates = [m for m in members if m in g and h in g and g.has_edge(m, h)]
        if not candidates:
            continue
        if weights is None:
            weights = _weights(g, attrs, w)
        if out is assign:
            out = assign.copy()
        new_head = min(candidates, key=lambda v: (weights[v], v))
        out.set_ch(new_head)
        out.set_member(h, new_head)
        leftovers = []
        for m in members:
            if m == new_head:
                continue
            if g.has_edge(m, new_head):
                out.set_member(m, new_head)
            else:
                leftovers.append(m)
        if leftovers:
            _rehome(out, g, attrs, weights, leftovers)
    if out.ch_set() != before:
        out.epoch += 1
    return out


def mark_gateways(assign: ClusterAssignment, g: NeighborGraph) -> None:
    """Flag non-head nodes that can hear two or more heads."""
    gws: set[int] = set()
    for v in assign.nodes():
        if assign.is_ch(v) or v not in g:
            continue
        audible = 0
        for n in g.neighbors(v):
            if n in assign and assign.is_ch(n):
                audible += 1
                if audible >= 2:
                    gws.add(v)
                    break
    assign.gateways = gws


def is_valid_clustering(assign: ClusterAssignment, g: NeighborGraph) -> bool:
    """Every member names an existing head and roles are exclusive."""
    for v in assign.nodes():
        role = assign.role_of(v)
        if role is Role.MEMBER:
            h = assign.head_of(v)
            if h is None or h not in assign or not assign.is_ch(h):
                return False
        elif role is Role.CH:
            if assign.head_of(v) != v:
                return False
    return True
