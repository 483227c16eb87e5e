"""Battery model: residual energy, role-dependent drain, consumed power."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Role(Enum):
    CH = "ch"
    MEMBER = "member"
    UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class EnergyState:
    e_residual: float
    e_max: float

    def __post_init__(self) -> None:
        if self.e_max <= 0:
            raise ValueError(f"e_max must be > 0, got {self.e_max}")
        if not 0 <= self.e_residual <= self.e_max:
            raise ValueError(
                f"e_residual {self.e_residual} outside [0, {self.e_max}]"
            )


@dataclass(frozen=True)
class EnergyModel:
    """Drain rates in watts, per-packet costs in joules.

    A cluster head must drain faster than a member, and a member at least as
    fast as an idle node.
    """

    drain_idle: float = 0.01
    drain_member: float = 0.02
    drain_ch: float = 0.1
    cost_tx: float = 0.001
    cost_rx: float = 0.001

    def __post_init__(self) -> None:
        if not self.drain_ch > self.drain_member >= self.drain_idle >= 0:
            raise ValueError(
                "drain rates must satisfy drain_ch > drain_member >= drain_idle >= 0"
            )
        if self.cost_tx < 0 or self.cost_rx < 0:
            raise ValueError("per-packet costs must be >= 0")

    def drain_for(self, role: Role) -> float:
        if role is Role.CH:
            return self.drain_ch
        if role is Role.MEMBER:
            return self.drain_member
        return self.drain_idle


def consume_step(
    s: EnergyState,
    role: Role,
    model: EnergyModel,
    dt: float,
    tx_count: int = 0,
    rx_count: int = 0,
) -> EnergyState:
    """Drain one tick of role-dependent idle power plus per-packet costs.

    Clamps at zero; exhaustion is signalled by ``e_residual == 0`` and acted
    on by the engine, not here.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    spent = model.drain_for(role) * dt + model.cost_tx * tx_count + model.cost_rx * rx_count
    return EnergyState(max(0.0, s.e_residual - spent), s.e_max)


def consumed_power(s: EnergyState) -> float:
    """Battery consumed so far, in joules."""
    return s.e_max - s.e_residual
