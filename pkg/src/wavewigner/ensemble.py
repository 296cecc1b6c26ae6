"""Weighted mixtures of partial Wigner functions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .moyal_rhs import EvolutionOperator, PolynomialPotential
from .phase_space import WignerState, normalization
from .time_evolution import EvolutionConfig, Trajectory, evolve


class NormalizationError(ValueError):
    pass


WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EnsembleMember:
    weight: float
    state: WignerState
    potential: PolynomialPotential | None = None


@dataclass(frozen=True)
class WignerEnsemble:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        weights = [m.weight for m in self.members]
        if any(w < 0 for w in weights):
            raise NormalizationError("ensemble weights must be non-negative")
        if abs(sum(weights) - 1.0) > WEIGHT_TOLERANCE:
            raise NormalizationError(f"ensemble weights must satisfy Σ_i w_i = 1, got {sum(weights)!r}")
        grids = {m.state.grid for m in self.members}
        if len(grids) != 1:
            raise ValueError("all ensemble members must share one grid")

    @property
    def grid(self):
        return self.members[0].state.grid

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    @classmethod
    def from_states(cls, weights, states, potentials=None, normalize_members=True) -> "WignerEnsemble":
        """Build from parallel sequences; each partial function is rescaled to unit mass."""
        potentials = potentials or [None] * len(states)
        members = []
        for w, s, u in zip(weights, states, potentials):
            if normalize_members:
                s = s.with_values(s.values / normalization(s))
            members.append(EnsembleMember(float(w), s, u))
        return cls(tuple(members))


def mix(ensemble: WignerEnsemble) -> WignerState:
    first = ensemble.members[0].state
    values = np.zeros_like(first.values)
    for m in ensemble.members:
        values = values + m.weight * m.state.values
    return first.with_values(values)


def fock_norm(ensemble: WignerEnsemble) -> float:
    """sum_i int W_i^2 dq dp over the one-particle sectors (no vacuum component)."""
    g = ensemble.grid
    return float(sum(np.sum(m.state.values**2) for m in ensemble.members) * g.cell)


def evolve_ensemble(ensemble: WignerEnsemble, operators, config: EvolutionConfig) -> list[Trajectory]:
    """Evolve every member under its own operator; weights do not change.

    ``operators`` is either one EvolutionOperator shared by all members or a
    sequence with one operator per member.
    """
    if isinstance(operators, EvolutionOperator):
        operators = [operators] * len(ensemble.members)
    if len(operators) != len(ensemble.members):
        raise ValueError("need one operator per ensemble member")
    return [evolve(m.state, op, config) for m, op in zip(ensemble.members, operators)]


def ensemble_at(ensemble: WignerEnsemble, trajectories: list[Trajectory], index: int = -1) -> WignerEnsemble:
    """The ensemble whose members are the snapshots ``index`` of ``trajectories``."""
    return WignerEnsemble(tuple(
        EnsembleMember(m.weight, t.snapshots[index], m.potential)
        for m, t in zip(ensemble.members, trajectories)
    ))
