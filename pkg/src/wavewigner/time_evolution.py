"""RK4 integration of the Wigner generator and the resolution-level cutoff sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil
from typing import Callable

import numpy as np

from .moyal_rhs import EvolutionOperator, stable_dt
from .phase_space import (
    BOUNDARY_MASS_THRESHOLD,
    PhaseSpaceGrid,
    WignerState,
    check_coverage,
    moments,
    negativity_volume,
    normalization,
    purity,
)

log = logging.getLogger(__name__)


class StabilityError(RuntimeError):
    pass


class CutoffNotReachedError(RuntimeError):
    def __init__(self, message, differences):
        super().__init__(message)
        self.differences = differences


@dataclass
class EvolutionConfig:
    t_final: float
    dt: float | str = "auto"
    epsilon_level: float = 1e-4
    min_levels: int = 5
    max_levels: int = 8
    snapshot_stride: int = 0
    diagnostics_stride: int = 1
    coverage_threshold: float = BOUNDARY_MASS_THRESHOLD
    check_coverage: bool = True

    def __post_init__(self):
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.dt != "auto" and not float(self.dt) > 0:
            raise ValueError("dt must be positive or 'auto'")
        if not 1 <= self.min_levels <= self.max_levels <= 12:
            raise ValueError("need 1 <= min_levels <= max_levels <= 12")


# the stability bound is within a few percent of the true spectral radius
AUTO_DT_FRACTION = 0.8

DIAGNOSTIC_FIELDS = ("t", "norm", "purity", "negativity", "q_mean", "p_mean", "q_var", "p_var", "fock_norm")


def diagnostics(state: WignerState) -> dict[str, float]:
    m = moments(state, 2)
    norm = m[(0, 0)]
    qm, pm = m[(1, 0)] / norm, m[(0, 1)] / norm
    return {
        "t": state.time,
        "norm": norm,
        "purity": purity(state),
        "negativity": negativity_volume(state),
        "q_mean": qm,
        "p_mean": pm,
        "q_var": m[(2, 0)] / norm - qm**2,
        "p_var": m[(0, 2)] / norm - pm**2,
        "fock_norm": float(np.sum(state.values**2) * state.grid.cell),
    }


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def final(self) -> WignerState:
        return self.snapshots[-1]

    def series(self, name: str) -> np.ndarray:
        return np.array([d[name] for d in self.diagnostics])


def resolve_dt(config: EvolutionConfig, op: EvolutionOperator) -> tuple[float, int]:
    """Step and step count that land exactly on t_final."""
    if config.t_final == 0:
        return 0.0, 0
    dt = AUTO_DT_FRACTION * stable_dt(op) if config.dt == "auto" else float(config.dt)
    steps = max(1, ceil(config.t_final / dt - 1e-9))
    return config.t_final / steps, steps


def _rk4(f, W: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(W)
    k2 = f(W + 0.5 * dt * k1)
    k3 = f(W + 0.5 * dt * k2)
    k4 = f(W + dt * k3)
    return W + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_growth(old: np.ndarray, new: np.ndarray, t: float) -> None:
    before = np.max(np.abs(old))
    after = np.max(np.abs(new))
    if not np.isfinite(after) or (before > 0 and after > 10 * before):
        raise StabilityError(f"max|W| grew from {before:.3e} to {after:.3e} at t={t:.6g}; reduce dt")


def step_rk4(state: WignerState, op: EvolutionOperator, dt: float) -> WignerState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    new = _rk4(op.apply, state.values, dt)
    _check_growth(state.values, new, state.time + dt)
    return state.with_values(new, state.time + dt)


def evolve(initial: WignerState, op: EvolutionOperator, config: EvolutionConfig,
           progress: Callable[[dict], None] | None = None) -> Trajectory:
    """Integrate from ``initial.time`` for ``config.t_final``.

    The initial and final states are always stored; intermediate snapshots
    every ``snapshot_stride`` steps (0 disables them). Diagnostics are taken
    every ``diagnostics_stride`` steps and at the end; the boundary guard is
    checked at the same points.
    """
    if initial.grid != op.grid:
        raise ValueError("initial state grid does not match operator grid")
    dt, steps = resolve_dt(config, op)
    traj = Trajectory(snapshots=[initial], diagnostics=[diagnostics(initial)])
    W = initial.values
    t0 = initial.time
    dstride = max(1, config.diagnostics_stride)
    for n in range(1, steps + 1):
        new = _rk4(op.apply, W, dt)
        t = t0 + n * dt
        _check_growth(W, new, t)
        W = new
        last = n == steps
        if config.snapshot_stride and n % config.snapshot_stride == 0 and not last:
            traj.snapshots.append(initial.with_values(W.copy(), t))
        if n % dstride == 0 or last:
            state = initial.with_values(W, t)
            if config.check_coverage:
                check_coverage(state, config.coverage_threshold)
            rec = diagnostics(state)
            traj.diagnostics.append(rec)
            if progress is not None:
                progress(rec)
    if steps:
        traj.snapshots.append(initial.with_values(W, t0 + steps * dt))
    return traj


def restrict(fine: WignerState, coarse_grid: PhaseSpaceGrid) -> np.ndarray:
    """Dyadic subsampling of a finer state onto ``coarse_grid``."""
    fq = fine.grid.nq // coarse_grid.nq
    fp = fine.grid.np // coarse_grid.np
    return fine.values[::fq, ::fp]


def level_refinement_run(
    initial: Callable[[PhaseSpaceGrid], WignerState],
    op_builder: Callable[[PhaseSpaceGrid], EvolutionOperator],
    base_grid: PhaseSpaceGrid,
    config: EvolutionConfig,
) -> tuple[int, list[tuple[int, float]]]:
    """Evolve at J = min_levels.. per axis and stop at the first N with ||W^{N+1} - W^N|| <= eps.

    The norm is sqrt(sum W^2 dq dp) on the coarser grid. Returns the chosen N
    and the list of (N, difference) measured so far.
    """
    eps = config.epsilon_level
    if np.isinf(eps):
        return config.min_levels, []
    diffs: list[tuple[int, float]] = []
    prev = None
    for J in range(config.min_levels, config.max_levels + 1):
        grid = base_grid.refined(2**J, 2**J)
        final = evolve(initial(grid), op_builder(grid), config).final
        if prev is not None:
            coarse = prev.grid
            diff = restrict(final, coarse) - prev.values
            d = float(np.sqrt(np.sum(diff**2) * coarse.cell))
            diffs.append((J - 1, d))
            log.info("level %d: ||W^%d - W^%d|| = %.3e", J - 1, J, J - 1, d)
            if d <= eps:
                return J - 1, diffs
        prev = final
    raise CutoffNotReachedError(
        f"no level in {config.min_levels}..{config.max_levels} met epsilon={eps:g}; "
        f"last difference {diffs[-1][1] if diffs else float('nan'):.3e}",
        diffs,
    )
