import numpy as np
import pytest

from wavewigner.moyal_rhs import LindbladParams, PolynomialPotential, build_evolution_operator, stable_dt
from wavewigner.oracle import MomentOdeSystem, moment_ode_solve, state_moments
from wavewigner.phase_space import (
    DomainCoverageError,
    PhaseSpaceGrid,
    WignerState,
    coherent_wavefunction,
    normalization,
    purity,
    weyl_transform,
)
from wavewigner.time_evolution import (
    AUTO_DT_FRACTION,
    CutoffNotReachedError,
    EvolutionConfig,
    StabilityError,
    evolve,
    level_refinement_run,
    resolve_dt,
    restrict,
    step_rk4,
)

GRID = PhaseSpaceGrid(-8, 8, -8, 8, 128, 128)
HARMONIC = PolynomialPotential.harmonic()
CLOSED = LindbladParams()


def coherent(grid=GRID, q0=1.0, p0=0.0):
    return weyl_transform(coherent_wavefunction(grid, q0, p0), grid)


@pytest.fixture(scope="module")
def harmonic_op():
    return build_evolution_operator(HARMONIC, 1.0, 1.0, CLOSED, GRID)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(-1.0)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, dt=0.0)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, min_levels=6, max_levels=5)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, max_levels=13)


def test_resolve_dt_lands_on_t_final(harmonic_op):
    dt, steps = resolve_dt(EvolutionConfig(1.0), harmonic_op)
    assert dt * steps == pytest.approx(1.0)
    assert dt <= AUTO_DT_FRACTION * stable_dt(harmonic_op) * (1 + 1e-12)
    assert resolve_dt(EvolutionConfig(1.0, dt=0.3), harmonic_op) == (pytest.approx(0.25), 4)
    assert resolve_dt(EvolutionConfig(0.0), harmonic_op) == (0.0, 0)


def test_zero_rhs_leaves_state_unchanged(rng):
    op = build_evolution_operator(PolynomialPotential((0.0,)), np.inf, 1.0, CLOSED, GRID)
    W = WignerState(GRID, rng.standard_normal((128, 128)))
    out = step_rk4(W, op, 0.1)
    np.testing.assert_array_equal(out.values, W.values)
    assert out.time == pytest.approx(0.1)


def test_single_step_rotates_first_moments(harmonic_op):
    # direct moments tolerate the grid error only through the O(dt) drift of one step
    W = coherent(q0=1.0, p0=0.5)
    dt = 1e-3
    before = state_moments(W)
    after = state_moments(step_rk4(W, harmonic_op, dt))
    c, s = np.cos(dt), np.sin(dt)
    assert abs(after[0] - (c * before[0] + s * before[1])) < 1e-9
    assert abs(after[1] - (-s * before[0] + c * before[1])) < 1e-9


def test_step_conserves_normalization(harmonic_op):
    W = coherent()
    out = step_rk4(W, harmonic_op, 0.01)
    assert abs(normalization(out) - normalization(W)) <= 1e-10


def test_rk4_global_order(harmonic_op):
    W = coherent(q0=1.0, p0=0.5)
    T = 0.2
    finals = [evolve(W, harmonic_op, EvolutionConfig(T, dt=T / n)).final.values for n in (20, 40, 80, 160)]
    e = [np.linalg.norm(finals[i] - finals[i + 1]) for i in range(3)]
    assert e[0] / e[1] == pytest.approx(16, rel=0.1)
    assert e[1] / e[2] == pytest.approx(16, rel=0.1)


def test_rk4_local_order(harmonic_op):
    W = coherent(q0=1.0, p0=0.5)

    def defect(dt):
        full = step_rk4(W, harmonic_op, dt).values
        half = step_rk4(step_rk4(W, harmonic_op, dt / 2), harmonic_op, dt / 2).values
        return np.linalg.norm(full - half)

    # local error is O(dt^5)
    assert defect(0.02) / defect(0.01) == pytest.approx(32, rel=0.1)


def test_step_rejects_bad_dt(harmonic_op):
    with pytest.raises(ValueError):
        step_rk4(coherent(), harmonic_op, 0.0)


def test_instability_is_detected(harmonic_op):
    with pytest.raises(StabilityError):
        evolve(coherent(), harmonic_op,
               EvolutionConfig(1.0, dt=20 * stable_dt(harmonic_op), check_coverage=False))


def test_harmonic_period_returns(harmonic_op):
    W = coherent()
    traj = evolve(W, harmonic_op, EvolutionConfig(2 * np.pi, diagnostics_stride=50))
    err = np.linalg.norm(traj.final.values - W.values) / np.linalg.norm(W.values)
    assert err < 1e-3
    norms = traj.series("norm")
    assert np.max(np.abs(norms - norms[0])) < 1e-6
    assert abs(traj.series("purity")[-1] - traj.series("purity")[0]) < 1e-3
    t = traj.series("t")
    assert np.all(np.diff(t) > 0) and t[-1] == pytest.approx(2 * np.pi)


def test_free_particle_spreading():
    grid = PhaseSpaceGrid(-12, 12, -6, 6, 256, 128)
    op = build_evolution_operator(PolynomialPotential((0.0,)), 1.0, 1.0, CLOSED, grid)
    W = weyl_transform(coherent_wavefunction(grid), grid)
    traj = evolve(W, op, EvolutionConfig(3.0, diagnostics_stride=10))
    t = traj.series("t")
    expected = traj.series("q_var")[0] + t**2 * traj.series("p_var")[0]
    assert np.max(np.abs(traj.series("q_var") - expected)) < 1e-4


def test_damped_oscillator_mean_momentum():
    lb = LindbladParams(0.1, 0.1)
    op = build_evolution_operator(HARMONIC, 1.0, 1.0, lb, GRID)
    W = coherent(q0=1.5)
    traj = evolve(W, op, EvolutionConfig(5.0, diagnostics_stride=25))
    system = MomentOdeSystem.from_potential(HARMONIC.coefficients, 1.0, 0.1, 0.1)
    ref = moment_ode_solve(system, state_moments(W), traj.series("t"))
    p = traj.series("p_mean")
    assert np.max(np.abs(p - ref[:, 1])) <= 1e-3 * np.max(np.abs(ref[:, 1]))
    assert traj.series("purity")[-1] < traj.series("purity")[0]


def test_dissipation_lowers_purity_at_t1():
    op = build_evolution_operator(HARMONIC, 1.0, 1.0, LindbladParams(0.2, 0.2), GRID)
    W = coherent()
    final = evolve(W, op, EvolutionConfig(1.0)).final
    assert purity(final) < purity(W)


def test_linearity_of_evolution(harmonic_op, rng):
    a = coherent(q0=1.0)
    b = coherent(q0=-1.0, p0=1.0)
    cfg = EvolutionConfig(0.3, dt=0.01)
    lhs = evolve(a * 0.3 + b * 0.7, harmonic_op, cfg).final.values
    rhs = 0.3 * evolve(a, harmonic_op, cfg).final.values + 0.7 * evolve(b, harmonic_op, cfg).final.values
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_snapshots_and_diagnostic_strides(harmonic_op):
    traj = evolve(coherent(), harmonic_op, EvolutionConfig(0.1, dt=0.01, snapshot_stride=3, diagnostics_stride=4))
    assert [round(s.time, 6) for s in traj.snapshots] == [0.0, 0.03, 0.06, 0.09, 0.1]
    assert [round(t, 6) for t in traj.series("t")] == [0.0, 0.04, 0.08, 0.1]


def test_progress_callback(harmonic_op):
    seen = []
    evolve(coherent(), harmonic_op, EvolutionConfig(0.05, dt=0.01, diagnostics_stride=2), progress=seen.append)
    assert len(seen) == 3


def test_coverage_guard_mid_run():
    grid = PhaseSpaceGrid(-5, 5, -6, 6, 128, 64)
    op = build_evolution_operator(PolynomialPotential((0.0,)), 1.0, 1.0, CLOSED, grid)
    W = weyl_transform(coherent_wavefunction(grid, 0.0, 1.5), grid)
    with pytest.raises(DomainCoverageError):
        evolve(W, op, EvolutionConfig(4.0, diagnostics_stride=5))


def test_grid_mismatch(harmonic_op):
    small = GRID.refined(64, 64)
    with pytest.raises(ValueError):
        evolve(WignerState(small, np.zeros((64, 64))), harmonic_op, EvolutionConfig(0.1))


def test_restrict_is_dyadic_subsampling():
    fine = WignerState(GRID, np.arange(128 * 128, dtype=float).reshape(128, 128))
    coarse = restrict(fine, GRID.refined(32, 64))
    assert coarse.shape == (32, 64)
    assert coarse[1, 1] == fine.values[4, 2]


# the p range fits the pi/dq momentum period from 32 points upward
BASE = PhaseSpaceGrid(-5, 5, -5, 5, 32, 32)


def _initial(grid):
    return weyl_transform(coherent_wavefunction(grid), grid)


def _builder(grid):
    return build_evolution_operator(HARMONIC, 1.0, 1.0, CLOSED, grid)


def test_level_sweep_infinite_epsilon():
    cfg = EvolutionConfig(0.5, epsilon_level=np.inf, min_levels=5, max_levels=7)
    assert level_refinement_run(_initial, _builder, BASE, cfg) == (5, [])


def test_level_sweep_zero_epsilon_reports_table():
    cfg = EvolutionConfig(0.5, epsilon_level=0.0, min_levels=5, max_levels=7)
    with pytest.raises(CutoffNotReachedError) as err:
        level_refinement_run(_initial, _builder, BASE, cfg)
    diffs = err.value.differences
    assert [n for n, _ in diffs] == [5, 6]
    assert all(d > 0 for _, d in diffs)


def test_level_sweep_differences_decrease():
    cfg = EvolutionConfig(0.5, epsilon_level=0.0, min_levels=5, max_levels=8)
    with pytest.raises(CutoffNotReachedError) as err:
        level_refinement_run(_initial, _builder, BASE, cfg)
    d = [v for _, v in err.value.differences]
    assert len(d) == 3
    assert all(a > b for a, b in zip(d, d[1:]))
