import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavewigner.moyal_rhs import LindbladParams, PolynomialPotential, build_evolution_operator
from wavewigner.oracle import (
    DenseRhs,
    MomentOdeSystem,
    UnsupportedOracleError,
    cross_discretization,
    dense_reference_evolve,
    fd_weights,
    moment_ode_solve,
    relative_l2,
    state_moments,
)
from wavewigner.phase_space import PhaseSpaceGrid, WignerState, coherent_wavefunction, weyl_transform

GRID = PhaseSpaceGrid(-8, 8, -8, 8, 128, 128)


def test_fd_weights_known_values():
    o, w = fd_weights(1)
    np.testing.assert_allclose(w, [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12], atol=1e-14)
    o, w = fd_weights(2)
    np.testing.assert_allclose(w, [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12], atol=1e-13)


@pytest.mark.parametrize("n", range(1, 8))
def test_fd_weights_exact_on_polynomials(n):
    o, w = fd_weights(n)
    for k in range(n + 4):
        expected = 0.0 if k != n else float(np.prod(range(1, n + 1)))
        assert np.dot(w, o.astype(float) ** k) == pytest.approx(expected, abs=1e-8 * max(1, abs(w).sum()))


def test_harmonic_rotation_moments():
    system = MomentOdeSystem.from_potential((0, 0, 0.5), 1.0)
    t = np.linspace(0, 10, 41)
    sol = moment_ode_solve(system, (1.0, 0.0, 1.5, 0.0, 0.5), t)
    assert np.max(np.abs(sol[:, 0] - np.cos(t))) < 1e-8
    assert np.max(np.abs(sol[:, 1] + np.sin(t))) < 1e-8


@given(D=st.floats(0.01, 2.0), p2=st.floats(0.1, 3.0))
def test_diffusion_first_integral(D, p2):
    system = MomentOdeSystem.from_potential((0.0,), 1.0, 0.0, D)
    t = np.linspace(0, 4, 9)
    sol = moment_ode_solve(system, (0.2, 0.3, 1.0, 0.0, p2), t)
    np.testing.assert_allclose(sol[:, 4], p2 + 2 * D * t, rtol=1e-12, atol=1e-12)


def test_stationary_limit():
    system = MomentOdeSystem.from_potential((0, 0, 0.5), 1.0, 0.1, 0.1)
    late = moment_ode_solve(system, (1.0, 0.0, 1.5, 0.0, 0.5), [200.0])[0]
    stat = system.stationary()
    # for k = m = 1: <q^2> = <p^2> = D / (2 gamma), <qp> = 0
    np.testing.assert_allclose(stat, [0, 0, 0.5, 0, 0.5], atol=1e-12)
    np.testing.assert_allclose(late, stat, atol=1e-7)


def test_moment_equations_match_hand_derivation():
    m, k, g, D = 2.0, 3.0, 0.2, 0.4
    A, b = MomentOdeSystem.from_potential((0, 0, k / 2), m, g, D).matrix()
    x = np.array([0.3, -0.7, 1.1, 0.2, 0.9])
    q, p, qq, qp, pp = x
    expected = [p / m, -k * q - 2 * g * p, 2 * qp / m, pp / m - k * qq - 2 * g * qp, -2 * k * qp - 4 * g * pp + 2 * D]
    np.testing.assert_allclose(A @ x + b, expected, atol=1e-14)


def test_linear_force_term():
    system = MomentOdeSystem.from_potential((0, 0.5), 1.0)
    t = np.array([0.0, 1.0, 2.0])
    sol = moment_ode_solve(system, (0, 0, 0, 0, 0), t)
    np.testing.assert_allclose(sol[:, 1], -0.5 * t, atol=1e-12)
    np.testing.assert_allclose(sol[:, 0], -0.25 * t**2, atol=1e-12)


def test_non_quadratic_rejected():
    with pytest.raises(UnsupportedOracleError):
        MomentOdeSystem.from_potential((0, 0, 0, 0, 1), 1.0)


def test_state_moments_normalized():
    W = weyl_transform(coherent_wavefunction(GRID, 1.0, -0.5), GRID)
    mom = state_moments(W * 3.0)
    np.testing.assert_allclose(mom, [1.0, -0.5, 1.5, -0.5, 0.75], atol=1e-6)


def test_dense_harmonic_period():
    grid = GRID.refined(256, 256)
    W = weyl_transform(coherent_wavefunction(grid, 1.0), grid)
    traj = dense_reference_evolve(W, (0, 0, 0.5), 1.0, 1.0, 2 * np.pi)
    assert relative_l2(traj.final.values, W.values) < 1e-3


def test_dense_free_shear():
    grid = PhaseSpaceGrid(-8, 8, -4, 4, 256, 64)
    W = weyl_transform(coherent_wavefunction(grid, -2.0, 0.0), grid)
    T = 1.0
    final = dense_reference_evolve(W, (0.0,), 1.0, 1.0, T).final.values
    # exact solution W(q - p T, p) sampled column by column
    Q, P = np.meshgrid(grid.q, grid.p, indexing="ij")
    a = np.exp(-((Q - P * T + 2.0) ** 2) - P**2) / np.pi
    assert np.max(np.abs(final - a)) < 1e-4


def test_dense_size_guard():
    big = PhaseSpaceGrid(-8, 8, -8, 8, 1024, 64)
    with pytest.raises(ValueError):
        dense_reference_evolve(WignerState(big, np.zeros((1024, 64))), (0.0,), 1.0, 1.0, 0.1)


def test_dense_rhs_conserves_and_is_quantum():
    rhs = DenseRhs(GRID, (0, 0, 0, 0, 0.1), 1.0, 1.0, 0.1, 0.2)
    W = weyl_transform(coherent_wavefunction(GRID, 0.5), GRID).values
    assert abs(rhs(W).sum() * GRID.cell) < 1e-12
    assert [k for k, _ in rhs.terms] == [1, 3]


def test_cross_discretization_small():
    grid = PhaseSpaceGrid(-5, 5, -12, 12, 64, 64)
    W = weyl_transform(coherent_wavefunction(grid, 0.0, 1.0), grid, check=False)
    op = build_evolution_operator(PolynomialPotential((0, 0, 0, 0, 0.1)), 1.0, 1.0, LindbladParams(), grid)
    out = cross_discretization(W, op, 0.2, samples=4)
    assert len(out["times"]) == 4 and out["times"][-1] == pytest.approx(0.2)
    assert out["steps"] % 4 == 0
    assert np.all(out["differences"] < 5e-2)
