"""Reference solutions that do not touch the wavelet machinery.

* a dense 4th-order centered finite-difference discretization of the same
  Wigner-Moyal-Lindblad equation, integrated with its own RK4 loop;
* the closed ODE system for first and second moments, exact for quadratic U,
  solved through a matrix exponential.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, factorial
from time import perf_counter

import numpy as np
from scipy.linalg import expm

from .phase_space import WignerState
from .time_evolution import EvolutionConfig, StabilityError, Trajectory, diagnostics, evolve

MAX_DENSE_POINTS = 512


class UnsupportedOracleError(ValueError):
    pass


def fd_weights(derivative_order: int, accuracy: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Centered finite-difference weights from the Vandermonde moment system."""
    half = (derivative_order + 1) // 2 + accuracy // 2 - 1
    offsets = np.arange(-half, half + 1)
    V = np.vander(offsets.astype(float), increasing=True).T
    rhs = np.zeros(len(offsets))
    rhs[derivative_order] = factorial(derivative_order)
    return offsets, np.linalg.solve(V, rhs)


def _diff(W: np.ndarray, weights, axis: int) -> np.ndarray:
    offsets, w = weights
    out = np.zeros_like(W)
    for o, c in zip(offsets, w):
        if c != 0.0:
            # f(x + o h) sits at index i + o, so shift by -o
            out += c * np.roll(W, -int(o), axis=axis)
    return out


class DenseRhs:
    """The full right-hand side with periodic 4th-order centered differences."""

    def __init__(self, grid, potential_coefficients, mass, hbar, gamma=0.0, diffusion=0.0):
        self.grid = grid
        self.mass = float(mass)
        self.gamma = float(gamma)
        self.diffusion = float(diffusion)
        q, p = grid.q, grid.p
        coeffs = np.trim_zeros(np.asarray(potential_coefficients, float), "b")
        self.stencils = {n: fd_weights(n) for n in (1, 2, 3, 4, 5, 6, 7)}
        self.terms = []
        ell = 0
        while coeffs.size and 2 * ell + 1 <= len(coeffs) - 1:
            k = 2 * ell + 1
            dU = np.polynomial.polynomial.polyder(coeffs, k)
            pref = (-1) ** ell * (hbar / 2) ** (2 * ell) / factorial(k)
            self.terms.append((k, pref * np.polynomial.polynomial.polyval(q, dU)))
            ell += 1
        self.p = p

    def d(self, W, n, axis):
        spacing = self.grid.dq if axis == 0 else self.grid.dp
        return _diff(W, self.stencils[n], axis) / spacing**n

    def __call__(self, W: np.ndarray) -> np.ndarray:
        out = np.zeros_like(W)
        if np.isfinite(self.mass):
            out -= (self.p / self.mass)[None, :] * self.d(W, 1, 0)
        for k, c in self.terms:
            out += c[:, None] * self.d(W, k, 1)
        if self.gamma:
            out += 2 * self.gamma * self.d(self.p[None, :] * W, 1, 1)
        if self.diffusion:
            out += self.diffusion * self.d(W, 2, 1)
        return out

    def rate_bound(self) -> float:
        theta = np.linspace(0, np.pi, 1025)
        def sym(n):
            o, w = self.stencils[n]
            return np.max(np.abs(np.exp(1j * np.outer(theta, o)) @ w))
        g = self.grid
        r = 0.0
        if np.isfinite(self.mass):
            r += np.max(np.abs(self.p)) / self.mass * sym(1) / g.dq
        for k, c in self.terms:
            r += np.max(np.abs(c)) * sym(k) / g.dp**k
        if self.gamma:
            r += 2 * self.gamma * (np.max(np.abs(self.p)) * sym(1) / g.dp + 1)
        if self.diffusion:
            r += self.diffusion * sym(2) / g.dp**2
        return float(r)


def dense_reference_evolve(initial: WignerState, potential_coefficients, mass, hbar, t_final, dt="auto",
                           gamma=0.0, diffusion=0.0, record_every: int = 0) -> Trajectory:
    g = initial.grid
    if g.nq > MAX_DENSE_POINTS or g.np > MAX_DENSE_POINTS:
        raise ValueError(f"dense reference is limited to {MAX_DENSE_POINTS} points per axis")
    rhs = DenseRhs(g, potential_coefficients, mass, hbar, gamma, diffusion)
    if dt == "auto":
        dt = 0.8 * 2.5 / rhs.rate_bound()
    steps = max(1, ceil(t_final / float(dt) - 1e-9)) if t_final > 0 else 0
    h = t_final / steps if steps else 0.0
    W = initial.values.copy()
    traj = Trajectory(snapshots=[initial], diagnostics=[diagnostics(initial)])
    for n in range(1, steps + 1):
        k1 = rhs(W)
        k2 = rhs(W + 0.5 * h * k1)
        k3 = rhs(W + 0.5 * h * k2)
        k4 = rhs(W + h * k3)
        new = W + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        big = np.max(np.abs(W))
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > 10 * big:
            raise StabilityError(f"dense reference unstable at step {n}; reduce dt")
        W = new
        if (record_every and n % record_every == 0) or n == steps:
            st = initial.with_values(W.copy(), initial.time + n * h)
            traj.diagnostics.append(diagnostics(st))
            traj.snapshots.append(st)
    return traj


def relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / ||b|| in the grid l2 norm."""
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def cross_discretization(initial: WignerState, op, t_final: float, samples: int = 10,
                         dt: float | None = None) -> dict:
    """Run the wavelet solver ``op`` and the dense reference on the same step sequence.

    The step is the smaller of the two automatic steps unless given. Returns
    the sample times, the relative l2 difference at each and the wall time of
    each solver.
    """
    ref = DenseRhs(op.grid, op.potential.coefficients, op.mass, op.hbar,
                   op.lindblad.gamma, op.lindblad.diffusion)
    if dt is None:
        dt = min(0.8 * 2.5 / op.rate_bound, 0.8 * 2.5 / ref.rate_bound())
    steps = max(samples, ceil(t_final / dt / samples - 1e-9) * samples)
    stride = steps // samples
    h = t_final / steps
    t0 = perf_counter()
    wave = evolve(initial, op, EvolutionConfig(t_final, dt=h, snapshot_stride=stride,
                                               diagnostics_stride=stride, check_coverage=False))
    t1 = perf_counter()
    dense = dense_reference_evolve(initial, op.potential.coefficients, op.mass, op.hbar, t_final, h,
                                   op.lindblad.gamma, op.lindblad.diffusion, record_every=stride)
    t2 = perf_counter()
    pairs = list(zip(wave.snapshots[1:], dense.snapshots[1:]))
    return {
        "times": np.array([w.time for w, _ in pairs]),
        "differences": np.array([relative_l2(w.values, d.values) for w, d in pairs]),
        "dt": h,
        "steps": steps,
        "wavelet_seconds": t1 - t0,
        "dense_seconds": t2 - t1,
    }


MOMENT_NAMES = ("q", "p", "qq", "qp", "pp")


@dataclass(frozen=True)
class MomentOdeSystem:
    """d/dt of (<q>, <p>, <q^2>, <(qp+pq)/2>, <p^2>) for U = c1 q + k q^2 / 2."""

    mass: float
    k: float
    gamma: float = 0.0
    diffusion: float = 0.0
    force: float = 0.0  # linear coefficient c1

    @classmethod
    def from_potential(cls, coefficients, mass, gamma=0.0, diffusion=0.0) -> "MomentOdeSystem":
        c = list(np.trim_zeros(np.asarray(coefficients, float), "b")) + [0.0, 0.0, 0.0]
        if len(np.trim_zeros(np.asarray(coefficients, float), "b")) > 3:
            raise UnsupportedOracleError("moment closure is exact only for polynomials of degree <= 2")
        return cls(float(mass), 2.0 * c[2], gamma, diffusion, c[1])

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        m, k, g, f = self.mass, self.k, self.gamma, self.force
        A = np.array([
            [0, 1 / m, 0, 0, 0],
            [-k, -2 * g, 0, 0, 0],
            [0, 0, 0, 2 / m, 0],
            [-f, 0, -k, -2 * g, 1 / m],
            [0, -2 * f, 0, -2 * k, -4 * g],
        ], dtype=float)
        b = np.array([0, -f, 0, 0, 2 * self.diffusion], dtype=float)
        return A, b

    def stationary(self) -> np.ndarray:
        A, b = self.matrix()
        return np.linalg.solve(A, -b)


def moment_ode_solve(system: MomentOdeSystem, initial, times) -> np.ndarray:
    """Exact affine flow x(t) = exp(tA) x0 + int_0^t exp(sA) b ds, sampled at ``times``."""
    A, b = system.matrix()
    M = np.zeros((6, 6))
    M[:5, :5], M[:5, 5] = A, b
    x0 = np.append(np.asarray(initial, float), 1.0)
    return np.array([(expm(t * M) @ x0)[:5] for t in np.asarray(times, float)])


def state_moments(state: WignerState) -> np.ndarray:
    """Normalized (<q>, <p>, <q^2>, <qp>, <p^2>) of a Wigner state."""
    g = state.grid
    q, p, W = g.q, g.p, state.values
    norm = W.sum()
    return np.array([
        q @ W.sum(axis=1), W.sum(axis=0) @ p, (q**2) @ W.sum(axis=1), q @ W @ p, W.sum(axis=0) @ p**2,
    ]) / norm
