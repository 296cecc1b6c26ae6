"""Phase-space grids, Wigner states, the Weyl transform of wavefunctions and
the usual diagnostics (marginals, moments, purity, negativity)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial, pi

import numpy as np
from numpy.polynomial.hermite import hermval

BOUNDARY_MASS_THRESHOLD = 1e-6


class DomainCoverageError(RuntimeError):
    """Probability reaches the edge of the periodic grid."""


def _is_pow2(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and not n & (n - 1)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int
    np: int
    hbar: float = 1.0

    def __post_init__(self):
        if not self.q_max > self.q_min or not self.p_max > self.p_min:
            raise ValueError("grid ranges must satisfy max > min")
        if not (_is_pow2(self.nq) and _is_pow2(self.np)):
            raise ValueError(f"grid sizes must be powers of two, got nq={self.nq}, np={self.np}")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.nq

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.np

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.nq)

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.np)

    @property
    def cell(self) -> float:
        return self.dq * self.dp

    @property
    def levels(self) -> tuple[int, int]:
        return self.nq.bit_length() - 1, self.np.bit_length() - 1

    def refined(self, nq: int, np_: int) -> "PhaseSpaceGrid":
        return replace(self, nq=nq, np=np_)


@dataclass(frozen=True)
class Wavefunction:
    q_min: float
    q_max: float
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / self.n

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.dq * np.arange(self.n)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dq)

    def normalized(self) -> "Wavefunction":
        return replace(self, values=self.values / np.sqrt(self.norm()))


@dataclass(frozen=True)
class WignerState:
    grid: PhaseSpaceGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("Wigner values must be real")
        v = np.asarray(v, dtype=float)
        if v.shape != (self.grid.nq, self.grid.np):
            raise ValueError(f"values shape {v.shape} does not match grid ({self.grid.nq}, {self.grid.np})")
        object.__setattr__(self, "values", v)

    def with_values(self, values, time: float | None = None) -> "WignerState":
        return WignerState(self.grid, values, self.time if time is None else time)

    def __add__(self, other: "WignerState") -> "WignerState":
        return self.with_values(self.values + other.values)

    def __mul__(self, alpha: float) -> "WignerState":
        return self.with_values(alpha * self.values)

    __rmul__ = __mul__


# --- wavefunctions -------------------------------------------------------------------


def coherent_wavefunction(grid: PhaseSpaceGrid, q0=0.0, p0=0.0, omega=1.0, mass=1.0) -> Wavefunction:
    q = grid.q
    a = mass * omega / grid.hbar
    psi = (a / pi) ** 0.25 * np.exp(-0.5 * a * (q - q0) ** 2 + 1j * p0 * (q - q0) / grid.hbar)
    return Wavefunction(grid.q_min, grid.q_max, psi)


def eigenstate_wavefunction(grid: PhaseSpaceGrid, n: int, omega=1.0, mass=1.0) -> Wavefunction:
    """Harmonic-oscillator eigenfunction (Hermite function) of quantum number n."""
    if not 0 <= n <= 3:
        raise ValueError("eigenstates are supported for n = 0..3")
    a = mass * omega / grid.hbar
    x = np.sqrt(a) * grid.q
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    psi = (a / pi) ** 0.25 / np.sqrt(2.0**n * factorial(n)) * hermval(x, coef) * np.exp(-0.5 * x**2)
    return Wavefunction(grid.q_min, grid.q_max, psi.astype(complex))


def cat_wavefunction(grid: PhaseSpaceGrid, q0, p0=0.0, phase=0.0, omega=1.0, mass=1.0) -> Wavefunction:
    """Normalized superposition of coherent states at (q0, p0) and (-q0, -p0)."""
    plus = coherent_wavefunction(grid, q0, p0, omega, mass).values
    minus = coherent_wavefunction(grid, -q0, -p0, omega, mass).values
    return Wavefunction(grid.q_min, grid.q_max, plus + np.exp(1j * phase) * minus).normalized()


# --- Weyl transform ------------------------------------------------------------------


def boundary_mass(values: np.ndarray, grid: PhaseSpaceGrid, edge: int | None = None) -> float:
    """|W| mass in the frame of ``edge`` cells along every side of the grid."""
    v = np.abs(values)
    eq = edge or max(1, grid.nq // 32)
    ep = edge or max(1, grid.np // 32)
    inner = v[eq:-eq, ep:-ep].sum() if grid.nq > 2 * eq and grid.np > 2 * ep else 0.0
    return float((v.sum() - inner) * grid.cell)


def check_coverage(state: WignerState, threshold: float = BOUNDARY_MASS_THRESHOLD) -> None:
    m = boundary_mass(state.values, state.grid)
    if m > threshold:
        raise DomainCoverageError(f"boundary mass {m:.3e} exceeds {threshold:.1e}; enlarge the phase-space grid")


def weyl_cross(psi: np.ndarray, sigma: np.ndarray, grid: PhaseSpaceGrid) -> tuple[np.ndarray, np.ndarray]:
    """(1/pi hbar) sum_y dq exp(-2ipy/hbar) conj(psi(q-y)) sigma(q+y), as (real, imag).

    Both functions are zero outside the q range; y = s dq with |s| <= nq/2,
    i.e. xi = 2y covers twice the q range. A periodic extension would fold
    the state onto the grid edges, so none is used here.
    """
    n = grid.nq
    dq = grid.dq
    s = np.arange(-(n // 2), n // 2 + 1)
    i = np.arange(n)
    lo = i[None, :] - s[:, None]
    hi = i[None, :] + s[:, None]
    ok = (lo >= 0) & (lo < n) & (hi >= 0) & (hi < n)
    prod = np.where(ok, np.conj(psi[np.clip(lo, 0, n - 1)]) * sigma[np.clip(hi, 0, n - 1)], 0.0)  # (s, q)
    phase = np.exp(-2j * np.outer(grid.p, s * dq) / grid.hbar)  # (p, s)
    w = (phase @ prod).T * (dq / (pi * grid.hbar))
    return w.real, w.imag


def momentum_period(grid: PhaseSpaceGrid) -> float:
    """The Wigner function of q samples spaced dq is periodic in p with this period."""
    return pi * grid.hbar / grid.dq


def weyl_transform(psi: Wavefunction, grid: PhaseSpaceGrid, check: bool = True,
                   threshold: float = BOUNDARY_MASS_THRESHOLD) -> WignerState:
    """Wigner function of a pure state sampled on the q axis of ``grid``."""
    if psi.n != grid.nq or not np.isclose(psi.q_min, grid.q_min) or not np.isclose(psi.q_max, grid.q_max):
        raise ValueError("wavefunction samples must lie on the q axis of the phase-space grid")
    re, im = weyl_cross(np.asarray(psi.values, complex), np.asarray(psi.values, complex), grid)
    scale = max(np.max(np.abs(re)), 1e-300)
    if np.max(np.abs(im)) > 1e-10 * scale:
        raise ArithmeticError("Weyl transform produced a non-negligible imaginary part")
    state = WignerState(grid, re)
    if check:
        try:
            check_coverage(state, threshold)
        except DomainCoverageError as exc:
            period = momentum_period(grid)
            if period < grid.p_max - grid.p_min:
                raise DomainCoverageError(
                    f"{exc}; the transform repeats in p with period pi*hbar/dq = {period:.4g}, "
                    f"shorter than the p range, so increase nq"
                ) from None
            raise
        norm = normalization(state)
        if abs(norm - psi.norm()) > threshold:
            raise DomainCoverageError(
                f"momentum range misses {abs(norm - psi.norm()):.3e} of the probability; enlarge p range"
            )
    return state


def translate(state: WignerState, shift_q: int, shift_p: int) -> WignerState:
    """Cyclic shift by whole grid cells."""
    return state.with_values(np.roll(state.values, (shift_q, shift_p), axis=(0, 1)))


# --- diagnostics ---------------------------------------------------------------------


def normalization(state: WignerState) -> float:
    return float(state.values.sum() * state.grid.cell)


def marginals(state: WignerState) -> tuple[np.ndarray, np.ndarray]:
    """(position density over q, momentum density over p)."""
    g = state.grid
    return state.values.sum(axis=1) * g.dp, state.values.sum(axis=0) * g.dq


def moments(state: WignerState, max_order: int = 2) -> dict[tuple[int, int], float]:
    """<q^a p^b> for a + b <= max_order (unnormalized weights of W)."""
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be in 0..4")
    g = state.grid
    q, p = g.q, g.p
    out = {}
    for a in range(max_order + 1):
        row = (q**a) @ state.values
        for b in range(max_order + 1 - a):
            out[(a, b)] = float(row @ (p**b) * g.cell)
    return out


def purity(state: WignerState) -> float:
    return float(2 * pi * state.grid.hbar * np.sum(state.values**2) * state.grid.cell)


def negativity_volume(state: WignerState) -> float:
    return float(np.sum(np.maximum(0.0, -state.values)) * state.grid.cell)


def l2_norm(values: np.ndarray, grid: PhaseSpaceGrid) -> float:
    return float(np.sqrt(np.sum(values**2) * grid.cell))
