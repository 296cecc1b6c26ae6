"""Right-hand side of the Wigner equation for H = p^2/2m + U(q).

    dW/dt = -(p/m) dW/dq
            + sum_l (-1)^l (hbar/2)^(2l) / (2l+1)!  U^(2l+1)(q)  d^(2l+1)W/dp^(2l+1)
            + 2 gamma d(pW)/dp + D d^2W/dp^2

For polynomial U the sum stops at 2l + 1 = deg U, so nothing is truncated.
Derivatives are applied through nonstandard-form wavelet operators, one
axis at a time; q-dependent coefficients multiply in sample space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .mra_operator import NonstandardOperator, build_nonstandard
from .phase_space import PhaseSpaceGrid, WignerState
from .wavelet_basis import FilterPair, connection_coefficients, daubechies_filters, default_order, regularity_ok

# |z| <= 2.5 with Re z <= 0 lies inside the RK4 stability region
RK4_STABILITY_RADIUS = 2.5


@dataclass(frozen=True)
class PolynomialPotential:
    """U(q) = sum_k coefficients[k] q^k; trailing zero coefficients are dropped."""

    coefficients: tuple

    def __post_init__(self):
        c = [float(x) for x in self.coefficients]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coefficients", tuple(c) if c else (0.0,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.coefficients == (0.0,)

    def __call__(self, q):
        return np.polynomial.polynomial.polyval(q, self.coefficients)

    def derivative(self, n: int) -> "PolynomialPotential":
        return derivative(self, n)

    @classmethod
    def harmonic(cls, k: float = 1.0) -> "PolynomialPotential":
        return cls((0.0, 0.0, 0.5 * k))


def derivative(U: PolynomialPotential, n: int) -> PolynomialPotential:
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    c = U.coefficients
    if n > U.degree:
        return PolynomialPotential((0.0,))
    return PolynomialPotential(tuple(factorial(k) // factorial(k - n) * c[k] for k in range(n, len(c))))


@dataclass(frozen=True)
class MoyalTerm:
    ell: int
    prefactor: float
    u_derivative: PolynomialPotential

    @property
    def p_derivative_order(self) -> int:
        return 2 * self.ell + 1


def moyal_series(U: PolynomialPotential, hbar: float) -> list[MoyalTerm]:
    """All nonvanishing terms of the hbar series; ell = 0 is the classical force."""
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    terms = []
    ell = 0
    while 2 * ell + 1 <= U.degree:
        k = 2 * ell + 1
        pref = (-1) ** ell * (hbar / 2) ** (2 * ell) / factorial(k)
        terms.append(MoyalTerm(ell, pref, derivative(U, k)))
        ell += 1
    return terms


@dataclass(frozen=True)
class LindbladParams:
    gamma: float = 0.0
    diffusion: float = 0.0

    def __post_init__(self):
        if self.gamma < 0 or self.diffusion < 0:
            raise ValueError("gamma and diffusion must be non-negative")


@dataclass(frozen=True)
class EvolutionOperator:
    grid: PhaseSpaceGrid
    potential: PolynomialPotential
    mass: float
    hbar: float
    lindblad: LindbladParams
    basis: FilterPair
    transport: NonstandardOperator | None
    p_operators: dict
    quantum_terms: tuple  # (p derivative order, coefficient over q)
    epsilon_op: float = 0.0
    rate_bound: float = field(default=0.0, compare=False)

    def apply(self, values: np.ndarray) -> np.ndarray:
        g = self.grid
        W = values
        out = np.zeros_like(W)
        if self.transport is not None:
            dq = self.transport.apply_samples(np.ascontiguousarray(W.T)).T
            out -= dq * (g.p / self.mass)[None, :]
        first = np.zeros_like(W)
        have_first = False
        for order, coef in self.quantum_terms:
            if order == 1:
                first += coef[:, None] * W
                have_first = True
            else:
                out += self.p_operators[order].apply_samples(coef[:, None] * W)
        if self.lindblad.gamma > 0:
            # divergence form keeps the grid sum exactly zero
            first += 2 * self.lindblad.gamma * g.p[None, :] * W
            have_first = True
        if have_first:
            out += self.p_operators[1].apply_samples(first)
        if self.lindblad.diffusion > 0:
            out += self.lindblad.diffusion * self.p_operators[2].apply_samples(W)
        return out


def _rate_bound(grid, potential, mass, hbar, lb, stencils) -> float:
    """Upper bound of the operator norm from |coefficient| * max|symbol| / h^n per term."""
    q, p = grid.q, grid.p
    sym = {n: s.symbol_max() for n, s in stencils.items()}
    rate = 0.0
    if np.isfinite(mass):
        rate += np.max(np.abs(p)) / mass * sym[1] / grid.dq
    for t in moyal_series(potential, hbar):
        c = float(np.max(np.abs(t.prefactor * t.u_derivative(q))))
        if c > 0:
            n = t.p_derivative_order
            rate += c * sym[n] / grid.dp**n
    if lb.gamma > 0:
        rate += 2 * lb.gamma * (np.max(np.abs(p)) * sym[1] / grid.dp + 1.0)
    if lb.diffusion > 0:
        rate += lb.diffusion * sym[2] / grid.dp**2
    return float(rate)


def build_evolution_operator(
    potential: PolynomialPotential,
    mass: float,
    hbar: float,
    lindblad: LindbladParams,
    grid: PhaseSpaceGrid,
    basis: FilterPair | None = None,
    coarsest_level: int | tuple[int, int] = 2,
    epsilon_op: float = 0.0,
) -> EvolutionOperator:
    """Assemble the Wigner-Moyal-Lindblad generator on ``grid``.

    ``mass = inf`` switches the transport term off.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    if not np.isclose(hbar, grid.hbar):
        raise ValueError(f"hbar {hbar} differs from grid hbar {grid.hbar}")
    series = [t for t in moyal_series(potential, hbar) if not t.u_derivative.is_zero()]
    orders = {t.p_derivative_order for t in series}
    if lindblad.gamma > 0:
        orders.add(1)
    if lindblad.diffusion > 0:
        orders.add(2)
    transport_on = np.isfinite(mass)
    max_order = max(orders | {1})
    if basis is None:
        basis = daubechies_filters(default_order(max_order))
    # raises RegularityError for an unsuitable basis
    stencils = {n: connection_coefficients(basis, n) for n in orders | {1, 2}
                if n in orders or regularity_ok(basis.order, n)}
    Jq, Jp = grid.levels
    cq, cp = (coarsest_level, coarsest_level) if np.isscalar(coarsest_level) else coarsest_level
    cq, cp = min(cq, Jq - 1), min(cp, Jp - 1)
    transport = None
    if transport_on:
        transport = build_nonstandard(stencils[1], (cq, Jq), grid.dq, basis, epsilon_op)
    p_ops = {n: build_nonstandard(stencils[n], (cp, Jp), grid.dp, basis, epsilon_op) for n in sorted(orders)}
    q = grid.q
    terms = tuple((t.p_derivative_order, t.prefactor * t.u_derivative(q)) for t in series)
    rate = _rate_bound(grid, potential, mass, hbar, lindblad, stencils)
    return EvolutionOperator(grid, potential, float(mass), float(hbar), lindblad, basis, transport,
                             p_ops, terms, epsilon_op, rate)


def apply_rhs(op: EvolutionOperator, state: WignerState) -> np.ndarray:
    if state.grid != op.grid:
        raise ValueError("state grid does not match operator grid")
    return op.apply(state.values)


def stable_dt(op: EvolutionOperator) -> float:
    """Largest step the norm bound certifies for RK4."""
    return RK4_STABILITY_RADIUS / op.rate_bound if op.rate_bound > 0 else np.inf
