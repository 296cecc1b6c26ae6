"""Daubechies filters, cascade sampling of the scaling function and
connection-coefficient derivative stencils."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np

MAX_ORDER = 10


class UnsupportedOrderError(ValueError):
    pass


class RegularityError(ValueError):
    """The basis is not smooth enough for the requested derivative."""


@dataclass(frozen=True)
class FilterPair:
    order: int
    lowpass: np.ndarray
    highpass: np.ndarray

    @property
    def length(self) -> int:
        return len(self.lowpass)


@dataclass(frozen=True)
class DerivativeStencil:
    """Weights r_l of sum_l r_l f[k - l] approximating d^n f / dx^n on a unit grid.

    On a grid with spacing h the weights are scaled by h**-n; on dyadic
    level j of the unit interval this is the factor 2**(j n).
    """

    derivative_order: int
    offsets: np.ndarray
    weights: np.ndarray
    scale_exponent: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "scale_exponent", self.derivative_order)

    @property
    def taps(self) -> dict[int, float]:
        return {int(o): float(w) for o, w in zip(self.offsets, self.weights)}

    @property
    def half_width(self) -> int:
        return int(np.max(np.abs(self.offsets))) if len(self.offsets) else 0

    def apply(self, samples, spacing: float = 1.0, axis: int = -1) -> np.ndarray:
        """Periodic application to samples along ``axis``."""
        samples = np.asarray(samples, dtype=float)
        out = np.zeros_like(samples)
        for o, w in zip(self.offsets, self.weights):
            out += w * np.roll(samples, int(o), axis=axis)
        return out / spacing**self.derivative_order

    def apply_valid(self, samples, spacing: float = 1.0) -> np.ndarray:
        """Non-periodic 1D application; returns only fully supported points."""
        samples = np.asarray(samples, dtype=float)
        w = self.half_width
        n = len(samples)
        out = np.zeros(n - 2 * w)
        for o, r in zip(self.offsets, self.weights):
            out += r * samples[w - o : n - w - o]
        return out / spacing**self.derivative_order

    def symbol_max(self) -> float:
        """max over frequencies of |sum_l r_l e^{-i l theta}|."""
        theta = np.linspace(0.0, np.pi, 2049)
        sym = np.exp(-1j * np.outer(theta, self.offsets)) @ self.weights
        return float(np.max(np.abs(sym)))


def _check_order(order: int) -> None:
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"wavelet order must be an integer in 1..{MAX_ORDER}, got {order!r}")


@lru_cache(maxsize=None)
def _daubechies_lowpass(order: int) -> tuple[float, ...]:
    M = order
    # P(y) = sum_k C(M-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z)/4
    poly = [comb(M - 1 + k, k) for k in range(M)]
    yroots = np.roots(poly[::-1]) if M > 1 else np.array([])
    zs = []
    for y in yroots:
        # z^2 - (2 - 4y) z + 1 = 0; the root inside the unit circle is minimum phase
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0j)
        z1, z2 = (b + disc) / 2.0, (b - disc) / 2.0
        zs.append(z1 if abs(z1) < abs(z2) else z2)
    coeffs = np.array([1.0 + 0j])
    for _ in range(M):
        coeffs = np.convolve(coeffs, [1.0, 1.0])
    for z in zs:
        coeffs = np.convolve(coeffs, [1.0, -z])
    h = np.real(coeffs)
    h = h * (np.sqrt(2.0) / h.sum())
    if M > 1:
        h = _polish(h, M)
    return tuple(float(v) for v in h)


def _polish(h: np.ndarray, M: int, iterations: int = 4) -> np.ndarray:
    """Newton refinement on the orthonormality and moment equations."""
    L = 2 * M
    k = np.arange(L)
    sign = (-1.0) ** k
    for _ in range(iterations):
        res, jac = [], []
        for m in range(M):
            shifted = np.zeros(L)
            shifted[: L - 2 * m] = h[2 * m :]
            back = np.zeros(L)
            back[2 * m :] = h[: L - 2 * m]
            res.append(h @ shifted - (1.0 if m == 0 else 0.0))
            jac.append(shifted + back)
        for p in range(1, M):
            row = sign * k.astype(float) ** p
            res.append(row @ h)
            jac.append(row)
        res.append(h.sum() - np.sqrt(2.0))
        jac.append(np.ones(L))
        delta = np.linalg.lstsq(np.array(jac), np.array(res), rcond=None)[0]
        h = h - delta
    return h


def daubechies_filters(order: int) -> FilterPair:
    """Minimum-phase Daubechies filter pair with ``order`` vanishing moments."""
    _check_order(order)
    h = np.array(_daubechies_lowpass(int(order)))
    L = len(h)
    g = np.array([(-1.0) ** k * h[L - 1 - k] for k in range(L)])
    h.setflags(write=False)
    g.setflags(write=False)
    return FilterPair(order=int(order), lowpass=h, highpass=g)


def _integer_values(h: np.ndarray) -> np.ndarray:
    """phi(0..L-1) as the eigenvector of the two-scale relation at integers."""
    L = len(h)
    A = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            if 0 <= 2 * i - j < L:
                A[i, j] = np.sqrt(2.0) * h[2 * i - j]
    vals, vecs = np.linalg.eig(A)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, idx])
    return v / v.sum()


def scaling_samples(basis: FilterPair, refinement_levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Values of phi on the dyadic grid x = k 2^-levels over [0, 2M-1].

    Returns ``(x, phi)``. Values at integers come from the eigenvector of the
    refinement relation; finer dyadic points follow by repeated refinement.
    """
    if refinement_levels < 1:
        raise ValueError("refinement_levels must be >= 1")
    h = np.asarray(basis.lowpass)
    L = len(h)
    support = L - 1
    if basis.order == 1:
        n = 2**refinement_levels
        x = np.arange(n + 1) / n
        phi = np.ones(n + 1)
        phi[-1] = 0.0
        return x, phi
    phi = _integer_values(h)  # spacing 1, indices 0..support
    for level in range(1, refinement_levels + 1):
        n = 2**level
        new = np.zeros(support * n + 1)
        new[::2] = phi
        prev_n = n // 2
        # odd points: phi(x) = sqrt2 sum_k h_k phi(2x - k) with 2x on the previous grid
        odd = np.arange(1, support * n, 2)
        acc = np.zeros(len(odd))
        for k in range(L):
            idx = odd - k * prev_n  # index of 2x - k on previous grid (spacing 1/prev_n)
            ok = (idx >= 0) & (idx < len(phi))
            acc[ok] += np.sqrt(2.0) * h[k] * phi[idx[ok]]
        new[odd] = acc
        phi = new
    x = np.arange(len(phi)) / 2**refinement_levels
    return x, phi


def autocorrelation(h) -> np.ndarray:
    """a_s = sum_k h_k h_{k+s} for s = -(L-1)..L-1."""
    h = np.asarray(h, dtype=float)
    return np.correlate(h, h, mode="full")


@lru_cache(maxsize=None)
def _connection_weights(order: int, n: int) -> tuple[tuple[int, ...], tuple[float, ...], float]:
    ld = np.longdouble
    h = np.array(_daubechies_lowpass(order), dtype=ld)
    L = len(h)
    a = np.array([np.dot(h[max(0, -s) : L - max(0, s)], h[max(0, s) : L - max(0, -s)]) for s in range(1 - L, L)])
    w = L - 2  # Phi^{(n)} vanishes at the support endpoints +-(L-1)
    offsets = np.arange(-w, w + 1)
    size = len(offsets)
    # Lambda_l = 2^n sum_s a_s Lambda_{2l+s}
    T = np.zeros((size, size), dtype=ld)
    for i, l in enumerate(offsets):
        for jdx, m in enumerate(offsets):
            s = m - 2 * l
            if -(L - 1) <= s <= L - 1:
                T[i, jdx] = a[s + L - 1]
    # Phi reproduces polynomials up to degree 2M - 1, hence
    # sum_l l^k Lambda_l = n! delta_kn for k < 2M; rows are scaled by w^-k
    x = offsets.astype(ld) / w
    moments = np.array([x**k for k in range(2 * order)])
    target = np.zeros(2 * order, dtype=ld)
    target[n] = ld(factorial(n)) / ld(w) ** n
    system = np.vstack([T - ld(2.0) ** -n * np.eye(size, dtype=ld), moments])
    rhs = np.concatenate([np.zeros(size, dtype=ld), target])
    # double-precision solve, refined against extended-precision residuals;
    # a plain solve misses the moment rows by up to 1e-7 for the longest filters
    coarse = system.astype(float)
    lam_vec = np.linalg.lstsq(coarse, rhs.astype(float), rcond=None)[0].astype(ld)
    for _ in range(3):
        lam_vec += np.linalg.lstsq(coarse, (rhs - system @ lam_vec).astype(float), rcond=None)[0]
    residual = float(np.max(np.abs(system @ lam_vec - rhs)) / target[n])
    # r_l = Lambda_{-l}
    r = lam_vec[::-1].astype(float)
    # enforce exact parity r_{-l} = (-1)^n r_l
    r = 0.5 * (r + (-1.0) ** n * r[::-1])
    return tuple(int(o) for o in offsets), tuple(float(v) for v in r), residual


CONSISTENCY_TOLERANCE = 1e-5


def regularity_ok(order: int, derivative_order: int) -> bool:
    """2 * order - n >= 2 and a consistent refinement system."""
    if 2 * order - derivative_order < 2:
        return False
    return _connection_weights(order, derivative_order)[2] <= CONSISTENCY_TOLERANCE


def default_order(max_derivative: int) -> int:
    return max(3, -(-(max_derivative + 2) // 2))


def connection_coefficients(basis: FilterPair, derivative_order: int) -> DerivativeStencil:
    """Stencil r_l = <phi(x - l), d^n/dx^n phi(x)> on the unit grid.

    ``derivative_order=0`` yields the identity stencil.
    """
    n = int(derivative_order)
    if n < 0:
        raise ValueError("derivative_order must be >= 0")
    if n == 0:
        return DerivativeStencil(0, np.array([0]), np.array([1.0]))
    if 2 * basis.order - n < 2:
        raise RegularityError(
            f"Daubechies order {basis.order} cannot represent derivative order {n} "
            f"(need 2*order - n >= 2)"
        )
    offsets, weights, residual = _connection_weights(basis.order, n)
    if residual > CONSISTENCY_TOLERANCE:
        # a repeated eigenvalue 2^-n leaves the refinement system without a consistent solution
        raise RegularityError(
            f"Daubechies order {basis.order}: refinement system for derivative order {n} "
            f"is inconsistent (residual {residual:.1e})"
        )
    offsets, weights = np.array(offsets), np.array(weights)
    offsets.setflags(write=False)
    weights.setflags(write=False)
    return DerivativeStencil(n, offsets, weights)
