"""Periodic fast wavelet transform and the nonstandard operator form.

Everything acts along the last axis, so a 2D array is treated as a batch of
independent 1D signals. Level ``j`` holds ``2**j`` coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .wavelet_basis import DerivativeStencil, FilterPair


class ShapeError(ValueError):
    pass


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ShapeError(f"length {n} is not a power of two")
    return n.bit_length() - 1


@dataclass
class MraCoefficients:
    """``approx`` lives in V_c, ``details[i]`` in D_{c+i}."""

    coarsest_level: int
    finest_level: int
    approx: np.ndarray
    details: list[np.ndarray]

    def __post_init__(self):
        c, J = self.coarsest_level, self.finest_level
        if not 0 <= c <= J:
            raise ShapeError(f"need 0 <= coarsest_level <= finest_level, got {c}, {J}")
        if self.approx.shape[-1] != 2**c:
            raise ShapeError(f"approx has length {self.approx.shape[-1]}, expected {2**c}")
        if len(self.details) != J - c:
            raise ShapeError(f"expected {J - c} detail levels, got {len(self.details)}")
        for i, d in enumerate(self.details):
            if d.shape[-1] != 2 ** (c + i):
                raise ShapeError(f"details for level {c + i} have length {d.shape[-1]}, expected {2 ** (c + i)}")

    def detail(self, level: int) -> np.ndarray:
        return self.details[level - self.coarsest_level]

    def energy(self) -> np.ndarray:
        e = np.sum(self.approx**2, axis=-1)
        for d in self.details:
            e = e + np.sum(d**2, axis=-1)
        return e

    def count(self) -> int:
        return self.approx.shape[-1] + sum(d.shape[-1] for d in self.details)

    def map(self, fn) -> "MraCoefficients":
        return MraCoefficients(self.coarsest_level, self.finest_level, fn(self.approx), [fn(d) for d in self.details])


@njit(cache=True)
def _wrap_pad(row, lo, hi, buf):
    """buf[t] = row[(t - lo) mod n] for t in 0 .. n + lo + hi - 1."""
    n = row.shape[0]
    for t in range(n + lo + hi):
        buf[t] = row[(t - lo) % n]


@njit(cache=True)
def _analysis_kernel(s, h, g, a, d):
    rows, n = s.shape
    L = h.shape[0]
    buf = np.empty(n + L)
    half = n // 2
    for r in range(rows):
        _wrap_pad(s[r], 0, L, buf)
        for k in range(half):
            a[r, k] = 0.0
            d[r, k] = 0.0
        for m in range(L):
            hm = h[m]
            gm = g[m]
            for k in range(half):
                v = buf[2 * k + m]
                a[r, k] += hm * v
                d[r, k] += gm * v


@njit(cache=True)
def _synthesize_row(sk_row, dk_row, h, g, out_row, buf):
    # out[(2k + m) mod n] += h[m] s[k] + g[m] d[k]; accumulate in buf, fold the tail
    half = sk_row.shape[0]
    n = 2 * half
    L = h.shape[0]
    for t in range(n + L):
        buf[t] = 0.0
    for m in range(L):
        hm = h[m]
        gm = g[m]
        for k in range(half):
            buf[2 * k + m] += hm * sk_row[k] + gm * dk_row[k]
    for i in range(n):
        out_row[i] = buf[i]
    for t in range(n, n + L):
        out_row[t % n] += buf[t]


@njit(cache=True)
def _synthesis_kernel(a, d, h, g, out):
    rows, half = a.shape
    buf = np.empty(2 * half + h.shape[0])
    for r in range(rows):
        _synthesize_row(a[r], d[r], h, g, out[r], buf)


@njit(cache=True)
def _band_row(xbuf, lo, offsets, values, n, out_row):
    for t in range(offsets.shape[0]):
        v = values[t]
        base = offsets[t] + lo
        for k in range(n):
            out_row[k] += v * xbuf[k + base]


@njit(cache=True)
def _band_kernel(x, offsets, values, out):
    rows, n = x.shape
    lo = max(0, -offsets.min()) if offsets.shape[0] else 0
    hi = max(0, offsets.max()) if offsets.shape[0] else 0
    buf = np.empty(n + lo + hi)
    for r in range(rows):
        _wrap_pad(x[r], lo, hi, buf)
        _band_row(buf, lo, offsets, values, n, out[r])


@njit(cache=True)
def _level_kernel(acc, s, d, a_off, a_val, b_off, b_val, g_off, g_val, h, g, out):
    """out = synthesis(acc + Gamma d, A d + B s) for one level."""
    rows, half = s.shape
    lo = 0
    hi = 0
    for offs in (a_off, b_off, g_off):
        if offs.shape[0]:
            lo = max(lo, -offs.min())
            hi = max(hi, offs.max())
    dbuf = np.empty(half + lo + hi)
    sbuf = np.empty(half + lo + hi)
    dhat = np.empty(half)
    shat = np.empty(half)
    obuf = np.empty(2 * half + h.shape[0])
    for r in range(rows):
        _wrap_pad(d[r], lo, hi, dbuf)
        _wrap_pad(s[r], lo, hi, sbuf)
        for k in range(half):
            dhat[k] = 0.0
            shat[k] = acc[r, k]
        _band_row(dbuf, lo, a_off, a_val, half, dhat)
        _band_row(sbuf, lo, b_off, b_val, half, dhat)
        _band_row(dbuf, lo, g_off, g_val, half, shat)
        _synthesize_row(shat, dhat, h, g, out[r], obuf)


def analysis_step(s: np.ndarray, basis: FilterPair) -> tuple[np.ndarray, np.ndarray]:
    """One level down: returns (approx, detail) of half length.

    approx[k] = sum_m h[m] s[(2k + m) mod n], detail likewise with g.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    flat = np.ascontiguousarray(s.reshape(-1, n))
    a = np.empty((flat.shape[0], n // 2))
    d = np.empty_like(a)
    _analysis_kernel(flat, basis.lowpass, basis.highpass, a, d)
    shape = s.shape[:-1] + (n // 2,)
    return a.reshape(shape), d.reshape(shape)


def synthesis_step(a: np.ndarray, d: np.ndarray, basis: FilterPair) -> np.ndarray:
    half = a.shape[-1]
    fa = np.ascontiguousarray(np.asarray(a, dtype=float).reshape(-1, half))
    fd = np.ascontiguousarray(np.asarray(d, dtype=float).reshape(-1, half))
    out = np.empty((fa.shape[0], 2 * half))
    _synthesis_kernel(fa, fd, basis.lowpass, basis.highpass, out)
    return out.reshape(a.shape[:-1] + (2 * half,))


def forward_fwt(samples, coarsest_level: int, basis: FilterPair) -> MraCoefficients:
    s = np.asarray(samples, dtype=float)
    J = _log2_exact(s.shape[-1])
    if not 0 <= coarsest_level <= J:
        raise ShapeError(f"coarsest_level {coarsest_level} outside 0..{J}")
    details = []
    for _ in range(J - coarsest_level):
        s, d = analysis_step(s, basis)
        details.append(d)
    return MraCoefficients(coarsest_level, J, s, details[::-1])


def approximations(coeffs: MraCoefficients, basis: FilterPair) -> list[np.ndarray]:
    """Scaling coefficients s_j for j = c..J, reconstructed from the hierarchy."""
    s = [coeffs.approx]
    for d in coeffs.details:
        s.append(synthesis_step(s[-1], d, basis))
    return s


def inverse_fwt(coeffs: MraCoefficients, basis: FilterPair) -> np.ndarray:
    return approximations(coeffs, basis)[-1]


def project_level(coeffs: MraCoefficients, level: int, basis: FilterPair) -> np.ndarray:
    """Samples of P_level f: all details at levels >= ``level`` are discarded."""
    c, J = coeffs.coarsest_level, coeffs.finest_level
    if not c <= level <= J:
        raise ValueError(f"level {level} outside {c}..{J}")
    kept = [d if c + i < level else np.zeros_like(d) for i, d in enumerate(coeffs.details)]
    return inverse_fwt(MraCoefficients(c, J, coeffs.approx, kept), basis)


# --- circulant blocks -------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicBand:
    """Circulant matrix on ``size`` points: (B x)_k = sum_o values[o] x[(k + o) mod size]."""

    size: int
    offsets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "offsets", np.ascontiguousarray(self.offsets, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=float))

    @classmethod
    def from_first_row(cls, row: np.ndarray, half_width: int) -> "PeriodicBand":
        n = len(row)
        if 2 * half_width + 1 >= n:
            offsets = np.arange(n)
        else:
            offsets = np.arange(-half_width, half_width + 1)
        return cls(n, offsets, row[offsets % n].copy())

    def first_row(self) -> np.ndarray:
        row = np.zeros(self.size)
        np.add.at(row, self.offsets % self.size, self.values)
        return row

    def dense(self) -> np.ndarray:
        row = self.first_row()
        idx = (np.arange(self.size)[None, :] - np.arange(self.size)[:, None]) % self.size
        return row[idx]

    @property
    def stored(self) -> int:
        return len(self.values)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        if n != self.size:
            raise ShapeError(f"block acts on length {self.size}, got {n}")
        flat = np.ascontiguousarray(x.reshape(-1, n))
        out = np.zeros_like(flat)
        _band_kernel(flat, self.offsets, self.values, out)
        return out.reshape(x.shape)

    def thresholded(self, cutoff: float) -> "PeriodicBand":
        vals = np.where(np.abs(self.values) >= cutoff, self.values, 0.0)
        return PeriodicBand(self.size, self.offsets, vals)


def _conjugate_row(t: np.ndarray, left, right) -> np.ndarray:
    """First row of L T R^T for circulant T (first row ``t``) and filter rows L, R."""
    n = len(t)
    half = n // 2
    # u_s = sum_{m' - m = s} left_m right_{m'}
    u = np.correlate(np.asarray(right, float), np.asarray(left, float), mode="full")
    Lr = len(left)
    shifts = np.arange(len(u)) - (Lr - 1)
    o = np.arange(half)
    row = np.zeros(half)
    for s, us in zip(shifts, u):
        if us != 0.0:
            row += us * t[(2 * o + s) % n]
    return row


@dataclass(frozen=True)
class NonstandardOperator:
    """Per-level triples (A_j, B_j, Gamma_j) for j = c..J-1 plus the coarse block T_c.

    A_j: D_j -> D_j, B_j: V_j -> D_j, Gamma_j: D_j -> V_j, all circulant.
    """

    basis: FilterPair
    coarsest_level: int
    finest_level: int
    A: tuple
    B: tuple
    Gamma: tuple
    coarse_block: PeriodicBand
    threshold: float = 0.0
    level_scales: tuple = ()
    dropped_mass: float = 0.0

    def blocks(self):
        yield self.coarse_block
        for j in range(len(self.A)):
            yield self.A[j]
            yield self.B[j]
            yield self.Gamma[j]

    def scaled_blocks(self):
        """(block, scale of its level) pairs; T_c shares the scale of level c."""
        yield self.coarse_block, self.level_scales[0]
        for j in range(len(self.A)):
            for b in (self.A[j], self.B[j], self.Gamma[j]):
                yield b, self.level_scales[j]

    def block_levels(self):
        return range(self.coarsest_level, self.finest_level)

    def apply_samples(self, x: np.ndarray) -> np.ndarray:
        """Apply to finest-level samples along the last axis; returns samples."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 2**self.finest_level:
            raise ShapeError(f"operator acts on length {2**self.finest_level}, got {x.shape[-1]}")
        s, d = [x], []
        for _ in self.block_levels():
            a, dd = analysis_step(s[-1], self.basis)
            s.append(a)
            d.append(dd)
        s, d = s[::-1], d[::-1]  # s[i] at level c+i, d[i] at level c+i
        return self._apply_levels(s, d)

    def _apply_levels(self, s, d) -> np.ndarray:
        batch = s[0].shape[:-1]
        s = [np.ascontiguousarray(x.reshape(-1, x.shape[-1])) for x in s]
        d = [np.ascontiguousarray(x.reshape(-1, x.shape[-1])) for x in d]
        acc = self.coarse_block.apply(s[0])
        h, g = self.basis.lowpass, self.basis.highpass
        for i, (A, B, G) in enumerate(zip(self.A, self.B, self.Gamma)):
            out = np.empty((acc.shape[0], 2 * acc.shape[1]))
            _level_kernel(acc, s[i], d[i], A.offsets, A.values, B.offsets, B.values,
                          G.offsets, G.values, h, g, out)
            acc = out
        return acc.reshape(batch + (acc.shape[-1],))

    def thresholded(self, epsilon: float) -> "NonstandardOperator":
        """Copy with entries below ``epsilon`` times their level's largest entry dropped."""
        sc = self.level_scales
        _, dropped = threshold_stats(self, epsilon)
        return replace(
            self,
            A=tuple(b.thresholded(epsilon * sc[j]) for j, b in enumerate(self.A)),
            B=tuple(b.thresholded(epsilon * sc[j]) for j, b in enumerate(self.B)),
            Gamma=tuple(b.thresholded(epsilon * sc[j]) for j, b in enumerate(self.Gamma)),
            coarse_block=self.coarse_block.thresholded(epsilon * sc[0]),
            threshold=epsilon,
            dropped_mass=dropped,
        )


def standard_row(stencil: DerivativeStencil, n: int, grid_spacing: float) -> np.ndarray:
    """First row of the circulant standard form of the stencil on ``n`` samples."""
    t = np.zeros(n)
    for ell, r in zip(stencil.offsets, stencil.weights):
        # (T x)_k = sum_l r_l x_{k - l}
        t[(-int(ell)) % n] += r
    return t / grid_spacing**stencil.derivative_order


def standard_matrix(stencil: DerivativeStencil, n: int, grid_spacing: float) -> np.ndarray:
    return PeriodicBand(n, np.arange(n), standard_row(stencil, n, grid_spacing)).dense()


def build_nonstandard(
    stencil: DerivativeStencil,
    axis_levels: tuple[int, int],
    grid_spacing: float,
    basis: FilterPair,
    threshold: float = 0.0,
) -> NonstandardOperator:
    c, J = axis_levels
    if not 0 <= c < J:
        raise ValueError(f"need 0 <= c < J, got {axis_levels}")
    L = basis.length
    w_stencil = stencil.half_width
    # filters of length L couple offsets up to (2 w + L - 1) / 2 on the coarse grid
    w_block = (w_stencil + L - 1) // 2 + 1
    h, g = basis.lowpass, basis.highpass
    t = standard_row(stencil, 2**J, grid_spacing)
    A, B, G = [], [], []
    for _ in range(J - c):
        A.append(PeriodicBand.from_first_row(_conjugate_row(t, g, g), w_block))
        B.append(PeriodicBand.from_first_row(_conjugate_row(t, g, h), w_block))
        G.append(PeriodicBand.from_first_row(_conjugate_row(t, h, g), w_block))
        t = _conjugate_row(t, h, h)
    coarse = PeriodicBand.from_first_row(t, w_block)
    A, B, G = A[::-1], B[::-1], G[::-1]
    scales = []
    for j in range(J - c):
        group = [A[j], B[j], G[j]] + ([coarse] if j == 0 else [])
        m = max(float(np.max(np.abs(b.values))) for b in group)
        scales.append(m if m > 0 else 1.0)
    op = NonstandardOperator(basis, c, J, tuple(A), tuple(B), tuple(G), coarse, level_scales=tuple(scales))
    if threshold > 0:
        op = op.thresholded(threshold)
    return op


def apply_nonstandard(op: NonstandardOperator, coeffs: MraCoefficients) -> MraCoefficients:
    if coeffs.coarsest_level != op.coarsest_level or coeffs.finest_level != op.finest_level:
        raise ShapeError(
            f"operator levels {op.coarsest_level}..{op.finest_level} do not match "
            f"coefficients {coeffs.coarsest_level}..{coeffs.finest_level}"
        )
    s = approximations(coeffs, op.basis)[:-1]
    out = op._apply_levels(s, coeffs.details)
    return forward_fwt(out, op.coarsest_level, op.basis)


def threshold_stats(op: NonstandardOperator, epsilon: float) -> tuple[float, float]:
    """(retained_fraction, dropped_mass) for a relative cutoff ``epsilon``.

    Entries smaller than ``epsilon`` times the largest entry of their level
    are dropped. ``dropped_mass`` is the summed magnitude of the dropped
    entries, an upper bound for the operator 2-norm of the perturbation.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    total = kept = 0
    dropped = 0.0
    for b, scale in op.scaled_blocks():
        cutoff = epsilon * scale
        mags = np.abs(b.values)
        total += len(mags)
        keep = mags >= cutoff
        kept += int(np.count_nonzero(keep))
        dropped += float(np.sum(mags[~keep]))
    return (kept / total if total else 0.0), dropped
