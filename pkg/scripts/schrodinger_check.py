"""Closed-system check against exact wavefunction dynamics.

Evolves a cat state in U = q^2/4 + q^4/20 with split-step FFT (Strang
splitting, fine time step), Weyl-transforms the result and compares it with
the wavelet Wigner solver started from the transformed initial state.

    python scripts/schrodinger_check.py --n 128 --t-final 0.5
"""

import argparse

import numpy as np

from wavewigner import (
    EvolutionConfig,
    LindbladParams,
    PhaseSpaceGrid,
    PolynomialPotential,
    Wavefunction,
    build_evolution_operator,
    cat_wavefunction,
    evolve,
    weyl_transform,
)

POTENTIAL = (0.0, 0.0, 0.25, 0.0, 0.05)


def split_step(psi: Wavefunction, potential: PolynomialPotential, t_final: float, steps: int,
               mass: float = 1.0, hbar: float = 1.0) -> Wavefunction:
    k = 2 * np.pi * np.fft.fftfreq(psi.n, psi.dq)
    dt = t_final / steps
    half_v = np.exp(-0.5j * dt * potential(psi.q) / hbar)
    kinetic = np.exp(-1j * dt * hbar * k**2 / (2 * mass))
    v = np.asarray(psi.values, complex)
    for _ in range(steps):
        v = half_v * np.fft.ifft(kinetic * np.fft.fft(half_v * v))
    return Wavefunction(psi.q_min, psi.q_max, v)


def run(n: int, t_final: float, steps: int) -> float:
    grid = PhaseSpaceGrid(-7.0, 7.0, -10.0, 10.0, n, n)
    U = PolynomialPotential(POTENTIAL)
    psi0 = cat_wavefunction(grid, 1.5)
    exact = weyl_transform(split_step(psi0, U, t_final, steps), grid)
    op = build_evolution_operator(U, 1.0, 1.0, LindbladParams(), grid)
    got = evolve(weyl_transform(psi0, grid), op, EvolutionConfig(t_final)).final
    return float(np.max(np.abs(got.values - exact.values)))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--t-final", type=float, default=0.5)
    ap.add_argument("--steps", type=int, default=4000, help="split-step time steps")
    args = ap.parse_args()
    err = run(args.n, args.t_final, args.steps)
    print(f"n={args.n} t={args.t_final} max |W_wavelet - W_exact| = {err:.3e}")


if __name__ == "__main__":
    main()
