"""Wavelet vs dense finite-difference trajectories for U = 0.1 q^4.

    python scripts/cross_discretization.py --sizes 128 256 512
"""

import argparse

from wavewigner import (
    LindbladParams,
    PhaseSpaceGrid,
    PolynomialPotential,
    build_evolution_operator,
    coherent_wavefunction,
    weyl_transform,
)
from wavewigner.oracle import cross_discretization

POTENTIAL = (0.0, 0.0, 0.0, 0.0, 0.1)


def run(n: int, t_final: float = 1.0, samples: int = 10) -> dict:
    grid = PhaseSpaceGrid(-5.0, 5.0, -12.0, 12.0, n, n, hbar=1.0)
    initial = weyl_transform(coherent_wavefunction(grid, 0.0, 1.0), grid)
    op = build_evolution_operator(PolynomialPotential(POTENTIAL), 1.0, 1.0, LindbladParams(), grid)
    return cross_discretization(initial, op, t_final, samples)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--t-final", type=float, default=1.0)
    args = ap.parse_args()
    for n in args.sizes:
        r = run(n, args.t_final)
        print(f"n={n:4d} steps={r['steps']:6d} max rel L2 diff={r['differences'].max():.3e} "
              f"final={r['differences'][-1]:.3e} wavelet={r['wavelet_seconds']:.1f}s dense={r['dense_seconds']:.1f}s",
              flush=True)


if __name__ == "__main__":
    main()
