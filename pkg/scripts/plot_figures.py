"""Render snapshots and diagnostics written by `wavewigner simulate`.

    wavewigner simulate --config configs/waveleton.cfg
    python scripts/plot_figures.py output/waveleton

Writes wigner.png (one panel per snapshot) and diagnostics.png next to the
run's files. Needs the ``plots`` extra (matplotlib).
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wavewigner import read_snapshot
from wavewigner.serialization import read_diagnostics


def plot_snapshots(run_dir: Path, limit: int = 6) -> Path:
    files = sorted(run_dir.glob("snapshot_*.txt"))
    if not files:
        raise SystemExit(f"no snapshots in {run_dir}")
    if len(files) > limit:
        files = [files[i] for i in np.linspace(0, len(files) - 1, limit).round().astype(int)]
    states = [read_snapshot(f) for f in files]
    vmax = max(np.max(np.abs(s.values)) for s in states)
    fig, axes = plt.subplots(1, len(states), figsize=(3.2 * len(states), 3.2), squeeze=False)
    for ax, s in zip(axes[0], states):
        g = s.grid
        ax.imshow(s.values.T, origin="lower", cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                  extent=(g.q_min, g.q_max, g.p_min, g.p_max), aspect="auto")
        ax.set_title(f"t = {s.time:.2f}")
        ax.set_xlabel("q")
    axes[0][0].set_ylabel("p")
    fig.tight_layout()
    out = run_dir / "wigner.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_diagnostics(run_dir: Path) -> Path:
    d = read_diagnostics(run_dir / "diagnostics.csv")
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
    for ax, key in zip(axes, ("negativity", "purity", "q_var")):
        ax.plot(d["t"], d[key])
        ax.set_xlabel("t")
        ax.set_title(key)
    fig.tight_layout()
    out = run_dir / "diagnostics.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("run_dir", type=Path)
    args = ap.parse_args()
    for path in (plot_snapshots(args.run_dir), plot_diagnostics(args.run_dir)):
        print(path)


if __name__ == "__main__":
    main()
