"""Command-line driver: ``wavewigner {simulate,transform,oracle,sweep-levels}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, StateSpec, format_config, load_config
from .ensemble import WignerEnsemble, evolve_ensemble, mix
from .moyal_rhs import LindbladParams, PolynomialPotential, build_evolution_operator
from .oracle import MOMENT_NAMES, MomentOdeSystem, dense_reference_evolve, moment_ode_solve, state_moments
from .phase_space import (
    DomainCoverageError,
    PhaseSpaceGrid,
    WignerState,
    cat_wavefunction,
    coherent_wavefunction,
    eigenstate_wavefunction,
    weyl_transform,
)
from .serialization import read_wavefunction, write_diagnostics, write_snapshot
from .time_evolution import (
    CutoffNotReachedError,
    EvolutionConfig,
    StabilityError,
    diagnostics,
    level_refinement_run,
    resolve_dt,
)
from .wavelet_basis import daubechies_filters

log = logging.getLogger("wavewigner")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


# builders shared with scripts and tests

def grid_from_config(cfg: RunConfig) -> PhaseSpaceGrid:
    g = cfg.grid
    return PhaseSpaceGrid(g.q_min, g.q_max, g.p_min, g.p_max, g.nq, g.np, cfg.physics.hbar)


def state_from_spec(spec: StateSpec, grid: PhaseSpaceGrid, mass: float) -> WignerState:
    m = mass if math.isfinite(mass) else 1.0
    if spec.kind == "gaussian":
        psi = coherent_wavefunction(grid, 0.0, 0.0, spec.omega, m)
    elif spec.kind == "coherent":
        psi = coherent_wavefunction(grid, spec.q0, spec.p0, spec.omega, m)
    elif spec.kind == "cat":
        psi = cat_wavefunction(grid, spec.q0, spec.p0, spec.phase, spec.omega, m)
    elif spec.kind == "eigenstate":
        psi = eigenstate_wavefunction(grid, spec.n, spec.omega, m)
    else:
        raise ValueError(f"cannot build a single state of kind {spec.kind!r}")
    return weyl_transform(psi, grid)


def members_from_config(cfg: RunConfig) -> list[tuple[float, StateSpec]]:
    ini = cfg.initial
    if ini.kind == "mixture":
        return list(ini.members)
    return [(1.0, StateSpec(ini.kind, ini.q0, ini.p0, ini.phase, ini.n, ini.omega))]


def ensemble_from_config(cfg: RunConfig, grid: PhaseSpaceGrid | None = None) -> WignerEnsemble:
    grid = grid or grid_from_config(cfg)
    members = members_from_config(cfg)
    states = [state_from_spec(s, grid, cfg.physics.mass) for _, s in members]
    return WignerEnsemble.from_states([w for w, _ in members], states, normalize_members=False)


def operator_from_config(cfg: RunConfig, grid: PhaseSpaceGrid | None = None):
    ph, g = cfg.physics, cfg.grid
    basis = daubechies_filters(g.wavelet_order) if g.wavelet_order else None
    return build_evolution_operator(
        PolynomialPotential(ph.potential), ph.mass, ph.hbar, LindbladParams(ph.gamma, ph.diffusion),
        grid or grid_from_config(cfg), basis=basis, coarsest_level=g.coarsest_level, epsilon_op=g.epsilon_op,
    )


def evolution_config(cfg: RunConfig, **overrides) -> EvolutionConfig:
    e = cfg.evolution
    base = EvolutionConfig(e.t_final, e.dt, e.epsilon_level, e.min_levels, e.max_levels,
                           e.snapshot_stride, e.diagnostics_stride)
    return replace(base, **overrides)


def simulate(cfg: RunConfig, out_dir: Path) -> list[dict]:
    """Evolve every mixture member, write diagnostics.csv and snapshots of the mixed state."""
    grid = grid_from_config(cfg)
    ens = ensemble_from_config(cfg, grid)
    op = operator_from_config(cfg, grid)
    e = cfg.evolution
    stride = math.gcd(e.diagnostics_stride, e.snapshot_stride) if e.snapshot_stride else e.diagnostics_stride
    econf = evolution_config(cfg, snapshot_stride=stride, diagnostics_stride=stride)
    dt, steps = resolve_dt(econf, op)
    log.info("dt = %.6g, %d steps", dt, steps)
    trajs = evolve_ensemble(ens, op, econf)
    step_numbers = [0, *range(stride, steps, stride)] + ([steps] if steps else [])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.cfg").write_text(format_config(cfg), encoding="utf-8")
    records = []
    for k, n in enumerate(step_numbers):
        members = [t.snapshots[k] for t in trajs]
        mixed = members[0].with_values(sum(m.weight * s.values for m, s in zip(ens.members, members)))
        last = k == len(step_numbers) - 1
        if n % e.diagnostics_stride == 0 or last:
            rec = diagnostics(mixed)
            rec["fock_norm"] = float(sum(np.sum(s.values**2) for s in members) * grid.cell)
            records.append(rec)
        if "snapshots" in cfg.output.formats and e.snapshot_stride and (n % e.snapshot_stride == 0 or last):
            write_snapshot(mixed, out_dir / f"snapshot_{n:06d}.txt")
    if "diagnostics" in cfg.output.formats:
        write_diagnostics(records, out_dir / "diagnostics.csv")
    return records


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output.directory)
    records = simulate(cfg, out)
    last = records[-1]
    print(f"t={last['t']:.6g} norm={last['norm']:.12f} purity={last['purity']:.6f} "
          f"negativity={last['negativity']:.6f} -> {out}")
    return EXIT_OK


def _cmd_transform(args) -> int:
    psi = read_wavefunction(args.input)
    grid = PhaseSpaceGrid(psi.q_min, psi.q_max, args.p_min, args.p_max, psi.n, args.np, args.hbar)
    state = weyl_transform(psi, grid, check=not args.no_check)
    write_snapshot(state, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    initial = mix(ensemble_from_config(cfg))
    ph, e = cfg.physics, cfg.evolution
    if not args.moments_only:
        traj = dense_reference_evolve(initial, ph.potential, ph.mass, ph.hbar, e.t_final, e.dt,
                                      ph.gamma, ph.diffusion, record_every=e.diagnostics_stride)
        write_diagnostics(traj.diagnostics, out / "oracle_diagnostics.csv")
        print(f"dense reference: {len(traj.diagnostics)} records -> {out / 'oracle_diagnostics.csv'}")
    if len(ph.potential) <= 3:
        system = MomentOdeSystem.from_potential(ph.potential, ph.mass, ph.gamma, ph.diffusion)
        times = np.linspace(0.0, e.t_final, args.moment_points)
        sol = moment_ode_solve(system, state_moments(initial), times)
        with open(out / "moments.csv", "w", encoding="utf-8") as fh:
            fh.write(",".join(("t", *MOMENT_NAMES)) + "\n")
            for t, row in zip(times, sol):
                fh.write(",".join(repr(float(x)) for x in (t, *row)) + "\n")
        print(f"moment ODE: {len(times)} rows -> {out / 'moments.csv'}")
    else:
        print("moment ODE skipped: closure needs a potential of degree <= 2")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    overrides = {"snapshot_stride": 0, "diagnostics_stride": 10**9}
    if args.epsilon is not None:
        overrides["epsilon_level"] = args.epsilon
    econf = evolution_config(cfg, **overrides)
    base = grid_from_config(cfg)
    try:
        n, diffs = level_refinement_run(
            lambda g: _mixed_initial(cfg, g), lambda g: operator_from_config(cfg, g), base, econf)
    except CutoffNotReachedError as exc:
        _print_table(exc.differences)
        raise
    _print_table(diffs)
    print(f"chosen N = {n} (2^{n} points per axis, epsilon = {econf.epsilon_level:g})")
    return EXIT_OK


def _mixed_initial(cfg, grid):
    return mix(ensemble_from_config(cfg, grid))


def _print_table(diffs):
    print(f"{'N':>3}  ||W^(N+1) - W^N||")
    for n, d in diffs:
        print(f"{n:>3}  {d:.6e}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wavewigner", description="Wavelet Wigner-function solver")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="evolve a configured state")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="output directory (overrides [output] directory)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("transform", help="Weyl-transform a wavefunction file into a snapshot")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--p-min", type=float, default=-8.0)
    p.add_argument("--p-max", type=float, default=8.0)
    p.add_argument("--np", type=int, default=256)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--no-check", action="store_true", help="skip the coverage/normalization checks")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("oracle", help="run the dense finite-difference and moment references")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.add_argument("--moments-only", action="store_true")
    p.add_argument("--moment-points", type=int, default=101)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sweep-levels", help="refine levels until ||W^(N+1) - W^N|| <= epsilon")
    p.add_argument("--config", required=True)
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=_cmd_sweep)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error in {getattr(args, 'config', '?')}:\n{exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StabilityError, DomainCoverageError, CutoffNotReachedError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_cli())
