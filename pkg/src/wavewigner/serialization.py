"""Plain-text snapshot, wavefunction and diagnostics files."""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .phase_space import PhaseSpaceGrid, Wavefunction, WignerState
from .time_evolution import DIAGNOSTIC_FIELDS


class SnapshotFormatError(ValueError):
    pass


def format_float(v: float) -> str:
    """17 significant digits with a bare exponent, e.g. ``0.0000000000000000e0``."""
    mantissa, exp = f"{v:.16e}".split("e")
    return f"{mantissa}e{int(exp)}"


def write_snapshot(state: WignerState, path) -> None:
    g = state.grid
    lines = [
        f"# t={format_float(state.time)}",
        f"# q: {format_float(g.q_min)} {format_float(g.q_max)} {g.nq}",
        f"# p: {format_float(g.p_min)} {format_float(g.p_max)} {g.np}",
        f"# hbar={format_float(g.hbar)}",
    ]
    lines.extend(" ".join(format_float(v) for v in row) for row in state.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_HEADER = [
    re.compile(r"^# t=(\S+)$"),
    re.compile(r"^# q: (\S+) (\S+) (\d+)$"),
    re.compile(r"^# p: (\S+) (\S+) (\d+)$"),
    re.compile(r"^# hbar=(\S+)$"),
]


def read_snapshot(path) -> WignerState:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 4:
        raise SnapshotFormatError(f"{path}: expected 4 header lines")
    groups = []
    for i, (pattern, line) in enumerate(zip(_HEADER, lines[:4]), start=1):
        m = pattern.match(line.strip())
        if not m:
            raise SnapshotFormatError(f"{path}: malformed header line {i}: {line!r}")
        groups.append(m.groups())
    try:
        t = float(groups[0][0])
        q_min, q_max, nq = float(groups[1][0]), float(groups[1][1]), int(groups[1][2])
        p_min, p_max, np_ = float(groups[2][0]), float(groups[2][1]), int(groups[2][2])
        hbar = float(groups[3][0])
        values = np.array([[float(x) for x in row.split()] for row in lines[4:] if row.strip()])
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: {exc}") from exc
    if values.shape != (nq, np_):
        raise SnapshotFormatError(f"{path}: data shape {values.shape} does not match header ({nq}, {np_})")
    grid = PhaseSpaceGrid(q_min, q_max, p_min, p_max, nq, np_, hbar)
    return WignerState(grid, values, t)


def write_wavefunction(psi: Wavefunction, path) -> None:
    lines = [f"# q: {format_float(psi.q_min)} {format_float(psi.q_max)} {psi.n}"]
    lines.extend(f"{format_float(v.real)} {format_float(v.imag)}" for v in psi.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_wavefunction(path) -> Wavefunction:
    """Header ``# q: <min> <max> <n>`` then n lines ``<re> [<im>]``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    m = _HEADER[1].match(lines[0].strip()) if lines else None
    if not m:
        raise SnapshotFormatError(f"{path}: first line must be '# q: <min> <max> <n>'")
    q_min, q_max, n = float(m.group(1)), float(m.group(2)), int(m.group(3))
    rows = [r.split() for r in lines[1:] if r.strip() and not r.lstrip().startswith("#")]
    if len(rows) != n or any(len(r) not in (1, 2) for r in rows):
        raise SnapshotFormatError(f"{path}: expected {n} rows of '<re> [<im>]'")
    try:
        values = np.array([float(r[0]) + 1j * (float(r[1]) if len(r) == 2 else 0.0) for r in rows])
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: {exc}") from exc
    return Wavefunction(q_min, q_max, values)


def write_diagnostics(records: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAGNOSTIC_FIELDS)
        for rec in records:
            writer.writerow([repr(float(rec[k])) for k in DIAGNOSTIC_FIELDS])


def read_diagnostics(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in DIAGNOSTIC_FIELDS}
