"""Run configuration: a sectioned ``key = value`` text format.

Sections: [physics], [initial], [grid], [evolution], [output]. ``#`` starts a
comment. Every violation is reported with its line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields

SECTIONS = ("physics", "initial", "grid", "evolution", "output")
REQUIRED_SECTIONS = ("physics", "initial", "grid", "evolution")
INITIAL_KINDS = ("gaussian", "coherent", "cat", "eigenstate", "mixture")
WEIGHT_TOLERANCE = 1e-12


class ConfigError(ValueError):
    def __init__(self, problems: list[tuple[int | None, str]]):
        # file order; problems without a line (missing sections) go last
        self.problems = sorted(problems, key=lambda pr: (pr[0] is None, pr[0] or 0))
        super().__init__("\n".join(_fmt(line, msg) for line, msg in self.problems))


def _fmt(line, msg):
    return f"line {line}: {msg}" if line else msg


@dataclass(frozen=True)
class PhysicsSpec:
    potential: tuple = (0.0, 0.0, 0.5)
    mass: float = 1.0
    hbar: float = 1.0
    gamma: float = 0.0
    diffusion: float = 0.0


@dataclass(frozen=True)
class StateSpec:
    kind: str = "gaussian"
    q0: float = 0.0
    p0: float = 0.0
    phase: float = 0.0
    n: int = 0
    omega: float = 1.0

    def label(self) -> str:
        if self.kind == "gaussian":
            return "gaussian()"
        if self.kind == "coherent":
            return f"coherent({self.q0!r}, {self.p0!r})"
        if self.kind == "cat":
            return f"cat({self.q0!r}, {self.p0!r}, {self.phase!r})"
        return f"eigenstate({self.n})"


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "gaussian"
    q0: float = 0.0
    p0: float = 0.0
    phase: float = 0.0
    n: int = 0
    omega: float = 1.0
    members: tuple = ()  # (weight, StateSpec)


@dataclass(frozen=True)
class GridSpec:
    q_min: float = -8.0
    q_max: float = 8.0
    p_min: float = -8.0
    p_max: float = 8.0
    nq: int = 256
    np: int = 256
    coarsest_level: int = 2
    wavelet_order: int = 0  # 0 picks the default for the derivatives in use
    epsilon_op: float = 0.0


@dataclass(frozen=True)
class EvolutionSpec:
    t_final: float = 1.0
    dt: object = "auto"
    epsilon_level: float = 1e-4
    min_levels: int = 5
    max_levels: int = 8
    snapshot_stride: int = 0
    diagnostics_stride: int = 10


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "output"
    formats: tuple = ("diagnostics", "snapshots")


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsSpec = field(default_factory=PhysicsSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    evolution: EvolutionSpec = field(default_factory=EvolutionSpec)
    output: OutputSpec = field(default_factory=OutputSpec)


_SECTION_TYPES = {
    "physics": PhysicsSpec,
    "initial": InitialSpec,
    "grid": GridSpec,
    "evolution": EvolutionSpec,
    "output": OutputSpec,
}

_MEMBER_RE = re.compile(r"^\s*([-+0-9.eE]+)\s+([a-z]+)\s*\(([^)]*)\)\s*$")


def _to_float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _to_int(text: str) -> int:
    return int(text)


def _parse_state(kind: str, args: list[str]) -> StateSpec:
    vals = [_to_float(a) for a in args if a.strip()]
    if kind == "gaussian":
        if vals:
            raise ValueError("gaussian() takes no arguments")
        return StateSpec("gaussian")
    if kind == "coherent":
        if len(vals) != 2:
            raise ValueError("coherent(q0, p0) takes two arguments")
        return StateSpec("coherent", vals[0], vals[1])
    if kind == "cat":
        if len(vals) not in (2, 3):
            raise ValueError("cat(q0, p0[, phase]) takes two or three arguments")
        return StateSpec("cat", vals[0], vals[1], vals[2] if len(vals) == 3 else 0.0)
    if kind == "eigenstate":
        if len(vals) != 1 or vals[0] != int(vals[0]) or not 0 <= vals[0] <= 3:
            raise ValueError("eigenstate(n) needs an integer 0 <= n <= 3")
        return StateSpec("eigenstate", n=int(vals[0]))
    raise ValueError(f"unknown state kind {kind!r}")


def _parse_members(text: str) -> tuple:
    members = []
    for part in text.split(";"):
        if not part.strip():
            continue
        m = _MEMBER_RE.match(part)
        if not m:
            raise ValueError(f"cannot parse mixture member {part.strip()!r}; expected '<weight> kind(args)'")
        members.append((_to_float(m.group(1)), _parse_state(m.group(2), m.group(3).split(","))))
    return tuple(members)


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def _convert(section: str, key: str, raw: str):
    if section == "physics" and key == "potential":
        return tuple(_to_float(t) for t in raw.replace(",", " ").split())
    if section == "initial" and key == "kind":
        if raw not in INITIAL_KINDS:
            raise ValueError(f"initial kind must be one of {', '.join(INITIAL_KINDS)}")
        return raw
    if section == "initial" and key == "members":
        return _parse_members(raw)
    if section == "evolution" and key == "dt":
        return "auto" if raw == "auto" else _to_float(raw)
    if section == "output" and key == "directory":
        return raw
    if section == "output" and key == "formats":
        items = tuple(t.strip() for t in raw.split(",") if t.strip())
        bad = [t for t in items if t not in ("diagnostics", "snapshots")]
        if bad:
            raise ValueError(f"unknown output format(s) {', '.join(bad)}")
        return items
    default = getattr(_SECTION_TYPES[section](), key)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return _to_int(raw)
    return _to_float(raw)


def parse_config(text: str) -> RunConfig:
    problems: list[tuple[int | None, str]] = []
    values: dict[str, dict[str, tuple[int, object]]] = {s: {} for s in SECTIONS}
    seen_sections: dict[str, int] = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                problems.append((lineno, f"malformed section header {line!r}"))
                section = None
                continue
            name = line[1:-1].strip()
            if name not in SECTIONS:
                problems.append((lineno, f"unknown section [{name}]"))
                section = None
                continue
            if name in seen_sections:
                problems.append((lineno, f"section [{name}] repeated (first at line {seen_sections[name]})"))
            seen_sections[name] = lineno
            section = name
            continue
        if "=" not in line:
            problems.append((lineno, f"expected 'key = value', got {line!r}"))
            continue
        key, raw = (t.strip() for t in line.split("=", 1))
        if section is None:
            problems.append((lineno, f"key {key!r} outside of a known section"))
            continue
        known = {f.name for f in fields(_SECTION_TYPES[section])}
        if key not in known:
            problems.append((lineno, f"unknown key {key!r} in [{section}]"))
            continue
        if key in values[section]:
            problems.append((lineno, f"key {key!r} repeated in [{section}]"))
        try:
            values[section][key] = (lineno, _convert(section, key, raw))
        except ValueError as exc:
            problems.append((lineno, f"[{section}] {key}: {exc}"))
    for name in REQUIRED_SECTIONS:
        if name not in seen_sections:
            problems.append((None, f"missing section [{name}]"))

    specs = {}
    for name, cls in _SECTION_TYPES.items():
        kwargs = {k: v for k, (_, v) in values[name].items()}
        specs[name] = cls(**kwargs)
    cfg = RunConfig(**specs)
    problems.extend(_validate(cfg, values, seen_sections))
    if problems:
        raise ConfigError(problems)
    return cfg


def _validate(cfg: RunConfig, values, seen) -> list[tuple[int | None, str]]:
    out = []

    def line(section, key):
        return values[section].get(key, (seen.get(section), None))[0]

    ph = cfg.physics
    if not ph.potential:
        out.append((line("physics", "potential"), "[physics] potential needs at least one coefficient"))
    if not ph.mass > 0:
        out.append((line("physics", "mass"), "[physics] mass must be positive (inf disables transport)"))
    if not ph.hbar > 0:
        out.append((line("physics", "hbar"), "[physics] hbar must be positive"))
    for key in ("gamma", "diffusion"):
        if getattr(ph, key) < 0:
            out.append((line("physics", key), f"[physics] {key} must be non-negative"))

    g = cfg.grid
    for key in ("nq", "np"):
        n = getattr(g, key)
        if not _is_pow2(n):
            out.append((line("grid", key), f"[grid] {key} = {n} is not a power of two"))
        elif not 8 <= n <= 4096:
            out.append((line("grid", key), f"[grid] {key} must lie in 8..4096"))
    if not g.q_max > g.q_min:
        out.append((line("grid", "q_max"), "[grid] q_max must exceed q_min"))
    if not g.p_max > g.p_min:
        out.append((line("grid", "p_max"), "[grid] p_max must exceed p_min"))
    if g.coarsest_level < 0:
        out.append((line("grid", "coarsest_level"), "[grid] coarsest_level must be >= 0"))
    if not 0 <= g.wavelet_order <= 10:
        out.append((line("grid", "wavelet_order"), "[grid] wavelet_order must be 0 (auto) or 1..10"))
    if g.epsilon_op < 0:
        out.append((line("grid", "epsilon_op"), "[grid] epsilon_op must be non-negative"))

    ini = cfg.initial
    if ini.kind == "mixture":
        if not ini.members:
            out.append((line("initial", "members"), "[initial] mixture needs members"))
        else:
            ws = [w for w, _ in ini.members]
            if any(w < 0 for w in ws):
                out.append((line("initial", "members"), "[initial] mixture weights must be non-negative"))
            if abs(sum(ws) - 1.0) > WEIGHT_TOLERANCE:
                out.append((line("initial", "members"),
                            f"[initial] mixture weights must satisfy Σ_i w_i = 1, got {sum(ws):.12g}"))
    else:
        if ini.members:
            out.append((line("initial", "members"), "[initial] members are only used with kind = mixture"))
        if ini.kind == "eigenstate" and not 0 <= ini.n <= 3:
            out.append((line("initial", "n"), "[initial] eigenstate n must be in 0..3"))
    if not ini.omega > 0:
        out.append((line("initial", "omega"), "[initial] omega must be positive"))

    ev = cfg.evolution
    if ev.t_final < 0:
        out.append((line("evolution", "t_final"), "[evolution] t_final must be non-negative"))
    if ev.dt != "auto" and not ev.dt > 0:
        out.append((line("evolution", "dt"), "[evolution] dt must be positive or auto"))
    if not 1 <= ev.min_levels <= ev.max_levels <= 12:
        out.append((line("evolution", "max_levels"), "[evolution] need 1 <= min_levels <= max_levels <= 12"))
    if ev.snapshot_stride < 0 or ev.diagnostics_stride < 1:
        out.append((line("evolution", "diagnostics_stride"),
                    "[evolution] snapshot_stride >= 0 and diagnostics_stride >= 1 required"))
    if ev.epsilon_level < 0:
        out.append((line("evolution", "epsilon_level"), "[evolution] epsilon_level must be non-negative"))
    return out


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple) and v and isinstance(v[0], float):
        return " ".join(repr(x) for x in v)
    if isinstance(v, tuple) and v and isinstance(v[0], tuple):
        return "; ".join(f"{w!r} {s.label()}" for w, s in v)
    if isinstance(v, tuple):
        return ", ".join(v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`; every field is written explicitly."""
    lines = []
    for name in SECTIONS:
        spec = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in fields(spec):
            v = getattr(spec, f.name)
            if f.name == "members" and not v:
                continue
            lines.append(f"{f.name} = {_fmt_value(v)}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
