"""TOML run configuration: parsing, serialization, and system building.

The config surface admits the declared generator families only: coefficient
matrices built from generators (scalar multiple of the identity, diagonal, or
a constant matrix), affine Q(t, u) = c*u + d(t), and affine
G(t, u, v) = h(t) + c1*u + c2*v with h from generators. Arbitrary callables
remain available through the library API.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .core import ConfigError, GeneratorSpec, SystemSpec, TimeWindow, eval_generator
from .transition import TransitionKernel

__all__ = [
    "MatrixConfig",
    "QConfig",
    "GConfig",
    "SystemConfig",
    "TruncationConfig",
    "SolverConfig",
    "OutputsConfig",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "build_system",
    "build_kernel",
]

MATRIX_FORMS = ("scalar_identity", "diagonal", "constant")


@dataclass(frozen=True)
class MatrixConfig:
    form: str
    gen: GeneratorSpec | None = None
    gens: tuple[GeneratorSpec, ...] | None = None
    rows: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.form not in MATRIX_FORMS:
            raise ConfigError(f"system.A.form must be one of {MATRIX_FORMS}")
        if self.form == "scalar_identity" and self.gen is None:
            raise ConfigError("system.A.gen required for form scalar_identity")
        if self.form == "diagonal" and not self.gens:
            raise ConfigError("system.A.gens required for form diagonal")
        if self.form == "constant" and not self.rows:
            raise ConfigError("system.A.rows required for form constant")


@dataclass(frozen=True)
class QConfig:
    c: float = 0.0
    d: tuple[GeneratorSpec, ...] | None = None


@dataclass(frozen=True)
class GConfig:
    c1: float = 0.0
    c2: float = 0.0
    h: tuple[GeneratorSpec, ...] | None = None


@dataclass(frozen=True)
class SystemConfig:
    n: int
    delay: int
    E1: float
    E2: float
    a: float
    b: float
    A: MatrixConfig
    Q: QConfig = QConfig()
    G: GConfig = GConfig()

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("system.n must be >= 1")
        if self.delay < 0:
            raise ConfigError("system.delay must be >= 0")


@dataclass(frozen=True)
class TruncationConfig:
    mode: str = "auto"
    n_past: int | None = None
    n_future: int | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "fixed"):
            raise ConfigError("truncation.mode must be 'auto' or 'fixed'")
        if self.mode == "fixed" and (self.n_past is None or self.n_future is None):
            raise ConfigError("fixed truncation needs n_past and n_future")


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 100

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigError("solver.tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("solver.max_iter must be >= 1")


@dataclass(frozen=True)
class OutputsConfig:
    solution: str | None = None
    diagnostics: str | None = None
    report: str | None = None


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig
    window: TimeWindow
    truncation: TruncationConfig = TruncationConfig()
    solver: SolverConfig = SolverConfig()
    outputs: OutputsConfig = OutputsConfig()


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key '{key}' in [{where}]")
    return table[key]


def _gen_from_table(table: dict, where: str) -> GeneratorSpec:
    if not isinstance(table, dict) or "kind" not in table:
        raise ConfigError(f"[{where}] must be a generator table with a 'kind'")
    kind = table["kind"]
    params = {k: v for k, v in table.items() if k != "kind"}
    try:
        return GeneratorSpec(kind, params)
    except ConfigError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def _gen_list(value, where: str) -> tuple[GeneratorSpec, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"[{where}] must be an array of generator tables")
    return tuple(_gen_from_table(t, where) for t in value)


def parse_config(text: str) -> RunConfig:
    """Parse a TOML run configuration; ConfigError on any malformed input."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc

    sys_tbl = _require(data, "system", "")
    a_tbl = _require(sys_tbl, "A", "system")
    form = _require(a_tbl, "form", "system.A")
    gen = _gen_from_table(a_tbl["gen"], "system.A.gen") if "gen" in a_tbl else None
    gens = _gen_list(a_tbl["gens"], "system.A.gens") if "gens" in a_tbl else None
    rows = None
    if "rows" in a_tbl:
        rows = tuple(tuple(float(v) for v in row) for row in a_tbl["rows"])
    matrix = MatrixConfig(form, gen, gens, rows)

    q_tbl = sys_tbl.get("Q", {})
    q = QConfig(
        c=float(q_tbl.get("c", 0.0)),
        d=_gen_list(q_tbl["d"], "system.Q.d") if "d" in q_tbl else None,
    )
    g_tbl = sys_tbl.get("G", {})
    g = GConfig(
        c1=float(g_tbl.get("c1", 0.0)),
        c2=float(g_tbl.get("c2", 0.0)),
        h=_gen_list(g_tbl["h"], "system.G.h") if "h" in g_tbl else None,
    )
    system = SystemConfig(
        n=int(_require(sys_tbl, "n", "system")),
        delay=int(sys_tbl.get("delay", 0)),
        E1=float(_require(sys_tbl, "E1", "system")),
        E2=float(_require(sys_tbl, "E2", "system")),
        a=float(_require(sys_tbl, "a", "system")),
        b=float(_require(sys_tbl, "b", "system")),
        A=matrix,
        Q=q,
        G=g,
    )

    w_tbl = _require(data, "window", "")
    try:
        window = TimeWindow(int(_require(w_tbl, "t_lo", "window")),
                            int(_require(w_tbl, "t_hi", "window")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    t_tbl = data.get("truncation", {})
    truncation = TruncationConfig(
        mode=t_tbl.get("mode", "auto"),
        n_past=int(t_tbl["n_past"]) if "n_past" in t_tbl else None,
        n_future=int(t_tbl["n_future"]) if "n_future" in t_tbl else None,
    )
    s_tbl = data.get("solver", {})
    solver = SolverConfig(
        tol=float(s_tbl.get("tol", 1e-8)),
        max_iter=int(s_tbl.get("max_iter", 100)),
    )
    o_tbl = data.get("outputs", {})
    outputs = OutputsConfig(
        solution=o_tbl.get("solution"),
        diagnostics=o_tbl.get("diagnostics"),
        report=o_tbl.get("report"),
    )
    return RunConfig(system, window, truncation, solver, outputs)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- serialization ------------------------------------------------------------

def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v) if (v == v and abs(v) != float("inf")) else "nan"
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v).__name__}")


def _gen_to_table(gen: GeneratorSpec) -> dict:
    table = {"kind": gen.kind}
    table.update(gen.params)
    return table


def _emit_table(lines: list[str], path: str, table: dict) -> None:
    scalars = {k: v for k, v in table.items() if not isinstance(v, (dict, list)) or
               (isinstance(v, list) and not any(isinstance(x, dict) for x in v))}
    subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
    arrays = {k: v for k, v in table.items()
              if isinstance(v, list) and any(isinstance(x, dict) for x in v)}
    if scalars or not (subtables or arrays):
        lines.append(f"[{path}]")
        for k, v in scalars.items():
            lines.append(f"{k} = {_toml_scalar(v)}")
        lines.append("")
    for k, v in subtables.items():
        _emit_table(lines, f"{path}.{k}", v)
    for k, items in arrays.items():
        for item in items:
            lines.append(f"[[{path}.{k}]]")
            for kk, vv in item.items():
                lines.append(f"{kk} = {_toml_scalar(vv)}")
            lines.append("")


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to TOML; parse(serialize(cfg)) == cfg."""
    sys_tbl: dict = {
        "n": cfg.system.n,
        "delay": cfg.system.delay,
        "E1": cfg.system.E1,
        "E2": cfg.system.E2,
        "a": cfg.system.a,
        "b": cfg.system.b,
    }
    a_tbl: dict = {"form": cfg.system.A.form}
    if cfg.system.A.gen is not None:
        a_tbl["gen"] = _gen_to_table(cfg.system.A.gen)
    if cfg.system.A.gens is not None:
        a_tbl["gens"] = [_gen_to_table(g) for g in cfg.system.A.gens]
    if cfg.system.A.rows is not None:
        a_tbl["rows"] = [list(r) for r in cfg.system.A.rows]
    sys_tbl["A"] = a_tbl
    q_tbl: dict = {"c": cfg.system.Q.c}
    if cfg.system.Q.d is not None:
        q_tbl["d"] = [_gen_to_table(g) for g in cfg.system.Q.d]
    sys_tbl["Q"] = q_tbl
    g_tbl: dict = {"c1": cfg.system.G.c1, "c2": cfg.system.G.c2}
    if cfg.system.G.h is not None:
        g_tbl["h"] = [_gen_to_table(g) for g in cfg.system.G.h]
    sys_tbl["G"] = g_tbl

    doc: dict = {
        "system": sys_tbl,
        "window": {"t_lo": cfg.window.t_lo, "t_hi": cfg.window.t_hi},
        "truncation": {
            "mode": cfg.truncation.mode,
            **({"n_past": cfg.truncation.n_past} if cfg.truncation.n_past is not None else {}),
            **({"n_future": cfg.truncation.n_future} if cfg.truncation.n_future is not None else {}),
        },
        "solver": {"tol": cfg.solver.tol, "max_iter": cfg.solver.max_iter},
    }
    outs = {k: v for k, v in (
        ("solution", cfg.outputs.solution),
        ("diagnostics", cfg.outputs.diagnostics),
        ("report", cfg.outputs.report),
    ) if v is not None}
    if outs:
        doc["outputs"] = outs

    lines: list[str] = []
    for key, table in doc.items():
        _emit_table(lines, key, table)
    return "\n".join(lines).rstrip() + "\n"


# -- system building ---------------------------------------------------------

def _vector_from_gens(gens, n: int, label: str):
    if gens is None:
        zero = np.zeros(n)
        return lambda t: zero
    if len(gens) != n:
        raise ConfigError(f"{label} needs {n} generators, got {len(gens)}")
    return lambda t: np.array([eval_generator(g, t) for g in gens])


def build_system(cfg: SystemConfig) -> SystemSpec:
    """Close a SystemSpec over the configured generator families."""
    n = cfg.n
    m = cfg.A
    if m.form == "scalar_identity":
        eye = np.eye(n)
        a_fn = lambda t, g=m.gen: eval_generator(g, t) * eye
    elif m.form == "diagonal":
        if len(m.gens) != n:
            raise ConfigError(f"system.A.gens needs {n} generators, got {len(m.gens)}")
        a_fn = lambda t, gs=m.gens: np.diag([eval_generator(g, t) for g in gs])
    else:
        rows = np.array(m.rows, dtype=float)
        if rows.shape != (n, n):
            raise ConfigError(f"system.A.rows has shape {rows.shape}, expected {(n, n)}")
        a_fn = lambda t, mat=rows: mat

    d_fn = _vector_from_gens(cfg.Q.d, n, "system.Q.d")
    cq = cfg.Q.c
    q_fn = lambda t, u: cq * u + d_fn(t)

    h_fn = _vector_from_gens(cfg.G.h, n, "system.G.h")
    c1, c2 = cfg.G.c1, cfg.G.c2
    g_fn = lambda t, u, v: h_fn(t) + c1 * u + c2 * v

    delay = cfg.delay
    return SystemSpec(
        n=n,
        A=a_fn,
        g=lambda t: delay,
        Q=q_fn,
        G=g_fn,
        E1=cfg.E1,
        E2=cfg.E2,
        a=cfg.a,
        b=cfg.b,
    )


def build_kernel(cfg: SystemConfig, spec: SystemSpec, t0: int = 0) -> TransitionKernel:
    """Kernel for the configured system; constant matrices take the Putzer path."""
    constant = None
    if cfg.A.form == "constant":
        constant = np.array(cfg.A.rows, dtype=float)
    return TransitionKernel(spec, t0=t0, constant_matrix=constant)
