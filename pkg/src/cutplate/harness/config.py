"""Run configuration: TOML files validated against a fixed schema.

Layout::

    name = "cross"
    [mesh]      n = 16 | file = "unstructured.msh", degree = 2
    [plate]     E, nu, t, bc, beta0            (omit for beams alone)
    [load]      kind = "manufactured" | "biharmonic_f" | "custom" | "none", expr
    [[beam]]    p0, p1, E, b, t, cross_section, plate_thickness, ends,
                beta0, beta_tilde0, gamma1, gamma2, load
    [solver]    method, tol, seed, samples
    [output]    dir

Unknown sections or keys raise :class:`ConfigError`. Expressions (custom
plate load in ``x, y``; beam load in ``s``) accept numbers, arithmetic,
``pi``, ``e`` and a few numpy functions.
"""
import ast
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..beam import BeamSpec
from ..plate import PlateSpec

LOAD_KINDS = ("manufactured", "biharmonic_f", "custom", "none")
SOLVERS = ("direct", "cg")


class ConfigError(ValueError):
    pass


_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
    ast.Div: np.divide, ast.Pow: np.power, ast.Mod: np.mod,
}
_UNARY = {ast.UAdd: np.positive, ast.USub: np.negative}


def compile_expression(text, variables):
    """Vectorized function of ``variables`` from an arithmetic expression string.

    >>> f = compile_expression("x * (1 - y)", ("x", "y"))
    >>> float(f(0.5, 0.5))
    0.25
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ConfigError(f"expression must be a string or number, got {text!r}")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    variables = tuple(variables)

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in _CONSTS:
                raise ConfigError(f"unknown name {node.id!r} in {text!r}; allowed: {variables + tuple(_CONSTS)}")
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return check(node.operand)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if node.keywords or len(node.args) != 1:
                raise ConfigError(f"{node.func.id}() takes one positional argument in {text!r}")
            return check(node.args[0])
        raise ConfigError(f"unsupported syntax {type(node).__name__} in {text!r}")

    check(tree)

    def evaluate(node, env):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, env)
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, env), evaluate(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](evaluate(node.operand, env))
        return _FUNCS[node.func.id](evaluate(node.args[0], env))

    def f(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments, got {len(args)}")
        env = dict(zip(variables, (np.asarray(a, dtype=np.float64) for a in args)))
        shape = np.broadcast(*env.values()).shape if env else ()
        return np.broadcast_to(evaluate(tree, env), shape).astype(np.float64)

    f.expression = text
    return f


@dataclass(frozen=True, eq=False)
class RunConfig:
    name: str = "run"
    mesh_n: Optional[int] = 16
    mesh_file: Optional[Path] = None
    degree: int = 2
    plate: Optional[PlateSpec] = None
    beams: tuple = ()
    load_kind: str = "none"
    load_expr: Optional[str] = None
    solver: str = "direct"
    tol: float = 1e-10
    seed: int = 0
    samples: int = 100
    output_dir: Path = field(default_factory=lambda: Path("out"))

    def with_updates(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


_SCHEMA = {
    "mesh": {"n", "file", "degree"},
    "plate": {"E", "nu", "t", "bc", "beta0"},
    "load": {"kind", "expr"},
    "beam": {"p0", "p1", "E", "b", "t", "cross_section", "plate_thickness", "ends",
             "beta0", "beta_tilde0", "gamma1", "gamma2", "load"},
    "solver": {"method", "tol", "seed", "samples"},
    "output": {"dir"},
}


def _check_keys(table, allowed, where):
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) {extra} in [{where}]; allowed: {sorted(allowed)}")


def _number(table, key, where, default=None, kind=float):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing required key {key!r} in [{where}]")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[{where}] {key} must be a number, got {val!r}")
    if kind is int:
        if int(val) != val:
            raise ConfigError(f"[{where}] {key} must be an integer, got {val!r}")
        return int(val)
    return float(val)


def _point(val, where, key):
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
        raise ConfigError(f"[{where}] {key} must be a list of two numbers, got {val!r}")
    return (float(val[0]), float(val[1]))


def _beam(table, i, plate):
    where = f"beam #{i + 1}"
    _check_keys(table, _SCHEMA["beam"], where)
    for key in ("p0", "p1"):
        if key not in table:
            raise ConfigError(f"missing required key {key!r} in [{where}]")
    ends = table.get("ends", ["free", "free"])
    if isinstance(ends, str):
        ends = [ends, ends]
    standalone = plate is None
    tp = table.get("plate_thickness", plate.t if plate is not None else None)
    load = table.get("load")
    load_fn = compile_expression(load, ("s",)) if load is not None else None
    try:
        return BeamSpec(
            p0=_point(table["p0"], where, "p0"),
            p1=_point(table["p1"], where, "p1"),
            E=_number(table, "E", where),
            b=_number(table, "b", where),
            t=_number(table, "t", where),
            cross_section=table.get("cross_section", "standard"),
            plate_thickness=tp,
            ends=tuple(ends),
            beta0=_number(table, "beta0", where, 16.0),
            beta_tilde0=_number(table, "beta_tilde0", where, 100.0),
            gamma1=_number(table, "gamma1", where, 0.1 if standalone else 0.0),
            gamma2=_number(table, "gamma2", where, 0.1 if standalone else 0.0),
            load=load_fn,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[{where}] {exc}") from None


def parse_config(data, base_dir="."):
    """Validate a parsed TOML mapping into a :class:`RunConfig`."""
    base_dir = Path(base_dir)
    _check_keys(data, set(_SCHEMA) | {"name"}, "top level")
    for key, val in data.items():
        if key == "beam":
            if not isinstance(val, list):
                raise ConfigError("beams must be given as [[beam]] tables")
        elif key != "name" and not isinstance(val, dict):
            raise ConfigError(f"[{key}] must be a table")
    name = data.get("name", "run")
    if not isinstance(name, str):
        raise ConfigError("name must be a string")

    mesh = data.get("mesh", {})
    _check_keys(mesh, _SCHEMA["mesh"], "mesh")
    if "n" in mesh and "file" in mesh:
        raise ConfigError("[mesh] takes either n or file, not both")
    mesh_file = None
    mesh_n = None
    if "file" in mesh:
        if not isinstance(mesh["file"], str):
            raise ConfigError("[mesh] file must be a string")
        mesh_file = Path(mesh["file"])
        if not mesh_file.is_absolute():
            mesh_file = base_dir / mesh_file
    else:
        mesh_n = _number(mesh, "n", "mesh", 16, int)
        if mesh_n < 1:
            raise ConfigError("[mesh] n must be >= 1")
    degree = _number(mesh, "degree", "mesh", 2, int)
    if degree < 2:
        raise ConfigError("[mesh] degree must be >= 2")

    plate = None
    if "plate" in data:
        p = data["plate"]
        _check_keys(p, _SCHEMA["plate"], "plate")
        try:
            plate = PlateSpec(
                E=_number(p, "E", "plate"),
                nu=_number(p, "nu", "plate"),
                t=_number(p, "t", "plate"),
                bc=p.get("bc", "clamped"),
                beta0=_number(p, "beta0", "plate", 16.0),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"[plate] {exc}") from None

    beams = tuple(_beam(b, i, plate) for i, b in enumerate(data.get("beam", [])))
    if plate is None and not beams:
        raise ConfigError("config needs a [plate] table, at least one [[beam]], or both")

    load = data.get("load", {})
    _check_keys(load, _SCHEMA["load"], "load")
    kind = load.get("kind", "none")
    if kind not in LOAD_KINDS:
        raise ConfigError(f"[load] kind must be one of {LOAD_KINDS}, got {kind!r}")
    expr = load.get("expr")
    if kind == "custom":
        if expr is None:
            raise ConfigError("[load] kind = 'custom' needs expr")
        compile_expression(expr, ("x", "y"))
    elif expr is not None:
        raise ConfigError(f"[load] expr is only used with kind = 'custom' (got kind = {kind!r})")
    if kind in ("manufactured", "biharmonic_f", "custom") and plate is None:
        raise ConfigError(f"[load] kind = {kind!r} needs a [plate]")

    solver = data.get("solver", {})
    _check_keys(solver, _SCHEMA["solver"], "solver")
    method = solver.get("method", "direct")
    if method not in SOLVERS:
        raise ConfigError(f"[solver] method must be one of {SOLVERS}, got {method!r}")
    tol = _number(solver, "tol", "solver", 1e-10)
    if not tol > 0:
        raise ConfigError("[solver] tol must be > 0")
    seed = _number(solver, "seed", "solver", 0, int)
    samples = _number(solver, "samples", "solver", 100, int)
    if samples < 1:
        raise ConfigError("[solver] samples must be >= 1")

    output = data.get("output", {})
    _check_keys(output, _SCHEMA["output"], "output")
    out_dir = Path(output.get("dir", os.path.join("out", name)))

    return RunConfig(
        name=name, mesh_n=mesh_n, mesh_file=mesh_file, degree=degree, plate=plate, beams=beams,
        load_kind=kind, load_expr=expr, solver=method, tol=tol, seed=seed, samples=samples,
        output_dir=out_dir,
    )


def loads_config(text, base_dir="."):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return parse_config(data, base_dir)


def load_config(path):
    path = Path(path)
    return loads_config(path.read_text(), path.parent)
