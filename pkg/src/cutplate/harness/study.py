"""Scenario runs, manufactured-solution convergence and the standalone beam check."""
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..beam import BeamSpec, beam_constants
from ..fem import build_space
from ..mesh import generate_structured_unit_square, load_mesh
from ..solver import assemble_reinforced, energy_norms, error_norms, solve
from .config import compile_expression
from .export import export_csv, export_solution_csv, export_vtk, rate_table
from .manufactured import biharmonic_load, grad_exact, hess_exact, manufactured_load, u_exact


@dataclass(frozen=True, eq=False)
class RunResult:
    config: object
    problem: object
    coeffs: np.ndarray
    report: object
    norms: object
    errors: Optional[tuple]
    warnings: tuple

    @property
    def space(self):
        return self.problem.space

    @property
    def max_deflection(self):
        return float(np.max(np.abs(self.coeffs)))

    def deflection_at(self, x, y):
        return float(self.space.evaluate_values(self.coeffs, [[x, y]])[0])


def build_mesh(config):
    if config.mesh_file is not None:
        return load_mesh(Path(config.mesh_file).read_text())
    return generate_structured_unit_square(config.mesh_n)


def plate_load(config):
    kind = config.load_kind
    if kind == "manufactured":
        return manufactured_load(config.plate)
    if kind == "biharmonic_f":
        return biharmonic_load(config.plate)
    if kind == "custom":
        return compile_expression(config.load_expr, ("x", "y"))
    return None


def run(config, mesh=None):
    """Assemble and solve one configured scenario (no files written)."""
    mesh = build_mesh(config) if mesh is None else mesh
    space = build_space(mesh, config.degree)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        problem = assemble_reinforced(space, config.plate, config.beams, load=plate_load(config))
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    coeffs, report = solve(
        problem.system, method=config.solver, tol=config.tol,
        norm_matrix=problem.norm_matrix, samples=config.samples, seed=config.seed,
    )
    norms = energy_norms(space, space.topology, problem.cuts, coeffs, config.plate, config.beams)
    errors = None
    if config.load_kind == "manufactured":
        errors = error_norms(space, coeffs, u_exact, grad_exact, hess_exact, config.plate)
    return RunResult(config, problem, coeffs, report, norms, errors, tuple(str(w.message) for w in caught))


def report_text(result):
    cfg = result.config
    space = result.space
    lines = [
        f"name = {cfg.name}",
        f"mesh = {'file ' + str(cfg.mesh_file) if cfg.mesh_file else f'structured n={cfg.mesh_n}'}",
        f"degree = {space.degree}",
        f"n_dofs = {space.n_dofs}",
        f"h = {space.mesh.h:.6e}",
        f"n_beams = {len(cfg.beams)}",
        f"load = {cfg.load_kind}",
    ]
    if cfg.load_kind == "biharmonic_f" and cfg.plate is not None and cfg.plate.nu > 0:
        lines.append("load_note = C_P*bilap(u*) is the exact clamped load only for nu = 0")
    lines.append(result.report.as_text().rstrip("\n"))
    lines.append(f"energy_norm_plate = {result.norms.plate:.6e}")
    for i, b in enumerate(result.norms.beams):
        lines.append(f"energy_norm_beam_{i} = {b:.6e}")
    lines.append(f"max_abs_deflection = {result.max_deflection:.6e}")
    if result.errors is not None:
        l2, h1, en = result.errors
        lines += [f"error_l2 = {l2:.6e}", f"error_h1 = {h1:.6e}", f"error_energy = {en:.6e}"]
    for w in result.warnings:
        lines.append(f"warning = {w}")
    return "\n".join(lines) + "\n"


def write_artifacts(result, out_dir=None):
    out = Path(out_dir if out_dir is not None else result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_vtk(result.space, result.coeffs, out / "solution.vtk")
    export_solution_csv(result.space, result.coeffs, out / "solution.csv")
    (out / "report.txt").write_text(report_text(result))
    return out


def convergence_study(config, n_list):
    """Manufactured-solution errors on structured meshes ``n_list`` (clamped plate)."""
    if config.load_kind != "manufactured":
        raise ValueError("convergence study needs load kind 'manufactured'")
    if config.plate is None or config.plate.bc != "clamped":
        raise ValueError("convergence study needs a clamped plate")
    if config.beams:
        raise ValueError("convergence study runs the plate without beams")
    ns, hs, l2, en, il2 = [], [], [], [], []
    for n in n_list:
        res = run(config.with_updates(mesh_n=int(n), mesh_file=None))
        space = res.space
        interp = space.interpolate(u_exact)
        ns.append(int(n))
        hs.append(space.mesh.h)
        l2.append(res.errors[0])
        en.append(res.errors[2])
        il2.append(error_norms(space, interp, u_exact, grad_exact, hess_exact)[0])
    table = rate_table(ns, hs, {"l2_error": l2, "energy_error": en})
    table.columns = table.columns + ("interp_l2_error",)
    table.rows = [r + (e,) for r, e in zip(table.rows, il2)]
    return table


def standalone_beam_spec(gamma=0.1, E=1.0, b=0.1, t=0.1, x0=0.499):
    """Clamped-clamped beam x = x0, y in [0, 1] with unit load a * f = 1."""
    area = b * t
    return BeamSpec(
        (x0, 0.0), (x0, 1.0), E=E, b=b, t=t, ends=("clamped", "clamped"),
        gamma1=gamma, gamma2=gamma, load=lambda s: np.full_like(s, 1.0 / area),
    )


def standalone_beam_study(n_list, gamma=0.1, E=1.0, b=0.1, t=0.1, x0=0.499, method="direct", tol=1e-10):
    """Midpoint deflection of a beam with no plate against q L^4 / (384 E I)."""
    spec = standalone_beam_spec(gamma, E, b, t, x0)
    EI = beam_constants(spec)[2]
    exact = spec.length**4 / (384 * EI)
    mid = 0.5 * (np.asarray(spec.p0) + np.asarray(spec.p1))
    ns, hs, vals = [], [], []
    for n in n_list:
        space = build_space(generate_structured_unit_square(int(n)), 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # beam width above h is expected at fine n
            problem = assemble_reinforced(space, None, [spec])
        coeffs, _ = solve(problem.system, method=method, tol=tol)
        ns.append(int(n))
        hs.append(space.mesh.h)
        vals.append(float(space.evaluate_values(coeffs, [mid])[0]))
    vals = np.array(vals)
    table = rate_table(ns, hs, {"midpoint_rel_error": np.abs(vals - exact) / exact})
    table.columns = table.columns + ("midpoint_deflection", "exact")
    table.rows = [r + (float(v), float(exact)) for r, v in zip(table.rows, vals)]
    return table


def write_rates(table, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_csv(table, out / "rates.csv")
    return out / "rates.csv"
