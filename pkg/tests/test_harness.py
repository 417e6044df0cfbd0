import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutplate.fem import build_space
from cutplate.harness.cli import main
from cutplate.harness.config import ConfigError, compile_expression, load_config, loads_config
from cutplate.harness.export import RateTable, export_csv, export_vtk, observed_rates, rate_table
from cutplate.harness.study import convergence_study, report_text, run, write_artifacts
from cutplate.mesh import Mesh

from .scenarios import CONFIGS

BASE = """
name = "t"
[mesh]
n = 4
[plate]
E = 100.0
nu = 0.5
t = 0.1
bc = "clamped"
[load]
kind = "manufactured"
"""


def _run_quiet(cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run(cfg)


# ---------------------------------------------------------------- config


def test_parse_minimal_config():
    cfg = loads_config(BASE)
    assert cfg.mesh_n == 4 and cfg.degree == 2 and cfg.plate.bc == "clamped"
    assert cfg.solver == "direct" and cfg.tol == 1e-10 and cfg.seed == 0 and cfg.samples == 100
    assert cfg.beams == ()


@pytest.mark.parametrize(
    "extra, match",
    [
        ("[bogus]\nx = 1\n", "bogus"),
        ("[solver]\nmethod = 'lu'\n", "method"),
        ("[solver]\ntol = -1.0\n", "tol"),
        ("[[beam]]\np0 = [0.5, 0.0]\np1 = [0.5, 1.0]\nE = 1.0\nb = 0.1\nt = 0.1\ncolour = 'red'\n", "colour"),
        ("[[beam]]\np0 = [0.5, 0.0]\np1 = [0.5, 1.0]\nE = 1.0\nb = -0.1\nt = 0.1\n", "beam"),
    ],
)
def test_config_rejects_bad_input(extra, match):
    with pytest.raises(ConfigError, match=match):
        loads_config(BASE + extra)


def test_config_rejects_unknown_top_level_key_and_bad_toml():
    with pytest.raises(ConfigError):
        loads_config("colour = 'red'\n" + BASE)
    with pytest.raises(ConfigError, match="TOML"):
        loads_config("[mesh\n")
    with pytest.raises(ConfigError):
        loads_config(BASE.replace('"manufactured"', '"custom"'))
    with pytest.raises(ConfigError, match="plate"):
        loads_config("[mesh]\nn = 4\n")


def test_mesh_file_is_relative_to_config(tmp_path):
    cfg = load_config(CONFIGS / "free_four_beams_clamped.toml")
    assert cfg.mesh_file.resolve() == (CONFIGS.parent / "meshes" / "unstructured_square.msh").resolve()


@pytest.mark.parametrize(
    "text", ["__import__('os')", "x.real", "open('f')", "[x]", "lambda: 1", "x if y else 1", "z + 1", "sin"]
)
def test_expression_rejects_unsafe_or_unknown(text):
    with pytest.raises(ConfigError):
        compile_expression(text, ("x", "y"))


def test_expression_evaluates_vectorized():
    f = compile_expression("sin(pi * x) * y**2 - 3 % 2 + -x", ("x", "y"))
    x = np.array([0.25, 0.5])
    y = np.array([1.0, 2.0])
    np.testing.assert_allclose(f(x, y), np.sin(np.pi * x) * y**2 - 1 - x)
    assert np.shape(compile_expression("2", ("s",))(np.zeros(5))) == (5,)


# ---------------------------------------------------------------- export


def test_vtk_single_triangle(tmp_path):
    mesh = Mesh.from_arrays([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    V = build_space(mesh, 2)
    export_vtk(V, np.zeros(V.n_dofs), tmp_path / "s.vtk")
    lines = (tmp_path / "s.vtk").read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile")
    assert "POINTS 6 double" in lines
    i = lines.index("CELL_TYPES 1")
    assert lines[i + 1] == "22"
    cell = lines[lines.index("CELLS 1 7") + 1].split()
    pts = np.array([list(map(float, l.split()[:2])) for l in lines[5:11]])
    nodes = pts[[int(c) for c in cell[1:]]]
    expect = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]])
    np.testing.assert_allclose(nodes, expect)
    j = lines.index("LOOKUP_TABLE default")
    assert [float(v) for v in lines[j + 1:]] == [0.0] * 6
    assert "SCALARS deflection double 1" in lines


def test_rate_table_round_trip(tmp_path):
    t = rate_table([8, 16, 32], [0.17, 0.088, 0.044], {"l2_error": [1e-3, 2.6e-4, 6.4e-5]})
    export_csv(t, tmp_path / "r.csv")
    back = RateTable.from_csv((tmp_path / "r.csv").read_text())
    assert back == t
    assert back.columns == ("n", "h", "l2_error", "l2_error_rate")


def test_single_row_has_empty_rate():
    t = rate_table([8], [0.17], {"l2_error": [1e-3]})
    assert t.to_csv().splitlines()[1].endswith(",")
    assert math.isnan(t.column("l2_error_rate")[0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(1e-8, 1.0))
def test_observed_rate_recovers_power_law(p, c):
    h = np.array([0.2, 0.1, 0.05])
    r = observed_rates(h, c * h**p)
    assert np.isnan(r[0]) and np.allclose(r[1:], p)


# ---------------------------------------------------------------- runs


def test_run_is_deterministic(tmp_path):
    cfg = load_config(CONFIGS / "cross_ss_beams_100.toml").with_updates(mesh_n=8)
    a = write_artifacts(_run_quiet(cfg), tmp_path / "a")
    b = write_artifacts(_run_quiet(cfg), tmp_path / "b")
    for f in ("solution.csv", "solution.vtk"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("wall_time")]
    assert strip(a / "report.txt") == strip(b / "report.txt")


def test_report_contents():
    res = _run_quiet(load_config(CONFIGS / "cross_ss_beams_100.toml"))
    text = report_text(res)
    keys = dict(l.split(" = ", 1) for l in text.splitlines())
    for k in ("relative_residual", "positivity", "asymmetry", "energy_norm_plate", "energy_norm_beam_1"):
        assert k in keys
    assert "load_note" in keys and "warning" in keys


def test_convergence_study_errors_decrease():
    cfg = load_config(CONFIGS / "convergence_clamped.toml")
    t = convergence_study(cfg, [4, 8, 16])
    for col in ("l2_error", "energy_error"):
        assert np.all(np.diff(t.column(col)) < 0)
    assert np.isnan(t.column("l2_error_rate")[0])
    with pytest.raises(ValueError):
        convergence_study(load_config(CONFIGS / "plate_only_ss.toml"), [4])


def test_quasi_optimality_against_interpolant():
    """Energy error stays within 10x of the interpolant's; the P2 L2 error is one order below it."""
    from cutplate.harness.manufactured import grad_exact, hess_exact, u_exact
    from cutplate.solver import error_norms

    cfg = load_config(CONFIGS / "convergence_clamped.toml")
    l2_ratio = []
    for n in (8, 16, 32):
        res = _run_quiet(cfg.with_updates(mesh_n=n))
        V = res.space
        interp = error_norms(V, V.interpolate(u_exact), u_exact, grad_exact, hess_exact, cfg.plate)
        assert res.errors[2] <= 10 * interp[2]
        l2_ratio.append(res.errors[0] / interp[0])
    assert np.all(np.diff(l2_ratio) > 0)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_run_under_a_minute(path, tmp_path):
    cfg = load_config(path).with_updates(output_dir=tmp_path)
    t0 = time.perf_counter()
    res = _run_quiet(cfg)
    write_artifacts(res)
    assert time.perf_counter() - t0 < 60
    assert np.all(np.isfinite(res.coeffs))
    assert (tmp_path / "solution.vtk").exists() and (tmp_path / "report.txt").exists()


# ---------------------------------------------------------------- CLI


def test_cli_run_writes_outputs(tmp_path, capsys):
    code = main(["run", str(CONFIGS / "plate_only_ss.toml"), "--out", str(tmp_path), "--solver", "cg"])
    assert code == 0
    assert {p.name for p in tmp_path.iterdir()} == {"solution.vtk", "solution.csv", "report.txt"}
    assert "method = cg" in (tmp_path / "report.txt").read_text()


def test_cli_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(BASE + "[bogus]\n")
    assert main(["run", str(bad)]) == 1
    assert "cutplate: error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.toml")]) == 1


def test_cli_converge_and_beam_study(tmp_path, capsys):
    assert main(["converge", str(CONFIGS / "convergence_clamped.toml"), "--n", "4,8", "--out", str(tmp_path)]) == 0
    t = RateTable.from_csv((tmp_path / "rates.csv").read_text())
    assert t.column("n").tolist() == [4, 8]
    assert main(["beam-study", "--n", "8", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "rates.csv").exists()


def test_cli_beam_study_without_stabilization_fails(tmp_path, capsys):
    assert main(["beam-study", "--n", "8", "--gamma", "0", "--out", str(tmp_path)]) == 1
    assert "singular" in capsys.readouterr().err


def test_cli_rejects_bad_n_list():
    with pytest.raises(SystemExit):
        main(["beam-study", "--n", "8,x"])


def test_shipped_unstructured_mesh_is_reproducible():
    from cutplate.mesh import dump_mesh, generate_unstructured_unit_square

    shipped = (CONFIGS.parent / "meshes" / "unstructured_square.msh").read_text()
    assert dump_mesh(generate_unstructured_unit_square(16, seed=0)) == shipped
