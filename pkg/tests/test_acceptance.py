"""Acceptance criteria, one test group per criterion; the terminal summary prints PASS/FAIL per number."""
import time

import numpy as np
import pytest

from cutplate.beam import (
    BeamSpec,
    CutGeometryError,
    assemble_beam_form,
    assemble_beam_form_tensor,
    compute_cut_topology,
)
from cutplate.fem import build_space
from cutplate.harness.config import load_config
from cutplate.harness.manufactured import grad_exact, hess_exact, manufactured_load
from cutplate.harness.study import convergence_study, run, standalone_beam_study
from cutplate.mesh import build_face_topology, generate_structured_unit_square, generate_unstructured_unit_square
from cutplate.plate import PlateSpec, assemble_plate_load, constrained_dofs, plate_form_action
from cutplate.solver import SingularSystemError, positivity_diagnostic, solve

from .scenarios import CONFIGS, cross_problem
from .test_beam import _random_beams, brute_force_cut


@pytest.mark.acceptance(1, "clamped-plate convergence, L2 rate >= 1.8, energy rate >= 0.9, <= 60 s")
def test_criterion_1_convergence(request):
    cfg = load_config(CONFIGS / "convergence_clamped.toml")
    assert cfg.plate.nu == 0.5 and cfg.degree == 2
    t0 = time.perf_counter()
    table = convergence_study(cfg, [8, 16, 32, 64])
    elapsed = time.perf_counter() - t0
    l2_rate = table.column("l2_error_rate")[-1]
    en_rate = table.column("energy_error_rate")[-1]
    request.node.acceptance_detail = f"L2 rate {l2_rate:.3f}, energy rate {en_rate:.3f}, {elapsed:.1f} s"
    assert l2_rate >= 1.8
    assert en_rate >= 0.9
    assert elapsed <= 60
    assert np.all(np.diff(table.column("l2_error")) < 0) and np.all(np.diff(table.column("energy_error")) < 0)


@pytest.mark.acceptance(2, "consistency residual <= 1e-8 of load scale, n = 16, quadrature degree 12")
@pytest.mark.parametrize("nu", [0.5, 0.0])
def test_criterion_2_consistency(request, nu):
    V = build_space(generate_structured_unit_square(16), 2)
    spec = PlateSpec(100, nu, 0.1, bc="clamped")
    load = assemble_plate_load(V, manufactured_load(spec), degree=12)
    r = plate_form_action(V, spec, grad_exact, hess_exact, degree=12) - load
    free = np.setdiff1d(np.arange(V.n_dofs), constrained_dofs(V, "clamped"))
    rel = np.abs(r[free]).max() / np.abs(load).max()
    request.node.acceptance_detail = f"nu={nu}: {rel:.1e}"
    assert rel <= 1e-8


@pytest.mark.acceptance(3, "standalone stabilized beam within 1% at n = 64; gamma = 0 singular")
def test_criterion_3_standalone_beam(request):
    t = standalone_beam_study([64], gamma=0.1)
    err = t.column("midpoint_rel_error")[0]
    request.node.acceptance_detail = f"midpoint relative error {err:.2e}"
    assert err <= 0.01
    with pytest.raises(SingularSystemError):
        standalone_beam_study([64], gamma=0.0)


@pytest.mark.acceptance(4, "superposed matrix symmetry <= 1e-12 relative")
@pytest.mark.parametrize("ends", ["simply_supported", "clamped"])
def test_criterion_4_symmetry(request, ends):
    A = cross_problem(E=1e4, ends=ends).system.matrix
    asym = abs(A - A.T).max() / abs(A).max()
    request.node.acceptance_detail = f"{ends}: {asym:.1e}"
    assert asym <= 1e-12


@pytest.mark.acceptance(5, "coercivity diagnostic strictly positive, cross scenario with gamma = 0")
@pytest.mark.parametrize("E", [1e4, 1e5])
def test_criterion_5_positivity(request, E):
    P = cross_problem(E=E)
    assert all(b.gamma1 == 0 and b.gamma2 == 0 for b in P.beams)
    q = positivity_diagnostic(P.system, P.norm_matrix, samples=100, seed=0)
    request.node.acceptance_detail = f"E={E:g}: min quotient {q:.3f}"
    assert q > 0


@pytest.mark.acceptance(6, "tensor-form beam assembly equals 1D form to 1e-12 on 5 random beams")
def test_criterion_6_form_equivalence(request):
    m = generate_unstructured_unit_square(8, seed=5)
    topo = build_face_topology(m)
    V = build_space(m, 2, topo)
    worst = 0.0
    for p0, p1 in _random_beams(np.random.default_rng(11), 5):
        spec = BeamSpec(p0, p1, E=3.0, b=0.1, t=0.1)
        cut = compute_cut_topology(m, topo, spec)
        A = assemble_beam_form(V, cut, spec)
        B = assemble_beam_form_tensor(V, cut, spec)
        worst = max(worst, abs(A - B).max() / abs(A).max())
    request.node.acceptance_detail = f"max relative difference {worst:.1e}"
    assert worst <= 1e-12


@pytest.mark.acceptance(7, "E = 0 beam reproduces the plate-only solution to 1e-10")
def test_criterion_7_zero_stiffness_beam(request):
    plate_only = cross_problem(beams=False)
    with_beam = cross_problem(E=0.0)
    x0, _ = solve(plate_only.system)
    x1, _ = solve(with_beam.system)
    diff = np.abs(x1 - x0).max()
    request.node.acceptance_detail = f"max difference {diff:.1e}"
    assert diff <= 1e-10


def _maxdef(E, ends="simply_supported"):
    x, _ = solve(cross_problem(E=E, ends=ends).system)
    return np.abs(x).max()


@pytest.mark.acceptance(8, "qualitative orderings of the stiffened-plate scenarios")
def test_criterion_8a_stiffening(request):
    m = [_maxdef(E) for E in (0.0, 1e4, 1e5)]
    request.node.acceptance_detail = "(a) " + " > ".join(f"{v:.3e}" for v in m)
    assert m[0] > m[1] > m[2]


@pytest.mark.acceptance(8, "qualitative orderings of the stiffened-plate scenarios")
@pytest.mark.parametrize("E", [1e4, 1e5])
def test_criterion_8b_clamped_beam_ends(request, E):
    ss, cl = _maxdef(E, "simply_supported"), _maxdef(E, "clamped")
    request.node.acceptance_detail = f"(b) E={E:g}: clamped {cl:.3e} <= ss {ss:.3e}"
    assert cl <= ss


@pytest.mark.acceptance(8, "qualitative orderings of the stiffened-plate scenarios")
def test_criterion_8c_free_plate_on_beams(request):
    cl = run(load_config(CONFIGS / "free_four_beams_clamped.toml"))
    ss = run(load_config(CONFIGS / "free_four_beams_ss.toml"))
    assert all(e == "clamped" for b in cl.config.beams for e in b.ends)
    assert all(e == "simply_supported" for b in ss.config.beams for e in b.ends)
    c_cl, c_ss = cl.deflection_at(0.5, 0.5), ss.deflection_at(0.5, 0.5)
    request.node.acceptance_detail = f"(c) centre ss {c_ss:.3e} > clamped {c_cl:.3e}"
    assert abs(c_ss) > abs(c_cl)


@pytest.mark.acceptance(9, "cut topology of x = 0.499 on n = 2 matches the oracle; x = 0.5 rejected")
def test_criterion_9_geometry(request):
    m = generate_structured_unit_square(2)
    topo = build_face_topology(m)
    spec = BeamSpec((0.499, 0), (0.499, 1), E=1.0, b=0.1, t=0.1)
    cut = compute_cut_topology(m, topo, spec)
    s, tris = brute_force_cut(m, spec.p0, spec.p1)
    total = float(np.sum(cut.s_hi - cut.s_lo))
    request.node.acceptance_detail = f"{len(cut.elements)} elements, {cut.n_points} points, length {total!r}"
    assert len(cut.elements) == 4 and cut.n_points == 3
    np.testing.assert_array_equal(cut.elements, tris)
    np.testing.assert_allclose(cut.point_s, s[1:-1], atol=1e-12)
    assert abs(total - 1.0) <= 1e-12
    with pytest.raises(CutGeometryError):
        compute_cut_topology(m, topo, BeamSpec((0.5, 0), (0.5, 1), E=1.0, b=0.1, t=0.1))
