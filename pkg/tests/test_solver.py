import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from cutplate.beam import BeamSpec
from cutplate.fem import build_space
from cutplate.harness.manufactured import grad_exact, hess_exact, manufactured_load, u_exact
from cutplate.mesh import generate_structured_unit_square
from cutplate.plate import PlateSpec, apply_plate_bc, assemble_plate_form, plate_energy_matrix
from cutplate.solver import (
    ConvergenceError,
    LinearSystem,
    SingularSystemError,
    ThinStructureWarning,
    assemble_reinforced,
    energy_norms,
    error_norms,
    positivity_diagnostic,
    solve,
    superpose,
)

from .scenarios import cross_problem, mirror_values, sample_points


def _clamped(n=8, nu=0.5, beta0=16.0):
    plate = PlateSpec(100, nu, 0.1, bc="clamped", beta0=beta0)
    V = build_space(generate_structured_unit_square(n), 2)
    return assemble_reinforced(V, plate, [], load=manufactured_load(plate))


def test_linear_system_validation():
    A = sp.eye(3, format="csr")
    with pytest.raises(ValueError):
        LinearSystem(A, np.zeros(2))
    with pytest.raises(ValueError):
        LinearSystem(A, np.zeros(3), [0, 5], [0.0, 0.0])
    with pytest.raises(ValueError):
        LinearSystem(A, np.zeros(3), [1, 1], [0.0, 0.0])
    with pytest.raises(ValueError):
        LinearSystem(A, np.zeros(3), [1], [0.0, 1.0])


def test_superpose_examples():
    P = _clamped(4)
    base = LinearSystem(P.system.matrix, P.system.rhs, P.system.constrained_dofs, P.system.constrained_values)
    same = superpose(base)
    assert abs(same.matrix - base.matrix).max() == 0
    V = P.space
    spec = BeamSpec((0.499, 0), (0.499, 1), E=1.0, b=0.1, t=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        one = assemble_reinforced(V, P.plate, [spec], load=manufactured_load(P.plate))
        two = assemble_reinforced(V, P.plate, [spec, spec], load=manufactured_load(P.plate))
        zero = assemble_reinforced(V, P.plate, [BeamSpec((0.499, 0), (0.499, 1), E=0.0, b=0.1, t=0.1)],
                                   load=manufactured_load(P.plate))
    d1 = one.system.matrix - base.matrix
    d2 = two.system.matrix - base.matrix
    assert abs(d2 - 2 * d1).max() <= 1e-14 * abs(base.matrix).max()
    assert abs(zero.system.matrix - base.matrix).max() == 0
    with pytest.raises(ValueError):
        superpose(base, [sp.eye(3, format="csr")])


def test_zero_load_gives_zero_solution():
    P = _clamped(4)
    s = LinearSystem(P.system.matrix, np.zeros(P.system.n), P.system.constrained_dofs, P.system.constrained_values)
    x, rep = solve(s)
    assert np.all(x == 0) and rep.relative_residual == 0


def test_free_plate_without_beams_is_singular():
    plate = PlateSpec(100, 0.5, 0.1, bc="free")
    V = build_space(generate_structured_unit_square(6), 2)
    P = assemble_reinforced(V, plate, [], load=lambda x, y: np.ones_like(x))
    with pytest.raises(SingularSystemError) as err:
        solve(P.system)
    assert 0 <= err.value.dof < V.n_dofs


def test_direct_and_cg_agree():
    P = _clamped(8)
    x1, r1 = solve(P.system, "direct")
    x2, r2 = solve(P.system, "cg")
    assert np.abs(x1 - x2).max() <= 1e-8
    assert r2.iterations > 0 and r2.method == "cg"


def test_cg_reports_non_convergence():
    P = _clamped(8)
    with pytest.raises(ConvergenceError):
        solve(P.system, "cg", maxiter=3)


def test_prescribed_values_are_exact():
    P = _clamped(4)
    V = P.space
    g = V.interpolate(lambda x, y: 0.3 + x - y)
    dofs = P.system.constrained_dofs
    s = LinearSystem(P.system.matrix, P.system.rhs * 0, dofs, g[dofs])
    x, _ = solve(s)
    np.testing.assert_array_equal(x[dofs], g[dofs])


def test_energy_norms_examples():
    P = _clamped(4)
    V = P.space
    spec = BeamSpec((0.499, 0), (0.499, 1), E=1.0, b=0.1, t=0.1)
    from cutplate.beam import compute_cut_topology

    cut = compute_cut_topology(V.mesh, V.topology, spec)
    z = energy_norms(V, V.topology, [cut], np.zeros(V.n_dofs), P.plate, [spec])
    assert z.plate == 0 and z.beams == (0.0,)
    free = PlateSpec(100, 0.5, 0.1, bc="free")
    aff = V.interpolate(lambda x, y: 1 + x + 2 * y)
    en = energy_norms(V, V.topology, [cut], aff, free, [spec])
    v = np.random.default_rng(0).standard_normal(V.n_dofs)
    ref = energy_norms(V, V.topology, [cut], v * np.linalg.norm(aff) / np.linalg.norm(v), free, [spec])
    assert en.plate <= 1e-8 * ref.plate and en.beams[0] <= 1e-8 * ref.beams[0]
    e1 = energy_norms(V, V.topology, [cut], v, P.plate, [spec])
    e2 = energy_norms(V, V.topology, [cut], 2 * v, P.plate, [spec])
    assert e2.plate**2 == pytest.approx(4 * e1.plate**2) and e2.beams[0] ** 2 == pytest.approx(4 * e1.beams[0] ** 2)


def test_positivity_diagnostic():
    P = _clamped(8)
    assert positivity_diagnostic(P.system, P.norm_matrix, samples=100, seed=0) > 0
    assert positivity_diagnostic(P.system, P.norm_matrix, seed=3) == positivity_diagnostic(P.system, P.norm_matrix, seed=3)
    Q = _clamped(8, beta0=0.0)
    val = positivity_diagnostic(Q.system, Q.norm_matrix)
    assert np.isfinite(val)  # reported, not raised


def test_error_norms_examples():
    V = build_space(generate_structured_unit_square(4), 2)
    spec = PlateSpec(100, 0.5, 0.1)

    def q(x, y):
        return x * y - y**2

    def qg(x, y):
        return np.stack([y, x - 2 * y], -1)

    def qh(x, y):
        z = np.zeros_like(x)
        return np.stack([np.stack([z, z + 1], -1), np.stack([z + 1, z - 2], -1)], -2)

    errs = error_norms(V, V.interpolate(q), q, qg, qh, PlateSpec(100, 0.5, 0.1, bc="free"))
    assert max(errs) <= 1e-12
    l2, _, _ = error_norms(
        V, np.zeros(V.n_dofs), lambda x, y: x, lambda x, y: np.stack([1 + 0 * x, 0 * x], -1),
        lambda x, y: np.zeros(x.shape + (2, 2)), spec,
    )
    assert l2 == pytest.approx(1 / np.sqrt(3), rel=1e-13)


def test_errors_decrease_under_refinement():
    errs = []
    for n in (4, 8, 16):
        P = _clamped(n)
        x, _ = solve(P.system)
        errs.append(error_norms(P.space, x, u_exact, grad_exact, hess_exact, P.plate))
    errs = np.array(errs)
    assert np.all(np.diff(errs, axis=0) < 0)


def test_thin_structure_warning():
    plate = PlateSpec(100, 0.5, 0.1, bc="simply_supported")
    beam = BeamSpec((0.499, 0), (0.499, 1), E=1.0, b=0.1, t=0.1)
    with pytest.warns(ThinStructureWarning):
        assemble_reinforced(build_space(generate_structured_unit_square(16), 2), plate, [beam])
    with warnings.catch_warnings():
        warnings.simplefilter("error", ThinStructureWarning)
        assemble_reinforced(build_space(generate_structured_unit_square(8), 2), plate, [beam])


def test_apply_plate_bc_merges_constraints():
    V = build_space(generate_structured_unit_square(3), 2)
    A = assemble_plate_form(V, spec=PlateSpec(1, 0.3, 0.1))
    k = int(np.setdiff1d(np.arange(V.n_dofs), V.boundary_dofs())[0])
    s = LinearSystem(A, np.zeros(V.n_dofs), [k], [2.0])
    s2 = apply_plate_bc(s, V, "clamped")
    assert len(s2.constrained_dofs) == len(V.boundary_dofs()) + 1
    assert s2.constrained_values[np.searchsorted(s2.constrained_dofs, k)] == 2.0


def test_stiffening_decreases_deflection():
    maxima = []
    for E in (0.0, 1e4, 1e5):
        P = cross_problem(E=E, n=8)
        x, _ = solve(P.system)
        maxima.append(np.abs(x).max())
    assert maxima[0] > maxima[1] > maxima[2]


def test_mirror_symmetry_of_cross():
    P = cross_problem(n=8)
    x, _ = solve(P.system)
    pts = sample_points()
    a, b = mirror_values(P.space, x, pts)
    assert np.abs(a - b).max() <= 1e-8 * np.abs(x).max()


def test_simply_supported_plate_matches_series_solution():
    """Centre deflection of a uniformly loaded simply supported square against the double sine series."""
    plate = PlateSpec(100, 0.5, 0.1, bc="simply_supported")
    D = plate.stiffness / (1 - plate.nu)
    m = np.arange(1, 400, 2)
    M, N = np.meshgrid(m, m)
    sign = (-1.0) ** ((M - 1) // 2 + (N - 1) // 2)
    series = np.sum(16 * sign / (np.pi**6 * M * N * (M**2 + N**2) ** 2)) / D
    V = build_space(generate_structured_unit_square(32), 2)
    P = assemble_reinforced(V, plate, [], load=lambda x, y: np.ones_like(x))
    x, _ = solve(P.system)
    assert V.evaluate_values(x, [[0.5, 0.5]])[0] == pytest.approx(series, rel=2e-2)


def test_norm_matrix_matches_plate_energy():
    P = _clamped(4)
    N = plate_energy_matrix(P.space, P.plate)
    assert abs(P.norm_matrix - N).max() == 0
