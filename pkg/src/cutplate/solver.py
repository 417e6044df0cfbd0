"""Reinforced system assembly, constrained solves, energy norms and diagnostics."""
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import element_points, eval_on
from .beam import (
    active_dofs,
    assemble_beam_endpoint_terms,
    assemble_beam_form,
    assemble_beam_load,
    assemble_beam_stabilization,
    beam_energy_matrix,
    compute_cut_topology,
)
from .plate import (
    FaceSides,
    _split_faces,
    assemble_plate_form,
    assemble_plate_load,
    constrained_dofs,
    face_set,
    plate_constant,
    plate_energy_matrix,
)

PIVOT_TOL = 1e-11
BACKWARD_TOL = 64 * np.finfo(float).eps


class SingularSystemError(RuntimeError):
    """Factorization hit a (numerically) zero pivot.

    ``dof`` is the global DOF whose pivot vanished, ``pivot`` its value
    after symmetric diagonal scaling.
    """

    def __init__(self, message, dof=None, pivot=None):
        super().__init__(message)
        self.dof = dof
        self.pivot = pivot


class ConvergenceError(RuntimeError):
    """Iterative solve did not reach the requested tolerance."""


class ThinStructureWarning(UserWarning):
    """Mesh size below the plate/beam thickness or beam width."""


def _empty_int():
    return np.zeros(0, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Symmetric sparse operator, load and prescribed DOF values."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained_dofs: np.ndarray = field(default_factory=_empty_int)
    constrained_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        A = sp.csr_matrix(self.matrix)
        A.sort_indices()
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"matrix must be square, got {A.shape}")
        rhs = np.asarray(self.rhs, dtype=np.float64)
        if rhs.shape != (n,):
            raise ValueError(f"load vector has shape {rhs.shape}, expected ({n},)")
        dofs = np.asarray(self.constrained_dofs, dtype=np.int64)
        vals = np.asarray(self.constrained_values, dtype=np.float64)
        if dofs.shape != vals.shape:
            raise ValueError("constrained DOFs and values differ in length")
        if len(dofs) and (dofs.min() < 0 or dofs.max() >= n):
            raise ValueError("constrained DOF index out of range")
        if len(np.unique(dofs)) != len(dofs):
            raise ValueError("constrained DOFs repeated")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "constrained_dofs", dofs)
        object.__setattr__(self, "constrained_values", vals)

    @property
    def n(self):
        return self.matrix.shape[0]

    def free_dofs(self):
        mask = np.ones(self.n, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    def reduce(self):
        """Free-DOF block and load with prescribed values moved to the right-hand side."""
        free = self.free_dofs()
        A = self.matrix
        x_c = np.zeros(self.n)
        x_c[self.constrained_dofs] = self.constrained_values
        b = self.rhs - A @ x_c
        return A[free][:, free].tocsr(), b[free], free, x_c

    def asymmetry(self):
        """max |A - A^T| relative to max |A|."""
        A = self.matrix
        scale = abs(A).max()
        if scale == 0:
            return 0.0
        d = A - A.T
        return float(abs(d).max() / scale) if d.nnz else 0.0


@dataclass(frozen=True)
class SolveReport:
    method: str
    iterations: Optional[int]
    relative_residual: float
    backward_error: float
    asymmetry: float
    positivity: Optional[float]
    wall_time: float
    negative_pivots: Optional[int] = None

    def as_text(self):
        lines = []
        for key, val in self.__dict__.items():
            if isinstance(val, float):
                val = f"{val:.6e}"
            lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EnergyNorms:
    plate: float
    beams: tuple

    @property
    def total(self):
        return float(np.sqrt(self.plate**2 + sum(b**2 for b in self.beams)))


def superpose(plate_system, beam_matrices=(), beam_loads=()):
    """Add beam operators and loads to a plate system; constraints are kept."""
    n = plate_system.n
    A = plate_system.matrix
    b = plate_system.rhs.copy()
    for M in beam_matrices:
        if M.shape != (n, n):
            raise ValueError(f"beam matrix has shape {M.shape}, plate system has {n} DOFs")
        A = A + M
    for f in beam_loads:
        f = np.asarray(f)
        if f.shape != (n,):
            raise ValueError(f"beam load has shape {f.shape}, plate system has {n} DOFs")
        b = b + f
    return LinearSystem(A, b, plate_system.constrained_dofs, plate_system.constrained_values)


def _jacobi_scaling(A):
    d = A.diagonal()
    if np.any(d == 0):
        k = int(np.flatnonzero(d == 0)[0])
        return None, k
    return 1.0 / np.sqrt(np.abs(d)), None


def _solve_direct(A, b, free, tol, refine=5):
    s, zero = _jacobi_scaling(A)
    if s is None:
        raise SingularSystemError(f"zero diagonal at DOF {free[zero]}; the system is singular", free[zero], 0.0)
    S = sp.diags(s)
    As = (S @ A @ S).tocsc()
    try:
        lu = spla.splu(As, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise SingularSystemError(f"factorization failed: {exc}") from exc
    piv = lu.U.diagonal()
    small = np.flatnonzero(np.abs(piv) < PIVOT_TOL)
    if len(small):
        k = int(small[0])
        dof = int(free[lu.perm_c[k]])
        raise SingularSystemError(
            f"singular system: pivot {piv[k]:.3e} at DOF {dof} (after diagonal scaling)", dof, float(piv[k])
        )
    x = s * lu.solve(s * b)
    # iterative refinement on the same factors
    bn = np.linalg.norm(b)
    steps = 0
    for steps in range(refine + 1):
        r = b - A @ x
        if np.linalg.norm(r) <= 0.1 * tol * bn or _backward_error(A, x, b, r) <= np.finfo(float).eps:
            break
        if steps < refine:
            x = x + s * lu.solve(s * r)
    return x, steps, int(np.sum(piv < 0))


def _backward_error(A, x, b, r):
    """Normwise backward error ||r|| / (||A|| ||x|| + ||b||) in the infinity norm."""
    denom = abs(A).sum(axis=1).max() * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0)
    return float(np.abs(r).max(initial=0.0) / denom) if denom > 0 else 0.0


def _solve_cg(A, b, tol, maxiter):
    d = A.diagonal()
    if np.any(d <= 0):
        k = int(np.flatnonzero(d <= 0)[0])
        raise ConvergenceError(f"CG needs a positive diagonal; DOF {k} has {d[k]:.3e}")
    M = sp.diags(1.0 / d)
    count = [0]

    def cb(_):
        count[0] += 1

    maxiter = maxiter or max(1000, 20 * A.shape[0])
    x, info = spla.cg(A, b, rtol=tol, atol=0.0, M=M, maxiter=maxiter, callback=cb)
    if info > 0:
        raise ConvergenceError(f"CG did not converge to {tol:g} in {info} iterations")
    if info < 0:
        raise ConvergenceError("CG breakdown (illegal input)")
    return x, count[0], None


def solve(system, method="direct", tol=1e-10, maxiter=None, norm_matrix=None, samples=100, seed=0):
    """Solve the constrained system.

    Returns the full coefficient vector (prescribed values included) and a
    :class:`SolveReport`. With ``norm_matrix`` the report carries the
    positivity diagnostic against that energy norm.
    """
    if method not in ("direct", "cg"):
        raise ValueError(f"unknown solver {method!r}; use 'direct' or 'cg'")
    start = time.perf_counter()
    A, b, free, x = system.reduce()
    if len(free) == 0:
        xf, iters, neg = np.zeros(0), None, 0
    elif method == "direct":
        xf, iters, neg = _solve_direct(A, b, free, tol)
    else:
        xf, iters, neg = _solve_cg(A, b, tol, maxiter)
    x[free] = xf
    r = b - A @ xf
    bn = np.linalg.norm(b)
    rn = np.linalg.norm(r)
    rel = float(rn / bn) if bn > 0 else float(rn)
    berr = _backward_error(A, xf, b, r) if len(free) else 0.0
    # below the rounding floor eps * |A| |x| a smaller residual is not representable
    if rel > tol and berr > BACKWARD_TOL:
        cls = SingularSystemError if method == "direct" else ConvergenceError
        raise cls(f"relative residual {rel:.3e} exceeds tolerance {tol:g} (backward error {berr:.3e})")
    positivity = None
    if norm_matrix is not None:
        positivity = positivity_diagnostic(system, norm_matrix, samples=samples, seed=seed)
    report = SolveReport(
        method=method,
        iterations=iters,
        relative_residual=rel,
        backward_error=berr,
        asymmetry=system.asymmetry(),
        positivity=positivity,
        wall_time=time.perf_counter() - start,
        negative_pivots=neg,
    )
    return x, report


def positivity_diagnostic(system, norm_matrix, samples=100, seed=0):
    """Smallest ``v^T A v / v^T N v`` over seeded random vectors vanishing on constrained DOFs."""
    rng = np.random.default_rng(seed)
    free = system.free_dofs()
    A = system.matrix[free][:, free]
    N = norm_matrix[free][:, free]
    V = rng.standard_normal((len(free), samples))
    num = np.einsum("ij,ij->j", V, A @ V)
    den = np.einsum("ij,ij->j", V, N @ V)
    ok = den > 0
    if not np.any(ok):
        return float("nan")
    return float(np.min(num[ok] / den[ok]))


def energy_norms(space, topo, cuts, coeffs, plate_spec, beam_specs=()):
    """Plate and per-beam energy norms of a finite element field."""
    if topo is not None and topo is not space.topology:
        raise ValueError("topology does not belong to this space")
    v = np.asarray(coeffs, dtype=np.float64)
    plate = 0.0
    if plate_spec is not None:
        N = plate_energy_matrix(space, plate_spec)
        plate = float(np.sqrt(max(v @ (N @ v), 0.0)))
    beams = []
    for cut, spec in zip(cuts, beam_specs):
        N = beam_energy_matrix(space, cut, spec)
        beams.append(float(np.sqrt(max(v @ (N @ v), 0.0))))
    return EnergyNorms(plate, tuple(beams))


def error_norms(space, coeffs, u, grad, hess, plate_spec=None, degree=12):
    """(L2, H1-seminorm, plate energy-norm) errors of ``coeffs`` against an analytic field.

    ``u(x, y)``, ``grad(x, y)`` (..., 2) and ``hess(x, y)`` (..., 2, 2) are
    evaluated at quadrature points. The energy error is NaN without a
    plate spec.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    tri, pts, w = element_points(space, degree)
    x, y = pts[..., 0], pts[..., 1]
    cd = c[space.cell_dofs]  # (nt, nl)
    uh = np.einsum("mql,ml->mq", eval_on(space, tri, pts, "values"), cd)
    gh = np.einsum("mqli,ml->mqi", eval_on(space, tri, pts, "gradients"), cd)
    Hh = np.einsum("mqlij,ml->mqij", eval_on(space, tri, pts, "hessians"), cd)
    l2 = np.sqrt(np.sum(w * (uh - u(x, y)) ** 2))
    h1 = np.sqrt(np.sum(w * np.sum((gh - grad(x, y)) ** 2, axis=-1)))
    if plate_spec is None:
        return float(l2), float(h1), float("nan")
    Cp = plate_constant(plate_spec)
    energy = Cp * np.sum(w * np.sum((Hh - hess(x, y)) ** 2, axis=(-2, -1)))
    topo = space.topology
    for group in _split_faces(topo, face_set(topo, plate_spec.bc)):
        if len(group) == 0:
            continue
        sides = FaceSides(space, plate_spec, group, degree)
        fx, fy = sides.pts[..., 0], sides.pts[..., 1]
        cf = c[sides.dofs]
        Havg = np.einsum("mqlij,ml->mqij", sides.avg_hessian, cf) - hess(fx, fy)
        jump = np.einsum("mqli,ml->mqi", sides.jump, cf)
        if not sides.interior:
            jump = jump - grad(fx, fy)
        h = sides.h[:, None]
        energy += Cp * np.sum(sides.w * h * np.sum(Havg**2, axis=(-2, -1)))
        energy += Cp * np.sum(sides.w / h * np.sum(jump**2, axis=-1))
    return float(l2), float(h1), float(np.sqrt(energy))


@dataclass(frozen=True, eq=False)
class ReinforcedProblem:
    """Assembled plate + beams problem on one space."""

    space: object
    plate: object
    beams: tuple
    cuts: tuple
    system: LinearSystem
    norm_matrix: sp.csr_matrix
    beam_matrices: tuple


def thin_structure_check(mesh, plate=None, beams=()):
    """Warn when the mesh size is below the plate/beam thickness or beam width."""
    sizes = [b.t for b in beams] + [b.b for b in beams]
    if plate is not None:
        sizes.append(plate.t)
    if sizes and mesh.h < max(sizes):
        warnings.warn(
            f"mesh size h = {mesh.h:.4g} is below the structure thickness/width {max(sizes):.4g}; "
            "stability is only expected for h >= thickness",
            ThinStructureWarning,
            stacklevel=3,
        )
        return False
    return True


def assemble_reinforced(space, plate=None, beams=(), load=None, load_degree=12):
    """Plate form plus every beam (form, stabilization, endpoint terms) and loads.

    ``load(x, y)`` is the plate load. Without a plate, DOFs outside the
    cut triangles of every beam are fixed to zero.
    """
    beams = tuple(beams)
    if plate is None and not beams:
        raise ValueError("nothing to assemble: no plate and no beams")
    thin_structure_check(space.mesh, plate, beams)
    n = space.n_dofs
    topo = space.topology
    if plate is not None:
        A = assemble_plate_form(space, spec=plate)
        N = plate_energy_matrix(space, plate)
        fixed = constrained_dofs(space, plate.bc)
    else:
        A = sp.csr_matrix((n, n))
        N = sp.csr_matrix((n, n))
        fixed = None
    rhs = assemble_plate_load(space, load, load_degree) if load is not None else np.zeros(n)
    cuts, mats, loads = [], [], []
    for spec in beams:
        cut = compute_cut_topology(space.mesh, topo, spec)
        M = (
            assemble_beam_form(space, cut, spec)
            + assemble_beam_stabilization(space, cut, spec)
            + assemble_beam_endpoint_terms(space, spec, cut)
        )
        M.sort_indices()
        cuts.append(cut)
        mats.append(M)
        loads.append(assemble_beam_load(space, cut, spec, load_degree))
        N = N + beam_energy_matrix(space, cut, spec)
    if fixed is None:
        active = np.zeros(n, dtype=bool)
        for cut in cuts:
            active[active_dofs(space, cut)] = True
        fixed = np.flatnonzero(~active)
    base = LinearSystem(A, rhs, fixed, np.zeros(len(fixed)))
    system = superpose(base, mats, loads)
    N = N.tocsr()
    N.sort_indices()
    return ReinforcedProblem(space, plate, beams, tuple(cuts), system, N, tuple(mats))
