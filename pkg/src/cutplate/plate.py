"""Kirchhoff-Love plate: material law and the continuous/discontinuous Galerkin form.

The discrete form is

    a(v, w) = sum_T (sigma(H v), H w)_T
              - sum_F (<n . sigma(H v)>, [grad w])_F - sum_F ([grad v], <n . sigma(H w)>)_F
              + sum_F beta / h_F ([grad v], [grad w])_F

with ``beta = beta0 * C_P``. Boundary faces enter the face sums only for
clamped plates.
"""
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import kernels
from .assembly import (
    as_components,
    element_points,
    eval_on,
    face_points,
    scatter_vector,
    sparse_from_blocks,
)

BOUNDARY_CONDITIONS = ("clamped", "simply_supported", "free")


@dataclass(frozen=True)
class PlateSpec:
    """Plate material, thickness, edge support and c/dG penalty.

    Parameters
    ----------
    E : float
        Young's modulus.
    nu : float
        Poisson ratio in [0, 0.5].
    t : float
        Thickness.
    bc : str
        One of ``clamped``, ``simply_supported``, ``free``.
    beta0 : float
        Dimensionless penalty; the face penalty is ``beta0 * C_P / h_F``.
    """

    E: float
    nu: float
    t: float
    bc: str = "clamped"
    beta0: float = 16.0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"plate E must be > 0, got {self.E}")
        if not 0 <= self.nu <= 0.5:
            raise ValueError(f"plate nu must lie in [0, 0.5], got {self.nu}")
        if not self.t > 0:
            raise ValueError(f"plate thickness must be > 0, got {self.t}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"plate bc must be one of {BOUNDARY_CONDITIONS}, got {self.bc!r}")
        if not self.beta0 >= 0:
            raise ValueError(f"plate beta0 must be >= 0, got {self.beta0}")

    @property
    def stiffness(self):
        return plate_constant(self)

    @property
    def poisson_factor(self):
        return self.nu / (1 - self.nu)


def plate_constant(spec):
    """C_P = E t^3 / (12 (1 + nu))."""
    return spec.E * spec.t**3 / (12 * (1 + spec.nu))


def plate_stress(H, spec):
    """Moment tensor C_P (H + nu/(1-nu) tr(H) I) for Hessians of shape (..., 2, 2)."""
    H = np.asarray(H, dtype=np.float64)
    tr = H[..., 0, 0] + H[..., 1, 1]
    return plate_constant(spec) * (H + spec.poisson_factor * tr[..., None, None] * np.eye(2))


def _moment_normal(H, n, spec):
    """n . sigma(H) for Hessians (m, nq, nl, 2, 2) and normals (m, 2)."""
    tr = H[..., 0, 0] + H[..., 1, 1]
    Hn = np.einsum("mqlij,mj->mqli", H, n)
    return plate_constant(spec) * (Hn + spec.poisson_factor * tr[..., None] * n[:, None, None, :])


def face_set(topo, bc):
    """Faces entering the face sums for edge support ``bc``."""
    if bc == "clamped":
        return np.arange(topo.n_faces)
    return np.flatnonzero(topo.interior)


def _curvature_components(H):
    """Components c with sigma(H):H' = C_P * sum_c c(H) c(H') (first three) + C_P r tr tr."""
    s2 = np.sqrt(2.0)
    return np.stack(
        [H[..., 0, 0], H[..., 1, 1], s2 * H[..., 0, 1], H[..., 0, 0] + H[..., 1, 1]], axis=-1
    )


def _element_blocks(space, spec, degree):
    tri, pts, w = element_points(space, degree)
    H = eval_on(space, tri, pts, "hessians")
    comps = as_components(_curvature_components(H))
    scale = np.array([1.0, 1.0, 1.0, spec.poisson_factor]) * plate_constant(spec)
    L = comps * (w[:, :, None, None] * scale[None, None, :, None])
    return space.cell_dofs, kernels.gram(L, comps, symmetric=True)


class FaceSides:
    """Basis gradients and moments on both sides of a set of faces.

    Interior faces carry ``2 * nloc`` local DOFs (T+ then T-), boundary
    faces ``nloc``. ``jump`` and ``avg_moment`` follow the same layout.
    """

    def __init__(self, space, spec, faces, degree, with_hessians=True):
        topo = space.topology
        self.faces = np.asarray(faces)
        self.pts, self.w = face_points(space, self.faces, degree)
        self.normals = topo.normals[self.faces]
        self.h = topo.h_face[self.faces]
        tp = topo.face_triangles[self.faces, 0]
        tm = topo.face_triangles[self.faces, 1]
        self.interior = bool(np.all(tm >= 0))
        if not self.interior and np.any(tm >= 0):
            raise ValueError("FaceSides needs faces that are all interior or all boundary")
        g_p = eval_on(space, tp, self.pts, "gradients")
        H_p = eval_on(space, tp, self.pts, "hessians") if with_hessians else None
        if self.interior:
            g_m = eval_on(space, tm, self.pts, "gradients")
            self.dofs = np.concatenate([space.cell_dofs[tp], space.cell_dofs[tm]], axis=1)
            self.jump = np.concatenate([g_p, -g_m], axis=2)
            if with_hessians:
                H_m = eval_on(space, tm, self.pts, "hessians")
                self.avg_hessian = 0.5 * np.concatenate([H_p, H_m], axis=2)
        else:
            self.dofs = space.cell_dofs[tp]
            self.jump = g_p
            if with_hessians:
                self.avg_hessian = H_p
        if with_hessians:
            self.avg_moment = _moment_normal(self.avg_hessian, self.normals, spec)


def _face_blocks(space, spec, faces, degree):
    if len(faces) == 0:
        return []
    sides = FaceSides(space, spec, faces, degree)
    J = as_components(sides.jump)
    M = as_components(sides.avg_moment)
    B = kernels.gram(M * sides.w[:, :, None, None], J)
    beta = spec.beta0 * plate_constant(spec)
    P = kernels.gram(J * (sides.w * beta / sides.h[:, None])[:, :, None, None], J, symmetric=True)
    return [(sides.dofs, P - (B + np.swapaxes(B, 1, 2)))]


def _split_faces(topo, faces):
    faces = np.asarray(faces)
    inner = topo.interior[faces]
    return faces[inner], faces[~inner]


def assemble_plate_form(space, topo=None, spec=None, degree=None):
    """Sparse matrix of the plate c/dG form, ``A[i, j] = a(phi_j, phi_i)``.

    ``degree`` is the quadrature exactness (default ``2k``).
    """
    if spec is None:
        raise TypeError("assemble_plate_form needs a PlateSpec")
    if topo is not None and topo is not space.topology:
        space = dataclasses.replace(space, topology=topo)
    topo = space.topology
    degree = 2 * space.degree if degree is None else degree
    n = space.n_dofs
    dofs, blocks = _element_blocks(space, spec, degree)
    A = sparse_from_blocks(dofs, blocks, n)
    inner, outer = _split_faces(topo, face_set(topo, spec.bc))
    for group in (inner, outer):
        for fd, fb in _face_blocks(space, spec, group, degree):
            A = A + sparse_from_blocks(fd, fb, n)
    A.sort_indices()
    return A


def plate_form_action(space, spec, grad, hess, degree=12):
    """Vector ``b[i] = a(u, phi_i)`` for an analytic ``u`` given by its derivatives.

    ``grad(x, y)`` returns shape (..., 2) and ``hess(x, y)`` shape (..., 2, 2).
    ``u`` is smooth, so its gradient jump vanishes on interior faces.
    """
    topo = space.topology
    n = space.n_dofs
    Cp, r = plate_constant(spec), spec.poisson_factor
    tri, pts, w = element_points(space, degree)
    H = eval_on(space, tri, pts, "hessians")
    Hs = hess(pts[..., 0], pts[..., 1])
    trs = Hs[..., 0, 0] + Hs[..., 1, 1]
    tr = H[..., 0, 0] + H[..., 1, 1]
    vals = Cp * (np.einsum("mqlij,mqij->mql", H, Hs) + r * tr * trs[..., None])
    b = scatter_vector(space.cell_dofs, np.einsum("mql,mq->ml", vals, w), n)
    beta = spec.beta0 * Cp
    for group in _split_faces(topo, face_set(topo, spec.bc)):
        if len(group) == 0:
            continue
        sides = FaceSides(space, spec, group, degree)
        x, y = sides.pts[..., 0], sides.pts[..., 1]
        Hs = hess(x, y)[:, :, None]
        ms = _moment_normal(Hs, sides.normals, spec)[:, :, 0]  # (m, nq, 2)
        contrib = -np.einsum("mqi,mqli->mql", ms, sides.jump)
        if not sides.interior:
            gs = grad(x, y)  # jump of u on the boundary is its one-sided gradient
            contrib -= np.einsum("mqi,mqli->mql", gs, sides.avg_moment)
            contrib += (beta / sides.h)[:, None, None] * np.einsum("mqi,mqli->mql", gs, sides.jump)
        b += scatter_vector(sides.dofs, np.einsum("mql,mq->ml", contrib, sides.w), n)
    return b


def assemble_plate_load(space, f, degree=12):
    """Vector ``(f, phi_i)`` for a vectorized load ``f(x, y)``."""
    tri, pts, w = element_points(space, degree)
    phi = eval_on(space, tri, pts, "values")
    fv = np.broadcast_to(f(pts[..., 0], pts[..., 1]), w.shape)
    return scatter_vector(space.cell_dofs, np.einsum("mql,mq->ml", phi, fv * w), space.n_dofs)


def constrained_dofs(space, bc):
    """DOFs carrying the strong condition u = 0 for edge support ``bc``."""
    if bc in ("clamped", "simply_supported"):
        return space.boundary_dofs()
    if bc == "free":
        return np.zeros(0, dtype=np.int64)
    raise ValueError(f"unknown plate bc {bc!r}")


def apply_plate_bc(system, space, bc):
    """Copy of ``system`` with u = 0 prescribed on the plate's supported edge DOFs."""
    dofs = constrained_dofs(space, bc)
    merged = np.union1d(system.constrained_dofs, dofs).astype(np.int64)
    values = np.zeros(len(merged))
    if len(system.constrained_dofs):
        pos = np.searchsorted(merged, system.constrained_dofs)
        values[pos] = system.constrained_values
    return dataclasses.replace(system, constrained_dofs=merged, constrained_values=values)


def plate_energy_matrix(space, spec, degree=None):
    """Matrix N with v^T N v = |||v|||^2 (curvature, face-average curvature and gradient jumps).

    Face sums follow the same face set as the form, so global affine fields
    have zero norm under free support.
    """
    topo = space.topology
    degree = 2 * space.degree if degree is None else degree
    n = space.n_dofs
    Cp = plate_constant(spec)
    tri, pts, w = element_points(space, degree)
    H = eval_on(space, tri, pts, "hessians")
    comps = as_components(_curvature_components(H)[..., :3])
    N = sparse_from_blocks(space.cell_dofs, kernels.gram(comps * (Cp * w)[:, :, None, None], comps, symmetric=True), n)
    for group in _split_faces(topo, face_set(topo, spec.bc)):
        if len(group) == 0:
            continue
        sides = FaceSides(space, spec, group, degree)
        Hc = as_components(_curvature_components(sides.avg_hessian)[..., :3])
        J = as_components(sides.jump)
        blocks = kernels.gram(Hc * (Cp * sides.w * sides.h[:, None])[:, :, None, None], Hc, symmetric=True)
        blocks = blocks + kernels.gram(J * (Cp * sides.w / sides.h[:, None])[:, :, None, None], J, symmetric=True)
        N = N + sparse_from_blocks(sides.dofs, blocks, n)
    N.sort_indices()
    return N
