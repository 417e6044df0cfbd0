"""Euler-Bernoulli beams embedded in the plate mesh as cut (trace) elements.

A beam is a straight segment that crosses triangles arbitrarily. Its
discrete space is the plate space restricted to the triangles it cuts, and
its c/dG form lives on the sub-segments, with consistency and penalty
terms at the points where the beam crosses faces::

    a(v, w) = sum_T (EI v_tt, w_tt)_{beam in T}
              - sum_x <EI v_tt> [w_t] - sum_x [v_t] <EI w_tt>
              + sum_x beta0 / h_x EI [v_t] [w_t]

Jumps at a crossing are taken as (value before) - (value after) along the
beam tangent.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .assembly import (
    as_components,
    element_points,
    eval_directional,
    eval_on,
    face_points,
    scatter_vector,
    segment_points,
    sparse_from_blocks,
)

END_CONDITIONS = ("free", "simply_supported", "clamped")
CROSS_SECTIONS = ("standard", "dual_layer")

COLLINEAR_ANGLE_TOL = 1e-12
MERGE_TOL = 1e-10  # relative to h
DROP_TOL = 1e-12  # relative to h


class CutGeometryError(ValueError):
    """The beam cannot be cut into the mesh (collinear with a face, or leaves the mesh)."""


@dataclass(frozen=True)
class BeamSpec:
    """A straight reinforcing beam.

    ``ends`` gives the support at ``p0`` and ``p1``. ``load`` is the line
    load factor ``f(s)`` as a vectorized function of arc length from ``p0``;
    the applied load per unit length is ``area * f(s)``. The dual-layer
    cross-section (two strips above and below the plate) needs the plate
    thickness in ``plate_thickness``.
    """

    p0: tuple
    p1: tuple
    E: float
    b: float
    t: float
    cross_section: str = "standard"
    plate_thickness: Optional[float] = None
    ends: tuple = ("free", "free")
    beta0: float = 16.0
    beta_tilde0: float = 100.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    load: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        p0 = tuple(float(x) for x in self.p0)
        p1 = tuple(float(x) for x in self.p1)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "ends", tuple(self.ends))
        if len(p0) != 2 or len(p1) != 2:
            raise ValueError("beam endpoints must be 2D points")
        if p0 == p1:
            raise ValueError("beam endpoints coincide")
        if not self.E >= 0:
            raise ValueError(f"beam E must be >= 0, got {self.E}")
        if not (self.b > 0 and self.t > 0):
            raise ValueError("beam width and thickness must be > 0")
        if self.cross_section not in CROSS_SECTIONS:
            raise ValueError(f"cross_section must be one of {CROSS_SECTIONS}")
        if self.cross_section == "dual_layer":
            if self.plate_thickness is None or not self.t > self.plate_thickness:
                raise ValueError("dual_layer cross-section needs t > plate_thickness")
        if len(self.ends) != 2 or any(e not in END_CONDITIONS for e in self.ends):
            raise ValueError(f"ends must be two of {END_CONDITIONS}, got {self.ends}")
        for name in ("beta0", "beta_tilde0", "gamma1", "gamma2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"beam {name} must be >= 0")

    @property
    def length(self):
        return float(np.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]))

    @property
    def tangent(self):
        d = np.subtract(self.p1, self.p0)
        return d / np.linalg.norm(d)

    @property
    def normal(self):
        t = self.tangent
        return np.array([-t[1], t[0]])


def beam_constants(spec):
    """Cross-section area, second moment and bending stiffness ``(a, I, E*I)``."""
    if spec.cross_section == "dual_layer":
        tp = spec.plate_thickness
        if tp is None or not spec.t > tp:
            raise ValueError("dual_layer cross-section needs t > plate_thickness")
        area = spec.b * (spec.t - tp)
        inertia = spec.b * (spec.t**3 - tp**3) / 12
    else:
        area = spec.b * spec.t
        inertia = spec.b * spec.t**3 / 12
    return area, inertia, spec.E * inertia


@dataclass(frozen=True, eq=False)
class CutTopology:
    """How one beam crosses the mesh.

    Sub-segment ``i`` lies in triangle ``elements[i]`` over arc lengths
    ``[s_lo[i], s_hi[i]]``. Crossing ``i`` sits at ``point_s[i]`` between
    sub-segments ``i`` and ``i + 1``; ``point_faces[i]`` is the crossed face
    (-1 when the beam passes exactly through a vertex) and ``point_h[i]``
    the size used by the crossing penalty.
    """

    p0: np.ndarray
    p1: np.ndarray
    length: float
    tangent: np.ndarray
    normal: np.ndarray
    elements: np.ndarray
    s_lo: np.ndarray
    s_hi: np.ndarray
    point_s: np.ndarray
    point_faces: np.ndarray
    point_h: np.ndarray
    active_faces: np.ndarray
    end_h: np.ndarray

    @property
    def points(self):
        return self.p0 + self.point_s[:, None] * self.tangent

    @property
    def n_points(self):
        return len(self.point_s)


def _clip_intervals(mesh, p0, p1):
    """Parameter interval [lo, hi] of the segment inside each triangle (empty if lo > hi)."""
    V, T = mesh.vertices, mesh.triangles
    nt = len(T)
    lo = np.zeros(nt)
    hi = np.ones(nt)
    for e in range(3):
        a = V[T[:, e]]
        ab = V[T[:, (e + 1) % 3]] - a
        o0 = ab[:, 0] * (p0[1] - a[:, 1]) - ab[:, 1] * (p0[0] - a[:, 0])
        o1 = ab[:, 0] * (p1[1] - a[:, 1]) - ab[:, 1] * (p1[0] - a[:, 0])
        slope = o1 - o0
        with np.errstate(divide="ignore", invalid="ignore"):
            root = -o0 / slope
        up = slope > 0
        down = slope < 0
        lo[up] = np.maximum(lo[up], root[up])
        hi[down] = np.minimum(hi[down], root[down])
        hi[(slope == 0) & (o0 < 0)] = -1.0
    return lo, hi


def _check_collinear(mesh, topo, p0, p1, h):
    V = mesh.vertices
    d = p1 - p0
    L = np.linalg.norm(d)
    t = d / L
    a = V[topo.face_vertices[:, 0]]
    b = V[topo.face_vertices[:, 1]]
    e = (b - a) / topo.lengths[:, None]
    sin = np.abs(t[0] * e[:, 1] - t[1] * e[:, 0])
    dist = np.abs(t[0] * (a[:, 1] - p0[1]) - t[1] * (a[:, 0] - p0[0]))
    sa = (a - p0) @ t
    sb = (b - p0) @ t
    overlap = np.minimum(np.maximum(sa, sb), L) - np.maximum(np.minimum(sa, sb), 0.0)
    bad = (sin <= COLLINEAR_ANGLE_TOL) & (dist <= MERGE_TOL * h) & (overlap > DROP_TOL * h)
    if np.any(bad):
        f = int(np.argmax(bad))
        raise CutGeometryError(
            f"beam {p0.tolist()}->{p1.tolist()} runs along face {f} "
            f"(vertices {topo.face_vertices[f].tolist()}); crossings must be isolated points"
        )


def compute_cut_topology(mesh, topo, spec):
    """Sub-segments, crossing points and active faces of a beam on the mesh."""
    p0 = np.asarray(spec.p0, dtype=np.float64)
    p1 = np.asarray(spec.p1, dtype=np.float64)
    d = p1 - p0
    L = float(np.linalg.norm(d))
    if L == 0:
        raise CutGeometryError("beam has zero length")
    h = mesh.h
    _check_collinear(mesh, topo, p0, p1, h)
    lo, hi = _clip_intervals(mesh, p0, p1)
    keep = np.flatnonzero((hi - lo) * L > DROP_TOL * h)
    if len(keep) == 0:
        raise CutGeometryError(f"beam endpoint {p0.tolist()} is outside the mesh")
    keep = keep[np.lexsort((hi[keep], lo[keep]))]
    lo, hi = lo[keep], hi[keep]
    tol = MERGE_TOL * h / L
    if lo[0] > tol:
        raise CutGeometryError(f"beam endpoint {p0.tolist()} is outside the mesh")
    if hi[-1] < 1 - tol:
        raise CutGeometryError(f"beam endpoint {p1.tolist()} is outside the mesh")
    gaps = lo[1:] - hi[:-1]
    if np.any(gaps > tol):
        i = int(np.argmax(gaps))
        raise CutGeometryError(f"beam leaves the mesh near {(p0 + hi[i] * d).tolist()}")
    if np.any(gaps < -tol):
        i = int(np.argmin(gaps))
        raise CutGeometryError(f"overlapping cut intervals near {(p0 + hi[i] * d).tolist()}; mesh not conforming?")
    lam = 0.5 * (hi[:-1] + lo[1:])
    s_lo = np.concatenate([[0.0], lam * L])
    s_hi = np.concatenate([lam * L, [L]])

    elements = keep
    tf = topo.triangle_faces
    T = mesh.triangles
    point_faces = np.full(len(lam), -1, dtype=np.int64)
    point_h = np.empty(len(lam))
    for i, (ea, eb) in enumerate(zip(elements[:-1], elements[1:])):
        shared = np.intersect1d(tf[ea], tf[eb])
        if len(shared):
            point_faces[i] = shared[0]
            point_h[i] = topo.h_face[shared[0]]
            continue
        vert = np.intersect1d(T[ea], T[eb])
        if len(vert) == 0:
            raise CutGeometryError(f"consecutive cut triangles {ea} and {eb} do not touch")
        v = vert[0]
        incident = [f for e in (ea, eb) for f in tf[e] if v in topo.face_vertices[f]]
        point_h[i] = topo.h_face[incident].mean()

    active = np.zeros(mesh.n_triangles, dtype=bool)
    active[elements] = True
    ft = topo.face_triangles
    both = (ft[:, 1] >= 0) & active[ft[:, 0]] & active[np.maximum(ft[:, 1], 0)]
    end_h = np.array([topo.h_face[tf[elements[0]]].mean(), topo.h_face[tf[elements[-1]]].mean()])
    t = d / L
    arrays = dict(
        elements=elements, s_lo=s_lo, s_hi=s_hi, point_s=lam * L, point_faces=point_faces,
        point_h=point_h, active_faces=np.flatnonzero(both), end_h=end_h,
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    return CutTopology(p0=p0, p1=p1, length=L, tangent=t, normal=np.array([-t[1], t[0]]), **arrays)


def active_dofs(space, cut):
    """DOFs whose basis functions do not vanish on the cut triangles."""
    return np.unique(space.cell_dofs[cut.elements])


def _point_layout(cut):
    pts = cut.points[:, None, :]
    ea, eb = cut.elements[:-1], cut.elements[1:]
    return pts, ea, eb


def _segment_blocks(space, cut, stiffness, degree):
    pts, _, w = segment_points(cut.p0, cut.p1, cut.s_lo, cut.s_hi, degree)
    t = cut.tangent
    D2 = eval_directional(space, cut.elements, pts, [t, t])[:, :, None, :]
    return kernels.gram(D2 * (stiffness * w)[:, :, None, None], D2, symmetric=True)


def assemble_beam_form(space, cut, spec, degree=None):
    """Sparse matrix of the cut c/dG beam form (tangential-derivative form)."""
    degree = 2 * space.degree if degree is None else degree
    EI = beam_constants(spec)[2]
    n = space.n_dofs
    A = sparse_from_blocks(space.cell_dofs[cut.elements], _segment_blocks(space, cut, EI, degree), n)
    if cut.n_points:
        pts, ea, eb = _point_layout(cut)
        t = cut.tangent
        d1a = eval_directional(space, ea, pts, [t])
        d1b = eval_directional(space, eb, pts, [t])
        d2a = eval_directional(space, ea, pts, [t, t])
        d2b = eval_directional(space, eb, pts, [t, t])
        J = np.concatenate([d1a, -d1b], axis=2)[:, :, None, :]
        M = 0.5 * EI * np.concatenate([d2a, d2b], axis=2)[:, :, None, :]
        B = kernels.gram(M, J)
        c = spec.beta0 * EI / cut.point_h
        P = kernels.gram(J * c[:, None, None, None], J, symmetric=True)
        dofs = np.concatenate([space.cell_dofs[ea], space.cell_dofs[eb]], axis=1)
        A = A + sparse_from_blocks(dofs, P - (B + np.swapaxes(B, 1, 2)), n)
    A.sort_indices()
    return A


def assemble_beam_form_tensor(space, cut, spec, degree=None):
    """Same form as :func:`assemble_beam_form`, built from the tangential tensors.

    Uses the projection ``P = t (x) t``: tangential gradient ``P grad v``,
    tangential strain ``P H P`` and beam moment ``EI P H P``.
    """
    degree = 2 * space.degree if degree is None else degree
    EI = beam_constants(spec)[2]
    n = space.n_dofs
    t = cut.tangent
    P = np.outer(t, t)
    pts, _, w = segment_points(cut.p0, cut.p1, cut.s_lo, cut.s_hi, degree)
    H = eval_on(space, cut.elements, pts, "hessians")
    strain = as_components(np.einsum("ai,mqlij,jb->mqlab", P, H, P))
    blocks = kernels.gram(strain * (EI * w)[:, :, None, None], strain, symmetric=True)
    A = sparse_from_blocks(space.cell_dofs[cut.elements], blocks, n)
    if cut.n_points:
        pts, ea, eb = _point_layout(cut)
        ga = eval_on(space, ea, pts, "gradients")
        gb = eval_on(space, eb, pts, "gradients")
        jump = as_components(np.concatenate([ga @ P, -(gb @ P)], axis=2))

        def moment(tri):
            Hx = eval_on(space, tri, pts, "hessians")
            return EI * np.einsum("a,ai,mqlij,jb->mqlb", t, P, Hx, P)

        avg = as_components(0.5 * np.concatenate([moment(ea), moment(eb)], axis=2))
        B = kernels.gram(avg, jump)
        c = spec.beta0 * EI / cut.point_h
        Pen = kernels.gram(jump * c[:, None, None, None], jump, symmetric=True)
        dofs = np.concatenate([space.cell_dofs[ea], space.cell_dofs[eb]], axis=1)
        A = A + sparse_from_blocks(dofs, Pen - (B + np.swapaxes(B, 1, 2)), n)
    A.sort_indices()
    return A


def assemble_beam_stabilization(space, cut, spec, degree=None):
    """Ghost-penalty stabilization on the cut triangles, scaled by E*I.

    Face term: normal-derivative jumps of orders 1..k over whole active
    faces, weighted ``gamma1 * h_F^(2(j-2))``. Element term: derivatives
    ``d_n d_t^j v`` (normal to the beam) for j = 0..2 over whole cut
    triangles, weighted ``gamma2 * h_T^(2(j-2)+1)``.
    """
    degree = 2 * space.degree if degree is None else degree
    EI = beam_constants(spec)[2]
    n = space.n_dofs
    A = sparse_from_blocks(np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0, 0)), n)
    topo = space.topology
    faces = cut.active_faces
    if spec.gamma1 > 0 and len(faces):
        pts, w = face_points(space, faces, degree)
        normals = np.broadcast_to(topo.normals[faces][:, None, :], pts.shape)
        tp = topo.face_triangles[faces, 0]
        tm = topo.face_triangles[faces, 1]
        hF = topo.h_face[faces]
        blocks = 0
        for j in range(1, space.degree + 1):
            Dp = eval_directional(space, tp, pts, [normals] * j)
            Dm = eval_directional(space, tm, pts, [normals] * j)
            J = np.concatenate([Dp, -Dm], axis=2)[:, :, None, :]
            wj = spec.gamma1 * EI * hF ** (2 * (j - 2))
            blocks = blocks + kernels.gram(J * (w * wj[:, None])[:, :, None, None], J, symmetric=True)
        dofs = np.concatenate([space.cell_dofs[tp], space.cell_dofs[tm]], axis=1)
        A = A + sparse_from_blocks(dofs, blocks, n)
    if spec.gamma2 > 0:
        tri, pts, w = element_points(space, degree, cut.elements)
        hT = space.mesh.diameters[tri]
        blocks = 0
        for j in range(3):
            D = eval_directional(space, tri, pts, [cut.normal] + [cut.tangent] * j)[:, :, None, :]
            wj = spec.gamma2 * EI * hT ** (2 * (j - 2) + 1)
            blocks = blocks + kernels.gram(D * (w * wj[:, None])[:, :, None, None], D, symmetric=True)
        A = A + sparse_from_blocks(space.cell_dofs[tri], blocks, n)
    A.sort_indices()
    return A


def assemble_beam_endpoint_terms(space, spec, cut=None):
    """Support terms at the beam ends.

    ``simply_supported``: displacement penalty ``beta_tilde0 / h^3 * EI v w``.
    ``clamped``: that penalty plus one-sided Nitsche terms for the end
    rotation, with the outward tangent at the end.
    """
    if cut is None:
        cut = compute_cut_topology(space.mesh, space.topology, spec)
    EI = beam_constants(spec)[2]
    n = space.n_dofs
    A = sparse_from_blocks(np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0, 0)), n)
    ends = [
        (spec.ends[0], cut.elements[0], cut.p0, -cut.tangent, cut.end_h[0]),
        (spec.ends[1], cut.elements[-1], cut.p1, cut.tangent, cut.end_h[1]),
    ]
    for cond, tri, x, t_out, h in ends:
        if cond == "free":
            continue
        tri_a = np.array([tri])
        xa = x[None, :]
        phi = space.values(tri_a, xa)[0]
        u = np.sqrt(spec.beta_tilde0 * EI / h**3) * phi
        block = np.outer(u, u)
        if cond == "clamped":
            d1 = space.directional(tri_a, xa, [t_out])[0]
            d2 = space.directional(tri_a, xa, [t_out, t_out])[0]
            r = np.sqrt(spec.beta0 * EI / h) * d1
            cross = EI * np.outer(d2, d1)
            block = block + np.outer(r, r) - (cross + cross.T)
        A = A + sparse_from_blocks(space.cell_dofs[tri][None, :], block[None], n)
    A.sort_indices()
    return A


def assemble_beam_load(space, cut, spec, degree=12):
    """Vector ``sum_T int_{beam in T} area * f(s) * phi_i ds``."""
    n = space.n_dofs
    if spec.load is None:
        return np.zeros(n)
    area = beam_constants(spec)[0]
    pts, s, w = segment_points(cut.p0, cut.p1, cut.s_lo, cut.s_hi, degree)
    phi = eval_on(space, cut.elements, pts, "values")
    f = np.broadcast_to(spec.load(s), s.shape)
    return scatter_vector(space.cell_dofs[cut.elements], np.einsum("mql,mq->ml", phi, area * f * w), n)


def beam_energy_matrix(space, cut, spec, degree=None):
    """Matrix N with v^T N v = beam energy norm squared (segments, crossing averages and jumps)."""
    degree = 2 * space.degree if degree is None else degree
    CB = beam_constants(spec)[2]
    n = space.n_dofs
    N = sparse_from_blocks(space.cell_dofs[cut.elements], _segment_blocks(space, cut, CB, degree), n)
    if cut.n_points:
        pts, ea, eb = _point_layout(cut)
        t = cut.tangent
        J = np.concatenate(
            [eval_directional(space, ea, pts, [t]), -eval_directional(space, eb, pts, [t])], axis=2
        )[:, :, None, :]
        M = 0.5 * np.concatenate(
            [eval_directional(space, ea, pts, [t, t]), eval_directional(space, eb, pts, [t, t])], axis=2
        )[:, :, None, :]
        hx = cut.point_h[:, None, None, None]
        blocks = kernels.gram(M * (CB * hx), M, symmetric=True) + kernels.gram(J * (CB / hx), J, symmetric=True)
        dofs = np.concatenate([space.cell_dofs[ea], space.cell_dofs[eb]], axis=1)
        N = N + sparse_from_blocks(dofs, blocks, n)
    N.sort_indices()
    return N
