"""Continuous Lagrange P_k spaces on triangle meshes.

Basis functions live on the reference triangle as monomial expansions, so
derivatives of any order come from differentiating monomials. Physical
derivatives use the constant inverse Jacobian of each affine element.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from . import kernels
from .mesh import build_face_topology

INSIDE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """Lagrange P_k element on the reference triangle.

    Local node order: the three vertices, then ``k-1`` nodes on each local
    edge ``e`` (opposite vertex ``e``, running from vertex ``e+1`` to
    ``e+2``), then interior nodes.
    """

    degree: int
    nodes: np.ndarray
    exponents: np.ndarray  # (nmono, 2)
    coefficients: np.ndarray  # (nmono, nloc): phi_i = sum_m mono_m * C[m, i]

    @property
    def n_local(self):
        return len(self.nodes)

    @property
    def n_interior(self):
        return (self.degree - 1) * (self.degree - 2) // 2

    def derivative(self, points, p, q):
        """Values of d^p/dxi^p d^q/deta^q of every basis function, shape (N, nloc)."""
        points = np.atleast_2d(points)
        a, b = self.exponents[:, 0], self.exponents[:, 1]
        coef = np.ones(len(a))
        for s in range(p):
            coef = coef * (a - s)
        for s in range(q):
            coef = coef * (b - s)
        ea = np.maximum(a - p, 0)
        eb = np.maximum(b - q, 0)
        mono = coef * points[:, 0:1] ** ea * points[:, 1:2] ** eb
        return mono @ self.coefficients


@lru_cache(maxsize=None)
def reference_element(k):
    if k < 1:
        raise ValueError("degree must be >= 1")
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = list(verts)
    for e in range(3):
        start, end = verts[(e + 1) % 3], verts[(e + 2) % 3]
        for j in range(1, k):
            nodes.append(start + (end - start) * j / k)
    for j in range(1, k):
        for i in range(1, k - j):
            nodes.append(np.array([i / k, j / k]))
    nodes = np.array(nodes)
    exps = np.array([(a, d - a) for d in range(k + 1) for a in range(d, -1, -1)])
    vander = nodes[:, 0:1] ** exps[:, 0] * nodes[:, 1:2] ** exps[:, 1]
    coeffs = np.linalg.inv(vander)
    # snap round-off so derivatives of polynomials of lower degree vanish exactly
    coeffs[np.abs(coeffs) < 1e-12 * np.abs(coeffs).max()] = 0.0
    for arr in (nodes, exps, coeffs):
        arr.setflags(write=False)
    return ReferenceElement(k, nodes, exps, coeffs)


@dataclass(frozen=True, eq=False)
class FESpace:
    """Continuous piecewise-P_k scalar space.

    Global DOFs: mesh vertices first, then ``k-1`` nodes per face in face
    order (along the face's stored direction), then interior nodes per
    triangle.
    """

    mesh: object
    topology: object
    degree: int
    element: ReferenceElement
    n_dofs: int
    cell_dofs: np.ndarray  # (nt, nloc)
    node_coords: np.ndarray  # (ndofs, 2)
    jacobians: np.ndarray = field(repr=False)  # (nt, 2, 2), columns x1-x0, x2-x0
    inv_jacobians: np.ndarray = field(repr=False)

    @property
    def n_local(self):
        return self.element.n_local

    def boundary_dofs(self):
        """DOFs whose nodes lie on boundary faces."""
        topo = self.topology
        faces = np.flatnonzero(topo.boundary)
        verts = np.unique(topo.face_vertices[faces])
        k = self.degree
        nv = self.mesh.n_vertices
        edge = nv + faces[:, None] * (k - 1) + np.arange(k - 1)[None, :]
        return np.unique(np.concatenate([verts, edge.ravel()]))

    # -- evaluation ---------------------------------------------------------

    def to_reference(self, tri, points):
        """Reference coordinates of physical ``points`` (N, 2) in triangles ``tri`` (N,)."""
        x0 = self.mesh.vertices[self.mesh.triangles[tri, 0]]
        return np.einsum("nij,nj->ni", self.inv_jacobians[tri], np.asarray(points) - x0)

    def values(self, tri, points):
        xi = self.to_reference(tri, points)
        return self.element.derivative(xi, 0, 0)

    def gradients(self, tri, points):
        """Physical basis gradients, shape (N, nloc, 2)."""
        xi = self.to_reference(tri, points)
        g = np.stack([self.element.derivative(xi, 1, 0), self.element.derivative(xi, 0, 1)], axis=-1)
        return np.einsum("nli,nij->nlj", g, self.inv_jacobians[tri])

    def hessians(self, tri, points):
        """Physical basis Hessians, shape (N, nloc, 2, 2)."""
        xi = self.to_reference(tri, points)
        el = self.element
        hxx, hxy, hyy = el.derivative(xi, 2, 0), el.derivative(xi, 1, 1), el.derivative(xi, 0, 2)
        H = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
        Ji = self.inv_jacobians[tri]
        return np.einsum("nai,nlab,nbj->nlij", Ji, H, Ji)

    def directional(self, tri, points, directions):
        """Mixed directional derivative d_{d1} d_{d2} ... of every basis function.

        ``directions`` is a sequence of physical direction arrays, each of
        shape (2,) or (N, 2). Returns shape (N, nloc).
        """
        xi = self.to_reference(tri, points)
        n = len(xi)
        Ji = self.inv_jacobians[tri]
        refdirs = [np.einsum("nij,nj->ni", Ji, np.broadcast_to(d, (n, 2))) for d in directions]
        if not refdirs:
            return self.element.derivative(xi, 0, 0)
        out = np.zeros((n, self.n_local))
        cache = {}
        for combo in product((0, 1), repeat=len(refdirs)):
            w = np.ones(n)
            for d, c in zip(refdirs, combo):
                w = w * d[:, c]
            p = combo.count(0)
            key = (p, len(combo) - p)
            if key not in cache:
                cache[key] = self.element.derivative(xi, *key)
            out += w[:, None] * cache[key]
        return out

    def eval_basis(self, triangle, point):
        """(values, gradients, Hessians) of the local basis of one triangle at one point."""
        point = np.asarray(point, dtype=np.float64).reshape(1, 2)
        tri = np.array([int(triangle)])
        xi = self.to_reference(tri, point)[0]
        bary = np.array([1 - xi.sum(), xi[0], xi[1]])
        if bary.min() < -INSIDE_TOL:
            raise ValueError(f"point {point[0].tolist()} is outside triangle {int(triangle)}")
        return self.values(tri, point)[0], self.gradients(tri, point)[0], self.hessians(tri, point)[0]

    def locate(self, points):
        """Containing triangle of each point (lowest index on ties); raises if any is outside."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        tri = kernels.locate_points(self.mesh.vertices, self.mesh.triangles, points, INSIDE_TOL)
        if np.any(tri < 0):
            bad = points[np.argmin(tri)]
            raise ValueError(f"point {bad.tolist()} is outside the mesh")
        return tri

    def evaluate_field(self, coeffs, point):
        """(value, gradient, Hessian) of a finite element field at one point."""
        point = np.asarray(point, dtype=np.float64).reshape(1, 2)
        tri = self.locate(point)
        c = np.asarray(coeffs)[self.cell_dofs[tri[0]]]
        return (
            float(self.values(tri, point)[0] @ c),
            self.gradients(tri, point)[0].T @ c,
            np.einsum("lij,l->ij", self.hessians(tri, point)[0], c),
        )

    def evaluate_values(self, coeffs, points):
        """Field values at many points."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        tri = self.locate(points)
        return np.einsum("nl,nl->n", self.values(tri, points), np.asarray(coeffs)[self.cell_dofs[tri]])

    def interpolate(self, f):
        """Nodal interpolant of a vectorized ``f(x, y)``."""
        x, y = self.node_coords[:, 0], self.node_coords[:, 1]
        return np.broadcast_to(np.asarray(f(x, y), dtype=np.float64), (self.n_dofs,)).copy()


def build_space(mesh, k=2, topology=None):
    if int(k) != k or k < 2:
        raise ValueError(f"polynomial degree must be an integer >= 2, got {k}")
    k = int(k)
    topo = topology if topology is not None else build_face_topology(mesh)
    el = reference_element(k)
    nv, nt, nf = mesh.n_vertices, mesh.n_triangles, topo.n_faces
    ne = k - 1
    nint = el.n_interior
    tris = mesh.triangles
    cell = np.empty((nt, el.n_local), dtype=np.int64)
    cell[:, :3] = tris
    for e in range(3):
        f = topo.triangle_faces[:, e]
        start = tris[:, (e + 1) % 3]
        same = topo.face_vertices[f, 0] == start
        j = np.arange(ne)
        idx = np.where(same[:, None], j[None, :], (ne - 1 - j)[None, :])
        cell[:, 3 + e * ne:3 + (e + 1) * ne] = nv + f[:, None] * ne + idx
    base = nv + nf * ne
    cell[:, 3 + 3 * ne:] = base + np.arange(nt)[:, None] * nint + np.arange(nint)[None, :]
    ndofs = base + nt * nint

    V = mesh.vertices
    x0 = V[tris[:, 0]]
    J = np.stack([V[tris[:, 1]] - x0, V[tris[:, 2]] - x0], axis=2)
    Jinv = np.linalg.inv(J)
    phys = x0[:, None, :] + np.einsum("tij,lj->tli", J, el.nodes)
    coords = np.empty((ndofs, 2))
    coords[cell.ravel()] = phys.reshape(-1, 2)
    coords[:nv] = V  # exact vertex coordinates
    for arr in (cell, coords, J, Jinv):
        arr.setflags(write=False)
    return FESpace(mesh, topo, k, el, ndofs, cell, coords, J, Jinv)


