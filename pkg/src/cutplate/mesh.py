"""Triangulations of polygonal domains and their face (edge) topology."""
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """A mesh violates one of its structural invariants."""


class MeshParseError(MeshError):
    """Malformed mesh file; ``lineno`` is 1-based."""

    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _signed_areas(vertices, triangles):
    p0, p1, p2 = (vertices[triangles[:, i]] for i in range(3))
    e1, e2 = p1 - p0, p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangle mesh with counter-clockwise triangles.

    Use :meth:`from_arrays` to build one; it normalizes orientation and
    validates the invariants.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    areas: np.ndarray = field(repr=False)
    diameters: np.ndarray = field(repr=False)
    shape_ratio: float = field(repr=False)

    @classmethod
    def from_arrays(cls, vertices, triangles):
        vertices = np.array(vertices, dtype=np.float64).reshape(-1, 2)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) == 0:
            raise MeshError("mesh has no triangles")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshError("triangle references a vertex index out of range")
        if np.any(triangles[:, 0] == triangles[:, 1]) or np.any(
            triangles[:, 1] == triangles[:, 2]
        ) or np.any(triangles[:, 0] == triangles[:, 2]):
            raise MeshError("positive area: triangle repeats a vertex index")
        area = _signed_areas(vertices, triangles)
        flip = area < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        area = np.abs(area)
        lengths = np.stack(
            [
                np.linalg.norm(vertices[triangles[:, (i + 2) % 3]] - vertices[triangles[:, (i + 1) % 3]], axis=1)
                for i in range(3)
            ],
            axis=1,
        )
        scale = lengths.max(axis=1)
        bad = area <= 1e-14 * scale**2
        if np.any(bad):
            raise MeshError(
                f"positive area: triangle {int(np.argmax(bad))} is degenerate (zero area)"
            )
        used = np.zeros(len(vertices), dtype=bool)
        used[triangles.ravel()] = True
        if not used.all():
            raise MeshError(f"vertex {int(np.argmin(used))} belongs to no triangle")

        # circumradius / inradius; 2 for an equilateral triangle
        semi = lengths.sum(axis=1) / 2
        r_in = area / semi
        r_circ = lengths.prod(axis=1) / (4 * area)
        ratio = float(np.max(r_circ / r_in))
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        mesh = cls(vertices, triangles, area, lengths.max(axis=1), ratio)
        _check_conforming(mesh)
        return mesh

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def h(self):
        """Global mesh size, the largest triangle diameter."""
        return float(self.diameters.max())


def _edge_table(triangles):
    """(sorted vertex pair, triangle, local edge) for every triangle edge.

    Local edge ``e`` of a triangle is the one opposite its vertex ``e``,
    running from vertex ``e+1`` to ``e+2``.
    """
    a = np.concatenate([triangles[:, (e + 1) % 3] for e in range(3)])
    b = np.concatenate([triangles[:, (e + 2) % 3] for e in range(3)])
    tri = np.tile(np.arange(len(triangles)), 3)
    loc = np.repeat(np.arange(3), len(triangles))
    # order by triangle then local edge so first appearance is deterministic
    order = np.lexsort((loc, tri))
    return a[order], b[order], tri[order], loc[order]


def _check_conforming(mesh):
    a, b, _, _ = _edge_table(mesh.triangles)
    key = np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    if counts.max() > 2:
        raise MeshError("conforming: an edge is shared by more than two triangles")
    # directed edges must not repeat: two triangles sharing an edge traverse it oppositely
    directed = np.unique(np.stack([a, b], axis=1), axis=0)
    if len(directed) != len(a):
        raise MeshError("conforming: overlapping triangles (edge traversed twice in one direction)")
    bnd = uniq[counts == 1]
    V = mesh.vertices
    pa, pb = V[bnd[:, 0]], V[bnd[:, 1]]
    d = pb - pa
    L2 = (d**2).sum(axis=1)
    tol = 1e-10 * mesh.h
    for start in range(0, len(bnd), 256):
        sl = slice(start, start + 256)
        rel = V[None, :, :] - pa[sl, None, :]
        lam = (rel * d[sl, None, :]).sum(axis=2) / L2[sl, None]
        cross = rel[..., 0] * d[sl, None, 1] - rel[..., 1] * d[sl, None, 0]
        dist = np.abs(cross) / np.sqrt(L2[sl, None])
        seg_len = np.sqrt(L2[sl, None])
        hanging = (dist <= tol) & (lam * seg_len > tol) & ((1 - lam) * seg_len > tol)
        if hanging.any():
            i, v = np.argwhere(hanging)[0]
            raise MeshError(
                f"conforming: vertex {int(v)} lies inside edge {tuple(int(x) for x in bnd[start + i])}"
            )
    # boundary loops must enclose exactly the triangulated area (detects folds)
    key_dir = {(int(x), int(y)) for x, y in zip(a, b)}
    enclosed = 0.0
    for (u, v) in bnd:
        if (int(u), int(v)) not in key_dir:
            u, v = v, u
        enclosed += V[u, 0] * V[v, 1] - V[v, 0] * V[u, 1]
    enclosed *= 0.5
    total = mesh.areas.sum()
    if abs(enclosed - total) > 1e-10 * total:
        raise MeshError("conforming: triangles overlap (area mismatch with boundary)")


def generate_structured_unit_square(n):
    """Uniform n-by-n grid on (0, 1)^2, each cell cut along its lower-left/upper-right diagonal."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (i + j * (n + 1)).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh.from_arrays(vertices, triangles)


def generate_unstructured_unit_square(n, seed=0, jitter=0.3):
    """Delaunay mesh of a randomly perturbed (n+1)^2 grid on (0, 1)^2.

    Interior points move by up to ``jitter`` grid spacings in each
    direction; boundary points slide along their edge, corners stay put.
    """
    from scipy.spatial import Delaunay

    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 <= jitter < 0.5:
        raise ValueError("jitter must lie in [0, 0.5)")
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    shift = rng.uniform(-jitter, jitter, pts.shape) / n
    on_x = np.isclose(pts[:, 0], 0) | np.isclose(pts[:, 0], 1)
    on_y = np.isclose(pts[:, 1], 0) | np.isclose(pts[:, 1], 1)
    shift[on_x, 0] = 0.0
    shift[on_y, 1] = 0.0
    pts = pts + shift
    tri = Delaunay(pts).simplices
    # drop slivers Qhull may emit along the straight boundary
    area = np.abs(_signed_areas(pts, tri))
    tri = tri[area > 1e-12 / n**2]
    return Mesh.from_arrays(pts, tri)


def load_mesh(text):
    """Parse the ASCII mesh format.

    Line 1 holds ``nv nt``, then ``nv`` lines ``x y`` and ``nt`` lines
    ``i j k`` with 0-based vertex indices. ``#`` starts a comment.
    """
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            records.append((lineno, line.split()))
    if not records:
        raise MeshParseError("empty mesh file", 1)

    def numbers(rec, count, kind, what):
        lineno, tokens = rec
        if len(tokens) != count:
            raise MeshParseError(f"expected {count} values for {what}, got {len(tokens)}", lineno)
        try:
            return [kind(t) for t in tokens]
        except ValueError:
            raise MeshParseError(f"non-numeric value in {what}: {' '.join(tokens)}", lineno) from None

    nv, nt = numbers(records[0], 2, int, "header 'nv nt'")
    if nv < 3 or nt < 1:
        raise MeshParseError("need at least 3 vertices and 1 triangle", records[0][0])
    if len(records) < 1 + nv + nt:
        last = records[-1][0]
        raise MeshParseError(f"file ends early: expected {nv} vertices and {nt} triangles", last + 1)
    if len(records) > 1 + nv + nt:
        raise MeshParseError("unexpected trailing data", records[1 + nv + nt][0])
    verts = [numbers(r, 2, float, "vertex") for r in records[1:1 + nv]]
    tris = []
    for r in records[1 + nv:]:
        tri = numbers(r, 3, int, "triangle")
        if min(tri) < 0 or max(tri) >= nv:
            raise MeshParseError(f"vertex index out of range 0..{nv - 1}", r[0])
        tris.append(tri)
    return Mesh.from_arrays(verts, tris)


def dump_mesh(mesh):
    """Inverse of :func:`load_mesh`."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class FaceTopology:
    """Faces of a mesh with fixed normals and the face size ``h_F``.

    Face ``f`` runs from ``face_vertices[f, 0]`` to ``face_vertices[f, 1]``,
    counter-clockwise as seen from its first neighbor ``face_triangles[f, 0]``
    (T+). ``normals[f]`` points out of T+ into T- (``face_triangles[f, 1]``,
    -1 on the boundary), so on boundary faces it is the exterior normal.
    """

    mesh: Mesh
    face_vertices: np.ndarray
    face_triangles: np.ndarray
    triangle_faces: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray
    h_face: np.ndarray

    @property
    def n_faces(self):
        return len(self.face_vertices)

    @property
    def interior(self):
        return self.face_triangles[:, 1] >= 0

    @property
    def boundary(self):
        return self.face_triangles[:, 1] < 0

    def with_flipped(self, mask):
        """Copy with T+ and T- swapped on the interior faces selected by ``mask``."""
        mask = np.asarray(mask, dtype=bool) & self.interior
        fv = self.face_vertices.copy()
        ft = self.face_triangles.copy()
        fv[mask] = fv[mask][:, ::-1]
        ft[mask] = ft[mask][:, ::-1]
        normals = self.normals.copy()
        normals[mask] *= -1
        for arr in (fv, ft, normals):
            arr.setflags(write=False)
        return FaceTopology(self.mesh, fv, ft, self.triangle_faces, normals, self.lengths, self.h_face)


def build_face_topology(mesh):
    a, b, tri, loc = _edge_table(mesh.triangles)
    key = np.minimum(a, b) * mesh.n_vertices + np.maximum(a, b)
    _, first, inverse, counts = np.unique(key, return_index=True, return_inverse=True, return_counts=True)
    if counts.max() > 2:
        raise MeshError("non-manifold edge: shared by 3 or more triangles")
    # number faces by first appearance in (triangle, local edge) order
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    face_of = rank[inverse]
    nf = len(first)
    face_vertices = np.full((nf, 2), -1, dtype=np.int64)
    face_triangles = np.full((nf, 2), -1, dtype=np.int64)
    triangle_faces = np.empty((mesh.n_triangles, 3), dtype=np.int64)
    triangle_faces[tri, loc] = face_of
    face_triangles[rank, 0] = tri[first]
    face_vertices[rank, 0] = a[first]
    face_vertices[rank, 1] = b[first]
    second = np.ones(len(a), dtype=bool)
    second[first] = False
    face_triangles[face_of[second], 1] = tri[second]
    V = mesh.vertices
    d = V[face_vertices[:, 1]] - V[face_vertices[:, 0]]
    lengths = np.linalg.norm(d, axis=1)
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]
    interior = face_triangles[:, 1] >= 0
    area_plus = mesh.areas[face_triangles[:, 0]]
    area_minus = np.where(interior, mesh.areas[np.maximum(face_triangles[:, 1], 0)], area_plus)
    h_face = (area_plus + area_minus) / (2 * lengths)
    for arr in (face_vertices, face_triangles, triangle_faces, normals, lengths, h_face):
        arr.setflags(write=False)
    return FaceTopology(mesh, face_vertices, face_triangles, triangle_faces, normals, lengths, h_face)
