"""Shared assembly plumbing: quadrature point layouts and sparse scatter."""
import numpy as np
import scipy.sparse as sp

from .quadrature import segment_rule, triangle_rule


def sparse_from_blocks(dofs, blocks, n, symmetric=True):
    """Sum local blocks ``blocks[e]`` (nl x nl) into an n x n CSR matrix at ``dofs[e]``.

    Blocks of a symmetric form are symmetric, but a DOF repeated inside one
    block (a node shared by both sides of a face) is summed in a different
    order for (i, j) and (j, i); the result is averaged with its transpose
    so symmetry holds bit for bit.
    """
    dofs = np.asarray(dofs)
    blocks = np.asarray(blocks)
    if dofs.size == 0:
        return sp.csr_matrix((n, n))
    nl = dofs.shape[1]
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    A = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    if symmetric:
        A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    return A


def scatter_vector(dofs, values, n):
    return np.bincount(np.asarray(dofs).ravel(), weights=np.asarray(values).ravel(), minlength=n)


def element_points(space, degree, triangles=None):
    """Physical quadrature points (ne, nq, 2) and weights (ne, nq) on whole triangles."""
    rule = triangle_rule(degree)
    mesh = space.mesh
    tri = np.arange(mesh.n_triangles) if triangles is None else np.asarray(triangles)
    x0 = mesh.vertices[mesh.triangles[tri, 0]]
    pts = x0[:, None, :] + np.einsum("tij,qj->tqi", space.jacobians[tri], rule.points)
    w = rule.weights[None, :] * (2 * mesh.areas[tri])[:, None]
    return tri, pts, w


def face_points(space, faces, degree):
    """Physical quadrature points (nf, nq, 2) and weights (nf, nq) on faces."""
    rule = segment_rule(degree)
    topo = space.topology
    V = space.mesh.vertices
    a = V[topo.face_vertices[faces, 0]]
    b = V[topo.face_vertices[faces, 1]]
    s = rule.points[:, 0]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    w = rule.weights[None, :] * topo.lengths[faces][:, None]
    return pts, w


def segment_points(p0, p1, s_lo, s_hi, degree):
    """Points (m, nq, 2), arc-length values (m, nq), weights (m, nq) on sub-segments of a line."""
    rule = segment_rule(degree)
    p0 = np.asarray(p0, dtype=np.float64)
    t = np.asarray(p1, dtype=np.float64) - p0
    t = t / np.linalg.norm(t)
    s_lo, s_hi = np.asarray(s_lo), np.asarray(s_hi)
    s = s_lo[:, None] + rule.points[None, :, 0] * (s_hi - s_lo)[:, None]
    pts = p0 + s[..., None] * t
    w = rule.weights[None, :] * (s_hi - s_lo)[:, None]
    return pts, s, w


def broadcast_triangles(tri, pts):
    """Flatten (m, nq, 2) points with per-row triangles into matching flat arrays."""
    m, nq = pts.shape[:2]
    return np.repeat(np.asarray(tri), nq), pts.reshape(m * nq, 2)


def eval_on(space, tri, pts, what):
    """Evaluate basis quantity ``what`` ('values', 'gradients', 'hessians') at (m, nq, 2) points."""
    m, nq = pts.shape[:2]
    ft, fp = broadcast_triangles(tri, pts)
    out = getattr(space, what)(ft, fp)
    return out.reshape((m, nq) + out.shape[1:])


def eval_directional(space, tri, pts, directions):
    m, nq = pts.shape[:2]
    ft, fp = broadcast_triangles(tri, pts)
    dirs = [np.broadcast_to(d, (m, nq, 2)).reshape(m * nq, 2) if np.ndim(d) == 3 else d for d in directions]
    return space.directional(ft, fp, dirs).reshape(m, nq, -1)


def as_components(x):
    """(m, nq, nl, c...) -> (m, nq, c, nl), the layout expected by ``kernels.gram``."""
    m, nq, nl = x.shape[:3]
    return np.ascontiguousarray(np.moveaxis(x.reshape(m, nq, nl, -1), 2, 3))
