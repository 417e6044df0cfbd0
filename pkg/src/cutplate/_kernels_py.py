"""Numpy implementations of the assembly kernels (used when the extension is absent)."""
import numpy as np


def gram(L, R, symmetric=False):
    """K[e, i, j] = sum_{q, c} L[e, q, c, i] * R[e, q, c, j]."""
    L = np.ascontiguousarray(L, dtype=np.float64)
    R = np.ascontiguousarray(R, dtype=np.float64)
    if L.shape[:3] != R.shape[:3]:
        raise ValueError("L and R disagree in the leading three axes")
    if symmetric and L.shape[3] != R.shape[3]:
        raise ValueError("symmetric gram needs square local blocks")
    ne, nq, nc, ni = L.shape
    K = np.einsum("eki,ekj->eij", L.reshape(ne, nq * nc, ni), R.reshape(ne, nq * nc, -1))
    if symmetric:
        iu, ju = np.triu_indices(ni, k=1)
        K[:, ju, iu] = K[:, iu, ju]
    return K


def locate_points(vertices, triangles, points, tol, chunk=512):
    """Index of the lowest-numbered triangle containing each point, or -1."""
    vertices = np.asarray(vertices, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    x0 = vertices[triangles[:, 0]]
    e1 = vertices[triangles[:, 1]] - x0
    e2 = vertices[triangles[:, 2]] - x0
    det = e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1]
    out = np.full(len(points), -1, dtype=np.int64)
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        d = p[:, None, :] - x0[None, :, :]
        l1 = (d[..., 0] * e2[:, 1] - e2[:, 0] * d[..., 1]) / det
        l2 = (e1[:, 0] * d[..., 1] - d[..., 0] * e1[:, 1]) / det
        l0 = 1.0 - l1 - l2
        inside = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
        hit = inside.any(axis=1)
        out[start:start + chunk] = np.where(hit, inside.argmax(axis=1), -1)
    return out
