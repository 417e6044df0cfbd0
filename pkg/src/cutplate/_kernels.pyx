# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled assembly kernels. Mirrors ``_kernels_py`` exactly in semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def gram(const double[:, :, :, ::1] L, const double[:, :, :, ::1] R, bint symmetric=False):
    """K[e, i, j] = sum_{q, c} L[e, q, c, i] * R[e, q, c, j]."""
    cdef Py_ssize_t ne = L.shape[0], nq = L.shape[1], nc = L.shape[2]
    cdef Py_ssize_t ni = L.shape[3], nj = R.shape[3]
    cdef Py_ssize_t e, q, c, i, j, j0
    cdef double a
    if R.shape[0] != ne or R.shape[1] != nq or R.shape[2] != nc:
        raise ValueError("L and R disagree in the leading three axes")
    if symmetric and ni != nj:
        raise ValueError("symmetric gram needs square local blocks")
    out_arr = np.zeros((ne, ni, nj), dtype=np.float64)
    cdef double[:, :, ::1] K = out_arr
    with nogil:
        for e in range(ne):
            for q in range(nq):
                for c in range(nc):
                    for i in range(ni):
                        a = L[e, q, c, i]
                        if a == 0.0:
                            continue
                        j0 = i if symmetric else 0
                        for j in range(j0, nj):
                            K[e, i, j] += a * R[e, q, c, j]
            if symmetric:
                for i in range(ni):
                    for j in range(i + 1, nj):
                        K[e, j, i] = K[e, i, j]
    return out_arr


def locate_points(const double[:, ::1] vertices, const long[:, ::1] triangles,
                  const double[:, ::1] points, double tol):
    """Index of the lowest-numbered triangle containing each point, or -1."""
    cdef Py_ssize_t nt = triangles.shape[0], npnt = points.shape[0]
    cdef Py_ssize_t p, t
    cdef double x, y, x0, y0, x1, y1, x2, y2, det, l1, l2, l0
    cdef double xmin, xmax, ymin, ymax, pad
    out_arr = np.full(npnt, -1, dtype=np.int64)
    cdef long[::1] out = out_arr
    with nogil:
        for p in range(npnt):
            x = points[p, 0]
            y = points[p, 1]
            for t in range(nt):
                x0 = vertices[triangles[t, 0], 0]; y0 = vertices[triangles[t, 0], 1]
                x1 = vertices[triangles[t, 1], 0]; y1 = vertices[triangles[t, 1], 1]
                x2 = vertices[triangles[t, 2], 0]; y2 = vertices[triangles[t, 2], 1]
                xmin = min(x0, min(x1, x2)); xmax = max(x0, max(x1, x2))
                ymin = min(y0, min(y1, y2)); ymax = max(y0, max(y1, y2))
                pad = tol * ((xmax - xmin) + (ymax - ymin))
                if x < xmin - pad or x > xmax + pad or y < ymin - pad or y > ymax + pad:
                    continue
                det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
                l1 = ((x - x0) * (y2 - y0) - (x2 - x0) * (y - y0)) / det
                l2 = ((x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)) / det
                l0 = 1.0 - l1 - l2
                if l0 >= -tol and l1 >= -tol and l2 >= -tol:
                    out[p] = t
                    break
    return out_arr
