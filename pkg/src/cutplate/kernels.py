"""Backend selection for the hot assembly kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy versions in ``_kernels_py`` are used. Setting ``CUTPLATE_PURE_PYTHON=1``
forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("CUTPLATE_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"


def gram(L, R, symmetric=False):
    return _impl.gram(L, R, symmetric)


def locate_points(vertices, triangles, points, tol=1e-12):
    return _impl.locate_points(
        np.ascontiguousarray(vertices, dtype=np.float64),
        np.ascontiguousarray(triangles, dtype=np.int64),
        np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64),
        float(tol),
    )
