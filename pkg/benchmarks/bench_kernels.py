"""Compare the compiled and numpy kernel backends.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``. Reports the
best-of-R wall time per kernel and for a full plate assembly at n = 64.
"""
import argparse
import timeit

import numpy as np

from cutplate import _kernels_py, kernels
from cutplate.fem import build_space
from cutplate.mesh import generate_structured_unit_square
from cutplate.plate import PlateSpec, assemble_plate_form

try:
    from cutplate import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(rng):
    L = rng.standard_normal((8192, 16, 3, 6))
    mesh = generate_structured_unit_square(64)
    pts = rng.uniform(0, 1, (4000, 2))
    V = build_space(mesh, 2)
    spec = PlateSpec(100, 0.5, 0.1)
    return {
        "gram (8192 elems, 6x6)": lambda: kernels.gram(L, L, True),
        "locate_points (4000 pts, 8192 tris)": lambda: kernels.locate_points(mesh.vertices, mesh.triangles, pts),
        "plate assembly (n=64, P2)": lambda: assemble_plate_form(V, spec=spec),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    else:
        print("compiled extension not built; timing the numpy backend only")
    cases = _cases(np.random.default_rng(0))
    times = {}
    saved = kernels._impl
    try:
        for name, impl in backends.items():
            kernels._impl = impl
            for case, fn in cases.items():
                fn()  # warm up
                times[case, name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    finally:
        kernels._impl = saved
    width = max(map(len, cases))
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>10}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for case in cases:
        row = [times[case, b] for b in backends]
        line = f"{case:<{width}}  " + "  ".join(f"{t * 1e3:8.2f}ms" for t in row)
        if len(row) > 1:
            line += f"  {row[0] / row[1]:9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
