"""Compare the compiled element kernels against the numpy fallback.

Usage: python benchmarks/bench_assembly.py [refinements]
"""

import sys
import time

import numpy as np

from openstokes import _kernels_py, mesh, reference

try:
    from openstokes import _kernels_c
except ImportError:
    _kernels_c = None


def bench(fn, coords, args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(coords, *args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    refinements = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    m = mesh.build_channel(4.0, 1.0, 16, 4)
    for _ in range(refinements):
        m = mesh.refine_uniform(m)
    coords = m.vertices[m.triangles]
    args = (
        reference.p2_shape(reference.TRI_POINTS_4),
        reference.p2_grad(reference.TRI_POINTS_4),
        reference.p1_shape(reference.TRI_POINTS_4),
        reference.TRI_WEIGHTS_4,
    )
    print(f"elements: {len(coords)}")

    t_py = bench(_kernels_py.tri_local_matrices, coords, args)
    print(f"python fallback : {t_py * 1e3:9.2f} ms")
    if _kernels_c is None:
        print("compiled kernels: not built")
        return
    t_c = bench(_kernels_c.tri_local_matrices, coords, args)
    print(f"cython kernels  : {t_c * 1e3:9.2f} ms   (speedup {t_py / t_c:.2f}x)")

    out_py = _kernels_py.tri_local_matrices(coords, *args)
    out_c = _kernels_c.tri_local_matrices(coords, *args)
    dev = max(np.max(np.abs(a - b)) for a, b in zip(out_py, out_c))
    print(f"max backend deviation: {dev:.2e}")


if __name__ == "__main__":
    main()
