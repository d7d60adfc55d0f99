"""Compare the compiled and numpy element kernels on cavity meshes.

Usage: python3 benchmarks/bench_kernels.py [--sizes 16 32 64] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from cdanse.fem import _kernels_py, build_dofmap
from cdanse.mesh import uniform_cavity_mesh

try:
    from cdanse.fem import _ckernels
except ImportError:
    _ckernels = None


def bench(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the numpy backend is timed")
    print(f"{'n':>4} {'kernel':>10} {'numpy [ms]':>11} {'cython [ms]':>12} {'speed-up':>9}")
    for n in args.sizes:
        d = build_dofmap(uniform_cavity_mesh(n))
        g = d.geometry()
        wloc = np.ascontiguousarray(np.random.default_rng(n).standard_normal((len(d.element_nodes), 6, 2)))
        inputs = (wloc, g.phi, g.grad, g.wdet)
        for name in ("convection_local", "newton_local"):
            t_py = bench(getattr(_kernels_py, name), inputs, args.repeat)
            if _ckernels is None:
                print(f"{n:>4} {name.split('_')[0]:>10} {1e3 * t_py:>11.2f} {'-':>12} {'-':>9}")
                continue
            t_c = bench(getattr(_ckernels, name), inputs, args.repeat)
            print(f"{n:>4} {name.split('_')[0]:>10} {1e3 * t_py:>11.2f} {1e3 * t_c:>12.2f} {t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
