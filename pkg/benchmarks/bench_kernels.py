"""Compiled versus numpy kernels: direct Riesz sum, stencil, edge sum, plus the FFT path.

    python benchmarks/bench_kernels.py [--sizes 8 12 16] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from nehari_flow import _pykernels, potential
from nehari_flow.domain import make_domain

try:
    from nehari_flow import _ckernels
except ImportError:
    _ckernels = None


def best(func, repeat):
    return min(timeit.repeat(func, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16, 24])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the numpy backend is timed")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'m':>4}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>9}")
    for m in args.sizes:
        dom = make_domain((1, 1, 1), m)
        q = np.abs(rng.standard_normal(dom.shape)) ** 2.5
        table = potential.kernel_table(dom).table
        cases = [
            ("direct_sum", lambda mod: mod.direct_convolve(q, table)),
            ("neg_laplacian", lambda mod: mod.neg_laplacian(q, 1.0 / dom.h**2)),
            ("edge_sum_sq", lambda mod: mod.edge_sum_sq(q)),
        ]
        for name, call in cases:
            tp = best(lambda: call(_pykernels), args.repeat)
            if _ckernels is not None:
                tc = best(lambda: call(_ckernels), args.repeat)
                print(f"{name:<14}{m:>4}{tp:>12.4g}{tc:>12.4g}{tp / tc:>9.1f}")
            else:
                print(f"{name:<14}{m:>4}{tp:>12.4g}{'-':>12}{'-':>9}")
        tf = best(lambda: potential.convolve_fast(q, dom), args.repeat)
        print(f"{'fft_sum':<14}{m:>4}{tf:>12.4g}{'':>12}{'':>9}")


if __name__ == "__main__":
    main()
