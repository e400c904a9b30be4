"""Times the numba and numpy variants of the two hot kernels.

    python3 benchmarks/bench_kernels.py [--batch 208] [--repeats 20]

The default batch is the number of labeled cells in the box scene, i.e.
one training step of the synthetic field experiment.
"""
import argparse
import time

import numpy as np

from planarbingham import _accel, kernels
from planarbingham.bingham2d import DEFAULT_QUAD
from planarbingham.mat3 import triu_unpack


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=208)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    mats = np.ascontiguousarray(triu_unpack(rng.normal(scale=20.0, size=(args.batch, 6))))
    lam = np.zeros((args.batch, 3))
    lam[:, :2] = -rng.uniform(0, 200, size=(args.batch, 2))
    t, w, scale = DEFAULT_QUAD.folded_nodes
    shift = DEFAULT_QUAD.shift

    cases = {
        "jacobi3": (lambda: kernels.jacobi3_nb(mats), lambda: kernels.jacobi3_np(mats)),
        "bingham_series": (
            lambda: kernels.bingham_series_nb(lam, shift, t, w, scale),
            lambda: kernels.bingham_series_np(lam, shift, t, w, scale),
        ),
    }
    print(f"batch={args.batch} repeats={args.repeats} numba={'yes' if _accel.HAS_NUMBA else 'no'}")
    print(f"{'kernel':<16}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, (nb, npy) in cases.items():
        nb()  # compile / warm cache
        a = best_of(nb, args.repeats) * 1e3
        b = best_of(npy, args.repeats) * 1e3
        print(f"{name:<16}{a:>12.3f}{b:>12.3f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
