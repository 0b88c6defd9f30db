"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Also times an end-to-end Weyl matrix build, which goes through whichever backend
``resolvent_lab.kernels`` picked at import.
"""
import argparse
import timeit

import numpy as np

from resolvent_lab import _kernels_py as py
from resolvent_lab import kernels
from resolvent_lab.fock import FockSpace
from resolvent_lab.operators import weyl_matrix

try:
    from resolvent_lab import _kernels as cy
except ImportError:
    cy = None


def best(fn, repeat):
    t = timeit.Timer(fn)
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def cases():
    rng = np.random.default_rng(0)
    for dim in (16, 64, 256):
        a = complex(0.7, -0.4)
        yield f"displacement dim={dim}", (lambda m: lambda: m.displacement(a, dim))
    for n, D in ((2, 30), (4, 12)):
        sp = FockSpace(n, D)
        mats = rng.normal(size=(n, D + 1, D + 1)) + 1j * rng.normal(size=(n, D + 1, D + 1))
        idx = np.ascontiguousarray(sp.index_array, dtype=np.intp)
        yield (f"tensor_select n={n} D={D} ({idx.shape[0]}^2)",
               (lambda m, mats=mats, idx=idx: lambda: m.tensor_select(mats, idx, idx)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"dispatch backend: {kernels.BACKEND}")
    print(f"{'kernel':42s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, make in cases():
        tp = best(make(py), args.repeat) * 1e3
        if cy is None:
            print(f"{name:42s} {tp:12.3f} {'n/a':>12s} {'':>8s}")
            continue
        tc = best(make(cy), args.repeat) * 1e3
        print(f"{name:42s} {tp:12.3f} {tc:12.3f} {tp / tc:7.1f}x")
    sp = FockSpace(2, 30)
    t = best(lambda: weyl_matrix([0.3 + 0.2j, -0.5j], sp), args.repeat) * 1e3
    print(f"{'weyl_matrix n=2 D=30 (dispatched)':42s} {t:12.3f}")


if __name__ == "__main__":
    main()
