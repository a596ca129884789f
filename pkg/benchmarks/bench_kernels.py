#!/usr/bin/env python3
"""Compare the numba and pure-numpy Jacobi eigensolvers.

Also times one end-to-end spectra computation under each backend by running
a child interpreter with XFERLAB_DISABLE_NUMBA set, since the flag is read
once at import.

    python benchmarks/bench_kernels.py [--batch 800] [--dim 20] [--repeat 3]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from xferlab import _accel, kernels


def _stack(batch, dim, seed=0):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((batch, dim, dim))
    return np.einsum("bij,bkj->bik", g, g)


def _best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


SPECTRA_SNIPPET = """
import time, numpy as np, xferlab
from xferlab.attacks import spectra_batch
from xferlab.instances import random_mlp, random_metric
rng = np.random.default_rng(0)
model = random_mlp(rng, {dim}, 10, hidden=50)
xs = rng.standard_normal(({batch}, {dim}))
ms = random_metric(rng, 10)
spectra_batch(model, ms, xs[:4])
start = time.perf_counter()
spectra_batch(model, ms, xs)
print(xferlab.backend(), time.perf_counter() - start)
"""


def _spectra_child(disable, batch, dim):
    env = dict(os.environ, XFERLAB_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run(
        [sys.executable, "-c", SPECTRA_SNIPPET.format(batch=batch, dim=dim)],
        env=env, capture_output=True, text=True, check=True,
    )
    name, seconds = out.stdout.split()
    return name, float(seconds)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=800)
    parser.add_argument("--dim", type=int, default=20)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    a = _stack(args.batch, args.dim)
    print(f"Jacobi eigensolver, {args.batch} matrices of size {args.dim}x{args.dim}")
    t_np = _best_of(lambda: kernels.jacobi_eigh_numpy(a), args.repeat)
    print(f"  numpy : {t_np:8.4f} s")
    if _accel.HAVE_NUMBA:
        kernels.jacobi_eigh_numba(a[:2])  # compile outside the timing
        t_nb = _best_of(lambda: kernels.jacobi_eigh_numba(a), args.repeat)
        print(f"  numba : {t_nb:8.4f} s   ({t_np / t_nb:.1f}x)")
        vals_nb = np.sort(kernels.jacobi_eigh_numba(a)[0], axis=1)
        vals_np = np.sort(kernels.jacobi_eigh_numpy(a)[0], axis=1)
        print(f"  max eigenvalue difference {np.max(np.abs(vals_nb - vals_np)):.2e}")
    else:
        print("  numba : not installed")

    print(f"attack spectra for {args.batch} inputs of dimension {args.dim}")
    for disable in (True, False):
        name, seconds = _spectra_child(disable, args.batch, args.dim)
        print(f"  {name:6s}: {seconds:8.4f} s")


if __name__ == "__main__":
    main()
