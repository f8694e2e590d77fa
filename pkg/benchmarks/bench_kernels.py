"""Time the gamma^2 cdf-sum kernel: compiled extension versus the numpy fallback.

    python3 benchmarks/bench_kernels.py [--nodes 2048] [--repeat 3]

The end-to-end row runs `report` in a subprocess per backend, since the
backend is picked once at import (RANKMATCH_PURE_PYTHON=1 forces numpy).
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from rankmatch import _kernels_py
from rankmatch._backend import BACKEND, kernels
from rankmatch.asymptotics import QuadConfig, _compress, _nodes, _z_rule
from rankmatch.noise import CAUCHY, GAUSSIAN, T3
from rankmatch.templates import TEMPLATE_A, TEMPLATE_C

END_TO_END = ("import time; from rankmatch import TEMPLATE_C, T3; "
              "from rankmatch.asymptotics import report, QuadConfig; t = time.perf_counter(); "
              "report(TEMPLATE_C, T3, QuadConfig(x_nodes={n}), error_estimate=False); "
              "print(time.perf_counter() - t)")


def kernel_args(template, noise, cfg):
    F, D, w = _compress(*_nodes(template, cfg))
    U, inv = np.unique(F, return_inverse=True)
    a = np.bincount(inv.ravel(), weights=w)
    b = np.bincount(inv.ravel(), weights=w * D)
    z, _ = _z_rule(noise, cfg)
    return (U, a, b, z, noise.code, noise.scale, False), len(U), len(z)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=2048)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if BACKEND != "cython":
        sys.exit("compiled extension not available; build it with pip install -e .")
    cfg = QuadConfig(x_nodes=args.nodes)
    print(f"{'case':<14}{'f vals':>7}{'z':>5}{'cython s':>11}{'numpy s':>11}{'speedup':>9}"
          f"{'rel diff':>10}")
    for label, t, nz in (("A gaussian", TEMPLATE_A, GAUSSIAN), ("C t3", TEMPLATE_C, T3),
                         ("C cauchy", TEMPLATE_C, CAUCHY)):
        kargs, nx, nzn = kernel_args(t, nz, cfg)
        tc, a = best_of(lambda: np.hstack(kernels.cdf_sums(*kargs)), args.repeat)
        tp, b = best_of(lambda: np.hstack(_kernels_py.cdf_sums(*kargs)), args.repeat)
        rel = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
        print(f"{label:<14}{nx:>7}{nzn:>5}{tc:>11.3f}{tp:>11.3f}{tp / tc:>9.1f}{rel:>10.1e}")

    row = {}
    for name, env in (("cython", {}), ("numpy", {"RANKMATCH_PURE_PYTHON": "1"})):
        out = subprocess.run([sys.executable, "-c", END_TO_END.format(n=args.nodes)],
                             env={**os.environ, **env}, capture_output=True, text=True, check=True)
        row[name] = float(out.stdout)
    print(f"report(C, t3) end to end: cython {row['cython']:.2f}s, numpy {row['numpy']:.2f}s")


if __name__ == "__main__":
    main()
