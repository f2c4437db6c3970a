"""Time the grid kernels under the numba and numpy backends.

Usage: python benchmarks/bench_kernels.py [--N 401] [--repeat 5]

Each backend is selected through SUBLEVEL_LAB_BACKEND in a fresh
subprocess so module-level dispatch sees the right value.  The numba
timing excludes the first (compiling) call.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from sublevel_lab import kernels
from sublevel_lab.phase_catalog import make_grid_quadratic

N, repeat = int(sys.argv[1]), int(sys.argv[2])
g = make_grid_quadratic(N=N)
hx, hy = g.spacing
eta = np.ones_like(g.f)
levels = np.linspace(0.05, 0.85, 9)

def contour():
    return [kernels.contour_integrals(g.x, g.y, g.f, g.gx, g.gy, g.hxx, g.hxy, g.hyy, eta, s) for s in levels]

def area():
    return [kernels.sublevel_area(g.f, hx, hy, s) for s in levels]

def fractions():
    return [kernels.cell_fractions(g.f, s) for s in levels]

out = {}
for name, fn in (("contour_integrals", contour), ("sublevel_area", area), ("cell_fractions", fractions)):
    fn()  # warm-up (numba compiles here)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best / len(levels)
out["J_at_0.5"] = float(kernels.contour_integrals(g.x, g.y, g.f, g.gx, g.gy, g.hxx, g.hxy, g.hyy, eta, 0.5)[0])
print(json.dumps(out))
"""


def run_backend(backend: str, N: int, repeat: int) -> dict:
    env = dict(os.environ, SUBLEVEL_LAB_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", CHILD, str(N), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=401)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    results = {b: run_backend(b, args.N, args.repeat) for b in ("numba", "numpy")}
    print(f"grid {args.N}x{args.N}, seconds per level (best of {args.repeat})")
    print(f"{'kernel':<20}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for k in ("contour_integrals", "sublevel_area", "cell_fractions"):
        a, b = results["numba"][k], results["numpy"][k]
        print(f"{k:<20}{a:>12.3e}{b:>12.3e}{b / a:>10.1f}")
    d = abs(results["numba"]["J_at_0.5"] - results["numpy"]["J_at_0.5"])
    print(f"J(0.5) backend difference: {d:.2e}")


if __name__ == "__main__":
    main()
