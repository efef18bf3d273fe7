"""Time the compiled integrator kernels against the interpreted fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``HAMTHERMO_DISABLE_NUMBA``. Usage::

    python3 benchmarks/bench_kernels.py [--steps 20000] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from hamthermo import _kernels as k

steps, repeat = int(sys.argv[1]), int(sys.argv[2])
x0 = np.array([0.5, 1.0, 1.0, 0.7545, -0.6667, 1.7])
rows = {}
for kind in ("isochoric", "isothermal_isochoric", "interacting"):
    for method in ("implicit-midpoint", "rk4"):
        args = (k.KINDS[kind], k.METHODS[method], 1.0, 1.5, 0.1, 0.0, x0, 1e-5, steps, 1e-13, 100)
        k.run(*args[:8], 2, *args[9:])  # warm-up / compile
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            xs, status, _ = k.run(*args)
            best = min(best, time.perf_counter() - t0)
        rows[f"{kind}/{method}"] = {"seconds": best, "final": xs[-1].tolist()}
print(json.dumps({"numba": k.USING_NUMBA, "rows": rows}))
"""


def run_backend(disable: bool, steps: int, repeat: int) -> dict:
    env = dict(os.environ, HAMTHERMO_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(steps), str(repeat)], env=env, check=True, capture_output=True, text=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    fast = run_backend(False, args.steps, args.repeat)
    slow = run_backend(True, args.steps, args.repeat)
    print(f"{'kernel':40s} {'numba [s]':>10s} {'python [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, f in fast["rows"].items():
        s = slow["rows"][name]
        diff = max(abs(a - b) for a, b in zip(f["final"], s["final"]))
        print(f"{name:40s} {f['seconds']:10.4f} {s['seconds']:11.4f} {s['seconds'] / f['seconds']:7.1f}x {diff:11.2e}")
    if not fast["numba"]:
        print("note: numba unavailable, both columns are the interpreted path")
    return 0


if __name__ == "__main__":
    sys.exit(main())
