"""Time the compiled and pure-Python third-order kernels on the same workloads.

Usage: python3 benchmarks/bench_kernel.py [--repeat 3] [--t-end 200]
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from tfe_lab import kernels
from tfe_lab.kernels import integrate
from tfe_lab.orbits import oscillatory_problem


def best_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workload(n: float, t_end: float, backend: str):
    problem = oscillatory_problem(n)
    return integrate(problem, 0.0, (0.0, 0.1, 0.0), t_end, rtol=1e-11, atol=1e-14,
                     h_win=1e-8, backend=backend)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--t-end", type=float, default=200.0)
    args = parser.parse_args()
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    rows = []
    for n in (0.5, 1.0, 1.5):
        timing = {}
        for backend in backends:
            timing[backend] = best_time(lambda: workload(n, args.t_end, backend), args.repeat)
        ref = workload(n, args.t_end, backends[-1])
        agree = float(np.max(np.abs(workload(n, args.t_end, "python").state - ref.state)))
        rows.append({"n": n, "steps": ref.nsteps, **{f"{b}_s": t for b, t in timing.items()},
                     "speedup": timing["python"] / timing.get("cython", timing["python"]),
                     "max_state_difference": agree})
    for row in rows:
        print(json.dumps(row))


if __name__ == "__main__":
    main()
