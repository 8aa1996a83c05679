"""Compare the numba and numpy paths of the moment-equation integrator.

Runs the reference-rate N=100 system over a sweep-sized time grid and reports
wall time per solve and the largest difference between the two backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--t-max 0.3] [--points 601]
"""

import argparse
import time

import numpy as np

from dicke_squeeze.dynamics_moments import assemble_moment_system, initial_moments
from dicke_squeeze.model import SystemParams, derive_params
from dicke_squeeze.numkernel import integrate_linear_ode


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--t-max", type=float, default=0.3)
    ap.add_argument("--points", type=int, default=601)
    args = ap.parse_args()

    p = SystemParams()
    d = derive_params(p)
    times = np.linspace(0, args.t_max, args.points)
    A0 = initial_moments(p, d)
    print(f"{'system':<10}{'backend':<8}{'best [ms]':>12}{'steps':>8}")
    for rwa in (True, False):
        s = assemble_moment_system(p, d, rwa)
        label = "rwa" if rwa else "non-rwa"
        t0 = time.perf_counter()
        integrate_linear_ode(s.M, s.Gamma, A0, times[:2], backend="numba")
        print(f"{label:<10}{'numba':<8}{'(compile ' + format(time.perf_counter() - t0, '.2f') + ' s)':>12}")
        runs = {}
        for backend in ("numba", "numpy"):
            dt, traj = best_time(lambda: integrate_linear_ode(s.M, s.Gamma, A0, times, backend=backend), args.repeat)
            runs[backend] = traj
            print(f"{label:<10}{backend:<8}{dt * 1e3:>12.2f}{traj.n_steps:>8}")
        diff = np.max(np.abs(runs["numba"].states - runs["numpy"].states))
        print(f"{label:<10}max |numba - numpy| = {diff:.2e}")


if __name__ == "__main__":
    main()
