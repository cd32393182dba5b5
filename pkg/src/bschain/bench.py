"""Benchmark the numba kernels against the pure-numpy fallback.

Run as ``bschain bench`` or ``python -m bschain.bench``. Times the event
loop, the second-moment RK4 sweep, and the 2d walk RK4 sweep on matched
workloads, using both twins regardless of the active dispatch flag.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels, chain
from .accel import HAVE_NUMBA, active_path
from .chain import ChainParams
from .lattice import index_bwd, index_fwd


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _event_workload(n: int, events: int):
    params = ChainParams(n=n, alpha=0.5, kappa=1.0)
    rng = np.random.default_rng(0)
    eta = rng.standard_normal(n)
    spec0 = np.fft.rfft(eta)
    pos, neg = chain._tables(n)
    omega = chain._mode_speeds(params)
    horizon = events / params.total_swap_rate
    ev = np.sort(rng.random(events)) * horizon
    bonds = rng.integers(0, n, events)
    sched = np.linspace(horizon / 8, horizon, 8)
    out = np.empty((sched.size, omega.size), dtype=np.complex128)

    def run(fn):
        def body():
            fn(spec0.copy(), pos, neg, omega, True, ev, bonds, sched, 0.0, out)

        return body

    return run(_kernels._event_loop_np), run(_kernels._event_loop_nb)


def _moment_workload(n: int, steps: int):
    params = ChainParams(n=n, alpha=0.5, kappa=1.0)
    rng = np.random.default_rng(1)
    v = rng.standard_normal(n)
    a = rng.standard_normal((n, n))
    s = a + a.T
    ip, im = index_fwd(n), index_bwd(n)
    dt = 0.2 / (4 * n * n)

    def run(fn):
        def body():
            fn(v.copy(), s.copy(), ip, im, float(n * n), params.alpha_n, dt, steps)

        return body

    return run(_kernels._rk4_vs_np), run(_kernels._rk4_vs_nb)


def _walk_workload(n: int, steps: int):
    params = ChainParams(n=n, alpha=0.5, kappa=1.0)
    p = np.zeros((n, n - 1))
    p[0, n // 2] = 1.0
    ip, im = index_fwd(n), index_bwd(n)
    dt = 0.2 / (8 * n * n)

    def run(fn):
        def body():
            fn(p.copy(), ip, im, float(n * n), params.alpha_n, dt, steps)

        return body

    return run(_kernels._rk4_walk2_np), run(_kernels._rk4_walk2_nb)


def main(n: int = 64, events: int = 100_000, repeats: int = 3) -> None:
    print(f"active dispatch path: {active_path()}")
    if not HAVE_NUMBA:
        print("numba is not importable; only the numpy twin can run")
    rows = [
        (f"event loop (n={n}, {events} events)", _event_workload(n, events)),
        (f"moment rk4 (n={n}, 200 steps)", _moment_workload(n, 200)),
        (f"walk2 rk4 (n={n}, 500 steps)", _walk_workload(n, 500)),
    ]
    print(f"{'kernel':<40} {'numpy [s]':>12} {'numba [s]':>12} {'speedup':>9}")
    for label, (np_fn, nb_fn) in rows:
        t_np = _time(np_fn, repeats)
        if HAVE_NUMBA:
            nb_fn()  # compile outside the timed region
            t_nb = _time(nb_fn, repeats)
            print(f"{label:<40} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.1f}x")
        else:
            print(f"{label:<40} {t_np:>12.4f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
