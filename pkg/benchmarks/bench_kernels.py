"""Time the numba kernels against their pure-numpy/Python bodies.

    python3 benchmarks/bench_kernels.py [--reps N]

The numpy path is each kernel's ``.py_func``, i.e. exactly what runs under
SELFNORM_DISABLE_NUMBA=1.
"""
import argparse
import time

import numpy as np

from selfnorm import _accel, kernels


def _cases(rng):
    A = rng.normal(size=(10, 2))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    theta = np.array([0.6, -0.8])
    X = rng.normal(size=(2000, 5))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    noise = rng.normal(size=5000)
    return {
        "linear_replication T=5000 d=2": (kernels.linear_replication, (A, theta, 0.1 * noise, 1.0, 0.1, 1.0, 0.1, False)),
        "rs linear_replication T=5000 d=2": (kernels.linear_replication, (A, theta, 0.1 * noise, 1.0, 0.1, 1.0, 0.1, True)),
        "ucb_replication T=5000 K=2": (kernels.ucb_replication, (np.array([0.5, 0.0]), noise, 0.05, 1.0)),
        "coverage_replication T=500 d=2": (
            kernels.coverage_replication,
            (kernels.COVARIATE_ADAPTIVE, np.array([[1.0, 0.0]]), noise[:500], theta, 1.0, 1.0, 1.0, 0.1),
        ),
        "potential_sums T=2000 d=5": (kernels.potential_sums, (X, 1.0)),
    }


def _best(fn, args, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    if not _accel.NUMBA_ENABLED:
        raise SystemExit("numba is disabled (SELFNORM_DISABLE_NUMBA); nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, (fn, fargs) in _cases(rng).items():
        fn(*fargs)  # compile
        fast = _best(fn, fargs, args.reps)
        slow = _best(fn.py_func, fargs, max(1, args.reps // 2))
        print(f"{name:36s} {fast * 1e3:8.2f}ms {slow * 1e3:8.1f}ms {slow / fast:7.0f}x")


if __name__ == "__main__":
    main()
