"""Time the numba and numpy backends on the hot kernels.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Each kernel is warmed up once per backend (so JIT compilation is not
timed), then timed ``--repeat`` times; the best run is reported. Results
of the two backends are compared before timing.
"""

import argparse
import time

import numpy as np

from orcdf import _accel
from orcdf.bandwidth import CrossValidation
from orcdf.data import Sample, build_grid
from orcdf.estimator import estimate_cdf_grid
from orcdf.kde import get_kernel, kernel_matrices, weights_md


def censored_sample(rng, n, dim):
    lo = np.round(rng.normal(size=(n, dim)), 2)
    hi = lo + np.round(rng.uniform(0.05, 1.0, size=(n, dim)), 2) + 0.01
    return Sample.from_intervals(lo, hi)


def workloads(rng, scale):
    n = max(int(400 * scale), 10)
    s2 = censored_sample(rng, n, 2)
    axes = build_grid(s2).axes
    yield "count_grid 2d", lambda: _accel.count_grid(s2.lower, s2.upper, axes), f"N={n}, grid {len(axes[0])}x{len(axes[1])}"

    big_n = max(int(2000 * scale), 50)
    p = np.linspace(0.0, 1.0, 10**4)
    yield "range_loglik", lambda: _accel.range_loglik(p, big_n // 3, big_n // 10, big_n, complement=True), \
        f"N={big_n}, 1e4 p values"

    shape = (max(int(60 * scale), 4), max(int(60 * scale), 4))
    w = rng.random(shape) * (rng.random(shape) < 0.2)
    pts = max(int(20000 * scale), 100)
    kmats = [rng.random((pts, k)) for k in shape]
    yield "kernel_sum dense", lambda: _accel.kernel_sum(w, kmats), f"{shape[0]}x{shape[1]} weights, {pts} points"
    yield "kernel_sum skip", lambda: _accel.kernel_sum(w, kmats, skip_zero=True), "same, forced sparse loop"

    s_real = censored_sample(rng, max(int(400 * scale), 10), 2)
    table = weights_md(estimate_cdf_grid(s_real))
    q = rng.normal(size=(max(int(2000 * scale), 20), 2))
    real_k = kernel_matrices(table.grid, get_kernel("gaussian"), np.array([0.3, 0.3]), q)
    nnz = np.count_nonzero(table.weights)
    yield "kernel_sum censored", lambda: _accel.kernel_sum(table.weights, real_k), \
        f"{table.weights.shape[0]}x{table.weights.shape[1]} table ({nnz} nonzero), {q.shape[0]} points"

    x_exact = rng.normal(size=(max(int(400 * scale), 10), 2))
    exact_table = weights_md(estimate_cdf_grid(Sample.from_exact(x_exact)))
    exact_k = kernel_matrices(exact_table.grid, get_kernel("gaussian"), np.array([0.3, 0.3]), q)
    yield "kernel_sum exact", lambda: _accel.kernel_sum(exact_table.weights, exact_k), \
        f"{exact_table.weights.shape[0]}x{exact_table.weights.shape[1]} table " \
        f"({np.count_nonzero(exact_table.weights)} nonzero), {q.shape[0]} points"

    rows = max(int(300 * scale), 10)
    stack = rng.random((rows,) + shape) * (rng.random((rows,) + shape) < 0.2)
    bk = [rng.random((rows, k)) for k in shape]
    yield "batched_kernel_sum", lambda: _accel.batched_kernel_sum(stack, bk), f"{rows} tables of {shape[0]}x{shape[1]}"

    s1 = censored_sample(rng, max(int(150 * scale), 10), 1)

    def lscv():
        CrossValidation(s1).score(0.4)

    yield "lscv score 1d", lscv, f"N={s1.n}, end to end"


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    if a is None:
        return True
    return np.allclose(a, b, rtol=1e-10, atol=1e-12, equal_nan=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply problem sizes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20} {'numpy s':>10} {'numba s':>10} {'speedup':>8}  workload")
    for name, fn, desc in workloads(rng, args.scale):
        results = {}
        timings = {}
        for backend in ("numpy", "numba"):
            with _accel.use_backend(backend):
                results[backend] = fn()
                timings[backend] = best_time(fn, args.repeat)
        if not _agree(results["numpy"], results["numba"]):
            print(f"{name}: backends disagree")
        t_np, t_nb = timings["numpy"], timings["numba"]
        print(f"{name:<20} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x  {desc}")


if __name__ == "__main__":
    main()
