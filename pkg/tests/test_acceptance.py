"""Acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line. The lines are
printed in the terminal summary by ``conftest.py`` and, when this file is
run as a script, to stdout.
"""

import math
import sys
import time
import warnings

import numpy as np
from scipy.stats import norm

from orcdf.bandwidth import integral_fhat_squared, score_M0_tilde
from orcdf.contingency import (
    Table2x2,
    _log_poly,
    fit_example1,
    fit_example2,
    fit_example3,
    null_loglik_terms,
    table_probability,
)
from orcdf.data import Grid, Sample
from orcdf.estimator import closed_form_fhat, estimate_cdf_grid, likelihood_oracle
from orcdf.kde import GAUSSIAN, KERNELS, WeightTable, density_at, weights_2d, weights_md
from orcdf.multinomial import DiscreteCensoredCounts, ObservedRangeLikelihood, known_q_loglik, known_q_mle
from orcdf.quadrature import integrate_box, kernel_breaks
from orcdf import regression

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from conftest import random_censored  # noqa: E402

RESULTS = {}


def report(n, ok, detail, elapsed):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.1f}s)"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_01_closed_form_vs_oracle():
    t0 = time.perf_counter()
    worst, where, count = 0.0, None, 0
    for n in range(1, 26):
        for d in range(n + 1):
            for u in range(n + 1 - d):
                a = n - d - u
                delta = abs(closed_form_fhat((d, u, a)) - likelihood_oracle((d, u, a), resolution=10**4))
                count += 1
                if delta > worst:
                    worst, where = delta, (d, u, a)
    report(1, worst <= 1e-5, f"{count} triples, max |delta| = {worst:.2e} at {where}", time.perf_counter() - t0)


def test_criterion_02_ecdf_reduction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        dim = int(rng.integers(1, 3))
        x = np.round(rng.normal(size=(n, dim)), 1)
        est = estimate_cdf_grid(Sample.from_exact(x))
        mesh = np.stack(np.meshgrid(*est.grid.axes, indexing="ij"), axis=-1)
        ecdf = np.mean(np.all(x[:, None, :] <= mesh.reshape(-1, dim)[None, :, :], axis=2), axis=0)
        bad += not np.array_equal(est.values.ravel(), ecdf)
    report(2, bad == 0, f"{100 - bad}/100 samples equal the empirical CDF exactly", time.perf_counter() - t0)


def test_criterion_03_monotone_1d():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(200):
        s = random_censored(rng, int(rng.integers(1, 41)), 1, p_exact=0.2, p_inf=0.2)
        bad += bool(np.any(np.diff(estimate_cdf_grid(s).values) < 0))
    report(3, bad == 0, f"{200 - bad}/200 estimates non-decreasing", time.perf_counter() - t0)


def pseudocode_weights(f):
    n_i, n_j = f.shape
    w = np.empty((n_i, n_j))
    for j in range(n_j):
        w[0, j] = 0.0
    for i in range(n_i):
        w[i, 0] = 0.0
    for i in range(1, n_i):
        for j in range(1, n_j):
            w[i, j] = f[i, j] - f[i, j - 1] - f[i - 1, j] + f[i - 1, j - 1]
    return w


def test_criterion_04_pseudocode_fidelity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    bad = 0
    for k in range(100):
        shape = tuple(rng.integers(1, 9, size=2))
        if k % 2:
            f = rng.random(shape)
        else:
            f = np.cumsum(np.cumsum(rng.random(shape), axis=0), axis=1)
            f /= f[-1, -1]
        grid = Grid((np.arange(shape[0], dtype=float), np.arange(shape[1], dtype=float)))
        bad += not np.array_equal(weights_2d((grid, f), "zero").raw, pseudocode_weights(f))
    report(4, bad == 0, f"{100 - bad}/100 arrays identical", time.perf_counter() - t0)


def test_criterion_05_kde_mass():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for k in range(50):
        dim = 1 if k < 25 else 2
        s = random_censored(rng, int(rng.integers(3, 16 if dim == 2 else 31)), dim)
        w = weights_md(estimate_cdf_grid(s))
        for h in (0.2, 0.5, 1.0):
            hh = np.full(dim, h)
            total = integrate_box(lambda p: density_at(w, GAUSSIAN, hh, p),
                                  kernel_breaks(w.grid, GAUSSIAN, hh), rtol=1e-8)
            worst = max(worst, abs(total - w.total))
    report(5, worst <= 1e-4, f"150 integrals, max |mass - sum w| = {worst:.2e}", time.perf_counter() - t0)


def classical_lscv(x, h):
    n = x.size
    diff = x[:, None] - x[None, :]
    s = h * math.sqrt(2.0)
    integral = np.sum(np.exp(-0.5 * (diff / s) ** 2) / (s * math.sqrt(2 * math.pi))) / n**2
    k = GAUSSIAN(diff / h) / h
    np.fill_diagonal(k, 0.0)
    return integral - 2.0 * k.sum() / ((n - 1) * n)


def test_criterion_06_classical_reductions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    parzen = lscv = nw = 0.0
    for k in range(50):
        dim = 1 + k % 2
        n = int(rng.integers(2, 31))
        x = rng.normal(size=(n, dim))
        h = rng.uniform(0.2, 1.5, size=dim)
        q = rng.normal(size=(20, dim))
        w = weights_md(estimate_cdf_grid(Sample.from_exact(x)))
        direct = np.mean(np.prod(GAUSSIAN((q[:, None, :] - x[None, :, :]) / h), axis=2), axis=1) / np.prod(h)
        parzen = max(parzen, float(np.max(np.abs(density_at(w, GAUSSIAN, h, q) - direct))))

        x1 = x[:, 0]
        got = score_M0_tilde(Sample.from_exact(x1[:, None]), "gaussian", h[0]).score
        lscv = max(lscv, abs(got - classical_lscv(x1, h[0])))

        kernel = ("gaussian", "epanechnikov", "uniform")[k % 3]
        y = np.sin(x[:, 0]) + rng.normal(scale=0.3, size=n)
        model = regression.fit(Sample.from_exact(np.c_[x, y]), kernel, 3.0 * h)
        qn = x[: min(n, 5)] + rng.normal(scale=0.1, size=(min(n, 5), dim))
        wk = np.prod(KERNELS[kernel]((qn[:, None, :] - x[None, :, :]) / (3.0 * h)), axis=2)
        keep = wk.sum(axis=1) > 0
        classical = (wk[keep] @ y) / wk[keep].sum(axis=1)
        nw = max(nw, float(np.max(np.abs(regression.predict(model, qn[keep]) - classical), initial=0.0)))
    ok = parzen <= 1e-12 and lscv <= 1e-9 and nw <= 1e-10
    report(6, ok, f"Parzen {parzen:.1e} (1e-12), LSCV {lscv:.1e} (1e-9), NW {nw:.1e} (1e-10)",
           time.perf_counter() - t0)


def test_criterion_07_gaussian_integral():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(50):
        dim = 1 if k < 30 else 2
        shape = tuple(rng.integers(1, 9 if dim == 1 else 6, size=dim))
        axes = tuple(np.sort(rng.choice(np.linspace(-3, 3, 61), size=m, replace=False)) for m in shape)
        w = rng.random(shape) * (rng.random(shape) < 0.7)
        w /= max(w.sum(), 1.0)
        table = WeightTable(Grid(axes), w, w, False, 0.0)
        h = rng.uniform(0.2, 1.0, size=dim)
        closed = integral_fhat_squared(table, "gaussian", h)
        quad = integral_fhat_squared(table, "gaussian", h, rtol=1e-9, method="quadrature")
        if closed > 0:
            worst = max(worst, abs(closed - quad) / closed)
    report(7, worst <= 1e-6, f"50 tables, max relative gap {worst:.1e}", time.perf_counter() - t0)


def test_criterion_08_multinomial_em():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    g = np.linspace(0.0, 1.0, 10**4)
    grid_gap, trace_bad = 0.0, 0
    for _ in range(100):
        c = tuple(int(v) for v in rng.integers(0, 12, size=2))
        u = int(rng.integers(1, 15))
        q = rng.uniform(0.05, 1.0, size=2)
        counts = DiscreteCensoredCounts(c, u)
        est = known_q_mle(counts, q)
        ll = known_q_loglik(counts, np.stack([g, 1 - g], axis=1), q)
        grid_gap = max(grid_gap, abs(est.probabilities[0] - g[np.argmax(ll)]))
        trace = np.asarray(est.diagnostics["trace"])
        trace_bad += bool(np.any(np.diff(trace) < -1e-12 * np.maximum(np.abs(trace[1:]), 1.0)))
    exact_bad = 0
    for _ in range(100):
        m = int(rng.integers(2, 6))
        c = tuple(int(v) for v in rng.integers(0, 20, size=m))
        if sum(c) == 0:
            c = (1,) + c[1:]
        p = known_q_mle(DiscreteCensoredCounts(c, 0), rng.uniform(0.05, 1.0, size=m)).probabilities
        exact_bad += not np.array_equal(p, np.asarray(c, dtype=float) / sum(c))
    ok = grid_gap <= 1e-4 and trace_bad == 0 and exact_bad == 0
    report(8, ok, f"EM vs grid {grid_gap:.1e} (1e-4), non-monotone traces {trace_bad}, "
           f"u=0 mismatches {exact_bad}", time.perf_counter() - t0)


def _null_grid(table, example, n=10**6):
    ks, coef = null_loglik_terms(table, example)
    p = np.linspace(0.0, 1.0, n + 1)
    return p[np.argmax(_log_poly(p, ks, coef, table.n))]


def _simplex_oracle(table, step=0.01):
    counts = DiscreteCensoredCounts(tuple(int(table.c[ij]) for ij in ((0, 0), (1, 0), (0, 1), (1, 1))), table.u)
    lik = ObservedRangeLikelihood(counts)
    k = int(round(1 / step))
    pts = np.array([(a, b, c, k - a - b - c) for a in range(k + 1) for b in range(k + 1 - a)
                    for c in range(k + 1 - a - b)], dtype=np.float64) / k
    vals = np.concatenate([lik.log(chunk) for chunk in np.array_split(pts, 20)])
    p = pts[int(np.argmax(vals))]
    return np.array([[p[0], p[2]], [p[1], p[3]]])


def test_criterion_09_contingency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    scalar, simplex, prob_bad = 0.0, 0.0, 0
    for _ in range(10):
        n1, n2 = (int(v) for v in rng.integers(1, 9, size=2))
        c11 = int(rng.integers(0, n1 + 1))
        c12 = int(rng.integers(0, n2 + 1))
        c22 = int(rng.integers(0, n2 - c12 + 1))
        t = Table2x2([[c11, c12], [n1 - c11, c22]], (n1, n2))
        e = fit_example1(t)
        a = n2 - c12 - c22
        scalar = max(scalar, abs(e.pi_hat[0, 1] - likelihood_oracle((c12, a, c22), resolution=10**6)))
        scalar = max(scalar, abs(fit_example1(t, null=True).p_null - _null_grid(t, 1)))

        c = [[int(rng.integers(0, 5)) for _ in range(2)] for _ in range(2)]
        n1 = c[0][0] + c[1][0] + int(rng.integers(0, 4))
        n2 = c[0][1] + c[1][1] + int(rng.integers(0, 4))
        if n1 and n2:
            t = Table2x2(c, (n1, n2))
            e = fit_example2(t)
            for j, nj in enumerate((n1, n2)):
                triple = (c[0][j], nj - c[0][j] - c[1][j], c[1][j])
                scalar = max(scalar, abs(e.pi_hat[0, j] - likelihood_oracle(triple, resolution=10**6)))
            scalar = max(scalar, abs(fit_example2(t, null=True).p_null - _null_grid(t, 2)))

        c = rng.integers(0, 4, size=(2, 2))
        t = Table2x2(c, n=int(c.sum() + rng.integers(0, 4)) or 1)
        e = fit_example3(t)
        simplex = max(simplex, float(np.max(np.abs(e.pi_hat - _simplex_oracle(t)))))
        e0 = fit_example3(t, null=True)
        scalar = max(scalar, abs(e0.p_null - _null_grid(t, 3)))
        prob_bad += table_probability(t, e, 3) != table_probability(t, e0, 3)
    ok = scalar <= 1e-5 and simplex <= 0.02 and prob_bad == 0
    report(9, ok, f"scalar fits {scalar:.1e} (1e-5), simplex {simplex:.3f} (0.02), "
           f"example 3 probability mismatches {prob_bad}", time.perf_counter() - t0)


def test_criterion_10_consistency_smoke():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    width = 0.5
    medians = []
    for n in (100, 400, 1600):
        sup = []
        for _ in range(20):
            x = rng.normal(size=n)
            offset = rng.uniform(0.0, width, size=n)
            lo = np.floor((x - offset) / width) * width + offset
            est = estimate_cdf_grid(Sample.from_intervals(lo[:, None], (lo + width)[:, None]))
            sup.append(float(np.max(np.abs(est.values - norm.cdf(est.grid.axes[0])))))
        medians.append(float(np.median(sup)))
    ok = medians[0] > medians[1] > medians[2]
    report(10, ok, "median sup|F_hat - F| for N=100,400,1600: " + ", ".join(f"{m:.4f}" for m in medians),
           time.perf_counter() - t0)


if __name__ == "__main__":
    warnings.simplefilter("ignore")
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
