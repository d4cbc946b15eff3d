"""One-dimensional maximization helpers shared by the estimators."""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, tol=1e-10, max_iter=500):
    """Maximize a unimodal ``f`` on ``[lo, hi]`` by golden-section search.

    The endpoints are compared against the interior optimum so monotone
    functions return the correct boundary.

    Returns
    -------
    (x, fx)
    """
    a, b = float(lo), float(hi)
    if b < a:
        a, b = b, a
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    x, fx = (c, fc) if fc >= fd else (d, fd)
    for end in (lo, hi):
        fe = f(end)
        if fe > fx:
            x, fx = float(end), fe
    return x, fx


def scan_then_golden(f_vec, lo=0.0, hi=1.0, n_scan=1024, tol=1e-8, f=None):
    """Maximize on ``[lo, hi]``: uniform scan, then golden-section refinement.

    ``f_vec`` evaluates an array of abscissae; ``f`` (scalar) defaults to
    ``f_vec`` on a one-element array. When the objective is ``+inf`` on a
    run of scan points the centre of that run is returned.
    """
    if f is None:
        def f(x):
            return float(f_vec(np.array([x]))[0])
    xs = np.linspace(lo, hi, n_scan + 1)
    vals = np.asarray(f_vec(xs), dtype=np.float64)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    best = np.max(vals)
    if best == -np.inf:
        return 0.5 * (lo + hi), best
    tied = np.flatnonzero(vals == best)
    contiguous = tied[-1] - tied[0] + 1 == tied.size
    if best == np.inf and contiguous:
        # unbounded objective on a run of abscissae: report the run's centre
        return 0.5 * (xs[tied[0]] + xs[tied[-1]]), best
    first, last = (int(tied[0]), int(tied[-1])) if contiguous else (int(tied[0]),) * 2
    a = xs[max(first - 1, 0)]
    b = xs[min(last + 1, n_scan)]
    return golden_section_max(f, a, b, tol=tol)
