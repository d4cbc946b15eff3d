"""Observed-range maximum likelihood estimation of a distribution function.

At a point with counts ``(d, u, a)`` the true number of observations at or
below the point lies in ``[d, d + u]``. The estimate is the ``p`` that
maximizes ``L(p) = sum_{k=d}^{d+u} C(N, k) p^k (1 - p)^(N - k)``, which has
the closed form implemented by :func:`closed_form_fhat`.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

from . import _accel
from .data import CountTriple, Grid, Sample, build_grid, count_at, count_grid
from .errors import GridTooLarge, InvalidObservation
from .optimize import scan_then_golden

DEFAULT_MAX_GRID_POINTS = 10**8


def _validate_counts(d, u, a):
    if min(d, u, a) < 0:
        raise InvalidObservation(f"counts must be non-negative, got d={d}, u={u}, a={a}")
    if d + u + a < 1:
        raise InvalidObservation("counts must sum to N >= 1")


def closed_form_fhat(counts) -> float:
    """Maximizer of the observed-range likelihood for one count triple.

    ``counts`` is a :class:`CountTriple` or any ``(d, u, a)`` sequence.

    >>> closed_form_fhat((3, 0, 7))
    0.3
    """
    d, u, a = (int(c) for c in counts)
    _validate_counts(d, u, a)
    return float(fhat_from_counts(np.array([d]), np.array([u]), np.array([a]))[0])


def fhat_from_counts(d, u, a):
    """Vectorized :func:`closed_form_fhat` over broadcastable count arrays."""
    d, u, a = np.broadcast_arrays(
        np.asarray(d, dtype=np.int64), np.asarray(u, dtype=np.int64), np.asarray(a, dtype=np.int64)
    )
    n = d + u + a
    out = np.empty(d.shape, dtype=np.float64)
    zero = (d == 0) & (a >= 1)
    one = (a == 0) & (d >= 1)
    half = u == n
    # d = a = 0 forces u = N, so the three branches cover every degenerate case
    assert not ((d == 0) & (a == 0) & ~half).any()
    plain = ~(zero | one | half) & (u == 0)
    general = ~(zero | one | half | plain)
    out[zero] = 0.0
    out[one] = 1.0
    out[half] = 0.5
    out[plain] = d[plain] / n[plain]
    if general.any():
        dg = d[general].astype(np.float64)
        ug = u[general].astype(np.float64)
        ag = a[general].astype(np.float64)
        # log of a(a+1)...(a+u) / d(d+1)...(d+u), averaged over the u+1 factors
        log_ratio = (gammaln(ag + ug + 1.0) - gammaln(ag) - gammaln(dg + ug + 1.0) + gammaln(dg)) / (ug + 1.0)
        out[general] = expit(-log_ratio)
    return out


def likelihood_oracle(counts, resolution: int = 10**6) -> float:
    """Brute-force maximizer of the observed-range likelihood.

    Scans ``p = i / resolution`` and refines the best bracket by
    golden-section search. Independent of :func:`closed_form_fhat`; used to
    verify it.
    """
    d, u, a = (int(c) for c in counts)
    _validate_counts(d, u, a)
    if resolution < 1000:
        raise InvalidObservation(f"resolution must be at least 1000, got {resolution}")
    n = d + u + a

    def objective(p):
        return _accel.range_loglik(p, d, u, n, complement=True)

    p_hat, _ = scan_then_golden(objective, 0.0, 1.0, n_scan=int(resolution), tol=1e-12)
    return float(p_hat)


@dataclass(frozen=True)
class CdfEstimate:
    """Estimated distribution function on a grid, with the counts behind it."""

    grid: Grid
    values: np.ndarray
    d: np.ndarray
    u: np.ndarray
    n: int

    @property
    def a(self):
        return self.n - self.d - self.u

    @property
    def dim(self):
        return self.grid.dim


def estimate_cdf_at(sample: Sample, point) -> float:
    return closed_form_fhat(count_at(sample, point))


def estimate_cdf_points(sample: Sample, points) -> np.ndarray:
    """Estimate at each row of a ``(P, M)`` array of points."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    triples = [count_at(sample, x) for x in points]
    d = np.array([t.d for t in triples])
    u = np.array([t.u for t in triples])
    return fhat_from_counts(d, u, sample.n - d - u)


def check_grid_size(grid: Grid, max_grid_points=DEFAULT_MAX_GRID_POINTS):
    if grid.size > max_grid_points:
        raise GridTooLarge(f"grid has {grid.size} points, cap is {max_grid_points}")


def fhat_on_grid(sample: Sample, grid: Grid, max_grid_points=DEFAULT_MAX_GRID_POINTS) -> CdfEstimate:
    """Estimate on an explicitly supplied grid."""
    check_grid_size(grid, max_grid_points)
    d, u = count_grid(sample, grid)
    values = fhat_from_counts(d, u, sample.n - d - u)
    return CdfEstimate(grid, values, d, u, sample.n)


def estimate_cdf_grid(sample: Sample, max_grid_points=DEFAULT_MAX_GRID_POINTS) -> CdfEstimate:
    """Estimate at every point of the sample's endpoint grid."""
    return fhat_on_grid(sample, build_grid(sample), max_grid_points)


def censoring_sample(sample_1d: Sample, lower=None, upper=None) -> Sample:
    """Build the 3-variate sample ``(X_n, L_n, R_n)``.

    Coordinate 0 is the original observation (exact, or censored into
    ``(L_n, R_n]``); coordinates 1 and 2 hold ``L_n`` and ``R_n`` as exact
    values. ``lower``/``upper`` give the censoring endpoints explicitly and
    are required for exact observations.
    """
    if sample_1d.dim != 1:
        raise InvalidObservation("censoring-mechanism estimation needs a 1-D sample")
    exact = sample_1d.exact[:, 0]
    lo = sample_1d.lower[:, 0].copy()
    hi = sample_1d.upper[:, 0].copy()
    if lower is not None:
        lo = np.asarray(lower, dtype=np.float64).reshape(-1)
    elif exact.any():
        raise InvalidObservation("exact observations need explicit censoring endpoints")
    if upper is not None:
        hi = np.asarray(upper, dtype=np.float64).reshape(-1)
    elif exact.any():
        raise InvalidObservation("exact observations need explicit censoring endpoints")
    if lo.shape != (sample_1d.n,) or hi.shape != (sample_1d.n,):
        raise InvalidObservation("censoring endpoints must have one entry per observation")
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        raise InvalidObservation("censoring endpoints must be finite")
    x_lo = np.where(exact, sample_1d.lower[:, 0], lo)
    x_hi = np.where(exact, sample_1d.upper[:, 0], hi)
    lower3 = np.stack([x_lo, lo, hi], axis=1)
    upper3 = np.stack([x_hi, lo, hi], axis=1)
    exact3 = np.stack([exact, np.ones_like(exact), np.ones_like(exact)], axis=1)
    return Sample.from_arrays(lower3, upper3, exact3)


def estimate_censoring_mechanism(sample_1d: Sample, lower=None, upper=None,
                                 max_grid_points=DEFAULT_MAX_GRID_POINTS) -> CdfEstimate:
    """Estimate the joint distribution of value and censoring endpoints."""
    return estimate_cdf_grid(censoring_sample(sample_1d, lower, upper), max_grid_points)


__all__ = [
    "CdfEstimate",
    "CountTriple",
    "closed_form_fhat",
    "fhat_from_counts",
    "likelihood_oracle",
    "estimate_cdf_at",
    "estimate_cdf_points",
    "estimate_cdf_grid",
    "fhat_on_grid",
    "censoring_sample",
    "estimate_censoring_mechanism",
]
