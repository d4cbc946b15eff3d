"""Nadaraya-Watson regression on censored data.

The joint sample ``(X, Y)`` is smoothed with the censored kernel density
estimator; integrating the response kernel out analytically leaves

    E[Y | X = x] = sum w(x~, y~_j) K(x; x~, h) y~_j / sum w(x~, y~_j) K(x; x~, h)

over the joint grid. The response bandwidth cancels and is never needed.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .data import Sample
from .errors import DimensionMismatch, ZeroDenominator
from .estimator import DEFAULT_MAX_GRID_POINTS, estimate_cdf_grid
from .kde import Kernel, WeightTable, as_bandwidth, as_points, get_kernel, kernel_matrices, weights_md

DENOMINATOR_FLOOR = 1e-300


@dataclass(frozen=True)
class RegressionModel:
    weights: WeightTable
    kernel: Kernel
    x_bandwidth: np.ndarray

    @property
    def y_grid(self):
        return self.weights.grid.axes[-1]

    @property
    def x_dim(self):
        return self.weights.dim - 1


def fit(sample: Sample, kernel="gaussian", x_bandwidth=1.0, boundary="pad",
        max_grid_points=DEFAULT_MAX_GRID_POINTS) -> RegressionModel:
    """Fit on a sample whose last coordinate is the response."""
    if sample.dim < 2:
        raise DimensionMismatch("regression needs at least one covariate and a response")
    kernel = get_kernel(kernel)
    h = as_bandwidth(x_bandwidth, sample.dim - 1)
    cdf = estimate_cdf_grid(sample, max_grid_points)
    return RegressionModel(weights_md(cdf, boundary), kernel, h)


def _sums(model: RegressionModel, pts):
    grid = model.weights.grid
    x_grid = type(grid)(grid.axes[:-1])
    kmats = kernel_matrices(x_grid, model.kernel, model.x_bandwidth, pts)
    n_pts = pts.shape[0]
    y = model.y_grid
    w = model.weights.weights
    num = _accel.kernel_sum(w, kmats + [np.broadcast_to(y, (n_pts, y.size))])
    den = _accel.kernel_sum(w, kmats + [np.ones((n_pts, y.size))])
    return num, den


def predict(model: RegressionModel, x):
    """Conditional-mean estimate at one covariate vector or a ``(P, M)`` array."""
    pts, single = as_points(x, model.x_dim)
    num, den = _sums(model, pts)
    bad = ~(den >= DENOMINATOR_FLOOR)
    if bad.any():
        raise ZeroDenominator(
            f"kernel mass vanishes at x={pts[np.argmax(bad)].tolist()}; the query is outside the data's reach"
        )
    out = num / den
    return float(out[0]) if single else out
