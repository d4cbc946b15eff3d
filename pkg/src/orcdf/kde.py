"""Grid-cell weights from an estimated CDF and the smoothed density.

The weight of a grid point is the probability the estimated CDF assigns to
the half-open cell ending at that point, obtained by inclusion-exclusion
over the ``2^M`` cell corners. The density estimate places a product
kernel bump of that mass over each grid point.

Two boundary conventions are supported for ``M >= 2``:

``"pad"`` (default)
    The CDF is taken as zero below the grid, so the first cell along each
    axis receives the mass of everything at or below the first grid value.
    In one dimension this is ``w_1 = F(x_1)``. When the lower faces of the
    grid carry ``F = 0`` (every observation censored with a finite lower
    endpoint) the two conventions coincide.
``"zero"``
    Weights with any index equal to the first grid index are set to zero,
    exactly as in the 2-D recursion loop over ``i, j >= 2``. One-dimensional
    grids keep ``w_1 = F(x_1)`` under both conventions.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _accel
from .data import Grid
from .errors import DimensionMismatch, InvalidObservation
from .estimator import CdfEstimate

BOUNDARY_MODES = ("pad", "zero")
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _gaussian(z):
    z = np.asarray(z, dtype=np.float64)
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def _epanechnikov(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z * z), 0.0)


def _uniform(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(np.abs(z) <= 0.5, 1.0, 0.0)


@dataclass(frozen=True)
class Kernel:
    """A symmetric, non-negative kernel integrating to one.

    ``half_width`` is the support radius (``inf`` for the Gaussian).
    """

    name: str
    evaluate: Callable
    half_width: float

    def __call__(self, z):
        return self.evaluate(z)


GAUSSIAN = Kernel("gaussian", _gaussian, math.inf)
EPANECHNIKOV = Kernel("epanechnikov", _epanechnikov, 1.0)
UNIFORM = Kernel("uniform", _uniform, 0.5)
KERNELS = {k.name: k for k in (GAUSSIAN, EPANECHNIKOV, UNIFORM)}


def get_kernel(kernel) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    try:
        return KERNELS[str(kernel).lower()]
    except KeyError:
        raise InvalidObservation(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}") from None


def as_bandwidth(bandwidth, dim: int) -> np.ndarray:
    """Validate per-dimension bandwidths; a scalar is broadcast to ``dim``."""
    h = np.atleast_1d(np.asarray(bandwidth, dtype=np.float64))
    if h.size == 1 and dim > 1:
        h = np.repeat(h, dim)
    if h.shape != (dim,):
        raise DimensionMismatch(f"bandwidth has {h.size} components, expected {dim}")
    if not (np.isfinite(h).all() and (h > 0).all()):
        raise InvalidObservation(f"bandwidths must be positive and finite, got {h.tolist()}")
    return h


@dataclass(frozen=True)
class WeightTable:
    """Per-grid-point probability masses.

    ``raw`` holds the inclusion-exclusion values before negative entries are
    clamped to zero; ``clamped_mass`` is the total magnitude removed. The
    clamped weights are not renormalized.
    """

    grid: Grid
    weights: np.ndarray
    raw: np.ndarray
    clamped: bool
    clamped_mass: float
    boundary: str = "pad"

    @property
    def dim(self):
        return self.grid.dim

    @property
    def total(self):
        return float(self.weights.sum())


def _check_boundary(boundary):
    if boundary not in BOUNDARY_MODES:
        raise InvalidObservation(f"boundary must be one of {BOUNDARY_MODES}, got {boundary!r}")


def _finish(grid, raw, boundary):
    negative = raw < 0
    clamped_mass = float(-raw[negative].sum())
    weights = np.where(negative, 0.0, raw)
    return WeightTable(grid, weights, raw, bool(negative.any()), clamped_mass, boundary)


def _values_of(cdf):
    if isinstance(cdf, CdfEstimate):
        return cdf.grid, np.asarray(cdf.values, dtype=np.float64)
    grid, values = cdf
    return grid, np.asarray(values, dtype=np.float64)


def weights_1d(cdf) -> WeightTable:
    """Successive differences, with the first weight equal to ``F(x_1)``.

    ``cdf`` is a :class:`CdfEstimate` or a ``(grid, values)`` pair.
    """
    grid, values = _values_of(cdf)
    if values.ndim != 1:
        raise DimensionMismatch(f"weights_1d needs a 1-D estimate, got {values.ndim}-D")
    raw = np.diff(values, prepend=0.0)
    return _finish(grid, raw, "pad")


def weights_2d(cdf, boundary: str = "pad") -> WeightTable:
    grid, values = _values_of(cdf)
    _check_boundary(boundary)
    if values.ndim != 2:
        raise DimensionMismatch(f"weights_2d needs a 2-D estimate, got {values.ndim}-D")
    if boundary == "pad":
        f = np.pad(values, ((1, 0), (1, 0)))
        raw = f[1:, 1:] - f[1:, :-1] - f[:-1, 1:] + f[:-1, :-1]
    else:
        raw = np.zeros_like(values)
        raw[1:, 1:] = values[1:, 1:] - values[1:, :-1] - values[:-1, 1:] + values[:-1, :-1]
    return _finish(grid, raw, boundary)


def _corner_sum(f):
    acc = None
    for shift in itertools.product((0, 1), repeat=f.ndim):
        term = f[tuple(slice(1 - s, f.shape[m] - s) for m, s in enumerate(shift))]
        if acc is None:
            acc = term.copy()
        elif sum(shift) % 2:
            acc = acc - term
        else:
            acc = acc + term
    return acc


def inclusion_exclusion(values, boundary: str = "pad") -> np.ndarray:
    """Raw M-dimensional cell masses by the alternating corner sum.

    Corners are added in lexicographic order of the shift vector so that
    the 1-D and 2-D cases reproduce :func:`weights_1d` and
    :func:`weights_2d` bit for bit.
    """
    values = np.asarray(values, dtype=np.float64)
    _check_boundary(boundary)
    if boundary == "pad" or values.ndim == 1:
        return _corner_sum(np.pad(values, [(1, 0)] * values.ndim))
    raw = np.zeros_like(values)
    raw[(slice(1, None),) * values.ndim] = _corner_sum(values)
    return raw


def weights_md(cdf, boundary: str = "pad") -> WeightTable:
    grid, values = _values_of(cdf)
    raw = inclusion_exclusion(values, boundary)
    return _finish(grid, raw, "pad" if values.ndim == 1 else boundary)


def kernel_matrices(grid: Grid, kernel: Kernel, bandwidth, points) -> list:
    """Per-axis matrices ``K((x_m - grid_m) / h_m)`` of shape ``(P, I_m)``."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return [
        kernel((points[:, m, None] - axis[None, :]) / bandwidth[m])
        for m, axis in enumerate(grid.axes)
    ]


def as_points(points, dim):
    """Normalize query points to a ``(P, M)`` array; flag a single point."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 0 or (pts.ndim == 1 and dim > 1)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1) if dim > 1 else pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionMismatch(f"points must have {dim} coordinates")
    return pts, single


def density_at(weights: WeightTable, kernel, bandwidth, point, skip_zero=None):
    """Smoothed density at one point or at each row of a ``(P, M)`` array.

    A 1-D array of scalars is treated as ``P`` points when the grid is
    one-dimensional.
    """
    kernel = get_kernel(kernel)
    h = as_bandwidth(bandwidth, weights.dim)
    pts, single = as_points(point, weights.dim)
    kmats = kernel_matrices(weights.grid, kernel, h, pts)
    out = _accel.kernel_sum(weights.weights, kmats, skip_zero=skip_zero) / np.prod(h)
    return float(out[0]) if single else out
