"""Censored samples, the endpoint grid and the (d, u, a) counts.

An observation coordinate is either exact or censored into ``(L, R]`` with
``L`` possibly ``-inf`` and ``R`` possibly ``+inf``. At an evaluation point
``x`` an observation counts toward

* ``d`` when ``R <= x`` in every coordinate (an exact value ``v`` has
  ``L = R = v``),
* ``u`` when ``L < x < R`` in every coordinate,
* ``a`` otherwise, so that ``d + u + a = N``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _accel
from .errors import AxisEmpty, DimensionMismatch, InvalidObservation


@dataclass(frozen=True)
class CensoredScalar:
    """One coordinate of one observation."""

    lower: float
    upper: float
    is_exact: bool = False

    def __post_init__(self):
        if self.is_exact:
            if not np.isfinite(self.lower) or self.lower != self.upper:
                raise InvalidObservation(f"exact value must be finite, got {self.lower!r}")
        else:
            if np.isnan(self.lower) or np.isnan(self.upper):
                raise InvalidObservation("interval endpoints must not be NaN")
            if not self.lower < self.upper:
                raise InvalidObservation(
                    f"interval requires lower < upper, got ({self.lower!r}, {self.upper!r}]"
                )

    @classmethod
    def exact(cls, value):
        value = float(value)
        return cls(value, value, True)

    @classmethod
    def interval(cls, lower, upper):
        return cls(float(lower), float(upper), False)

    @property
    def value(self):
        if not self.is_exact:
            raise AttributeError("interval observation has no exact value")
        return self.lower


Exact = CensoredScalar.exact
Interval = CensoredScalar.interval


class CountTriple(NamedTuple):
    d: int
    u: int
    a: int

    @property
    def n(self):
        return self.d + self.u + self.a


class Sample:
    """An immutable collection of ``N`` censored ``M``-vectors.

    Stored as ``(N, M)`` arrays ``lower``, ``upper`` and a boolean ``exact``
    mask. Build from scalars with ``Sample([[Exact(1.0)], [Interval(0, 2)]])``
    or from arrays with :meth:`from_arrays`.
    """

    def __init__(self, observations):
        rows = []
        for obs in observations:
            if isinstance(obs, CensoredScalar):
                obs = [obs]
            rows.append(list(obs))
        if not rows:
            raise InvalidObservation("sample must contain at least one observation")
        dim = len(rows[0])
        if dim < 1:
            raise InvalidObservation("observations need at least one coordinate")
        for n, row in enumerate(rows):
            if len(row) != dim:
                raise DimensionMismatch(f"observation {n} has {len(row)} coordinates, expected {dim}")
        lower = np.array([[c.lower for c in row] for row in rows], dtype=np.float64)
        upper = np.array([[c.upper for c in row] for row in rows], dtype=np.float64)
        exact = np.array([[c.is_exact for c in row] for row in rows], dtype=bool)
        self._set(lower, upper, exact)

    def _set(self, lower, upper, exact):
        for arr in (lower, upper, exact):
            arr.setflags(write=False)
        self.lower = lower
        self.upper = upper
        self.exact = exact

    @classmethod
    def from_arrays(cls, lower, upper, exact=None):
        """Validate and wrap ``(N, M)`` (or length-``N``) endpoint arrays.

        Where ``exact`` is true the coordinate is exact and ``lower`` must
        equal ``upper``; everywhere else ``lower < upper`` is required.
        """
        lower = np.array(lower, dtype=np.float64)
        upper = np.array(upper, dtype=np.float64)
        if lower.ndim == 1:
            lower = lower[:, None]
            upper = upper[:, None]
        if lower.shape != upper.shape or lower.ndim != 2:
            raise DimensionMismatch(f"lower {lower.shape} and upper {upper.shape} differ in shape")
        if lower.shape[0] < 1 or lower.shape[1] < 1:
            raise InvalidObservation("sample must contain at least one observation")
        if exact is None:
            exact = np.zeros(lower.shape, dtype=bool)
        else:
            exact = np.array(exact, dtype=bool)
            if exact.ndim == 1:
                exact = exact[:, None]
            exact = np.broadcast_to(exact, lower.shape).copy()
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise InvalidObservation("endpoints must not be NaN")
        bad_exact = exact & ~((lower == upper) & np.isfinite(lower))
        if bad_exact.any():
            n, m = np.argwhere(bad_exact)[0]
            raise InvalidObservation(f"observation {n}, coordinate {m}: exact value must be finite")
        bad_interval = ~exact & ~(lower < upper)
        if bad_interval.any():
            n, m = np.argwhere(bad_interval)[0]
            raise InvalidObservation(
                f"observation {n}, coordinate {m}: interval requires lower < upper, "
                f"got ({lower[n, m]!r}, {upper[n, m]!r}]"
            )
        obj = cls.__new__(cls)
        obj._set(lower, upper, exact)
        return obj

    @classmethod
    def from_exact(cls, values):
        values = np.array(values, dtype=np.float64)
        return cls.from_arrays(values, values, np.ones(values.shape, dtype=bool))

    @classmethod
    def from_intervals(cls, lower, upper):
        return cls.from_arrays(lower, upper)

    @property
    def n(self):
        return self.lower.shape[0]

    @property
    def dim(self):
        return self.lower.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, n):
        return [
            CensoredScalar(float(lo), float(hi), bool(ex))
            for lo, hi, ex in zip(self.lower[n], self.upper[n], self.exact[n])
        ]

    def subset(self, index):
        """Sample restricted to the observations selected by ``index``."""
        index = np.asarray(index)
        return Sample.from_arrays(self.lower[index], self.upper[index], self.exact[index])

    def drop(self, n):
        keep = np.ones(self.n, dtype=bool)
        keep[n] = False
        return self.subset(keep)

    def __repr__(self):
        return f"Sample(n={self.n}, dim={self.dim})"


@dataclass(frozen=True)
class Grid:
    """Per-dimension strictly increasing finite axes."""

    axes: tuple

    def __post_init__(self):
        axes = []
        for m, axis in enumerate(self.axes):
            axis = np.array(axis, dtype=np.float64)
            if axis.ndim != 1 or axis.size == 0:
                raise AxisEmpty(f"axis {m} is empty")
            if not np.isfinite(axis).all():
                raise InvalidObservation(f"axis {m} contains non-finite values")
            if (np.diff(axis) <= 0).any():
                raise InvalidObservation(f"axis {m} is not strictly increasing")
            axis.setflags(write=False)
            axes.append(axis)
        object.__setattr__(self, "axes", tuple(axes))

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape, dtype=np.int64))

    def points(self):
        """All grid points as a ``(size, M)`` array in C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def __eq__(self, other):
        if not isinstance(other, Grid) or other.dim != self.dim:
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))

    def __hash__(self):
        return hash(tuple(a.tobytes() for a in self.axes))


def build_grid(sample: Sample) -> Grid:
    """Sorted unique finite endpoints per coordinate; infinities are dropped."""
    axes = []
    for m in range(sample.dim):
        values = np.concatenate([sample.lower[:, m], sample.upper[:, m]])
        values = np.unique(values[np.isfinite(values)])
        if values.size == 0:
            raise AxisEmpty(f"coordinate {m} has no finite endpoint")
        axes.append(values)
    return Grid(tuple(axes))


def _as_point(sample, point):
    point = np.atleast_1d(np.asarray(point, dtype=np.float64))
    if point.shape != (sample.dim,):
        raise DimensionMismatch(f"point has dimension {point.size}, sample has {sample.dim}")
    return point


def indicators(sample: Sample, point) -> tuple:
    """Per-observation boolean masks ``(is_d, is_u)`` at one point."""
    x = _as_point(sample, point)
    is_d = (sample.upper <= x).all(axis=1)
    is_u = ((sample.lower < x) & (x < sample.upper)).all(axis=1)
    return is_d, is_u


def count_at(sample: Sample, point) -> CountTriple:
    is_d, is_u = indicators(sample, point)
    d = int(is_d.sum())
    u = int(is_u.sum())
    return CountTriple(d, u, sample.n - d - u)


def count_grid(sample: Sample, grid: Grid) -> tuple:
    """``(d, u)`` integer arrays over every point of ``grid``."""
    if grid.dim != sample.dim:
        raise DimensionMismatch(f"grid has dimension {grid.dim}, sample has {sample.dim}")
    return _accel.count_grid(sample.lower, sample.upper, grid.axes)


def observation_indicator_grids(sample: Sample, grid: Grid, n: int) -> tuple:
    """Grid-shaped masks of where observation ``n`` counts toward d and u."""
    below = None
    inside = None
    for m, axis in enumerate(grid.axes):
        lo, hi = sample.lower[n, m], sample.upper[n, m]
        b = hi <= axis
        i = (lo < axis) & (axis < hi)
        if below is None:
            below, inside = b, i
        else:
            below = np.multiply.outer(below, b)
            inside = np.multiply.outer(inside, i)
    return below, inside

