"""Least-squares cross-validation bandwidth selection for censored samples.

The score is ``integral(f_hat^2) - (2/N) sum_n f_hat_{-n}(V_n)``, where
``f_hat_{-n}`` is the censored density rebuilt without observation ``n`` and
``V_n`` is the midpoint of the ``n``-th censoring interval (the value itself
for exact observations). On exact data this is the classical LSCV score.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .data import Grid, Sample, build_grid, count_grid, observation_indicator_grids
from .errors import EmptySearchSpace, SampleTooSmall
from .estimator import fhat_from_counts
from .kde import (
    WeightTable,
    as_bandwidth,
    density_at,
    get_kernel,
    inclusion_exclusion,
    kernel_matrices,
    weights_md,
)
from .optimize import golden_section_max
from .quadrature import integrate_box, kernel_breaks


@dataclass(frozen=True)
class ScoreEvaluation:
    bandwidth: np.ndarray
    integral_term: float
    loo_term: float
    score: float


def midpoints(sample: Sample, grid: Grid = None) -> np.ndarray:
    """Per-observation midpoint surrogates, shape ``(N, M)``.

    Infinite endpoints are replaced by the matching extreme of the grid
    axis before averaging; an interval infinite on both sides maps to the
    axis centre.
    """
    grid = grid if grid is not None else build_grid(sample)
    lo = np.array(sample.lower, dtype=np.float64)
    hi = np.array(sample.upper, dtype=np.float64)
    for m, axis in enumerate(grid.axes):
        lo[:, m] = np.where(np.isneginf(lo[:, m]), axis[0], lo[:, m])
        hi[:, m] = np.where(np.isposinf(hi[:, m]), axis[-1], hi[:, m])
    mid = 0.5 * (lo + hi)
    return np.where(sample.exact, sample.lower, mid)


def _gaussian_overlap(axis, h):
    # integral of phi_h(x - a) phi_h(x - b) dx = phi_{h sqrt 2}(a - b)
    s = h * math.sqrt(2.0)
    diff = (axis[:, None] - axis[None, :]) / s
    return np.exp(-0.5 * diff * diff) / (s * math.sqrt(2.0 * math.pi))


def integral_fhat_squared(weights: WeightTable, kernel="gaussian", bandwidth=1.0, rtol=1e-6,
                          method=None) -> float:
    """``integral f_hat(x)^2 dx``.

    Closed form for the Gaussian kernel; adaptive cubature over the
    kernel-padded grid box otherwise (or when ``method="quadrature"``).
    """
    kernel = get_kernel(kernel)
    h = as_bandwidth(bandwidth, weights.dim)
    if method is None:
        method = "closed" if kernel.name == "gaussian" else "quadrature"
    w = weights.weights
    if not w.any():
        return 0.0
    if method == "closed":
        if kernel.name != "gaussian":
            raise ValueError("closed form is only available for the Gaussian kernel")
        t = w
        for m, axis in enumerate(weights.grid.axes):
            t = np.moveaxis(np.tensordot(_gaussian_overlap(axis, h[m]), t, axes=(1, m)), 0, m)
        return float(np.sum(w * t))

    def f2(pts):
        return density_at(weights, kernel, h, pts) ** 2

    return integrate_box(f2, kernel_breaks(weights.grid, kernel, h), rtol=rtol * 1e-2)


class CrossValidation:
    """Leave-one-out machinery for one sample on its full endpoint grid.

    Leave-one-out estimates recompute counts, the CDF estimate and weights
    from ``N - 1`` observations while keeping the full sample's grid. The
    ``N`` weight tables do not depend on the bandwidth and are built once.
    """

    def __init__(self, sample: Sample, kernel="gaussian", boundary="pad", grid=None):
        if sample.n < 2:
            raise SampleTooSmall("cross-validation needs at least two observations")
        self.sample = sample
        self.kernel = get_kernel(kernel)
        self.boundary = boundary
        self.grid = grid if grid is not None else build_grid(sample)
        self.d, self.u = count_grid(sample, self.grid)
        values = fhat_from_counts(self.d, self.u, sample.n - self.d - self.u)
        self.full = weights_md((self.grid, values), boundary)
        self.midpoints = midpoints(sample, self.grid)
        self._stack = None
        self._clamped_mass = None

    def loo_values(self, n):
        is_d, is_u = observation_indicator_grids(self.sample, self.grid, n)
        d = self.d - is_d
        u = self.u - is_u
        return fhat_from_counts(d, u, self.sample.n - 1 - d - u)

    def loo_weights(self, n) -> WeightTable:
        return weights_md((self.grid, self.loo_values(n)), self.boundary)

    def _loo_stack(self):
        if self._stack is None:
            stack = np.empty((self.sample.n,) + self.grid.shape)
            clamped = 0.0
            for n in range(self.sample.n):
                raw = inclusion_exclusion(self.loo_values(n), self.boundary)
                neg = raw < 0
                clamped += float(-raw[neg].sum())
                stack[n] = np.where(neg, 0.0, raw)
            self._stack = stack
            self._clamped_mass = clamped
        return self._stack

    @property
    def loo_clamped_mass(self):
        self._loo_stack()
        return self._clamped_mass

    def loo_density(self, n, bandwidth, point):
        return density_at(self.loo_weights(n), self.kernel, bandwidth, point)

    def loo_term(self, bandwidth) -> float:
        h = as_bandwidth(bandwidth, self.sample.dim)
        stack = self._loo_stack()
        kmats = kernel_matrices(self.grid, self.kernel, h, self.midpoints)
        dens = _accel.batched_kernel_sum(stack, kmats) / np.prod(h)
        return 2.0 * float(np.sum(dens)) / self.sample.n

    def score(self, bandwidth) -> ScoreEvaluation:
        h = as_bandwidth(bandwidth, self.sample.dim)
        integral = integral_fhat_squared(self.full, self.kernel, h)
        loo = self.loo_term(h)
        return ScoreEvaluation(h, integral, loo, integral - loo)


def loo_density(sample: Sample, n: int, kernel, bandwidth, point, boundary="pad"):
    """Censored density at ``point`` with observation ``n`` removed (grid fixed)."""
    return CrossValidation(sample, kernel, boundary).loo_density(n, bandwidth, point)


def score_M0_tilde(sample: Sample, kernel="gaussian", bandwidth=1.0, boundary="pad") -> ScoreEvaluation:
    return CrossValidation(sample, kernel, boundary).score(bandwidth)


@dataclass
class BandwidthSearchSpec:
    """Candidate bandwidths for :func:`select_bandwidth`.

    Either give explicit ``candidates`` (one increasing sequence per
    dimension) or let them be log-spaced over ``[low, high]`` times the
    per-dimension standard deviation of the midpoints.
    """

    candidates: list = None
    n_candidates: int = 32
    low: float = 0.05
    high: float = 2.0
    max_cartesian: int = 4096
    refine: bool = True
    tol: float = 1e-6
    scores: dict = field(default_factory=dict, repr=False)

    def resolve(self, cv: CrossValidation) -> list:
        if self.candidates is not None:
            cands = self.candidates
            if np.ndim(cands[0]) == 0:
                cands = [cands]
            out = [np.sort(np.asarray(c, dtype=np.float64)) for c in cands]
        else:
            if self.n_candidates < 1:
                raise EmptySearchSpace("n_candidates must be at least 1")
            out = []
            for m in range(cv.sample.dim):
                sd = float(np.std(cv.midpoints[:, m], ddof=1)) if cv.sample.n > 1 else 0.0
                if not sd > 0:
                    axis = cv.grid.axes[m]
                    sd = float(axis[-1] - axis[0]) or 1.0
                out.append(np.geomspace(self.low * sd, self.high * sd, self.n_candidates))
        if len(out) != cv.sample.dim:
            raise EmptySearchSpace(f"need candidates for {cv.sample.dim} dimensions, got {len(out)}")
        for c in out:
            if c.size == 0:
                raise EmptySearchSpace("empty candidate list")
            as_bandwidth(c, c.size)
        return out


def scan_scores(cv: CrossValidation, candidates) -> list:
    """Score every Cartesian combination of candidates, in lexicographic order."""
    return [cv.score(np.array(h)) for h in itertools.product(*candidates)]


def select_bandwidth(sample: Sample, kernel="gaussian", search: BandwidthSearchSpec = None,
                     boundary="pad", cv: CrossValidation = None) -> np.ndarray:
    """Bandwidth minimizing the censored cross-validation score.

    Ties go to the smaller bandwidth, comparing dimensions in order. In
    one dimension the best candidate is refined by golden-section search
    in ``log h`` between its neighbours.
    """
    search = search if search is not None else BandwidthSearchSpec()
    cv = cv if cv is not None else CrossValidation(sample, kernel, boundary)
    cands = search.resolve(cv)
    sizes = [c.size for c in cands]
    if math.prod(sizes) <= search.max_cartesian:
        evals = scan_scores(cv, cands)
        search.scores = {tuple(e.bandwidth.tolist()): e.score for e in evals}
        best = int(np.argmin([e.score for e in evals]))
        idx = np.unravel_index(best, sizes)
    else:
        idx = _coordinate_descent(cv, cands, search)
    h = np.array([cands[m][i] for m, i in enumerate(idx)])
    if sample.dim == 1 and search.refine and sizes[0] > 1:
        i = int(idx[0])
        c = cands[0]
        lo = math.log(c[max(i - 1, 0)])
        hi = math.log(c[min(i + 1, c.size - 1)])
        best_score = cv.score(h).score
        x, neg = golden_section_max(lambda t: -cv.score(math.exp(t)).score, lo, hi, tol=search.tol)
        if -neg < best_score:
            h = np.array([math.exp(x)])
    return h


def _coordinate_descent(cv, cands, search):
    idx = [c.size // 2 for c in cands]
    cache = {}

    def score(ix):
        key = tuple(ix)
        if key not in cache:
            cache[key] = cv.score(np.array([cands[m][i] for m, i in enumerate(ix)])).score
        return cache[key]

    for _ in range(100):
        changed = False
        for m in range(len(cands)):
            trial = [score(idx[:m] + [j] + idx[m + 1:]) for j in range(cands[m].size)]
            j = int(np.argmin(trial))
            if j != idx[m]:
                idx[m] = j
                changed = True
        if not changed:
            break
    search.scores = {tuple(cands[m][i] for m, i in enumerate(k)): v for k, v in cache.items()}
    return tuple(idx)
