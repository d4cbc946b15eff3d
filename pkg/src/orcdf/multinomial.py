"""Multinomial parameter estimation when some outcome types are unobserved.

``c`` holds the observed count of each type and ``u = N - sum(c)`` trials
have unknown type. Without a model of the censoring mechanism the true
counts are only known to lie in ``S = {n : n_m >= c_m, sum n = N}``.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln, logsumexp, xlogy

from .errors import (
    DegenerateNormalizer,
    DimensionMismatch,
    EnumerationTooLarge,
    IdentifiabilityWarning,
    InconsistentCensoring,
    InvalidObservation,
)
from .estimator import closed_form_fhat
from .optimize import golden_section_max, scan_then_golden

DEFAULT_MAX_TERMS = 10**7


@dataclass(frozen=True)
class DiscreteCensoredCounts:
    """Observed counts ``c`` and ``u`` trials of unknown type.

    ``per_type_u`` optionally caps how many unknown trials can be of each
    type (partial censoring).
    """

    c: tuple
    u: int
    per_type_u: tuple = None

    def __post_init__(self):
        c = tuple(int(x) for x in self.c)
        if len(c) < 1 or min(c) < 0:
            raise InvalidObservation(f"observed counts must be non-negative, got {c}")
        if int(self.u) < 0:
            raise InvalidObservation(f"unobserved count must be non-negative, got {self.u}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "u", int(self.u))
        if sum(c) + self.u < 1:
            raise InvalidObservation("need at least one trial")
        if self.per_type_u is not None:
            caps = tuple(int(x) for x in self.per_type_u)
            if len(caps) != len(c):
                raise DimensionMismatch(f"per_type_u has {len(caps)} entries, expected {len(c)}")
            if min(caps) < 0 or max(caps) > self.u:
                raise InvalidObservation(f"per-type caps must lie in [0, {self.u}], got {caps}")
            object.__setattr__(self, "per_type_u", caps)

    @classmethod
    def from_total(cls, c, n, per_type_u=None):
        return cls(tuple(c), int(n) - sum(int(x) for x in c), per_type_u)

    @property
    def n(self):
        return sum(self.c) + self.u

    @property
    def m(self):
        return len(self.c)


@dataclass(frozen=True)
class SimplexEstimate:
    probabilities: np.ndarray
    method: str
    approximate: bool = False
    diagnostics: dict = field(default_factory=dict)


def trinomial_caps(c, n, u12, u23):
    """Per-type caps when ``u12`` trials are type 1 or 2 and ``u23`` type 2 or 3."""
    c1, c2, c3 = (int(x) for x in c)
    return int(u12), min(int(n) - c1 - c2 - c3, int(u12) + int(u23)), int(u23)


def binomial_censored_mle(counts: DiscreteCensoredCounts) -> float:
    """Closed-form MLE of the type-1 probability from ``c = (c_1, c_2)``."""
    if counts.m != 2:
        raise DimensionMismatch("binomial estimate needs exactly two outcome types")
    c1, c2 = counts.c
    return closed_form_fhat((c1, counts.u, c2))


def multinomial_normalized_estimate(counts: DiscreteCensoredCounts) -> SimplexEstimate:
    """Per-type observed-range maximizers, normalized to the simplex.

    This is an approximation to the joint maximizer of the multinomial
    observed-range likelihood.
    """
    if counts.m < 2:
        raise DimensionMismatch("need at least two outcome types")
    caps = counts.per_type_u if counts.per_type_u is not None else (counts.u,) * counts.m
    n = counts.n
    p = np.array([closed_form_fhat((cm, um, n - cm - um)) for cm, um in zip(counts.c, caps)])
    total = p.sum()
    if total == 0:
        raise DegenerateNormalizer("every per-type estimate is zero")
    return SimplexEstimate(p / total, "Normalized", approximate=True,
                           diagnostics={"per_type": p.tolist(), "caps": list(caps)})


def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(parts)])
    return np.array(rows, dtype=np.int64)


class ObservedRangeLikelihood:
    """``L(p) = sum_{n in S} N!/prod(n_m!) prod p_m^n_m`` with ``S`` enumerated once."""

    def __init__(self, counts: DiscreteCensoredCounts, max_terms=DEFAULT_MAX_TERMS):
        n_terms = math.comb(counts.u + counts.m - 1, counts.m - 1)
        if n_terms > max_terms:
            raise EnumerationTooLarge(f"{n_terms} compositions exceed the cap of {max_terms}")
        self.counts = counts
        self.n = np.asarray(counts.c, dtype=np.int64)[None, :] + compositions(counts.u, counts.m)
        self.log_coef = gammaln(counts.n + 1.0) - gammaln(self.n + 1.0).sum(axis=1)

    def log(self, p):
        """Log-likelihood at one ``p`` or each row of a ``(T, M)`` array."""
        p = np.asarray(p, dtype=np.float64)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        terms = self.log_coef[None, :] + xlogy(self.n[None, :, :], p[:, None, :]).sum(axis=2)
        out = logsumexp(terms, axis=1)
        return float(out[0]) if single else out

    def __call__(self, p):
        return np.exp(self.log(p))


def exact_multinomial_likelihood(counts: DiscreteCensoredCounts, p, max_terms=DEFAULT_MAX_TERMS) -> float:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (counts.m,):
        raise DimensionMismatch(f"p has {p.size} entries, expected {counts.m}")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidObservation("p must lie on the probability simplex")
    return float(ObservedRangeLikelihood(counts, max_terms)(p))


def maximize_on_simplex(log_f, p0, tol=1e-12, max_sweeps=500, n_scan=64):
    """Pairwise coordinate ascent on the simplex.

    Each step moves mass between two coordinates along the line that keeps
    the sum fixed, maximized by a coarse scan plus golden-section search;
    iterates stay on the simplex without projection.
    """
    p = np.array(p0, dtype=np.float64)
    p = p / p.sum()
    current = float(log_f(p[None, :])[0])
    dim = p.size
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        start = current
        for i, j in itertools.combinations(range(dim), 2):
            s = p[i] + p[j]
            if s <= 0:
                continue

            def line(t, i=i, j=j, s=s):
                t = np.atleast_1d(t)
                q = np.repeat(p[None, :], t.size, axis=0)
                q[:, i] = t
                q[:, j] = s - t
                return log_f(q)

            t, val = scan_then_golden(line, 0.0, s, n_scan=n_scan, tol=1e-13)
            if val > current:
                p[i], p[j] = t, s - t
                current = float(val)
        if current - start <= tol:
            break
    return p, current, sweeps


def exact_multinomial_mle(counts: DiscreteCensoredCounts, max_terms=DEFAULT_MAX_TERMS) -> SimplexEstimate:
    """Joint maximizer of the observed-range likelihood (desk scale, ``M <= 4``)."""
    lik = ObservedRangeLikelihood(counts, max_terms)
    p0 = (np.asarray(counts.c, dtype=np.float64) + counts.u / counts.m) / counts.n
    p, loglik, sweeps = maximize_on_simplex(lik.log, p0)
    return SimplexEstimate(p, "GridMax", diagnostics={"loglik": loglik, "sweeps": sweeps})


def _check_q(q, m):
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (m,):
        raise DimensionMismatch(f"q has {q.size} entries, expected {m}")
    if not ((q >= 0) & (q <= 1)).all():
        raise InvalidObservation(f"observation probabilities must lie in [0, 1], got {q.tolist()}")
    return q


def known_q_loglik(counts: DiscreteCensoredCounts, p, q) -> float:
    """Log-likelihood of ``c`` observed and ``u`` unobserved with known ``q``."""
    c = np.asarray(counts.c, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    const = gammaln(counts.n + 1.0) - gammaln(c + 1.0).sum() - gammaln(counts.u + 1.0)
    miss = float(np.sum((1.0 - q) * p, axis=-1)) if p.ndim == 1 else np.sum((1.0 - q) * p, axis=-1)
    return const + np.sum(xlogy(c, p * q), axis=-1) + xlogy(counts.u, miss)


def known_q_mle(counts: DiscreteCensoredCounts, q, tol=1e-12, max_iter=100_000) -> SimplexEstimate:
    """EM maximizer of the likelihood with known observation probabilities.

    The ``u`` unknown trials are allocated in proportion to
    ``(1 - q_m) p_m`` at each step. ``diagnostics["trace"]`` records the
    log-likelihood after every iteration.
    """
    q = _check_q(q, counts.m)
    c = np.asarray(counts.c, dtype=np.float64)
    n = counts.n
    u = counts.u
    if u > 0 and (q == 1).all():
        raise InconsistentCensoring("unobserved trials are impossible when every q_m = 1")
    if ((q == 0) & (c > 0)).any():
        raise InconsistentCensoring("a type with q_m = 0 cannot have observed outcomes")
    p = (c + u / counts.m) / n
    trace = [float(known_q_loglik(counts, p, q))]
    it = 0
    for it in range(1, max_iter + 1):
        miss = (1.0 - q) * p
        total = miss.sum()
        alloc = u * miss / total if u > 0 else 0.0
        p_new = (c + alloc) / n
        trace.append(float(known_q_loglik(counts, p_new, q)))
        change = float(np.max(np.abs(p_new - p)))
        p = p_new
        if change < tol:
            break
    return SimplexEstimate(p, "EM", diagnostics={"iterations": it, "trace": trace, "loglik": trace[-1]})


def partial_known_q_loglik(counts: DiscreteCensoredCounts, p1, q1, q2):
    """Log-likelihood over the four observed/unobserved categories, ``q_2`` known.

    The sum over the split ``(n~_1, n~_2)`` of the ``u`` unknown trials is
    evaluated term by term in log space. ``p1`` and ``q1`` broadcast.
    """
    if counts.m != 2:
        raise DimensionMismatch("partial-q likelihood needs two outcome types")
    c1, c2 = counts.c
    u = counts.u
    p1, q1 = np.broadcast_arrays(np.asarray(p1, dtype=np.float64), np.asarray(q1, dtype=np.float64))
    p2 = 1.0 - p1
    const = gammaln(counts.n + 1.0) - gammaln(c1 + 1.0) - gammaln(c2 + 1.0)
    base = const + xlogy(c1, p1 * q1) + xlogy(c2, p2 * q2)
    k = np.arange(u + 1, dtype=np.float64)
    split = -gammaln(k + 1.0) - gammaln(u - k + 1.0)
    terms = (split + xlogy(k, ((1.0 - q1) * p1)[..., None])
             + xlogy(u - k, ((1.0 - q2) * p2)[..., None]))
    return base + logsumexp(terms, axis=-1)


def partial_known_q_mle(counts: DiscreteCensoredCounts, q2, grid_size=512):
    """Joint maximizer over ``(p_1, q_1)`` with ``q_2`` known.

    Dense grid on ``[0, 1]^2`` followed by bounded Nelder-Mead refinement.
    When the likelihood is flat in ``q_1`` at the maximizer (e.g. ``p_1 = 0``)
    an :class:`IdentifiabilityWarning` is issued and ``q_1 = 1`` reported.

    Returns
    -------
    (SimplexEstimate, q1)
    """
    if counts.m != 2:
        raise DimensionMismatch("partial-q estimation needs two outcome types")
    q2 = float(q2)
    if not 0.0 <= q2 <= 1.0:
        raise InvalidObservation(f"q2 must lie in [0, 1], got {q2}")
    axis = np.linspace(0.0, 1.0, grid_size)
    best = (-np.inf, 0.0, 1.0)
    for p1 in axis:
        vals = partial_known_q_loglik(counts, p1, axis, q2)
        j = int(np.argmax(vals))
        if vals[j] > best[0]:
            best = (float(vals[j]), float(p1), float(axis[j]))
    ll, p1_hat, q1_hat = best

    def neg(x):
        v = partial_known_q_loglik(counts, x[0], x[1], q2)
        return -float(v) if np.isfinite(v) else 1e300

    res = minimize(neg, [p1_hat, q1_hat], method="Nelder-Mead", bounds=[(0.0, 1.0), (0.0, 1.0)],
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    if -res.fun > ll:
        ll, p1_hat, q1_hat = -float(res.fun), float(res.x[0]), float(res.x[1])
    # polish each coordinate on its own; Nelder-Mead stalls on the box faces
    for _ in range(3):
        p1_hat, ll = golden_section_max(lambda t: float(partial_known_q_loglik(counts, t, q1_hat, q2)), 0.0, 1.0, 1e-12)
        q1_hat, ll = golden_section_max(lambda t: float(partial_known_q_loglik(counts, p1_hat, t, q2)), 0.0, 1.0, 1e-12)
    profile = partial_known_q_loglik(counts, p1_hat, axis, q2)
    finite = profile[np.isfinite(profile)]
    flat = finite.size == profile.size and float(finite.max() - finite.min()) < 1e-9
    diagnostics = {"loglik": ll, "identifiable": not flat}
    if flat:
        warnings.warn("q1 is not identified at the maximizer; reporting q1 = 1", IdentifiabilityWarning,
                      stacklevel=2)
        q1_hat = 1.0
        diagnostics["warning"] = "q1 unidentified; reported as 1.0"
    est = SimplexEstimate(np.array([p1_hat, 1.0 - p1_hat]), "GridMax", diagnostics=diagnostics)
    return est, q1_hat
