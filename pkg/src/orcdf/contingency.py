"""Censored 2x2 contingency tables.

Cells are indexed ``c[i][j]`` with ``i`` the row and ``j`` the column.
Three censoring layouts are handled:

1. column totals fixed, column 1 exact, column 2 partly censored;
2. column totals fixed, both columns partly censored;
3. no totals known, ``u`` trials censored out of the table entirely.

With fixed column totals the ``pi_hat`` entries are column-conditional
(``pi_1j + pi_2j = 1``); in layout 3 they are joint cell probabilities.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .errors import InvalidObservation, StructureMismatch
from .estimator import closed_form_fhat
from .multinomial import DEFAULT_MAX_TERMS, DiscreteCensoredCounts, ObservedRangeLikelihood, maximize_on_simplex
from .optimize import scan_then_golden

# flat order used by the layout-3 likelihood: (11, 21, 12, 22)
_FLAT = ((0, 0), (1, 0), (0, 1), (1, 1))


def _log_choose(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


@dataclass(frozen=True)
class Table2x2:
    """Observed 2x2 counts with either known column totals or a known grand total."""

    c: np.ndarray
    column_totals: tuple = None
    n: int = None

    def __post_init__(self):
        c = np.asarray(self.c)
        if c.shape != (2, 2):
            raise InvalidObservation(f"table must be 2x2, got shape {c.shape}")
        if not np.all(c == np.round(c)) or (c < 0).any():
            raise InvalidObservation("cell counts must be non-negative integers")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.column_totals is not None:
            tot = tuple(int(t) for t in self.column_totals)
            if len(tot) != 2:
                raise InvalidObservation("need exactly two column totals")
            col = c.sum(axis=0)
            for j in range(2):
                if tot[j] < col[j]:
                    raise InvalidObservation(f"column {j + 1} total {tot[j]} is below its observed count {col[j]}")
            if self.n is not None and int(self.n) != sum(tot):
                raise InvalidObservation(f"N = {self.n} does not equal the column totals' sum {sum(tot)}")
            object.__setattr__(self, "column_totals", tot)
            object.__setattr__(self, "n", sum(tot))
        else:
            if self.n is None:
                raise InvalidObservation("give either column totals or the total N")
            if int(self.n) < int(c.sum()):
                raise InvalidObservation(f"N = {self.n} is below the observed total {int(c.sum())}")
            object.__setattr__(self, "n", int(self.n))
        if self.n < 1:
            raise InvalidObservation("need at least one trial")

    @property
    def has_totals(self):
        return self.column_totals is not None

    @property
    def u_j(self):
        if not self.has_totals:
            return None
        col = self.c.sum(axis=0)
        return tuple(int(self.column_totals[j] - col[j]) for j in range(2))

    @property
    def u(self):
        return int(self.n - self.c.sum())


@dataclass(frozen=True)
class TableEstimates:
    """Fitted cell probabilities for one layout.

    ``q_hat`` is NaN where ``pi_hat`` is zero. Plug-in ``q_hat`` entries
    above one are kept and listed in ``diagnostics["q_above_one"]``.
    """

    pi_hat: np.ndarray
    alpha_hat: np.ndarray
    q_hat: np.ndarray
    under_null: bool
    example: int
    table: Table2x2
    p_null: float = None
    diagnostics: dict = field(default_factory=dict)


def estimate_alpha(table: Table2x2) -> np.ndarray:
    return table.c / float(table.n)


def _finish(table, pi, example, under_null, p_null=None, **diag):
    pi = np.asarray(pi, dtype=np.float64)
    alpha = estimate_alpha(table)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(pi > 0, alpha / np.where(pi > 0, pi, 1.0), np.nan)
    above = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.nan_to_num(q) > 1.0))]
    if above:
        diag["q_above_one"] = above
    return TableEstimates(pi, alpha, q, under_null, example, table, p_null, diag)


def _log_poly(p, ks, log_coef, n):
    """``log sum_k exp(log_coef_k) p^k (1-p)^(n-k)`` for each ``p``."""
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))[:, None]
    terms = log_coef[None, :] + xlogy(ks[None, :], p) + xlogy(n - ks[None, :], 1.0 - p)
    return logsumexp(terms, axis=1)


def null_loglik_terms(table: Table2x2, example: int, max_terms=DEFAULT_MAX_TERMS):
    """Exponents and log-coefficients of the null likelihood as a polynomial in ``p``.

    Returns ``(ks, log_coef)``; the likelihood is
    ``sum_k exp(log_coef_k) p^k (1-p)^(N-k)``.
    """
    if example == 1:
        _require_example1(table)
        n1, n2 = table.column_totals
        n11 = int(table.c[0, 0])
        n12 = np.arange(table.c[0, 1], table.c[0, 1] + table.u_j[1] + 1, dtype=np.float64)
        return n11 + n12, _log_choose(n1, n11) + _log_choose(n2, n12)
    if example == 2:
        _require_totals(table)
        n1, n2 = table.column_totals
        u1, u2 = table.u_j
        a = np.arange(table.c[0, 0], table.c[0, 0] + u1 + 1, dtype=np.float64)
        b = np.arange(table.c[0, 1], table.c[0, 1] + u2 + 1, dtype=np.float64)
        coef = _log_choose(n1, a)[:, None] + _log_choose(n2, b)[None, :]
        k = (a[:, None] + b[None, :]).ravel()
        return _collect(k, coef.ravel())
    if example == 3:
        _require_no_totals(table)
        lik = _layout3_likelihood(table, max_terms)
        k = (lik.n[:, 0] + lik.n[:, 2]).astype(np.float64)
        return _collect(k, lik.log_coef)
    raise StructureMismatch(f"example must be 1, 2 or 3, got {example!r}")


def _collect(k, coef):
    ks, inv = np.unique(k, return_inverse=True)
    out = np.full(ks.size, -np.inf)
    for idx in range(ks.size):
        out[idx] = logsumexp(coef[inv == idx])
    return ks, out


def _require_totals(table):
    if not table.has_totals:
        raise StructureMismatch("this layout needs known column totals")


def _require_no_totals(table):
    if table.has_totals:
        raise StructureMismatch("layout 3 applies when column totals are unknown")


def _require_example1(table):
    _require_totals(table)
    if table.u_j[0] != 0:
        raise StructureMismatch(f"layout 1 needs an exact first column, but u_1 = {table.u_j[0]}")


def _layout3_likelihood(table, max_terms):
    counts = DiscreteCensoredCounts(tuple(int(table.c[ij]) for ij in _FLAT), table.u)
    return ObservedRangeLikelihood(counts, max_terms)


def fit_null(table: Table2x2, example: int, max_terms=DEFAULT_MAX_TERMS, n_scan=1024, tol=1e-8):
    """Maximizer of the null likelihood in the shared probability ``p``."""
    ks, coef = null_loglik_terms(table, example, max_terms)
    n = table.n
    if ks.size == n + 1:
        # coefficients proportional to C(N, k) make the likelihood constant in p
        shape = coef - _log_choose(n, ks)
        if np.ptp(shape) <= 1e-12 * max(1.0, float(np.abs(shape).max())):
            return 0.5, float(_log_poly(0.5, ks, coef, n)[0])
    p, ll = scan_then_golden(lambda x: _log_poly(x, ks, coef, table.n), 0.0, 1.0, n_scan=n_scan, tol=tol)
    return float(p), float(ll)


def _null_estimates(table, example, max_terms):
    p, ll = fit_null(table, example, max_terms)
    pi = np.array([[p, p], [1.0 - p, 1.0 - p]])
    return _finish(table, pi, example, True, p_null=p, null_loglik=ll)


def fit_example1(table: Table2x2, null=False) -> TableEstimates:
    _require_example1(table)
    if null:
        return _null_estimates(table, 1, DEFAULT_MAX_TERMS)
    n1, n2 = table.column_totals
    u2 = table.u_j[1]
    p11 = table.c[0, 0] / n1 if n1 > 0 else 0.5
    p12 = closed_form_fhat((int(table.c[0, 1]), u2, int(table.c[1, 1]))) if n2 > 0 else 0.5
    return _finish(table, [[p11, p12], [1.0 - p11, 1.0 - p12]], 1, False)


def fit_example2(table: Table2x2, null=False) -> TableEstimates:
    _require_totals(table)
    if null:
        return _null_estimates(table, 2, DEFAULT_MAX_TERMS)
    pi = np.empty((2, 2))
    for j in range(2):
        if table.column_totals[j] == 0:
            # an empty column carries no information about its split
            p = 0.5
        else:
            p = closed_form_fhat((int(table.c[0, j]), table.u_j[j], int(table.c[1, j])))
        pi[:, j] = (p, 1.0 - p)
    return _finish(table, pi, 2, False)


def fit_example3(table: Table2x2, null=False, max_terms=DEFAULT_MAX_TERMS) -> TableEstimates:
    """Layout 3 fit over the 4-cell simplex (or the shared ``p`` under the null).

    Under the null the returned ``pi_hat`` is ``[[p, p], [1-p, 1-p]]``.
    """
    _require_no_totals(table)
    if null:
        return _null_estimates(table, 3, max_terms)
    lik = _layout3_likelihood(table, max_terms)
    counts = lik.counts
    p0 = (np.asarray(counts.c, dtype=np.float64) + counts.u / 4.0) / counts.n
    p, ll, sweeps = maximize_on_simplex(lik.log, p0)
    pi = np.empty((2, 2))
    for v, ij in zip(p, _FLAT):
        pi[ij] = v
    return _finish(table, pi, 3, False, loglik=ll, sweeps=sweeps)


FITTERS = {1: fit_example1, 2: fit_example2, 3: fit_example3}


def fit(table: Table2x2, example: int, null=False) -> TableEstimates:
    try:
        fitter = FITTERS[int(example)]
    except (KeyError, ValueError):
        raise StructureMismatch(f"example must be 1, 2 or 3, got {example!r}") from None
    return fitter(table, null=null)


def _log_multinomial(counts, probs):
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    return gammaln(counts.sum() + 1.0) - gammaln(counts + 1.0).sum() + xlogy(counts, probs).sum()


def column_alpha(table: Table2x2) -> np.ndarray:
    """Observed-cell fractions within each column, ``c_ij / N_j``."""
    tot = np.asarray(table.column_totals, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, table.c / np.where(tot > 0, tot, 1.0), 0.0)


def table_probability(table: Table2x2, estimates: TableEstimates, example: int) -> float:
    """Plug-in probability of observing the configuration ``table``.

    Layouts 1 and 2 use the column-conditional observed fractions of the
    fitted table in their per-column multinomial factors; layout 3 uses
    ``alpha_hat`` directly and so does not depend on the null.
    """
    if estimates.example != example:
        raise StructureMismatch(f"estimates are for layout {estimates.example}, not {example}")
    fitted = estimates.table
    if table.has_totals != fitted.has_totals:
        raise StructureMismatch("table and estimates disagree on whether column totals are known")
    if table.has_totals and table.column_totals != fitted.column_totals:
        raise StructureMismatch(f"column totals {table.column_totals} differ from the fitted {fitted.column_totals}")
    if not table.has_totals and table.n != fitted.n:
        raise StructureMismatch(f"N = {table.n} differs from the fitted N = {fitted.n}")
    c = table.c
    if example == 1:
        _require_example1(table)
        al = column_alpha(fitted)
        pi = estimates.pi_hat
        log_p = _log_multinomial(c[:, 0], pi[:, 0])
        log_p += _log_multinomial([c[0, 1], c[1, 1], table.u_j[1]],
                                  [al[0, 1], al[1, 1], 1.0 - al[0, 1] - al[1, 1]])
    elif example == 2:
        _require_totals(table)
        al = column_alpha(fitted)
        log_p = 0.0
        for j in range(2):
            log_p += _log_multinomial([c[0, j], c[1, j], table.u_j[j]],
                                      [al[0, j], al[1, j], 1.0 - al[0, j] - al[1, j]])
    elif example == 3:
        _require_no_totals(table)
        al = estimates.alpha_hat
        counts = [c[ij] for ij in _FLAT] + [table.u]
        probs = [al[ij] for ij in _FLAT] + [1.0 - al.sum()]
        log_p = _log_multinomial(counts, probs)
    else:
        raise StructureMismatch(f"example must be 1, 2 or 3, got {example!r}")
    return float(math.exp(log_p)) if np.isfinite(log_p) else 0.0
