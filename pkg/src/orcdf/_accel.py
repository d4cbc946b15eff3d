"""Hot kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``ORCDF_DISABLE_NUMBA`` is
unset (or ``0``). ``ORCDF_THREADS`` caps numba worker threads. Both paths
return identical integers for the count kernel; floating-point kernels
agree to rounding.
"""

import contextlib
import math
import os

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

# the TBB layer shipped with some numba wheels is too old; prefer the built-in one
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_FLAG = os.environ.get("ORCDF_DISABLE_NUMBA", "0").strip().lower()
_use_numba = HAS_NUMBA and _FLAG in ("", "0", "false", "no")

if HAS_NUMBA and os.environ.get("ORCDF_THREADS"):
    try:
        numba.set_num_threads(
            max(1, min(int(os.environ["ORCDF_THREADS"]), numba.config.NUMBA_NUM_THREADS))
        )
    except ValueError:
        pass


def backend():
    """Name of the active backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not importable")
    _use_numba = name == "numba"


@contextlib.contextmanager
def use_backend(name):
    previous = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def _ragged(axes):
    lengths = np.array([len(a) for a in axes], dtype=np.int64)
    offsets = np.zeros(len(axes) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(lengths)
    flat = np.concatenate([np.asarray(a, dtype=np.float64) for a in axes])
    return flat, offsets, lengths


# --------------------------------------------------------------------------
# counts (d, u) over the Cartesian grid
# --------------------------------------------------------------------------

def _count_grid_np(lower, upper, axes):
    n_obs, dim = lower.shape
    below = []
    inside = []
    for m, axis in enumerate(axes):
        x = axis[None, :]
        below.append((upper[:, m, None] <= x).astype(np.float64))
        inside.append(((lower[:, m, None] < x) & (x < upper[:, m, None])).astype(np.float64))
    letters = "abcdefghijklmopqrstuvwxyz"[:dim]
    subscripts = ",".join("n" + c for c in letters) + "->" + letters
    d = np.einsum(subscripts, *below, optimize=dim > 2)
    u = np.einsum(subscripts, *inside, optimize=dim > 2)
    return np.rint(d).astype(np.int64), np.rint(u).astype(np.int64)


if HAS_NUMBA:

    @njit(cache=True)
    def _scatter_counts_nb(lower, upper, axes_flat, offsets, shape):
        # d: one +1 at the first grid index with x >= R, later summed forward
        # u: +-1 at the 2^M corners of the index box strictly inside (L, R)
        n_obs = lower.shape[0]
        dim = lower.shape[1]
        strides = np.empty(dim, dtype=np.int64)
        total = 1
        for m in range(dim - 1, -1, -1):
            strides[m] = total
            total *= shape[m] + 1
        dd = np.zeros(total, dtype=np.int64)
        du = np.zeros(total, dtype=np.int64)
        lo = np.empty(dim, dtype=np.int64)
        hi = np.empty(dim, dtype=np.int64)
        for n in range(n_obs):
            idx = 0
            inside = True
            for m in range(dim):
                axis = axes_flat[offsets[m]:offsets[m + 1]]
                s = np.searchsorted(axis, upper[n, m], side="left")
                if s >= shape[m]:
                    inside = False
                    break
                idx += s * strides[m]
            if inside:
                dd[idx] += 1
            inside = True
            for m in range(dim):
                axis = axes_flat[offsets[m]:offsets[m + 1]]
                lo[m] = np.searchsorted(axis, lower[n, m], side="right")
                hi[m] = np.searchsorted(axis, upper[n, m], side="left")
                if lo[m] >= hi[m]:
                    inside = False
                    break
            if inside:
                for corner in range(1 << dim):
                    idx = 0
                    sign = 1
                    for m in range(dim):
                        if (corner >> m) & 1:
                            idx += hi[m] * strides[m]
                            sign = -sign
                        else:
                            idx += lo[m] * strides[m]
                    du[idx] += sign
        return dd, du


def count_grid(lower, upper, axes):
    """Return ``(d, u)`` integer arrays of shape ``(I_1, ..., I_M)``.

    ``lower`` and ``upper`` are ``(N, M)`` arrays; exact coordinates carry
    ``lower == upper``.
    """
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    axes = [np.asarray(a, dtype=np.float64) for a in axes]
    if not _use_numba:
        return _count_grid_np(lower, upper, axes)
    flat, offsets, shape = _ragged(axes)
    dd, du = _scatter_counts_nb(lower, upper, flat, offsets, shape)
    ext = tuple(int(s) + 1 for s in shape)
    d = dd.reshape(ext)
    u = du.reshape(ext)
    for m in range(len(ext)):
        d = np.cumsum(d, axis=m)
        u = np.cumsum(u, axis=m)
    crop = tuple(slice(0, int(s)) for s in shape)
    return np.ascontiguousarray(d[crop]), np.ascontiguousarray(u[crop])


# --------------------------------------------------------------------------
# log-likelihood of the observed range on a uniform p grid
# --------------------------------------------------------------------------

def _log_binom_coef(n_trials):
    k = np.arange(n_trials + 1, dtype=np.float64)
    return gammaln(n_trials + 1.0) - gammaln(k + 1.0) - gammaln(n_trials - k + 1.0)


def _lse_np(p, ks, logc, n_trials):
    if ks.size == 0:
        return np.full(p.shape, -np.inf)
    k = ks.astype(np.float64)
    terms = logc[ks][None, :] + xlogy(k[None, :], p[:, None]) + xlog1py(n_trials - k[None, :], -p[:, None])
    return logsumexp(terms, axis=1)


def _range_loglik_np(p, d, u, n_trials, complement=False):
    logc = _log_binom_coef(n_trials)
    inside = np.arange(d, d + u + 1)
    log_l = _lse_np(p, inside, logc, n_trials)
    if not complement:
        return log_l
    outside = np.concatenate([np.arange(0, d), np.arange(d + u + 1, n_trials + 1)])
    with np.errstate(invalid="ignore"):
        return log_l - _lse_np(p, outside, logc, n_trials)


if HAS_NUMBA:

    @njit(cache=True)
    def _lse_range_nb(lp, lq, lo, hi, n_trials, logc):
        best = -np.inf
        for k in range(lo, hi):
            t = logc[k]
            if k > 0:
                t += k * lp
            if n_trials - k > 0:
                t += (n_trials - k) * lq
            if t > best:
                best = t
        if best == -np.inf:
            return -np.inf
        acc = 0.0
        for k in range(lo, hi):
            t = logc[k]
            if k > 0:
                t += k * lp
            if n_trials - k > 0:
                t += (n_trials - k) * lq
            acc += math.exp(t - best)
        return best + math.log(acc)

    @njit(parallel=True, cache=True)
    def _range_loglik_nb(p, d, u, n_trials, logc, complement):
        out = np.empty(p.shape[0])
        for i in prange(p.shape[0]):
            pi = p[i]
            lp = math.log(pi) if pi > 0.0 else -np.inf
            lq = math.log1p(-pi) if pi < 1.0 else -np.inf
            log_l = _lse_range_nb(lp, lq, d, d + u + 1, n_trials, logc)
            if complement:
                a = _lse_range_nb(lp, lq, 0, d, n_trials, logc)
                b = _lse_range_nb(lp, lq, d + u + 1, n_trials + 1, n_trials, logc)
                if a == -np.inf and b == -np.inf:
                    log_c = -np.inf
                elif a >= b:
                    log_c = a + math.log1p(math.exp(b - a))
                else:
                    log_c = b + math.log1p(math.exp(a - b))
                if log_l == -np.inf and log_c == -np.inf:
                    out[i] = np.nan
                else:
                    out[i] = log_l - log_c
            else:
                out[i] = log_l
        return out


def range_loglik(p, d, u, n_trials, complement=False):
    """``log L(p)`` with ``L(p) = sum_{k=d}^{d+u} C(N,k) p^k (1-p)^(N-k)``.

    With ``complement=True`` returns ``log L - log(1 - L)``, a monotone
    transform of ``L`` that stays resolvable when ``L`` is close to one;
    the complement is summed directly from the tail terms.
    """
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if not _use_numba:
        return _range_loglik_np(p, int(d), int(u), int(n_trials), complement)
    return _range_loglik_nb(p, int(d), int(u), int(n_trials), _log_binom_coef(n_trials), bool(complement))


# --------------------------------------------------------------------------
# weighted product-kernel sums
# --------------------------------------------------------------------------

def _kernel_sum_np(weights, kmats):
    out = np.tensordot(kmats[0], weights, axes=(1, 0))
    for km in kmats[1:]:
        out = np.einsum("pi...,pi->p...", out, km)
    return out


if HAS_NUMBA:

    @njit(cache=True, fastmath=True)
    def _contract_nb(w, shape, kmats, row, buf):
        # reduce the last axis straight from w into buf (skipping zero
        # weights), then fold buf in place over the remaining axes
        dim = shape.shape[0]
        n_m = shape[dim - 1]
        k = kmats[dim - 1][row]
        size = w.shape[0] // n_m
        for o in range(size):
            acc = 0.0
            base = o * n_m
            for i in range(n_m):
                v = w[base + i]
                if v != 0.0:
                    acc += v * k[i]
            buf[o] = acc
        for m in range(dim - 2, -1, -1):
            n_m = shape[m]
            k = kmats[m][row]
            size //= n_m
            for o in range(size):
                acc = 0.0
                base = o * n_m
                for i in range(n_m):
                    acc += buf[base + i] * k[i]
                buf[o] = acc
        return buf[0]

    @njit(parallel=True, cache=True)
    def _kernel_sum_sparse_nb(vals, cols, row_start, row_factor, klast):
        # nonzeros grouped by their leading indices; the last axis is gathered
        n_points = klast.shape[0]
        n_rows = row_start.shape[0] - 1
        out = np.zeros(n_points)
        for p in prange(n_points):
            kp = klast[p]
            fp = row_factor[p]
            acc = 0.0
            for r in range(n_rows):
                s = 0.0
                for j in range(row_start[r], row_start[r + 1]):
                    s += vals[j] * kp[cols[j]]
                acc += s * fp[r]
            out[p] = acc
        return out


# below this density the gather loop beats a BLAS contraction of the dense table
SPARSE_FRACTION = 0.03


def _drop_empty_planes(weights, kmats):
    # grid hyperplanes carrying no weight contribute nothing to the sum
    keep = []
    for m in range(weights.ndim):
        other = tuple(k for k in range(weights.ndim) if k != m)
        keep.append(np.flatnonzero(np.any(weights != 0.0, axis=other)))
    if all(k.size == n for k, n in zip(keep, weights.shape)):
        return weights, kmats
    return weights[np.ix_(*keep)], [km[:, k] for km, k in zip(kmats, keep)]


def kernel_sum(weights, kmats, skip_zero=None):
    """Sum ``w[i] * prod_m kmats[m][p, i_m]`` over grid indices ``i``.

    ``kmats[m]`` has shape ``(P, I_m)``; returns a length-``P`` array.
    Grid hyperplanes with no weight are dropped first. Dense tables are
    contracted axis by axis with BLAS in both backends. In the numba path
    ``skip_zero=True`` loops over the nonzero weights only, and ``None``
    does so when at most 3% of the weights are nonzero. Results agree to
    rounding.
    """
    weights = np.asarray(weights, dtype=np.float64)
    kmats = [np.asarray(k, dtype=np.float64) for k in kmats]
    n_points = kmats[0].shape[0]
    if not weights.any():
        return np.zeros(n_points)
    weights, kmats = _drop_empty_planes(weights, kmats)
    sparse = skip_zero if skip_zero is not None else np.count_nonzero(weights) <= SPARSE_FRACTION * weights.size
    if not (_use_numba and sparse):
        return _kernel_sum_np(weights, kmats)
    kmats = [np.require(k, requirements=["C", "W"]) for k in kmats]
    idx = np.argwhere(weights != 0.0)
    lead = idx[:, :-1]
    new_row = np.zeros(idx.shape[0], dtype=bool)
    new_row[0] = True
    if lead.shape[1]:
        new_row[1:] = np.any(lead[1:] != lead[:-1], axis=1)
    starts = np.flatnonzero(new_row)
    row_start = np.append(starts, idx.shape[0]).astype(np.int64)
    # product of the leading-axis kernels, one column per group of nonzeros
    factor = np.ones((n_points, starts.size))
    for m in range(lead.shape[1]):
        factor *= kmats[m][:, lead[starts, m]]
    return _kernel_sum_sparse_nb(weights[tuple(idx.T)], np.ascontiguousarray(idx[:, -1]), row_start,
                                 factor, kmats[-1])


def _batched_kernel_sum_np(stack, kmats):
    out = stack
    for km in kmats:
        out = np.einsum("ni...,ni->n...", out, km)
    return out


if HAS_NUMBA:

    @njit(parallel=True, cache=True)
    def _batched_kernel_sum_nb(stack, shape, kmats):
        n_rows = stack.shape[0]
        out = np.zeros(n_rows)
        scratch = max(stack.shape[1] // shape[shape.shape[0] - 1], 1)
        for r in prange(n_rows):
            buf = np.empty(scratch)
            out[r] = _contract_nb(stack[r], shape, kmats, r, buf)
        return out


def batched_kernel_sum(stack, kmats):
    """Row-wise :func:`kernel_sum`: row ``r`` of ``stack`` against row ``r`` of each matrix.

    ``stack`` has shape ``(R, I_1, ..., I_M)``; ``kmats[m]`` has shape
    ``(R, I_m)``. Used for leave-one-out densities, one weight table per row.
    """
    stack = np.asarray(stack, dtype=np.float64)
    kmats = [np.asarray(k, dtype=np.float64) for k in kmats]
    if not _use_numba:
        return _batched_kernel_sum_np(stack, kmats)
    shape = np.array(stack.shape[1:], dtype=np.int64)
    kmats = tuple(np.require(k, requirements=["C", "W"]) for k in kmats)
    flat = np.ascontiguousarray(stack.reshape(stack.shape[0], -1))
    return _batched_kernel_sum_nb(flat, shape, kmats)
