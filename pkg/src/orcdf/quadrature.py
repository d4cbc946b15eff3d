"""Adaptive cubature over a box split at known kinks of the integrand."""

import itertools

import numpy as np
from scipy.integrate import cubature

from .errors import QuadratureNonConvergence


def integrate_box(func, breaks, rtol=1e-10, atol=0.0, max_subdivisions=20000):
    """Integrate ``func`` over the box spanned by ``breaks``.

    ``breaks`` is one sorted array of breakpoints per axis; the box is split
    into the Cartesian cells between consecutive breakpoints, all mapped
    onto one unit cube and summed, so the adaptive rule subdivides every
    cell together and the tolerance applies to the total. ``func`` maps
    ``(P, M)`` points to ``P`` values.
    """
    breaks = [np.unique(np.asarray(b, dtype=np.float64)) for b in breaks]
    dim = len(breaks)
    lows = []
    widths = []
    for cell in itertools.product(*[range(len(b) - 1) for b in breaks]):
        lo = np.array([breaks[m][c] for m, c in enumerate(cell)])
        hi = np.array([breaks[m][c + 1] for m, c in enumerate(cell)])
        lows.append(lo)
        widths.append(hi - lo)
    if not lows:
        return 0.0
    lows = np.array(lows)
    widths = np.array(widths)
    volume = widths.prod(axis=1)

    def mapped(t):
        pts = lows[None, :, :] + t[:, None, :] * widths[None, :, :]
        vals = np.asarray(func(pts.reshape(-1, dim)), dtype=np.float64)
        return vals.reshape(t.shape[0], -1) @ volume

    res = cubature(mapped, np.zeros(dim), np.ones(dim), rtol=rtol, atol=atol,
                   max_subdivisions=max_subdivisions)
    if res.status != "converged":
        raise QuadratureNonConvergence(f"cubature did not converge (error estimate {float(res.error):.3g})")
    return float(np.sum(res.estimate))


def kernel_breaks(grid, kernel, bandwidth, pad_widths=8.0, max_gaussian_breaks=8):
    """Per-axis breakpoints covering the kernel-padded grid bounding box.

    Compact kernels break at every support edge, where the integrand has
    kinks. The Gaussian is smooth, so it breaks at up to
    ``max_gaussian_breaks`` evenly spaced grid points and leaves the rest
    to adaptive subdivision.
    """
    out = []
    for m, axis in enumerate(grid.axes):
        h = bandwidth[m]
        if np.isfinite(kernel.half_width):
            reach = kernel.half_width * h
            pts = np.concatenate([axis - reach, axis + reach])
        else:
            reach = pad_widths * h
            pts = np.asarray(axis)
            if pts.size > max_gaussian_breaks:
                pts = pts[np.linspace(0, pts.size - 1, max_gaussian_breaks).round().astype(int)]
        lo, hi = axis[0] - reach, axis[-1] + reach
        pts = np.concatenate([[lo, hi], pts[(pts > lo) & (pts < hi)]])
        out.append(np.unique(pts))
    return out
