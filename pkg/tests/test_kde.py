import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orcdf.data import Grid, Sample
from orcdf.errors import DimensionMismatch, InvalidObservation
from orcdf.estimator import estimate_cdf_grid
from orcdf.kde import (
    EPANECHNIKOV,
    GAUSSIAN,
    KERNELS,
    UNIFORM,
    as_bandwidth,
    density_at,
    inclusion_exclusion,
    weights_1d,
    weights_2d,
    weights_md,
)
from orcdf.quadrature import integrate_box, kernel_breaks

from conftest import random_censored


def _grid(*sizes):
    return Grid(tuple(np.arange(float(n)) for n in sizes))


@pytest.mark.parametrize("kernel", list(KERNELS.values()))
def test_kernels_are_densities(kernel):
    from scipy.integrate import quad

    lim = 10.0 if kernel is GAUSSIAN else kernel.half_width
    total = quad(kernel, -lim, lim, points=None if kernel is GAUSSIAN else [0.0])[0]
    assert total == pytest.approx(1.0, abs=1e-9)
    z = np.linspace(-3, 3, 61)
    np.testing.assert_array_equal(kernel(z), kernel(-z))
    assert (kernel(z) >= 0).all()


def test_uniform_kernel_edges():
    assert UNIFORM(0.5) == 1.0 and UNIFORM(0.51) == 0.0 and UNIFORM(1.0) == 0.0
    assert EPANECHNIKOV(1.0) == 0.0 and EPANECHNIKOV(0.0) == 0.75


def test_bandwidth_validation():
    assert as_bandwidth(0.5, 3).tolist() == [0.5, 0.5, 0.5]
    with pytest.raises(InvalidObservation):
        as_bandwidth(0.0, 1)
    with pytest.raises(DimensionMismatch):
        as_bandwidth([1.0, 2.0], 3)


class TestWeights1D:
    def test_differences(self):
        g = _grid(2)
        assert weights_1d((g, [0.5, 1.0])).weights.tolist() == [0.5, 0.5]
        assert weights_1d((g, [0.0, 1.0])).weights.tolist() == [0.0, 1.0]

    def test_exact_data(self):
        w = weights_1d(estimate_cdf_grid(Sample.from_exact([1.0, 2.0, 3.0])))
        np.testing.assert_allclose(w.weights, [1 / 3, 1 / 3, 1 / 3], rtol=0, atol=1e-15)
        assert not w.clamped


class TestWeights2D:
    def test_zero_mode_examples(self):
        g = _grid(2, 2)
        assert weights_2d((g, np.ones((2, 2))), "zero").weights.tolist() == [[0, 0], [0, 0]]
        assert weights_2d((g, [[0, 0], [0, 1.0]]), "zero").weights.tolist() == [[0, 0], [0, 1]]
        w = weights_2d((g, [[0.1, 0.2], [0.3, 0.7]]), "zero")
        assert w.weights[1, 1] == pytest.approx(0.3, abs=1e-15)
        assert w.weights[0].tolist() == [0, 0] and w.weights[:, 0].tolist() == [0, 0]

    def test_pad_mode_keeps_lower_faces(self):
        g = _grid(2, 2)
        w = weights_2d((g, np.ones((2, 2))))
        assert w.weights.tolist() == [[1, 0], [0, 0]]

    def test_modes_agree_when_faces_vanish(self, rng):
        s = random_censored(rng, 10, 2, p_exact=0.0, p_inf=0.0)
        est = estimate_cdf_grid(s)
        assert (est.values[0, :] == 0).all() and (est.values[:, 0] == 0).all()
        np.testing.assert_array_equal(weights_2d(est, "pad").weights, weights_2d(est, "zero").weights)

    def test_clamping_records_mass(self):
        g = _grid(2, 2)
        w = weights_2d((g, [[0.0, 0.5], [0.5, 0.6]]))
        assert w.clamped and w.raw[1, 1] == pytest.approx(-0.4)
        assert w.clamped_mass == pytest.approx(0.4)
        assert w.weights[1, 1] == 0.0

    def test_bad_mode(self):
        with pytest.raises(InvalidObservation):
            weights_2d((_grid(2, 2), np.zeros((2, 2))), "reflect")


def _naive_ie(values, boundary):
    """Direct 2^M-term summation at every grid point."""
    f = np.asarray(values)
    out = np.zeros_like(f)
    for idx in np.ndindex(f.shape):
        if boundary == "zero" and f.ndim > 1 and min(idx) == 0:
            continue
        acc = 0.0
        for s in itertools.product((0, 1), repeat=f.ndim):
            j = tuple(i - k for i, k in zip(idx, s))
            val = 0.0 if min(j) < 0 else f[j]
            acc += (-1) ** sum(s) * val
        out[idx] = acc
    return out


@pytest.mark.parametrize("boundary", ["pad", "zero"])
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4)),
              elements=st.floats(0, 1)))
def test_md_matches_direct_sum(boundary, f):
    np.testing.assert_allclose(inclusion_exclusion(f, boundary), _naive_ie(f, boundary), atol=1e-12)


@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(0, 1)))
def test_md_specializes_1d(f):
    g = Grid((np.arange(float(f.size)),))
    np.testing.assert_array_equal(weights_md((g, f)).raw, weights_1d((g, f)).raw)
    np.testing.assert_array_equal(weights_md((g, f), "zero").raw, weights_1d((g, f)).raw)


@pytest.mark.parametrize("boundary", ["pad", "zero"])
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(0, 1)))
def test_md_specializes_2d(boundary, f):
    g = Grid((np.arange(float(f.shape[0])), np.arange(float(f.shape[1]))))
    np.testing.assert_array_equal(weights_md((g, f), boundary).raw, weights_2d((g, f), boundary).raw)


@given(arrays(np.float64, st.tuples(st.integers(2, 5), st.integers(2, 5), st.integers(2, 5)),
              elements=st.floats(0, 1)))
def test_telescoping(f):
    # pad: the raw masses sum to F at the top corner
    assert inclusion_exclusion(f, "pad").sum() == pytest.approx(f[-1, -1, -1], abs=1e-12)
    # zero: the interior sum telescopes to an alternating sum over the first/last faces
    expected = sum((-1) ** sum(s) * f[tuple(0 if b else -1 for b in s)] for s in itertools.product((0, 1), repeat=3))
    assert inclusion_exclusion(f, "zero").sum() == pytest.approx(expected, abs=1e-12)


def test_md_product_staircase():
    a = np.array([0.2, 0.5, 1.0])
    b = np.array([0.1, 1.0])
    c = np.array([0.3, 0.6, 0.9, 1.0])
    f = a[:, None, None] * b[None, :, None] * c[None, None, :]
    g = Grid((np.arange(3.0), np.arange(2.0), np.arange(4.0)))
    w = weights_md((g, f), "pad").weights
    outer = np.diff(a, prepend=0)[:, None, None] * np.diff(b, prepend=0)[None, :, None] * np.diff(c, prepend=0)
    np.testing.assert_allclose(w, outer, atol=1e-15)
    z = weights_md((g, f), "zero").weights
    outer[0] = outer[:, 0] = outer[:, :, 0] = 0
    np.testing.assert_allclose(z, outer, atol=1e-15)


class TestDensity:
    def test_single_point(self):
        w = weights_1d((Grid((np.array([0.0]),)), [1.0]))
        assert density_at(w, "gaussian", 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)

    def test_zero_weights(self):
        w = weights_1d((_grid(3), np.zeros(3)))
        assert (density_at(w, "gaussian", 0.7, np.linspace(-2, 4, 9)) == 0).all()

    def test_uniform_hand_value(self):
        w = weights_1d((Grid((np.array([1.0, 2.0, 3.0]),)), [1 / 3, 2 / 3, 1.0]))
        assert density_at(w, "uniform", 1.0, 2.0) == pytest.approx(1 / 3, abs=1e-15)

    def test_dimension_mismatch(self):
        w = weights_2d((_grid(2, 2), np.ones((2, 2))))
        with pytest.raises(DimensionMismatch):
            density_at(w, "gaussian", 1.0, [0.0, 1.0, 2.0])

    @pytest.mark.parametrize("kernel", ["gaussian", "epanechnikov", "uniform"])
    def test_skip_zero_agrees(self, rng, kernel):
        s = random_censored(rng, 12, 2)
        w = weights_md(estimate_cdf_grid(s))
        pts = rng.normal(size=(20, 2))
        np.testing.assert_allclose(density_at(w, kernel, 0.4, pts, skip_zero=False),
                                   density_at(w, kernel, 0.4, pts, skip_zero=True), rtol=1e-12, atol=1e-15)

    def test_parzen_reduction(self, rng):
        x = rng.normal(size=25)
        w = weights_md(estimate_cdf_grid(Sample.from_exact(x)))
        pts = np.linspace(-3, 3, 13)
        h = 0.37
        parzen = GAUSSIAN((pts[:, None] - x[None, :]) / h).sum(axis=1) / (x.size * h)
        np.testing.assert_allclose(density_at(w, "gaussian", h, pts), parzen, rtol=0, atol=1e-12)

    def test_non_negative(self, rng):
        s = random_censored(rng, 15, 2)
        w = weights_md(estimate_cdf_grid(s))
        assert (density_at(w, "epanechnikov", [0.3, 0.5], rng.normal(size=(50, 2))) >= 0).all()


@pytest.mark.parametrize("kernel", ["gaussian", "epanechnikov", "uniform"])
def test_mass_1d(rng, kernel):
    s = random_censored(rng, 20, 1)
    w = weights_md(estimate_cdf_grid(s))
    h = np.array([0.3])
    k = KERNELS[kernel]
    total = integrate_box(lambda p: density_at(w, k, h, p), kernel_breaks(w.grid, k, h), rtol=1e-9)
    assert total == pytest.approx(w.total, abs=1e-6)
