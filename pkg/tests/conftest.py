import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orcdf.data import Sample

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_censored(rng, n, dim=1, p_exact=0.2, p_inf=0.15, width=1.0, decimals=1):
    """Random mixed sample on a coarse lattice so that endpoints collide often."""
    lower = np.empty((n, dim))
    upper = np.empty((n, dim))
    exact = rng.random((n, dim)) < p_exact
    centre = np.round(rng.normal(size=(n, dim)), decimals)
    half = np.round(rng.uniform(0.1, width, size=(n, dim)), decimals) + 10.0 ** -decimals
    lower[:] = centre - half
    upper[:] = centre + half
    lower[rng.random((n, dim)) < p_inf] = -np.inf
    upper[rng.random((n, dim)) < p_inf] = np.inf
    lower[exact] = centre[exact]
    upper[exact] = centre[exact]
    return Sample.from_arrays(lower, upper, exact)


def random_finite_intervals(rng, n, dim=1, width=0.8):
    lo = np.round(rng.normal(size=(n, dim)), 2)
    hi = lo + np.round(rng.uniform(0.05, width, size=(n, dim)), 2) + 0.01
    return Sample.from_intervals(lo, hi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
