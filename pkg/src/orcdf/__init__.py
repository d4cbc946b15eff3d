"""Observed-range estimation for interval-censored data.

Distribution-function estimates, censored kernel density estimates with
cross-validated bandwidths, Nadaraya-Watson regression, and multinomial
and 2x2 contingency-table estimation with unobserved counts.
"""

from ._accel import backend, set_backend, use_backend
from .bandwidth import (
    BandwidthSearchSpec,
    CrossValidation,
    integral_fhat_squared,
    loo_density,
    score_M0_tilde,
    select_bandwidth,
)
from .contingency import (
    Table2x2,
    TableEstimates,
    estimate_alpha,
    fit_example1,
    fit_example2,
    fit_example3,
    table_probability,
)
from .data import CensoredScalar, CountTriple, Exact, Grid, Interval, Sample, build_grid, count_at
from .errors import *  # noqa: F401,F403
from .estimator import (
    CdfEstimate,
    closed_form_fhat,
    estimate_cdf_at,
    estimate_cdf_grid,
    estimate_censoring_mechanism,
    likelihood_oracle,
)
from .kde import KERNELS, WeightTable, density_at, weights_1d, weights_2d, weights_md
from .multinomial import (
    DiscreteCensoredCounts,
    SimplexEstimate,
    binomial_censored_mle,
    exact_multinomial_likelihood,
    exact_multinomial_mle,
    known_q_mle,
    multinomial_normalized_estimate,
    partial_known_q_mle,
    trinomial_caps,
)
from .regression import RegressionModel
from .regression import fit as fit_regression
from .regression import predict as predict_regression

__version__ = "0.1.0"
