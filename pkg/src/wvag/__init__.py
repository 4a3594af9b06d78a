"""Bivariate weak variance-alpha-gamma (WVAG) log-return models.

Characteristic functions, Fourier-inversion densities gated by an
invertibility condition, exact simulation, three calibration methods
(method of moments, maximum likelihood, digital moment estimation) and a
goodness-of-fit suite, with a CLI driving everything from CSV price data.
"""

from .charfn import char_fn, fourier_invertible, vg_exponent, wvag_exponent
from .dme import Q_DEFAULT, QuantileSpec, empirical_quantiles, fit_dme
from .errors import (
    DegenerateGridError,
    FeasibilityError,
    GridTooCoarseError,
    NearZeroMarginalError,
    NotInvertibleError,
    OptimizerFailedError,
    SingularSigmaError,
    WvagError,
)
from .gof import (
    GofReport,
    bootstrap_se,
    gof_report,
    ks_fit_statistic,
    likelihood_ratio_test,
    peacock_ks_2d,
    rosenblatt_chi2,
)
from .inversion import (
    DensityGrid,
    MarginalDistribution,
    conditional_cdf,
    joint_density,
    marginal_distribution,
)
from .mle import MleConfig, fit_mle, log_likelihood
from .model import VgParams, WvagParams, decompose, outer_diamond_mu, outer_diamond_sigma
from .moments import FitResult, MomentSet, analytic_moments, fit_mom, sample_moments
from .simulate import (
    ReturnSample,
    RngStream,
    gamma_increment,
    simulate_study,
    vg_increment,
    wvag_increment,
)

__version__ = "0.1.0"
