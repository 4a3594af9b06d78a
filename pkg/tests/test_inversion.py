import numpy as np
import pytest
from oracles import vg1_pdf_mp
from scipy.stats import multivariate_normal

import wvag.inversion as inversion
from wvag.errors import (
    GridTooCoarseError,
    NearZeroMarginalError,
    NotInvertibleError,
    SingularSigmaError,
)
from wvag.inversion import (
    DensityGrid,
    GridPlan,
    MarginalDistribution,
    conditional_cdf,
    joint_density,
    marginal_distribution,
    theta_max_search,
    vg1_logpdf,
    vg1_pdf,
)
from wvag.model import WvagParams
from wvag.simulate import RngStream, wvag_increment


def test_fft_machinery_against_gaussian(monkeypatch):
    """Inverting a pure-Brownian characteristic function must reproduce the
    bivariate normal density to 1e-6 in sup norm."""
    mean = np.array([0.3, -0.2])
    cov = np.array([[1.0, 0.4], [0.4, 0.8]])

    def gaussian_cf(p, t, t1, t2):
        quad = cov[0, 0] * t1 * t1 + 2 * cov[0, 1] * (t1 * t2) + cov[1, 1] * t2 * t2
        return np.exp(1j * (mean[0] * t1 + mean[1] * t2) - 0.5 * quad)

    monkeypatch.setattr(inversion, "char_fn_grid", gaussian_cf)
    plan = GridPlan([(-8, 8.6), (-7, 7.4)], 512)
    values, max_neg, _ = plan.density_values(None, 1.0)
    ref = multivariate_normal(mean, cov).pdf(
        np.stack(np.meshgrid(plan.y1, plan.y2, indexing="ij"), -1))
    assert np.abs(values - ref).max() < 1e-6
    assert max_neg < 1e-8


def test_joint_density_normalizes(truth):
    grid = joint_density(truth, 1.0, resolution=512)
    assert abs(grid.integral - 1.0) < 1e-3
    assert grid.tail_mass_bound < 1e-4
    assert grid.max_negative < 1e-8
    assert grid.clipped_neg_mass < 1e-6
    assert np.all(grid.values >= 0.0)


def test_joint_density_agrees_with_histogram(truth):
    """Cell-averaged inverted density against a 2e5-draw histogram.  The
    density has a cusp at its mode, so pointwise values must be averaged
    over each histogram cell before comparing."""
    draws = wvag_increment(truth, 1.0, RngStream(42).generator(), size=200000)
    grid = joint_density(truth, 1.0, resolution=512, sample=draws)
    h, xe, ye = np.histogram2d(draws[:, 0], draws[:, 1], bins=25, density=True)
    sub = np.linspace(0.1, 0.9, 5)
    x_sub = xe[:-1, None] + np.diff(xe)[:, None] * sub[None, :]
    y_sub = ye[:-1, None] + np.diff(ye)[:, None] * sub[None, :]
    pts = np.stack(np.meshgrid(x_sub.ravel(), y_sub.ravel(), indexing="ij"),
                   -1).reshape(-1, 2)
    gv = grid.interp(pts).reshape(25, 5, 25, 5).mean(axis=(1, 3))
    cell = (xe[1] - xe[0]) * (ye[1] - ye[0])
    counts = h * len(draws) * cell
    mask = counts > 200
    se = np.sqrt(np.maximum(counts, 1.0)) / (len(draws) * cell)
    assert np.all(np.abs(gv - h)[mask] < 4 * se[mask] + 0.01 * h[mask])


def test_joint_density_refuses_non_invertible(truth):
    with pytest.raises(NotInvertibleError):
        joint_density(truth, 0.1, resolution=256)


def test_joint_density_override_warns(truth):
    with pytest.warns(RuntimeWarning):
        grid = joint_density(truth, 0.1, resolution=512, override=True, strict=False)
    assert grid.override


def test_joint_density_rejects_singular_sigma(truth):
    p = WvagParams(a=truth.a, alpha=truth.alpha, mu=truth.mu,
                   sigma=[[1.0, 1.0], [1.0, 1.0]], m=truth.m)
    with pytest.raises(SingularSigmaError):
        joint_density(p, 1.0)


def test_joint_density_grid_too_coarse(truth):
    with pytest.raises(GridTooCoarseError):
        joint_density(truth, 1.0, resolution=16)


def test_theta_max_search(truth):
    tm = theta_max_search(truth, 1.0, tol=1e-6)
    # |Phi| must actually be below tol beyond the reported radii (checked on axes)
    from wvag.charfn import wvag_exponent

    for k, r in enumerate(tm):
        th = np.zeros(2)
        th[k] = r * 1.01
        assert np.exp(wvag_exponent(truth, th).real) < 1e-6 * 1.05


def test_grid_halving_loglik_stability(truth, sample_c1):
    lls = []
    for res in (256, 512):
        grid = joint_density(truth, 1.0, resolution=res,
                             sample=sample_c1.observations)
        lls.append(grid.log_interp(sample_c1.observations).sum())
    assert abs(lls[1] - lls[0]) / sample_c1.n < 1e-3


def test_density_grid_csv_round_trip(tmp_path, truth):
    grid = joint_density(truth, 1.0, resolution=64, strict=False)
    path = tmp_path / "grid.csv"
    grid.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (64 * 64, 3)
    back = data[:, 2].reshape(64, 64)
    assert np.allclose(back, grid.values, rtol=0, atol=0)
    integral = np.trapezoid(np.trapezoid(back, grid.y2, axis=1), grid.y1)
    assert np.isclose(integral, grid.integral, atol=1e-12)


# ---------------------------------------------------------------------------
# univariate marginal
# ---------------------------------------------------------------------------

def test_vg1_logpdf_matches_quadrature_oracle():
    """Closed-form Bessel density against arbitrary-precision inversion at
    several shapes: the accelerated path must agree to 1e-6 in log density."""
    xs = [-3.0, -1.0, -0.1, 0.0, 0.4, 2.5]
    for b, mu, s2, t in [(1.25, 0.1, 1.0, 1.0), (0.8, -0.2, 0.5, 1.0),
                         (2.0, 0.4, 2.0, 0.7)]:
        ref = np.array([vg1_pdf_mp(x, b, mu, s2, t) for x in xs])
        ours = vg1_logpdf(np.array(xs), b, mu, s2, t)
        assert np.abs(ours - np.log(ref)).max() < 1e-6


def test_marginal_symmetric_median(truth):
    md = MarginalDistribution(b=1.25, mu=0.0, s2=1.0, t=1.0, shift=0.7)
    assert abs(md.cdf(0.7) - 0.5) < 1e-9


def test_marginal_cdf_limits(truth):
    md = marginal_distribution(truth, 0, 1.0)
    assert md.cdf(-40.0) < 1e-6
    assert md.cdf(40.0) > 1 - 1e-6
    assert abs(md.total_mass - 1.0) < 1e-6


@pytest.mark.parametrize("t", [1.0, 0.1])
def test_marginal_quantiles_vs_simulation(truth, t):
    n = 10**6
    draws = wvag_increment(truth, t, RngStream(13).generator(), size=n)[:, 0]
    md = marginal_distribution(truth, 0, t)
    qs = np.linspace(0.05, 0.95, 10)
    xq = np.quantile(draws, qs)
    dens = md.pdf(xq)
    se = np.sqrt(qs * (1 - qs) / n) / np.maximum(dens, 1e-12)
    assert np.all(np.abs(md.ppf(qs) - xq) < 3 * se + 1e-4)


def test_marginal_pointwise_validity_flag(truth):
    assert marginal_distribution(truth, 0, 1.0).pointwise_valid
    assert not marginal_distribution(truth, 0, 0.1).pointwise_valid


def test_vg1_pdf_integrates_to_one_small_shape():
    # singular-at-zero case: log-graded grid plus analytic central sliver
    md = MarginalDistribution(b=1.25, mu=0.1, s2=1.0, t=0.1)
    assert abs(md.total_mass - 1.0) < 1e-4


def test_vg1_logpdf_rejects_bad_scale():
    with pytest.raises(ValueError):
        vg1_logpdf(0.0, 1.0, 0.0, -1.0, 1.0)


# ---------------------------------------------------------------------------
# conditional CDF
# ---------------------------------------------------------------------------

def _product_stub():
    y1 = np.linspace(-6, 6, 256)
    y2 = np.linspace(-7, 7, 256)
    f1 = np.exp(-0.5 * y1**2) / np.sqrt(2 * np.pi)
    f2 = np.exp(-0.5 * (y2 / 1.3) ** 2) / (np.sqrt(2 * np.pi) * 1.3)
    return DensityGrid(t=1.0, y1=y1, y2=y2, values=np.outer(f1, f2),
                       theta_max=np.zeros(2), integral=1.0, tail_mass_bound=0.0,
                       clipped_neg_mass=0.0, max_negative=0.0), y2


def test_conditional_cdf_independence_stub():
    from scipy.stats import norm

    stub, y2 = _product_stub()
    f = conditional_cdf(stub, 0.7)
    ys = np.linspace(-6.5, 6.5, 200)
    assert np.abs(f(ys) - norm.cdf(ys / 1.3)).max() < 1e-4


def test_conditional_cdf_edges_and_monotone(truth, sample_c1):
    grid = joint_density(truth, 1.0, resolution=256, sample=sample_c1.observations)
    rng = np.random.default_rng(3)
    for y1 in rng.uniform(-2.0, 2.0, size=5):
        f = conditional_cdf(grid, float(y1))
        vals = f(grid.y2)
        assert vals[0] < 1e-6 and vals[-1] > 1 - 1e-6
        assert np.all(np.diff(vals) >= -1e-12)


def test_conditional_cdf_outside_support(truth):
    grid = joint_density(truth, 1.0, resolution=256)
    with pytest.raises(NearZeroMarginalError):
        conditional_cdf(grid, grid.y1[0] - 1.0)


def test_conditional_cdf_near_zero_marginal():
    stub, _ = _product_stub()
    values = stub.values.copy()
    values[0, :] = 0.0
    dead = DensityGrid(t=1.0, y1=stub.y1, y2=stub.y2, values=values,
                       theta_max=np.zeros(2), integral=1.0, tail_mass_bound=0.0,
                       clipped_neg_mass=0.0, max_negative=0.0)
    with pytest.raises(NearZeroMarginalError):
        conditional_cdf(dead, dead.y1[0])
