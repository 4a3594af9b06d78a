import numpy as np
import pytest
from scipy.stats import ks_2samp

from wvag.charfn import char_fn, vg_exponent
from wvag.model import VgParams
from wvag.simulate import (
    ReturnSample,
    RngStream,
    gamma_increment,
    simulate_study,
    vg_increment,
    wvag_increment,
)

N_BIG = 10**6


def test_rng_stream_reproducible():
    a = RngStream(9, 3).generator().standard_normal(100)
    b = RngStream(9, 3).generator().standard_normal(100)
    assert np.array_equal(a, b)
    c = RngStream(9, 4).generator().standard_normal(100)
    assert not np.array_equal(a, c)


def test_gamma_moment_oracle():
    rng = RngStream(1).generator()
    x = gamma_increment(2.0, 3.0, rng, size=N_BIG)
    se_mean = x.std() / np.sqrt(N_BIG)
    assert abs(x.mean() - 2.0 / 3.0) < 3 * se_mean


def test_gamma_small_shape_variance_oracle():
    # shape 0.25 occurs as an idiosyncratic gamma shape at realistic truths
    rng = RngStream(2).generator()
    x = gamma_increment(0.25, 1.0, rng, size=N_BIG)
    v = x.var()
    se_var = np.sqrt((np.mean((x - x.mean()) ** 4) - v**2) / N_BIG)
    assert abs(v - 0.25) < 3 * se_var


def test_gamma_rate_scaling_coupled_streams():
    a = gamma_increment(1.7, 1.0, RngStream(3).generator(), size=1000)
    b = gamma_increment(1.7, 4.0, RngStream(3).generator(), size=1000)
    assert np.allclose(a / 4.0, b, rtol=1e-12)


def test_gamma_invalid_args():
    with pytest.raises(ValueError):
        gamma_increment(-1.0, 1.0, RngStream(0).generator())


def test_vg_increment_degenerate():
    p = VgParams(b=1.0, mu=[0.0, 0.0], sigma=np.zeros((2, 2)))
    x = vg_increment(p, 1.0, RngStream(4).generator(), size=10)
    assert np.all(x == 0.0)


def test_vg_increment_moment_and_cf_oracle():
    p = VgParams(b=1.4, mu=[0.2, -0.4], sigma=[[1.0, 0.3], [0.3, 0.8]])
    t = 0.8
    draws = vg_increment(p, t, RngStream(5).generator(), size=N_BIG)
    # mean
    for k in range(2):
        se = draws[:, k].std() / np.sqrt(N_BIG)
        assert abs(draws[:, k].mean() - p.mu[k] * t) < 3 * se
    # empirical CF against exp(t * exponent) at 20 frequencies
    rng = np.random.default_rng(0)
    thetas = rng.normal(scale=1.5, size=(20, 2))
    for th in thetas:
        z = np.exp(1j * draws @ th)
        emp = z.mean()
        se = np.sqrt((np.abs(z - emp) ** 2).mean() / N_BIG)
        assert abs(emp - np.exp(t * vg_exponent(p, th))) < 3 * se + 1e-12


def test_wvag_increment_cf_oracle(truth, big_draws_c1):
    rng = np.random.default_rng(1)
    thetas = rng.normal(scale=1.2, size=(20, 2))
    for th in thetas:
        z = np.exp(1j * big_draws_c1 @ th)
        emp = z.mean()
        se = np.sqrt((np.abs(z - emp) ** 2).mean() / len(big_draws_c1))
        assert abs(emp - char_fn(truth, 1.0, th)) < 3 * se + 1e-12


def test_wvag_increment_covariance_oracle(truth, big_draws_c1):
    d = big_draws_c1 - big_draws_c1.mean(axis=0)
    prod = d[:, 0] * d[:, 1]
    se = prod.std() / np.sqrt(len(prod))
    assert abs(prod.mean() - 0.3456) < 3 * se


def test_wvag_increment_diagonal_sigma_cross_covariance(truth):
    from wvag.model import WvagParams

    p = WvagParams(a=truth.a, alpha=truth.alpha, mu=truth.mu,
                   sigma=np.diag(np.diag(truth.sigma)), m=truth.m)
    draws = wvag_increment(p, 1.0, RngStream(6).generator(), size=N_BIG)
    d = draws - draws.mean(axis=0)
    prod = d[:, 0] * d[:, 1]
    se = prod.std() / np.sqrt(len(prod))
    expected = p.a * p.alpha[0] * p.alpha[1] * p.mu[0] * p.mu[1]
    assert abs(prod.mean() - expected) < 3 * se


def test_wvag_marginal_matches_vg_in_distribution(truth):
    n = 10**5
    w = wvag_increment(truth, 1.0, RngStream(7).generator(), size=n)
    for k in range(2):
        vg = VgParams(b=1.0 / truth.alpha[k], mu=[truth.mu[k]],
                      sigma=[[truth.sigma[k, k]]])
        v = vg_increment(vg, 1.0, RngStream(8 + k).generator(), size=n)[:, 0]
        stat = ks_2samp(w[:, k] - truth.m[k], v)
        assert stat.pvalue > 0.01


def test_wvag_single_draw_shape(truth):
    x = wvag_increment(truth, 0.5, RngStream(9).generator())
    assert x.shape == (2,)


def test_simulate_study_shapes_and_reproducibility(truth):
    studies = simulate_study(truth, 1.0, 1000, 3, RngStream(10))
    assert len(studies) == 3
    assert all(s.observations.shape == (1000, 2) and s.c == 1.0 for s in studies)
    again = simulate_study(truth, 1.0, 1000, 3, RngStream(10))
    for a, b in zip(studies, again):
        assert np.array_equal(a.observations, b.observations)
    tiny = simulate_study(truth, 0.3, 1, 1, RngStream(11))
    assert tiny[0].observations.shape == (1, 2)


def test_return_sample_csv_round_trip(tmp_path, truth):
    s = simulate_study(truth, 0.25, 50, 1, RngStream(12))[0]
    csv_path = tmp_path / "r.csv"
    meta_path = tmp_path / "r.meta.json"
    s.to_csv(csv_path, meta_path=meta_path, seed=12)
    back = ReturnSample.from_csv(csv_path, meta_path=meta_path)
    assert back.c == 0.25
    assert np.array_equal(back.observations, s.observations)


def test_return_sample_validation():
    with pytest.raises(ValueError):
        ReturnSample(c=1.0, observations=np.array([[np.nan, 0.0]]))
