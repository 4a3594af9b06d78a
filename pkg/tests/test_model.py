import json

import numpy as np
import pytest

from wvag.errors import FeasibilityError
from wvag.model import (
    VgParams,
    WvagParams,
    decompose,
    outer_diamond_mu,
    outer_diamond_sigma,
)


def test_outer_diamond_mu_identity_time():
    assert np.allclose(outer_diamond_mu([1, 1], [0.1, -0.3]), [0.1, -0.3])


def test_outer_diamond_mu_zero_time():
    assert np.all(outer_diamond_mu([0, 0, 0], [1.0, -2.0, 3.0]) == 0.0)


def test_outer_diamond_mu_direct():
    assert np.allclose(outer_diamond_mu([0.8, 0.6], [0.1, -0.3]), [0.08, -0.18])


def test_outer_diamond_mu_length_mismatch():
    with pytest.raises(ValueError):
        outer_diamond_mu([1.0], [1.0, 2.0])


def test_outer_diamond_sigma_identity_time():
    sig = np.array([[1.0, 0.6], [0.6, 1.2]])
    assert np.allclose(outer_diamond_sigma([1, 1], sig), sig)


def test_outer_diamond_sigma_direct():
    sig = np.array([[1.0, 0.6], [0.6, 1.2]])
    out = outer_diamond_sigma([0.8, 0.6], sig)
    assert np.allclose(out, [[0.8, 0.36], [0.36, 0.72]])


def test_outer_diamond_sigma_zero_matrix():
    out = outer_diamond_sigma([0.3, 2.0], np.zeros((2, 2)))
    assert np.all(out == 0.0)


def test_outer_diamond_sigma_dim_mismatch():
    with pytest.raises(ValueError):
        outer_diamond_sigma([1.0, 2.0], np.eye(3))


def test_outer_diamond_sigma_preserves_psd():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        n = rng.integers(2, 5)
        a = rng.normal(size=(n, n))
        sig = a @ a.T
        t = rng.uniform(0, 3, size=n)
        eig = np.linalg.eigvalsh(outer_diamond_sigma(t, sig)).min()
        worst = min(worst, eig)
    assert worst >= -1e-10


def test_decompose_reference_values(truth):
    v0, (v1, v2) = decompose(truth)
    assert v0.b == 1.0
    assert np.allclose(v0.mu, [0.08, -0.18])
    assert np.allclose(v0.sigma, [[0.8, 0.36], [0.36, 0.72]])
    assert np.isclose(v1.b, 0.25)
    assert np.isclose(v1.mu[0], 0.02)
    assert np.isclose(v1.sigma[0, 0], 0.2)
    assert np.isclose(v2.b, 2.0 / 3.0)
    assert np.isclose(v2.mu[0], -0.12)
    assert np.isclose(v2.sigma[0, 0], 0.48)


def test_decompose_diagonal_sigma_gives_diagonal_v0():
    p = WvagParams(a=0.5, alpha=[0.8, 0.6], mu=[0.1, -0.3],
                   sigma=np.diag([1.0, 1.2]))
    v0, _ = decompose(p)
    assert v0.sigma[0, 1] == 0.0


@pytest.mark.parametrize("bad", [
    dict(a=2.0, alpha=[0.8, 0.6], mu=[0.0, 0.0], sigma=np.eye(2)),   # a*alpha >= 1
    dict(a=-1.0, alpha=[0.5, 0.5], mu=[0.0, 0.0], sigma=np.eye(2)),  # a <= 0
    dict(a=1.0, alpha=[0.5, -0.5], mu=[0.0, 0.0], sigma=np.eye(2)),  # alpha <= 0
    dict(a=1.0, alpha=[0.5, 0.5], mu=[0.0, 0.0],
         sigma=[[1.0, 0.9], [0.2, 1.0]]),                            # asymmetric
    dict(a=1.0, alpha=[0.5, 0.5], mu=[0.0, 0.0],
         sigma=[[1.0, 2.0], [2.0, 1.0]]),                            # not PSD
])
def test_infeasible_rejected(bad):
    with pytest.raises(FeasibilityError):
        WvagParams(**bad)


def test_boundary_a_alpha_rejected():
    with pytest.raises(FeasibilityError):
        WvagParams(a=1.0, alpha=[1.0, 0.5], mu=[0.0, 0.0], sigma=np.eye(2))


def test_beta_shape_identity_random_sweep():
    from oracles import random_feasible_params

    rng = np.random.default_rng(7)
    for _ in range(300):
        p = random_feasible_params(rng)
        assert np.all(p.beta > 0)
        assert np.allclose(p.a + p.beta, 1.0 / p.alpha, rtol=0, atol=1e-12)


def test_vag_flag():
    p = WvagParams(a=0.5, alpha=[0.8, 0.6], mu=[0.1, -0.3], sigma=np.diag([1.0, 1.2]))
    assert p.is_vag
    q = WvagParams(a=0.5, alpha=[0.8, 0.6], mu=[0.1, -0.3],
                   sigma=[[1.0, 0.01], [0.01, 1.2]])
    assert not q.is_vag


def test_json_round_trip(truth):
    text = truth.to_json()
    p = WvagParams.from_json(text)
    assert p.to_json() == text
    d = json.loads(text)
    assert set(d) == {"a", "alpha", "mu", "sigma", "m"}


def test_m_defaults_to_zero():
    p = WvagParams(a=0.5, alpha=[0.8, 0.6], mu=[0.1, -0.3], sigma=np.eye(2))
    assert np.all(p.m == 0.0)


def test_vg_params_validation():
    with pytest.raises(FeasibilityError):
        VgParams(b=-1.0, mu=[0.0], sigma=[[1.0]])
    with pytest.raises(FeasibilityError):
        VgParams(b=1.0, mu=[0.0, 0.0], sigma=[[1.0]])
