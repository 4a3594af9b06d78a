"""Analytic moments of Y(c) and the method-of-moments calibrator.

Marginal central moments come from the VG cumulants of component k
(gamma shape b_k = 1/alpha_k, time c):

    kappa_1 = c*mu_k                      (plus the drift term m_k*c)
    kappa_2 = c*(s2 + mu^2/b)
    kappa_3 = c*(3*mu*s2/b + 2*mu^3/b^2)
    kappa_4 = c*(3*s2^2/b + 12*mu^2*s2/b^2 + 6*mu^4/b^3)

Cross moments use the independent VG decomposition X = V0 + sum_k Vk e_k:
conditioning V0 on its gamma subordinator reduces E[(Y1-E)^p (Y2-E)^p] to
gamma central moments and bivariate-normal product moments.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import WvagParams, outer_diamond_mu, outer_diamond_sigma
from .optimize import ParamSpace, _sigmoid, bounded_rho, minimize_simplex
from .simulate import ReturnSample

MOMENT_FLOOR = 1e-8


@dataclass(frozen=True)
class MomentSet:
    """First four marginal central moments and the p=1,2 cross moments."""

    mean: np.ndarray   # E[Y_k(c)]
    var: np.ndarray    # E[(Y_k - E)^2]
    m3: np.ndarray     # E[(Y_k - E)^3]
    m4: np.ndarray     # E[(Y_k - E)^4]
    cross: float       # E[(Y_1 - E)(Y_2 - E)]
    cross22: float     # E[(Y_1 - E)^2 (Y_2 - E)^2]

    def marginal_vector(self, k: int) -> np.ndarray:
        return np.array([self.mean[k], self.var[k], self.m3[k], self.m4[k]])

    def cross_vector(self, include_p1: bool = True) -> np.ndarray:
        return np.array([self.cross, self.cross22]) if include_p1 else np.array([self.cross22])


def _moments_raw(a, alpha, mu, s2, s12, m, c):
    """MomentSet from raw parameter arrays, skipping domain validation.
    Optimizer objectives call this directly; the reparametrization already
    guarantees feasibility."""
    mean = (m + mu) * c
    var = c * (s2 + alpha * mu**2)
    m3 = c * (3.0 * mu * s2 * alpha + 2.0 * mu**3 * alpha**2)
    m4 = c * (3.0 * s2**2 * alpha + 12.0 * mu**2 * s2 * alpha**2 + 6.0 * mu**4 * alpha**3) \
        + 3.0 * var**2

    # common part V0 ~ VG(a, mu0, sig0); its gamma clock G ~ Gamma(a*c, a)
    mu0 = a * alpha * mu
    amin = a * min(alpha[0], alpha[1])
    sig0_diag = a * alpha * s2
    sig0_12 = amin * s12
    g2 = c / a                          # Var G
    g3 = 2.0 * c / a**2                 # third central moment of G
    g4 = 3.0 * c**2 / a**2 + 6.0 * c / a**3

    cross = mu0[0] * mu0[1] * g2 + sig0_12 * c

    e_u2u2 = (mu0[0] ** 2 * mu0[1] ** 2 * g4
              + (mu0[0] ** 2 * sig0_diag[1] + mu0[1] ** 2 * sig0_diag[0]
                 + 4.0 * mu0[0] * mu0[1] * sig0_12) * (g3 + c * g2)
              + (sig0_diag[0] * sig0_diag[1] + 2.0 * sig0_12 ** 2) * (c**2 + g2))
    var_u = mu0**2 * g2 + sig0_diag * c
    w = 1.0 - a * alpha
    var_w = c * (w * s2 + w * alpha * mu**2)
    cross22 = e_u2u2 + var_u[0] * var_w[1] + var_w[0] * var_u[1] + var_w[0] * var_w[1]

    return MomentSet(mean=mean, var=var, m3=m3, m4=m4,
                     cross=float(cross), cross22=float(cross22))


def analytic_moments(p: WvagParams, c: float) -> MomentSet:
    """Closed-form MomentSet of Y(c) = m*c + X(c)."""
    if p.n != 2:
        raise ValueError("moment formulas implemented for n=2")
    return _moments_raw(p.a, p.alpha, p.mu, np.diag(p.sigma).copy(),
                        p.sigma[0, 1], p.m, c)


def sample_moments(sample: ReturnSample) -> MomentSet:
    """Plain 1/N sample analogue of :func:`analytic_moments`."""
    obs = sample.observations
    mean = obs.mean(axis=0)
    d = obs - mean
    var = (d**2).mean(axis=0)
    m3 = (d**3).mean(axis=0)
    m4 = (d**4).mean(axis=0)
    cross = float((d[:, 0] * d[:, 1]).mean())
    cross22 = float((d[:, 0] ** 2 * d[:, 1] ** 2).mean())
    return MomentSet(mean=mean, var=var, m3=m3, m4=m4, cross=cross, cross22=cross22)


def _standardized_residuals(model_vec, sample_vec):
    denom = np.maximum(np.abs(sample_vec), MOMENT_FLOOR)
    return (model_vec - sample_vec) / denom


def marginal_moment_initials(sample_vec: np.ndarray, c: float) -> np.ndarray:
    """Heuristic (mu, alpha, s2, m) start values from one component's
    (mean, var, m3, m4)."""
    mean, var, m3, m4 = sample_vec
    kurt_excess = max(m4 / max(var, 1e-12) ** 2 - 3.0, 0.05)
    alpha0 = max(kurt_excess * c / 3.0, 1e-3)
    mu0 = m3 / (3.0 * alpha0 * max(var, 1e-12))
    s20 = max((var - alpha0 * mu0**2 * c) / c, 0.05 * var / c)
    m0 = mean / c - mu0
    return np.array([mu0, alpha0, s20, m0])


@dataclass(frozen=True)
class FitDiagnostics:
    converged: bool
    n_evals: int
    objective: float
    stages: dict
    message: str = ""


@dataclass(frozen=True)
class FitResult:
    params: WvagParams
    method: str
    model: str
    diagnostics: FitDiagnostics


def fit_marginal_moments(sample_vec: np.ndarray, c: float, pin_mu: bool = False,
                         restarts: int = 3, seed: int = 0):
    """Stage-1 least squares of the four analytic marginal moments against
    one component's sample moments.  Returns (mu, alpha, s2, m)."""

    def split(x):
        if pin_mu:
            return 0.0, np.exp(x[0]), np.exp(x[1]), x[2]
        return x[0], np.exp(x[1]), np.exp(x[2]), x[3]

    def objective(x):
        mu, alpha, s2, m = split(x)
        model_vec = np.array([
            (m + mu) * c,
            c * (s2 + alpha * mu**2),
            c * (3.0 * mu * s2 * alpha + 2.0 * mu**3 * alpha**2),
            c * (3.0 * s2**2 * alpha + 12.0 * mu**2 * s2 * alpha**2
                 + 6.0 * mu**4 * alpha**3) + 3.0 * (c * (s2 + alpha * mu**2)) ** 2,
        ])
        r = _standardized_residuals(model_vec, sample_vec)
        return float(r @ r)

    mu0, alpha0, s20, m0 = marginal_moment_initials(sample_vec, c)
    if pin_mu:
        x0 = np.array([np.log(alpha0), np.log(s20), m0 + mu0])
    else:
        x0 = np.array([mu0, np.log(alpha0), np.log(s20), m0])
    res = minimize_simplex(objective, x0, restarts=restarts, seed=seed)
    mu, alpha, s2, m = split(res.x)
    return np.array([mu, alpha, s2, m]), res


def fit_mom(sample: ReturnSample, model: str = "wvag", pins=frozenset(),
            seed: int = 0) -> FitResult:
    """Three-stage method of moments.

    Stage 1 fits each component's (mu_k, alpha_k, sigma_kk, m_k) to the
    first four central moments; stage 2 fits (a, sigma_12) to the p=1,2
    cross moments (p=1 excluded, and sigma_12 pinned, under the VAG model);
    stage 3 re-solves the least squares jointly over all parameters.
    Residuals are standardized by the absolute sample moments.
    """
    if model not in ("wvag", "vag"):
        raise ValueError(f"unknown model {model!r}")
    if sample.n < 10:
        raise ValueError("need at least 10 observations")
    pins = frozenset(pins) | ({"sigma12"} if model == "vag" else frozenset())
    pin_mu = "mu" in pins
    c = sample.c
    smom = sample_moments(sample)

    stages = {}
    marg = np.empty((2, 4))
    for k in range(2):
        marg[k], res = fit_marginal_moments(smom.marginal_vector(k), c,
                                            pin_mu=pin_mu, seed=seed + k)
        stages[f"marginal_{k}"] = res.fun
    mu = marg[:, 0]
    alpha = marg[:, 1]
    s2 = marg[:, 2]
    m = marg[:, 3]

    # stage 2: joint parameters with marginals frozen
    a_max = 1.0 / alpha.max()
    include_p1 = model == "wvag"
    target = smom.cross_vector(include_p1)

    def joint_objective(x):
        a = a_max * _sigmoid(x[0])
        rho = bounded_rho(x[1]) if model == "wvag" else 0.0
        sig12 = rho * np.sqrt(s2[0] * s2[1])
        mm = _moments_raw(a, alpha, mu, s2, sig12, m, c)
        r = _standardized_residuals(mm.cross_vector(include_p1), target)
        return float(r @ r)

    as0 = 0.5 * a_max
    rho_guess = 0.0
    if model == "wvag":
        # invert the covariance identity at a = as0 for a starting correlation
        denom = as0 * min(alpha) * np.sqrt(s2[0] * s2[1]) * c
        rho_guess = np.clip((smom.cross - as0 * alpha[0] * alpha[1] * mu[0] * mu[1] * c)
                            / max(denom, 1e-12), -0.95, 0.95)
    x0 = np.array([0.0, np.arctanh(rho_guess)])
    res2 = minimize_simplex(joint_objective, x0, restarts=3, seed=seed + 7)
    a_fit = a_max * _sigmoid(res2.x[0])
    rho_fit = bounded_rho(res2.x[1]) if model == "wvag" else 0.0
    stages["joint"] = res2.fun

    sig12 = rho_fit * np.sqrt(s2[0] * s2[1])
    p0 = WvagParams(a=a_fit, alpha=alpha, mu=mu,
                    sigma=np.array([[s2[0], sig12], [sig12, s2[1]]]), m=m)

    # stage 3: all parameters jointly
    space = ParamSpace(model=model, pins=pins)
    x0 = space.to_vector(p0)

    def full_objective(x):
        mm = _moments_raw(*space.to_raw(x), c)
        r = np.concatenate([
            _standardized_residuals(mm.marginal_vector(0), smom.marginal_vector(0)),
            _standardized_residuals(mm.marginal_vector(1), smom.marginal_vector(1)),
            _standardized_residuals(mm.cross_vector(include_p1),
                                    smom.cross_vector(include_p1)),
        ])
        return float(r @ r)

    f0 = full_objective(x0)
    res3 = minimize_simplex(full_objective, x0, restarts=3, seed=seed + 13)
    stages["full"] = res3.fun
    if res3.fun <= f0 + 1e-12:
        params = space.to_params(res3.x)
        converged = True
        message = ""
    else:
        params = p0  # keep staged initials; flag the failure
        converged = False
        message = "joint refinement did not improve on staged initials"
    diag = FitDiagnostics(converged=converged, n_evals=res3.nfev,
                          objective=min(res3.fun, f0), stages=stages, message=message)
    return FitResult(params=params, method="mom", model=model, diagnostics=diag)
