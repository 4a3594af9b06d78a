"""Digital moment estimation: quantile-probability matching.

Marginal parameters are fitted by least squares of model CDF values against
the empirical probabilities at the empirical quantiles.  The joint
parameters (a, rho) are then chosen on a grid over their feasible
rectangle: each node's orthant probabilities P(Y1 <= y1, Y2 <= y2) on the
quantile lattice are estimated from common-random-number simulations, the
squared-error surface against the empirical joint probabilities is
LOESS-smoothed, and the best node wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGridError
from .inversion import MarginalDistribution
from .loess import LoessConfig, loess_smooth
from .model import WvagParams
from .moments import FitDiagnostics, FitResult, fit_marginal_moments, sample_moments
from .optimize import minimize_simplex
from .simulate import ReturnSample, RngStream, wvag_increment


@dataclass(frozen=True)
class QuantileSpec:
    """Strictly increasing probabilities in (0,1) used as matching points."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", q)
        if q.ndim != 1 or len(q) == 0:
            raise ValueError("q must be a nonempty vector")
        if not (np.all(np.diff(q) > 0) and q[0] > 0 and q[-1] < 1):
            raise ValueError("q must be strictly increasing within (0,1)")

    @classmethod
    def equally_spaced(cls, lo: float, hi: float, n: int) -> "QuantileSpec":
        return cls(np.linspace(lo, hi, n))


#: the default and the three variants compared in the quantile study
Q_DEFAULT = QuantileSpec.equally_spaced(0.05, 0.95, 10)
Q_WIDE = QuantileSpec.equally_spaced(0.01, 0.99, 10)
Q_NARROW = QuantileSpec.equally_spaced(0.10, 0.90, 10)
Q_DENSE = QuantileSpec.equally_spaced(0.05, 0.95, 20)


def empirical_quantiles(data, q) -> np.ndarray:
    """Order-statistic quantiles with linear interpolation between closest
    ranks (the numpy default convention)."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise ValueError("empty data")
    qv = q.q if isinstance(q, QuantileSpec) else np.asarray(q, dtype=float)
    if data.size < len(qv):
        raise ValueError("need at least as many observations as quantile points")
    return np.quantile(data, qv)


def _marginal_cdf_at(theta_k, c, ys, n_log=800):
    mu, alpha, s2, m = theta_k
    md = MarginalDistribution(b=1.0 / alpha, mu=mu, s2=s2, t=c, shift=m * c,
                              n_log=n_log)
    return md.cdf(ys)


def fit_dme_marginal(data_k, c: float, q: QuantileSpec = Q_DEFAULT,
                     pin_mu: bool = False, seed: int = 0):
    """Fit (mu_k, alpha_k, sigma_kk, m_k) by matching the marginal CDF to the
    empirical probabilities at the empirical quantiles.

    Starts from the stage-1 method-of-moments values; the returned objective
    never exceeds the objective at those initials.
    """
    data_k = np.asarray(data_k, dtype=float)
    if len(data_k) < 10:
        raise ValueError("need at least 10 observations")
    ys = empirical_quantiles(data_k, q)
    qv = q.q if isinstance(q, QuantileSpec) else np.asarray(q, dtype=float)

    def split(x):
        if pin_mu:
            return np.array([0.0, np.exp(x[0]), np.exp(x[1]), x[2]])
        return np.array([x[0], np.exp(x[1]), np.exp(x[2]), x[3]])

    def objective(x):
        th = split(x)
        if not np.all(np.isfinite(th)):
            return np.inf
        try:
            p_y = _marginal_cdf_at(th, c, ys)
        except Exception:
            return np.inf
        r = p_y - qv
        return float(r @ r)

    mean = data_k.mean()
    d = data_k - mean
    smom = np.array([mean, (d**2).mean(), (d**3).mean(), (d**4).mean()])
    init, _ = fit_marginal_moments(smom, c, pin_mu=pin_mu, seed=seed)
    mu0, alpha0, s20, m0 = init
    if pin_mu:
        x0 = np.array([np.log(alpha0), np.log(s20), m0 + mu0])
    else:
        x0 = np.array([mu0, np.log(alpha0), np.log(s20), m0])
    res = minimize_simplex(objective, x0, restarts=2, seed=seed)
    return split(res.x), res


def _orthant_probabilities(draws: np.ndarray, y1_pts: np.ndarray, y2_pts: np.ndarray):
    """P(Y1 <= y1, Y2 <= y2) on the lattice y1_pts x y2_pts, estimated from
    draws (n, 2).  The <=/<= convention matches the empirical side."""
    le1 = draws[:, [0]] <= y1_pts[None, :]   # (n, k1)
    le2 = draws[:, [1]] <= y2_pts[None, :]   # (n, k2)
    return (le1.astype(np.float64).T @ le2.astype(np.float64)) / len(draws)


def feasible_joint_grid(alpha: np.ndarray, n_a: int = 10, n_rho: int = 10,
                        vag: bool = False):
    """Product grid over (a, rho) in (0, 1/max(alpha)) x (-1, 1), inset half
    a cell from every boundary.  For the VAG model rho is pinned to 0 and the
    grid covers ``n_a * n_rho`` points along a alone."""
    a_max = 1.0 / np.asarray(alpha, dtype=float).max()
    if not np.isfinite(a_max) or a_max <= 0:
        raise DegenerateGridError(f"empty feasible a-interval (alpha={alpha})")
    if vag:
        n = n_a * n_rho
        a_nodes = a_max * (np.arange(n) + 0.5) / n
        return np.column_stack([a_nodes, np.zeros(n)])
    a_nodes = a_max * (np.arange(n_a) + 0.5) / n_a
    rho_nodes = -1.0 + 2.0 * (np.arange(n_rho) + 0.5) / n_rho
    aa, rr = np.meshgrid(a_nodes, rho_nodes, indexing="ij")
    return np.column_stack([aa.ravel(), rr.ravel()])


def fit_dme_joint(sample: ReturnSample, marginals: np.ndarray, model: str = "wvag",
                  q: QuantileSpec = Q_DEFAULT, loess: LoessConfig = None,
                  stream: RngStream = RngStream(0), n_sim: int = 10_000,
                  n_a: int = 10, n_rho: int = 10):
    """Grid search for (a, rho) with marginal parameters fixed.

    Every grid node reuses the same random stream (common random numbers),
    so the error surface is a deterministic function of the seed.  Returns
    ``(a, rho, surface)`` where surface holds the raw and smoothed errors.
    """
    obs = sample.observations
    c = sample.c
    mu = marginals[:, 0]
    alpha = marginals[:, 1]
    s2 = marginals[:, 2]
    m = marginals[:, 3]

    y1_pts = empirical_quantiles(obs[:, 0], q)
    y2_pts = empirical_quantiles(obs[:, 1], q)
    emp = _orthant_probabilities(obs, y1_pts, y2_pts)

    grid = feasible_joint_grid(alpha, n_a=n_a, n_rho=n_rho, vag=model == "vag")
    errors = np.empty(len(grid))
    for i, (a, rho) in enumerate(grid):
        s12 = rho * np.sqrt(s2[0] * s2[1])
        p = WvagParams(a=a, alpha=alpha, mu=mu,
                       sigma=np.array([[s2[0], s12], [s12, s2[1]]]), m=m)
        draws = wvag_increment(p, c, stream.generator(), size=n_sim)
        sim = _orthant_probabilities(draws, y1_pts, y2_pts)
        errors[i] = ((sim - emp) ** 2).sum()

    predictors = grid[:, :1] if model == "vag" else grid
    smoothed = loess_smooth(predictors, errors, config=loess or LoessConfig())
    best = int(np.argmin(smoothed))
    surface = {"grid": grid, "raw": errors, "smoothed": smoothed}
    return float(grid[best, 0]), float(grid[best, 1]), surface


def fit_dme(sample: ReturnSample, model: str = "wvag", q: QuantileSpec = Q_DEFAULT,
            loess: LoessConfig = None, stream: RngStream = RngStream(0),
            pins=frozenset(), n_sim: int = 10_000) -> FitResult:
    """Full DME fit: marginal quantile matching, then the joint grid."""
    if model not in ("wvag", "vag"):
        raise ValueError(f"unknown model {model!r}")
    pins = frozenset(pins)
    pin_mu = "mu" in pins
    marg = np.empty((2, 4))
    objectives = {}
    for k in range(2):
        marg[k], res = fit_dme_marginal(sample.observations[:, k], sample.c, q,
                                        pin_mu=pin_mu, seed=stream.seed + k)
        objectives[f"marginal_{k}"] = res.fun
    a, rho, surface = fit_dme_joint(sample, marg, model=model, q=q, loess=loess,
                                    stream=stream, n_sim=n_sim)
    s2 = marg[:, 2]
    s12 = rho * np.sqrt(s2[0] * s2[1])
    params = WvagParams(a=a, alpha=marg[:, 1], mu=marg[:, 0],
                        sigma=np.array([[s2[0], s12], [s12, s2[1]]]), m=marg[:, 3])
    objectives["joint"] = float(surface["smoothed"].min())
    diag = FitDiagnostics(converged=True, n_evals=len(surface["grid"]),
                          objective=objectives["joint"], stages=objectives)
    return FitResult(params=params, method="dme", model=model, diagnostics=diag)


def quantile_study(samples, stream: RngStream, qs: dict = None,
                   model: str = "wvag", loess: LoessConfig = None,
                   full_gof: bool = False, truth: WvagParams = None) -> dict:
    """Compare DME across quantile choices on the same replicated samples.

    Fit streams are shared across quantile choices, so differences are
    attributable to the quantile vector alone.  Returns per-choice mean
    estimates, RMSEs against ``truth`` (when given) and mean KS statistics
    (plus -lnL / chi2 when ``full_gof``).
    """
    from .gof import gof_report, ks_fit_statistic

    if qs is None:
        qs = {"q1": Q_DEFAULT, "q2": Q_WIDE, "q3": Q_NARROW, "q4": Q_DENSE}
    out = {}
    for name, q in qs.items():
        ests, ks_vals, nll_vals, chi2_vals = [], [], [], []
        for r, sample in enumerate(samples):
            fit_stream = stream.child(r)
            fr = fit_dme(sample, model=model, q=q, loess=loess, stream=fit_stream)
            p = fr.params
            ests.append([p.a, p.alpha[0], p.alpha[1], p.mu[0], p.mu[1],
                         p.sigma[0, 0], p.sigma[1, 1], p.sigma[0, 1], p.m[0], p.m[1]])
            if full_gof:
                rep = gof_report(p, sample, stream=fit_stream.child(900), n_rep=1)
                ks_vals.append(rep.ks)
                nll_vals.append(rep.neg_log_likelihood)
                chi2_vals.append(rep.chi2)
            else:
                ks_vals.append(ks_fit_statistic(p, sample, n_rep=1,
                                                stream=fit_stream.child(900)))
        ests = np.array(ests)
        entry = {"mean": ests.mean(axis=0), "mean_ks": float(np.mean(ks_vals))}
        if truth is not None:
            tv = np.array([truth.a, truth.alpha[0], truth.alpha[1], truth.mu[0],
                           truth.mu[1], truth.sigma[0, 0], truth.sigma[1, 1],
                           truth.sigma[0, 1], truth.m[0], truth.m[1]])
            entry["rmse"] = np.sqrt(((ests - tv) ** 2).mean(axis=0))
        if full_gof:
            entry["mean_nll"] = float(np.mean(nll_vals))
            entry["mean_chi2"] = float(np.mean(chi2_vals))
        out[name] = entry
    return out


def export_error_surface(surface: dict, path):
    """CSV dump of the joint-stage error surface: a, rho, raw, smoothed."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "rho", "raw_error", "smoothed_error"])
        for (a, rho), raw, smooth in zip(surface["grid"], surface["raw"],
                                         surface["smoothed"]):
            w.writerow([repr(float(a)), repr(float(rho)),
                        repr(float(raw)), repr(float(smooth))])
