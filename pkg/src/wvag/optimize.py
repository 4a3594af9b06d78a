"""Unconstrained reparametrization of the feasible set and the simplex
optimizer wrapper shared by the calibrators.

The bijection maps a feasible parameter set to R^d via

    u_a   = log a
    v_k   = logit(a * alpha_k)         (so a*alpha_k < 1 for free v_k)
    mu_k  = identity
    w_k   = log sigma_kk
    r     = atanh(rho),  rho = sigma_12 / sqrt(sigma_11 sigma_22)
    m_k   = identity

Pinned coordinates (VAG: rho = 0; self-decomposability tests: mu = 0) are
simply dropped from the vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .model import WvagParams

RHO_MAX = 1.0 - 1e-6  # keeps sigma numerically positive definite at the boundary
_LOGIT_CAP = 25.0  # keeps sigmoid strictly inside (0, 1) by > 1e-11


def _logit(x):
    x = np.clip(x, 1e-16, 1.0 - 1e-16)
    return np.log(x) - np.log1p(-x)


def _sigmoid(v):
    v = np.clip(v, -_LOGIT_CAP, _LOGIT_CAP)
    return 1.0 / (1.0 + np.exp(-v))


def bounded_rho(r):
    """tanh reparametrization of the correlation, capped inside (-1, 1)."""
    return float(np.clip(np.tanh(r), -RHO_MAX, RHO_MAX))


class ParamSpace:
    """Bijection between feasible WVAG parameter sets and R^d."""

    FIELDS = ("log_a", "v1", "v2", "mu1", "mu2", "w1", "w2", "r", "m1", "m2")

    def __init__(self, model: str = "wvag", pins=frozenset()):
        if model not in ("wvag", "vag"):
            raise ValueError(f"unknown model {model!r}")
        pins = frozenset(pins) | ({"sigma12"} if model == "vag" else frozenset())
        drop = set()
        if "sigma12" in pins:
            drop.add("r")
        if "mu" in pins:
            drop.update(("mu1", "mu2"))
        unknown = pins - {"sigma12", "mu"}
        if unknown:
            raise ValueError(f"unknown pins {sorted(unknown)}")
        self.model = model
        self.pins = pins
        self.fields = tuple(f for f in self.FIELDS if f not in drop)

    @property
    def dim(self) -> int:
        return len(self.fields)

    def to_vector(self, p: WvagParams) -> np.ndarray:
        s11, s22 = p.sigma[0, 0], p.sigma[1, 1]
        rho = p.sigma[0, 1] / np.sqrt(s11 * s22)
        full = {
            "log_a": np.log(p.a),
            "v1": _logit(p.a * p.alpha[0]),
            "v2": _logit(p.a * p.alpha[1]),
            "mu1": p.mu[0], "mu2": p.mu[1],
            "w1": np.log(s11), "w2": np.log(s22),
            "r": np.arctanh(np.clip(rho, -RHO_MAX, RHO_MAX)),
            "m1": p.m[0], "m2": p.m[1],
        }
        return np.array([full[f] for f in self.fields])

    def to_raw(self, x: np.ndarray):
        """(a, alpha, mu, s2, s12, m) arrays without building the validated
        parameter object; feasibility holds by construction."""
        d = dict(zip(self.fields, x))
        a = np.exp(d["log_a"])
        alpha = np.array([_sigmoid(d["v1"]), _sigmoid(d["v2"])]) / a
        mu = np.array([d.get("mu1", 0.0), d.get("mu2", 0.0)])
        s2 = np.array([np.exp(d["w1"]), np.exp(d["w2"])])
        rho = bounded_rho(d["r"]) if "r" in d else 0.0
        s12 = rho * np.sqrt(s2[0] * s2[1])
        m = np.array([d["m1"], d["m2"]])
        return a, alpha, mu, s2, s12, m

    def to_params(self, x: np.ndarray) -> WvagParams:
        a, alpha, mu, s2, s12, m = self.to_raw(x)
        return WvagParams(a=a, alpha=alpha, mu=mu,
                          sigma=np.array([[s2[0], s12], [s12, s2[1]]]), m=m)


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    success: bool
    trace: tuple = ()  # best objective seen so far, one entry per improvement


def minimize_simplex(objective, x0, *, max_evals: int = 2000, xatol: float = 1e-8,
                     fatol: float = 1e-8, restarts: int = 0, jitter: float = 0.05,
                     seed: int = 0) -> SimplexResult:
    """Nelder-Mead in the unconstrained space, with optional restarts from
    jittered copies of the best point so far.  Non-finite objective values
    are mapped to a huge finite penalty, which the simplex treats as a
    rejected step."""

    trace = []

    def safe(x):
        v = objective(x)
        v = v if np.isfinite(v) else 1e100
        if not trace or v < trace[-1]:
            trace.append(float(v))
        return v

    x0 = np.asarray(x0, dtype=float)
    rng = np.random.default_rng(seed)
    best_x, best_f = x0, safe(x0)
    nfev = 1
    success = False
    for attempt in range(restarts + 1):
        start = best_x if attempt == 0 else best_x + jitter * rng.standard_normal(best_x.shape)
        res = minimize(safe, start, method="Nelder-Mead",
                       options={"maxfev": max_evals, "xatol": xatol,
                                "fatol": fatol, "adaptive": len(x0) > 4})
        nfev += res.nfev
        if res.fun <= best_f:
            best_x, best_f = np.asarray(res.x), float(res.fun)
            success = success or bool(res.success)
    return SimplexResult(x=best_x, fun=best_f, nfev=nfev, success=success,
                         trace=tuple(trace))
