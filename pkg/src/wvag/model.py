"""Parameter domain for the weak variance-alpha-gamma (WVAG) family.

The bivariate model (general n >= 2 supported here) is driven by

* a common-shape parameter ``a`` and idiosyncratic shapes ``alpha_k`` of the
  alpha-gamma subordinator, constrained by ``a > 0``, ``alpha_k > 0`` and
  ``a * alpha_k < 1`` so that ``beta_k = (1 - a*alpha_k) / alpha_k > 0``,
* Brownian drift ``mu`` and covariance ``sigma`` (symmetric PSD),
* a deterministic linear drift ``m`` added to the subordinated process.

The strong (VAG) submodel is the special case of a diagonal ``sigma``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FeasibilityError

FEAS_TOL = 1e-12
PSD_TOL = 1e-10


def outer_diamond_mu(t, mu):
    """Component-wise product (t_1*mu_1, ..., t_n*mu_n).

    ``t`` must be nonnegative; both arguments must have equal length.
    """
    t = np.asarray(t, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if t.shape != mu.shape:
        raise ValueError(f"length mismatch: t has shape {t.shape}, mu has shape {mu.shape}")
    return t * mu


def outer_diamond_sigma(t, sigma):
    """Min-scaled covariance: entry (k,l) = sigma_kl * min(t_k, t_l).

    Preserves positive semidefiniteness for nonnegative ``t``.
    """
    t = np.asarray(t, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    n = t.shape[0]
    if sigma.shape != (n, n):
        raise ValueError(f"dimension mismatch: t has length {n}, sigma has shape {sigma.shape}")
    tmin = np.minimum.outer(t, t)
    return sigma * tmin


def _check_covariance(sigma, name="sigma", require_pd=False):
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1]:
        raise FeasibilityError(f"{name} must be square, got shape {sigma.shape}")
    scale = max(np.abs(sigma).max(), 1.0)
    if np.abs(sigma - sigma.T).max() > FEAS_TOL * scale:
        raise FeasibilityError(f"{name} must be symmetric")
    eigmin = np.linalg.eigvalsh(sigma).min()
    if require_pd:
        if eigmin <= PSD_TOL * scale:
            raise FeasibilityError(f"{name} must be positive definite (min eigenvalue {eigmin:.3e})")
    elif eigmin < -PSD_TOL * scale:
        raise FeasibilityError(f"{name} must be positive semidefinite (min eigenvalue {eigmin:.3e})")
    return sigma


@dataclass(frozen=True)
class VgParams:
    """Variance-gamma process parameters: BM(mu, sigma) time-changed by a
    standard gamma subordinator of shape/rate ``b``."""

    b: float
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=float)))
        sigma = _check_covariance(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if not self.b > FEAS_TOL:
            raise FeasibilityError(f"b must be positive, got {self.b}")
        if self.mu.shape[0] != sigma.shape[0]:
            raise FeasibilityError("mu and sigma dimensions disagree")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class WvagParams:
    """Feasible WVAG parameter set (a, alpha, mu, sigma, m).

    ``m`` is the deterministic linear drift of the observed process
    Y(t) = m*t + X(t); it defaults to zero.
    """

    a: float
    alpha: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    m: np.ndarray = field(default=None)

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = _check_covariance(self.sigma)
        m = np.zeros_like(mu) if self.m is None else np.atleast_1d(np.asarray(self.m, dtype=float))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "m", m)

        n = alpha.shape[0]
        if n < 2:
            raise FeasibilityError(f"dimension must be >= 2, got {n}")
        if mu.shape[0] != n or m.shape[0] != n or sigma.shape != (n, n):
            raise FeasibilityError("alpha, mu, sigma, m dimensions disagree")
        if not self.a > FEAS_TOL:
            raise FeasibilityError(f"a must be positive, got {self.a}")
        if not np.all(alpha > FEAS_TOL):
            raise FeasibilityError(f"alpha must be positive, got {alpha}")
        # strict a*alpha_k < 1 so beta_k > 0; boundary values degenerate V_k
        if not np.all(1.0 - self.a * alpha > FEAS_TOL):
            raise FeasibilityError(f"a*alpha must be < 1 component-wise, got {self.a * alpha}")

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def beta(self) -> np.ndarray:
        """Idiosyncratic gamma shapes beta_k = (1 - a*alpha_k) / alpha_k."""
        return (1.0 - self.a * self.alpha) / self.alpha

    @property
    def is_vag(self) -> bool:
        """True when all off-diagonal sigma entries are exactly zero."""
        off = self.sigma - np.diag(np.diag(self.sigma))
        return bool(np.all(off == 0.0))

    def with_m(self, m) -> "WvagParams":
        return WvagParams(self.a, self.alpha, self.mu, self.sigma, m)

    def to_dict(self) -> dict:
        return {
            "a": float(self.a),
            "alpha": [float(x) for x in self.alpha],
            "mu": [float(x) for x in self.mu],
            "sigma": [[float(x) for x in row] for row in self.sigma],
            "m": [float(x) for x in self.m],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WvagParams":
        return cls(a=d["a"], alpha=d["alpha"], mu=d["mu"], sigma=d["sigma"], m=d.get("m"))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "WvagParams":
        return cls.from_dict(json.loads(text))


def decompose(p: WvagParams) -> tuple[VgParams, list[VgParams]]:
    """Split a WVAG process into independent VG building blocks.

    Returns ``(V0, [V1, ..., Vn])`` with

        V0 ~ VG^n(a, a*(alpha <> mu), a*(alpha <> sigma))
        Vk ~ VG^1(beta_k, (1 - a*alpha_k)*mu_k, (1 - a*alpha_k)*sigma_kk)

    such that X equals V0 plus the Vk placed on the coordinate axes, in law.
    Both the simulator and the characteristic-function cross-checks rely on
    this identity.
    """
    a = p.a
    v0 = VgParams(
        b=a,
        mu=a * outer_diamond_mu(p.alpha, p.mu),
        sigma=a * outer_diamond_sigma(p.alpha, p.sigma),
    )
    vks = []
    for k in range(p.n):
        w = 1.0 - a * p.alpha[k]
        vks.append(VgParams(b=p.beta[k], mu=np.array([w * p.mu[k]]),
                            sigma=np.array([[w * p.sigma[k, k]]])))
    return v0, vks
