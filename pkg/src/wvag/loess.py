"""Local polynomial regression (LOESS) for one or two predictors.

Classical tricube-weighted local fit: for each evaluation point, the
``span`` fraction of nearest observations (Euclidean distance after
rescaling each predictor to unit range) gets tricube weights and a weighted
degree-1 or degree-2 polynomial is solved by least squares.  Optional
robustness iterations reweight by the bisquare of scaled residuals.

This is the smoother the joint DME stage applies to its simulated
probability-error surface before taking the arg-min.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LoessConfig:
    span: float = 0.75
    degree: int = 2
    robustness_iters: int = 0

    def __post_init__(self):
        if not 0.0 < self.span <= 1.0:
            raise ValueError("span must be in (0, 1]")
        if self.degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        if self.robustness_iters < 0:
            raise ValueError("robustness_iters must be >= 0")


def _design(x: np.ndarray, degree: int) -> np.ndarray:
    n, d = x.shape
    cols = [np.ones(n)]
    cols.extend(x[:, j] for j in range(d))
    if degree == 2:
        for j in range(d):
            for k in range(j, d):
                cols.append(x[:, j] * x[:, k])
    return np.column_stack(cols)


def loess_smooth(x, y, x_eval=None, config: LoessConfig = None) -> np.ndarray:
    """Smoothed response at ``x_eval`` (defaults to the observation sites).

    ``x``: (n,) or (n, d) predictors with d in {1, 2}; ``y``: (n,) response.
    """
    cfg = config or LoessConfig()
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    if d > 2:
        raise ValueError("at most two predictors supported")
    if n != len(y):
        raise ValueError("x and y lengths disagree")
    x_eval = x if x_eval is None else np.asarray(x_eval, dtype=float)
    if x_eval.ndim == 1:
        x_eval = x_eval[:, None]

    # scale each predictor to unit range so the distance metric is balanced
    span_lo = x.min(axis=0)
    rng = np.ptp(x, axis=0)
    span_w = np.where(rng > 0, rng, 1.0)
    xs = (x - span_lo) / span_w
    xe = (x_eval - span_lo) / span_w

    q = max(int(np.ceil(cfg.span * n)), _design(xs[:1], cfg.degree).shape[1] + 1)
    q = min(q, n)

    robust_w = np.ones(n)
    for it in range(cfg.robustness_iters + 1):
        out = np.empty(len(xe))
        fitted_at_obs = np.empty(n) if cfg.robustness_iters else None
        targets = [(xe, out)]
        if cfg.robustness_iters and it < cfg.robustness_iters:
            targets.append((xs, fitted_at_obs))
        for pts, dest in targets:
            for i, p in enumerate(pts):
                dist = np.sqrt(((xs - p) ** 2).sum(axis=1))
                h = np.partition(dist, q - 1)[q - 1]
                h = h if h > 0 else 1.0
                u = np.clip(dist / h, 0.0, 1.0)
                w = (1.0 - u**3) ** 3 * robust_w
                mask = w > 0
                design = _design(xs[mask] - p, cfg.degree)
                sw = np.sqrt(w[mask])
                coef, *_ = np.linalg.lstsq(design * sw[:, None], y[mask] * sw, rcond=None)
                dest[i] = coef[0]
        if cfg.robustness_iters and it < cfg.robustness_iters:
            resid = y - fitted_at_obs
            s = np.median(np.abs(resid))
            if s <= 0:
                break
            robust_w = np.clip(1.0 - (resid / (6.0 * s)) ** 2, 0.0, None) ** 2
    return out
