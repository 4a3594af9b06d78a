"""Exact simulation of gamma, VG and WVAG increments.

Randomness flows through :class:`RngStream`, a thin wrapper over the
counter-based Philox generator keyed by (seed, stream).  Identical keys give
bit-identical draws; distinct stream ids give statistically independent
streams, which is what the DME grid search exploits for common random
numbers.

Gamma variates come from the generator's exact rejection sampler (valid for
all shapes, including shape < 1, which occurs at realistic parameter sets).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .model import VgParams, WvagParams, decompose


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (seed, stream)."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=[self.seed % 2**64, self.stream % 2**64]))

    def child(self, i: int) -> "RngStream":
        """Derived independent stream; distinct ``i`` give distinct streams."""
        return RngStream(self.seed, (self.stream * 1_000_003 + 1 + i) % 2**64)


def gamma_increment(shape: float, rate: float, rng: np.random.Generator, size=None):
    """Draw from Gamma(shape, rate)."""
    if not (shape > 0 and rate > 0):
        raise ValueError(f"shape and rate must be positive, got ({shape}, {rate})")
    return rng.gamma(shape, 1.0 / rate, size=size)


def _psd_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular-like factor L with L @ L.T = sigma.

    Falls back to an eigenvalue factorization when Cholesky fails on
    semidefinite input (e.g. correlation at the +-1 boundary).
    """
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(sigma)
        scale = max(abs(w).max(), 1.0)
        if w.min() < -1e-10 * scale:
            raise
        return v * np.sqrt(np.clip(w, 0.0, None))


def vg_increment(p: VgParams, t: float, rng: np.random.Generator, size: int | None = None):
    """Draw V(t) for V ~ VG(b, mu, sigma): mu*g + L z sqrt(g) with
    g ~ Gamma(b*t, b) and L L' = sigma."""
    n = p.dim
    single = size is None
    nsamp = 1 if single else size
    g = gamma_increment(p.b * t, p.b, rng, size=nsamp)
    L = _psd_factor(p.sigma)
    z = rng.standard_normal(size=(nsamp, n))
    out = g[:, None] * p.mu + np.sqrt(g)[:, None] * (z @ L.T)
    return out[0] if single else out


def wvag_increment(p: WvagParams, t: float, rng: np.random.Generator, size: int | None = None):
    """Draw Y(t) = m*t + X(t) via the VG decomposition
    X = V0 + sum_k Vk e_k with independent parts."""
    single = size is None
    nsamp = 1 if single else size
    v0, vks = decompose(p)
    out = vg_increment(v0, t, rng, size=nsamp) + p.m * t
    for k, vk in enumerate(vks):
        out[:, k] += vg_increment(vk, t, rng, size=nsamp)[:, 0]
    return out[0] if single else out


@dataclass(frozen=True)
class ReturnSample:
    """Iid bivariate log-return observations at sampling interval c."""

    c: float
    observations: np.ndarray  # (N, 2)

    def __post_init__(self):
        obs = np.atleast_2d(np.asarray(self.observations, dtype=float))
        object.__setattr__(self, "observations", obs)
        if obs.shape[0] < 1 or obs.ndim != 2:
            raise ValueError("need at least one observation")
        if not np.all(np.isfinite(obs)):
            raise ValueError("observations must be finite")

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    def to_csv(self, path, meta_path=None, seed=None):
        obs = self.observations
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y1", "y2"])
            for row in obs:
                w.writerow([repr(float(row[0])), repr(float(row[1]))])
        if meta_path is not None:
            meta = {"c": self.c, "N": self.n}
            if seed is not None:
                meta["seed"] = seed
            with open(meta_path, "w") as fh:
                json.dump(meta, fh, sort_keys=True)
                fh.write("\n")

    @classmethod
    def from_csv(cls, path, c=None, meta_path=None):
        if c is None:
            if meta_path is None:
                raise ValueError("supply either c or a metadata sidecar")
            with open(meta_path) as fh:
                c = json.load(fh)["c"]
        rows = []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if [h.strip() for h in header[:2]] != ["y1", "y2"]:
                raise ValueError(f"expected header y1,y2, got {header}")
            for row in r:
                if not row:
                    continue
                rows.append((float(row[0]), float(row[1])))
        return cls(c=float(c), observations=np.array(rows))


def simulate_study(truth: WvagParams, c: float, n_obs: int, replications: int,
                   stream: RngStream) -> list[ReturnSample]:
    """Independent replicated samples of ``n_obs`` iid Y(c) increments.

    Replication ``r`` uses ``stream.child(r)`` so studies are reproducible
    and embarrassingly parallel across replications.
    """
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    samples = []
    for r in range(replications):
        rng = stream.child(r).generator()
        obs = wvag_increment(truth, c, rng, size=n_obs)
        samples.append(ReturnSample(c=c, observations=obs))
    return samples
