"""Levy exponents and characteristic functions of VG / VAG / WVAG processes.

All evaluators are pure functions of (params, theta, t) and broadcast over a
trailing-axis stack of frequency vectors: ``theta`` may be shaped ``(n,)`` or
``(..., n)``.  The complex logarithm is the principal branch; its argument
always has real part >= 1 for these models, which is asserted defensively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import VgParams, WvagParams, decompose, outer_diamond_mu, outer_diamond_sigma


def _quad_form(theta, sigma):
    # theta: (..., n), sigma: (n, n) -> (...,)
    return np.einsum("...i,ij,...j->...", theta, sigma, theta)


def vg_exponent(p: VgParams, theta):
    """Characteristic exponent of a VG process:
    -b * ln(1 - i<mu,theta>/b + |theta|^2_sigma / (2b))."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        theta = theta.reshape(1)
    arg = 1.0 - 1j * (theta @ p.mu) / p.b + _quad_form(theta, p.sigma) / (2.0 * p.b)
    if np.any(arg.real <= 0.0):
        raise FloatingPointError("principal log argument crossed the branch cut")
    return -p.b * np.log(arg)


def wvag_exponent(p: WvagParams, theta):
    """Characteristic exponent of a WVAG process (closed form).

    Equals the sum of the exponents of the VG decomposition to machine
    precision; see :func:`wvag_exponent_decomposed`.
    """
    theta = np.asarray(theta, dtype=float)
    admu = outer_diamond_mu(p.alpha, p.mu)
    adsig = outer_diamond_sigma(p.alpha, p.sigma)
    if p.n == 2:
        t1 = theta[..., 0]
        t2 = theta[..., 1]
        quad = adsig[0, 0] * t1 * t1 + 2.0 * adsig[0, 1] * t1 * t2 + adsig[1, 1] * t2 * t2
        common = 1.0 - 1j * (admu[0] * t1 + admu[1] * t2) + 0.5 * quad
    else:
        common = 1.0 - 1j * (theta @ admu) + 0.5 * _quad_form(theta, adsig)
    if np.any(common.real <= 0.0):
        raise FloatingPointError("principal log argument crossed the branch cut")
    out = -p.a * np.log(common)
    beta = p.beta
    for k in range(p.n):
        tk = theta[..., k]
        ik = 1.0 - 1j * p.alpha[k] * p.mu[k] * tk + 0.5 * p.alpha[k] * tk**2 * p.sigma[k, k]
        out = out - beta[k] * np.log(ik)
    return out


def wvag_exponent_decomposed(p: WvagParams, theta):
    """WVAG exponent assembled from the VG decomposition (internal oracle)."""
    theta = np.asarray(theta, dtype=float)
    v0, vks = decompose(p)
    out = vg_exponent(v0, theta)
    for k, vk in enumerate(vks):
        out = out + vg_exponent(vk, theta[..., k : k + 1])
    return out


def char_fn(p: WvagParams, t: float, theta):
    """Characteristic function of Y(t) = m*t + X(t):
    exp(i*t*<theta, m> + t*Psi_X(theta)).  Modulus is at most 1."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * t * (theta @ p.m) + t * wvag_exponent(p, theta))


def char_fn_grid(p: WvagParams, t: float, t1, t2):
    """char_fn evaluated on the outer product of axis frequencies ``t1``
    (column) and ``t2`` (row); broadcasting keeps the per-axis log factors
    one-dimensional, which matters in the inversion inner loop."""
    admu = outer_diamond_mu(p.alpha, p.mu)
    adsig = outer_diamond_sigma(p.alpha, p.sigma)
    quad = adsig[0, 0] * t1 * t1 + 2.0 * adsig[0, 1] * (t1 * t2) + adsig[1, 1] * t2 * t2
    common = 1.0 - 1j * (admu[0] * t1 + admu[1] * t2) + 0.5 * quad
    if np.any(common.real <= 0.0):
        raise FloatingPointError("principal log argument crossed the branch cut")
    beta = p.beta
    psi = -p.a * np.log(common)
    psi = psi - beta[0] * np.log(
        1.0 - 1j * p.alpha[0] * p.mu[0] * t1 + 0.5 * p.alpha[0] * t1**2 * p.sigma[0, 0])
    psi = psi - beta[1] * np.log(
        1.0 - 1j * p.alpha[1] * p.mu[1] * t2 + 0.5 * p.alpha[1] * t2**2 * p.sigma[1, 1])
    return np.exp(1j * t * (p.m[0] * t1 + p.m[1] * t2) + t * psi)


@dataclass(frozen=True)
class InvertibilityMargin:
    """Value of the invertibility condition (a/n + min_k beta_k) * t and
    whether it exceeds the 1/2 threshold."""

    value: float
    threshold: float = 0.5

    @property
    def ok(self) -> bool:
        return self.value > self.threshold

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        rel = ">" if self.ok else "<="
        return f"(a/n + min beta)*t = {self.value:.6g} {rel} {self.threshold}"


def fourier_invertible(p: WvagParams, t: float) -> InvertibilityMargin:
    """Sufficient condition for the characteristic function of X(t) to be
    integrable, hence for pointwise density recovery by Fourier inversion."""
    value = (p.a / p.n + p.beta.min()) * t
    return InvertibilityMargin(value=float(value))
