"""Densities and CDFs of Y(t) by Fourier inversion of the characteristic
function, plus the closed-form univariate VG density.

Joint densities come from a 2-D FFT of the characteristic function sampled
on a midpoint frequency grid; the grid spacing is tied to the requested
output box (``dtheta = 2*pi / box_width``), so the box also controls the
effective frequency truncation.  The acceptance gate is the normalization
check: a grid whose trapezoid integral deviates from 1 by more than 1e-3
(while the analytic tail mass outside the box is negligible) is rejected as
too coarse.

Marginal distributions use the modified-Bessel closed form of the VG
density.  Its CDF is accumulated on a log-graded grid; when the gamma shape
``b*t <= 1/2`` the density has an integrable power singularity at the
center, whose mass is added analytically from the local power-law exponent.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import gammaln, kve

from .charfn import char_fn_grid, fourier_invertible, wvag_exponent
from .errors import (
    GridTooCoarseError,
    NearZeroMarginalError,
    NotInvertibleError,
    SingularSigmaError,
)
from .model import VgParams, WvagParams

NEG_DENSITY_TOL = 1e-8
DENSITY_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# univariate VG marginal: closed form and inversion cross-check
# ---------------------------------------------------------------------------

def vg1_logpdf(x, b: float, mu: float, s2: float, t: float):
    """Log density of V(t) for V ~ VG^1(b, mu, s2), via the modified-Bessel
    closed form.

    For shape lam = b*t <= 1/2 the density is unbounded at x = 0; evaluation
    there is floored at a tiny offset so log densities stay finite (the
    singularity is integrable, so this only matters on a negligible set).
    """
    if s2 <= 0:
        raise ValueError("s2 must be positive")
    x = np.asarray(x, dtype=float)
    lam = b * t
    nu = lam - 0.5
    bb = b + mu**2 / (2.0 * s2)
    scale = np.sqrt(t * (s2 + mu**2 / b))
    x_floor = 1e-14 * max(scale, 1e-30)

    ax = np.abs(x)
    if nu > 0:
        # bounded center: use the analytic x -> 0 limit there
        center = ax < x_floor
        ax = np.where(center, x_floor, ax)
    else:
        center = np.zeros(ax.shape, dtype=bool)
        ax = np.maximum(ax, x_floor)

    a_arg = ax**2 / (2.0 * s2)
    z = 2.0 * np.sqrt(a_arg * bb)
    log_k = np.log(kve(nu, z)) - z
    log_c = lam * np.log(b) - gammaln(lam) - 0.5 * np.log(2.0 * np.pi * s2) + np.log(2.0)
    out = log_c + mu * x / s2 + 0.5 * nu * (np.log(a_arg) - np.log(bb)) + log_k
    if nu > 0 and np.any(center):
        limit = (lam * np.log(b) - gammaln(lam) - 0.5 * np.log(2.0 * np.pi * s2)
                 + gammaln(nu) + nu * np.log(2.0) - nu * np.log(2.0 * bb))
        out = np.where(center, limit, out)
    return out


def vg1_pdf(x, b, mu, s2, t):
    return np.exp(vg1_logpdf(x, b, mu, s2, t))


def fourier_invertible_margin_1d(b: float, t: float):
    """Univariate analogue of the invertibility margin: b*t vs 1/2."""
    from .charfn import InvertibilityMargin

    return InvertibilityMargin(value=float(b * t))


class MarginalDistribution:
    """pdf / cdf / ppf of Y_k(t) = shift + V(t), V ~ VG^1(b, mu, s2).

    The CDF is precomputed on a log-graded grid centered at the singular
    point ``shift`` and interpolated; quadrature failure (total mass off by
    more than ``mass_tol``) raises.
    """

    def __init__(self, b: float, mu: float, s2: float, t: float, shift: float = 0.0,
                 n_log: int = 1500, tail_efolds: float = 45.0, mass_tol: float = 1e-3):
        if not (b > 0 and s2 > 0 and t > 0):
            raise ValueError("b, s2, t must be positive")
        self.b, self.mu, self.s2, self.t, self.shift = b, mu, s2, t, shift
        lam = b * t
        self.lam = lam
        self.pointwise_valid = lam > 0.5
        std = np.sqrt(t * (s2 + mu**2 / b))
        root = np.sqrt(mu**2 + 2.0 * b * s2)
        rate_right = (root - mu) / s2
        rate_left = (root + mu) / s2
        x_hi = tail_efolds / rate_right + 5.0 * std
        x_lo = -(tail_efolds / rate_left + 5.0 * std)
        x_min = 1e-12 * std

        pos = np.geomspace(x_min, x_hi, n_log)
        neg = -np.geomspace(x_min, -x_lo, n_log)[::-1]
        pdf_pos = vg1_pdf(pos, b, mu, s2, t)
        pdf_neg = vg1_pdf(neg, b, mu, s2, t)

        cdf_neg = cumulative_simpson(pdf_neg, x=neg, initial=0.0)
        cdf_neg = cdf_neg - cdf_neg[0]  # left tail below the first node is < e^-45
        sliver = self._central_mass(x_min, pdf_neg[-1], pdf_pos[0])
        cdf_pos = cdf_neg[-1] + sliver + cumulative_simpson(pdf_pos, x=pos, initial=0.0)

        nodes = np.concatenate([neg, pos])
        cdf = np.concatenate([cdf_neg, cdf_pos])
        total = cdf[-1]
        if abs(total - 1.0) > mass_tol:
            raise GridTooCoarseError(
                f"marginal CDF quadrature mass {total:.6f} deviates from 1")
        self.total_mass = float(total)
        self._nodes = nodes
        self._cdf = np.minimum(cdf / total, 1.0)

    def _central_mass(self, x_min, f_left, f_right):
        # mass of (-x_min, x_min); for nu <= 0.05 match the local power law
        # f ~ C |x|^(2 lam - 1), otherwise a Simpson panel with the center value
        nu = self.lam - 0.5
        if nu <= 0.05:
            e = 2.0 * self.lam
            c_left = f_left * x_min ** (1.0 - e)
            c_right = f_right * x_min ** (1.0 - e)
            return (c_left + c_right) * x_min**e / e
        f0 = vg1_pdf(0.0, self.b, self.mu, self.s2, self.t)
        return (x_min / 3.0) * (f_left + 4.0 * f0 + f_right)

    def pdf(self, y):
        return vg1_pdf(np.asarray(y, dtype=float) - self.shift,
                       self.b, self.mu, self.s2, self.t)

    def logpdf(self, y):
        return vg1_logpdf(np.asarray(y, dtype=float) - self.shift,
                          self.b, self.mu, self.s2, self.t)

    def cdf(self, y):
        x = np.asarray(y, dtype=float) - self.shift
        return np.interp(x, self._nodes, self._cdf, left=0.0, right=1.0)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        return np.interp(q, self._cdf, self._nodes) + self.shift


def marginal_distribution(p: WvagParams, k: int, t: float) -> MarginalDistribution:
    """Marginal law of component k: m_k*t + VG^1(1/alpha_k, mu_k, sigma_kk)."""
    return MarginalDistribution(
        b=1.0 / p.alpha[k], mu=p.mu[k], s2=p.sigma[k, k], t=t, shift=p.m[k] * t)


# ---------------------------------------------------------------------------
# joint density by 2-D FFT
# ---------------------------------------------------------------------------

def theta_max_search(p: WvagParams, t: float, tol: float = 1e-10,
                     cap: float = 1e6) -> np.ndarray:
    """Per-axis frequency radius beyond which |Phi_X(t)| < tol, searched
    along both axes and both diagonals.  Capped at ``cap`` (polynomial CF
    decay can push the pointwise criterion absurdly far out; the cap is
    flagged by returning it verbatim)."""
    dirs = np.array([[1.0, 0.0], [0.0, 1.0],
                     [1.0, 1.0] / np.sqrt(2.0), [1.0, -1.0] / np.sqrt(2.0)])
    log_tol = np.log(tol)
    radii = []
    for u in dirs:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            if t * wvag_exponent(p, hi * u).real < log_tol or hi >= cap:
                break
            lo, hi = hi, hi * 2.0
        hi = min(hi, cap)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if t * wvag_exponent(p, mid * u).real < log_tol:
                hi = mid
            else:
                lo = mid
        radii.append(hi)
    radii = np.asarray(radii)
    per_axis = np.abs(dirs) * radii[:, None]
    return per_axis.max(axis=0)


@dataclass(frozen=True)
class DensityGrid:
    """Joint density of Y(t) tabulated on a rectangular grid."""

    t: float
    y1: np.ndarray          # axis nodes, length m1
    y2: np.ndarray          # axis nodes, length m2
    values: np.ndarray      # (m1, m2), nonnegative after clipping
    theta_max: np.ndarray   # realized per-axis frequency range
    integral: float         # trapezoid integral over the box
    tail_mass_bound: float  # analytic bound on mass outside the box
    clipped_neg_mass: float
    max_negative: float
    override: bool = False

    @property
    def box(self):
        return ((float(self.y1[0]), float(self.y1[-1])),
                (float(self.y2[0]), float(self.y2[-1])))

    @property
    def resolution(self):
        return (len(self.y1), len(self.y2))

    def interp(self, points):
        """Bilinear interpolation; zero outside the box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d1 = self.y1[1] - self.y1[0]
        d2 = self.y2[1] - self.y2[0]
        f1 = (pts[:, 0] - self.y1[0]) / d1
        f2 = (pts[:, 1] - self.y2[0]) / d2
        inside = (f1 >= 0) & (f1 <= len(self.y1) - 1) & (f2 >= 0) & (f2 <= len(self.y2) - 1)
        i1 = np.clip(np.floor(f1).astype(int), 0, len(self.y1) - 2)
        i2 = np.clip(np.floor(f2).astype(int), 0, len(self.y2) - 2)
        w1 = np.clip(f1 - i1, 0.0, 1.0)
        w2 = np.clip(f2 - i2, 0.0, 1.0)
        v = (self.values[i1, i2] * (1 - w1) * (1 - w2)
             + self.values[i1 + 1, i2] * w1 * (1 - w2)
             + self.values[i1, i2 + 1] * (1 - w1) * w2
             + self.values[i1 + 1, i2 + 1] * w1 * w2)
        return np.where(inside, v, 0.0)

    def log_interp(self, points):
        return np.log(np.maximum(self.interp(points), DENSITY_FLOOR))

    def marginal1(self):
        """Density of the first component by integrating out the second."""
        return np.trapezoid(self.values, self.y2, axis=1)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y1", "y2", "f"])
            for i, a in enumerate(self.y1):
                for j, b in enumerate(self.y2):
                    w.writerow([repr(float(a)), repr(float(b)),
                                repr(float(self.values[i, j]))])


def _default_box(p: WvagParams, t: float, sample=None, pad_std: float = 6.0):
    if sample is not None:
        obs = np.asarray(sample, dtype=float)
        lo = obs.min(axis=0)
        hi = obs.max(axis=0)
        std = obs.std(axis=0)
        return [(lo[k] - pad_std * std[k], hi[k] + pad_std * std[k]) for k in range(2)]
    box = []
    for k in range(2):
        b = 1.0 / p.alpha[k]
        mu, s2 = p.mu[k], p.sigma[k, k]
        mean = (p.m[k] + mu) * t
        std = np.sqrt(t * (s2 + mu**2 * p.alpha[k]))
        root = np.sqrt(mu**2 + 2.0 * b * s2)
        # 14 e-folds of the exponential tail keeps the out-of-box mass (and
        # the periodization alias) far below the 1e-4 tail gate
        pad_hi = 14.0 * s2 / (root - mu) + pad_std * std
        pad_lo = 14.0 * s2 / (root + mu) + pad_std * std
        box.append((mean - pad_lo, mean + pad_hi))
    return box


class GridPlan:
    """Precomputed frequency grid, phase factors, and FFT bookkeeping for a
    fixed (box, resolution).

    Evaluating many candidate parameter vectors on the same box (the MLE
    inner loop) reuses the plan; only the characteristic function is
    recomputed, on half the frequency grid thanks to Hermitian symmetry of
    the midpoint node layout.
    """

    def __init__(self, box, resolution, taper_frac: float = 0.7):
        res = np.broadcast_to(np.asarray(resolution, dtype=int), (2,)).copy()
        if np.any(res % 2):
            raise ValueError("resolution must be even")
        (lo1, hi1), (lo2, hi2) = box
        widths = np.array([hi1 - lo1, hi2 - lo2], dtype=float)
        if np.any(widths <= 0):
            raise ValueError("box must have positive widths")
        self.res = res
        self.dy = widths / res
        self.dtheta = 2.0 * np.pi / widths
        # midpoint frequency grid: exact Hermitian symmetry, no zero node
        self.th1 = (np.arange(res[0]) - res[0] / 2 + 0.5) * self.dtheta[0]
        self.th2 = (np.arange(res[1]) - res[1] / 2 + 0.5) * self.dtheta[1]
        self.y1 = lo1 + np.arange(res[0]) * self.dy[0]
        self.y2 = lo2 + np.arange(res[1]) * self.dy[1]
        half = res[0] // 2
        self.th1_col = self.th1[:half, None]
        self.th2_row = self.th2[None, :]
        # raised-cosine taper of the outer frequency band: the CF decays only
        # polynomially, so a hard cutoff would leave Gibbs ripple (visible as
        # negative density values); Fejer-style windowing suppresses it
        if taper_frac is not None:
            self.win = (self._taper(self.th1_col, abs(self.th1[0]), taper_frac)
                        * self._taper(self.th2_row, abs(self.th2[0]), taper_frac))
        else:
            self.win = None
        # phase factors mapping the midpoint theta grid onto the box
        self.pre = (np.exp(-1j * np.arange(res[0]) * self.dtheta[0] * lo1)[:, None]
                    * np.exp(-1j * np.arange(res[1]) * self.dtheta[1] * lo2)[None, :])
        self.post = (self.dtheta[0] * self.dtheta[1] / (4.0 * np.pi**2)
                     * np.exp(-1j * self.th1[0] * self.y1)[:, None]
                     * np.exp(-1j * self.th2[0] * self.y2)[None, :])

    @staticmethod
    def _taper(th, th_max, frac):
        a = np.abs(th) / th_max
        w = np.ones_like(a)
        outer = a > frac
        w[outer] = 0.5 * (1.0 + np.cos(np.pi * (a[outer] - frac) / (1.0 - frac)))
        return w

    def theta_range(self) -> np.ndarray:
        return np.array([abs(self.th1[0]), abs(self.th2[0])])

    def density_values(self, p: WvagParams, t: float, kernel_bandwidth=None):
        """Clipped density values on the grid plus negativity diagnostics."""
        phi_half = char_fn_grid(p, t, self.th1_col, self.th2_row)
        if self.win is not None:
            phi_half = phi_half * self.win
        if kernel_bandwidth is not None:
            h1, h2 = kernel_bandwidth
            phi_half = phi_half * np.exp(
                -0.5 * ((h1 * self.th1_col) ** 2 + (h2 * self.th2_row) ** 2))
        phi = np.empty((self.res[0], self.res[1]), dtype=complex)
        phi[: self.res[0] // 2] = phi_half
        phi[self.res[0] // 2:] = np.conj(phi_half[::-1, ::-1])
        values = (self.post * np.fft.fft2(phi * self.pre)).real
        neg = values[values < 0.0]
        max_negative = float(-neg.min()) if neg.size else 0.0
        clipped_neg_mass = float(-neg.sum() * self.dy[0] * self.dy[1]) if neg.size else 0.0
        return np.clip(values, 0.0, None), max_negative, clipped_neg_mass

    def bind_observations(self, obs: np.ndarray):
        """Precompute bilinear interpolation indices for a fixed point set;
        returns a gather(values) -> interpolated densities closure."""
        f1 = (obs[:, 0] - self.y1[0]) / self.dy[0]
        f2 = (obs[:, 1] - self.y2[0]) / self.dy[1]
        inside = ((f1 >= 0) & (f1 <= self.res[0] - 1)
                  & (f2 >= 0) & (f2 <= self.res[1] - 1))
        i1 = np.clip(np.floor(f1).astype(int), 0, self.res[0] - 2)
        i2 = np.clip(np.floor(f2).astype(int), 0, self.res[1] - 2)
        w1 = np.clip(f1 - i1, 0.0, 1.0)
        w2 = np.clip(f2 - i2, 0.0, 1.0)

        def gather(values):
            v = (values[i1, i2] * (1 - w1) * (1 - w2)
                 + values[i1 + 1, i2] * w1 * (1 - w2)
                 + values[i1, i2 + 1] * (1 - w1) * w2
                 + values[i1 + 1, i2 + 1] * w1 * w2)
            return np.where(inside, v, 0.0)

        return gather


def _check_pd_sigma(p: WvagParams):
    eig = np.linalg.eigvalsh(p.sigma)
    if eig.min() <= 1e-12 * max(abs(eig).max(), 1.0):
        raise SingularSigmaError("sigma must be positive definite for inversion")


def check_invertible(p: WvagParams, t: float, override: bool):
    margin = fourier_invertible(p, t)
    if not margin.ok:
        if not override:
            raise NotInvertibleError(margin)
        warnings.warn(f"inverting despite failed condition: {margin}; "
                      "results are approximate", RuntimeWarning, stacklevel=3)
    return margin


def joint_density(p: WvagParams, t: float, box=None, resolution=512, *,
                  sample=None, override: bool = False, strict: bool = True,
                  kernel_bandwidth=None, plan: GridPlan = None) -> DensityGrid:
    """Joint density of Y(t) on a grid, by 2-D FFT of the characteristic
    function.

    ``box`` defaults to the sample range extended by 6 marginal standard
    deviations per side (or an analytic-moment box without a sample).  When
    the invertibility condition fails, the call refuses unless ``override``
    is set, in which case inversion proceeds with a warning and the caller
    is expected to run the resolution-doubling diagnostic.

    ``kernel_bandwidth`` multiplies the CF by a Gaussian kernel CF, giving
    the density smoothed with that kernel (used by simulation cross-checks).
    """
    if p.n != 2:
        raise ValueError("joint_density supports n=2 only")
    _check_pd_sigma(p)
    margin = check_invertible(p, t, override)

    if plan is None:
        if box is None:
            box = _default_box(p, t, sample=sample)
        plan = GridPlan(box, resolution)
    values, max_negative, clipped_neg_mass = plan.density_values(
        p, t, kernel_bandwidth=kernel_bandwidth)

    integral = float(np.trapezoid(np.trapezoid(values, plan.y2, axis=1), plan.y1))
    tail = 0.0
    for k in range(2):
        md = marginal_distribution(p, k, t)
        tail += float(md.cdf(plan.y1[0] if k == 0 else plan.y2[0])
                      + 1.0 - md.cdf(plan.y1[-1] if k == 0 else plan.y2[-1]))

    if strict and tail < 1e-4 and abs(integral - 1.0) > 1e-3:
        raise GridTooCoarseError(
            f"density integral {integral:.6f} deviates from 1 "
            f"(tail bound {tail:.2e}); increase resolution or box")

    return DensityGrid(t=t, y1=plan.y1, y2=plan.y2, values=values,
                       theta_max=plan.theta_range(),
                       integral=integral, tail_mass_bound=tail,
                       clipped_neg_mass=clipped_neg_mass,
                       max_negative=max_negative, override=not margin.ok)


def conditional_cdf(grid: DensityGrid, y1: float):
    """Conditional CDF F(y2 | y1) from a density grid, by row interpolation
    and cumulative integration.  Requires non-negligible marginal density at
    ``y1``."""
    d1 = grid.y1[1] - grid.y1[0]
    f = (y1 - grid.y1[0]) / d1
    if f < 0 or f > len(grid.y1) - 1:
        raise NearZeroMarginalError(f"y1={y1} outside grid support")
    i = int(np.clip(np.floor(f), 0, len(grid.y1) - 2))
    w = f - i
    row = (1.0 - w) * grid.values[i, :] + w * grid.values[i + 1, :]
    total = np.trapezoid(row, grid.y2)
    if total < 1e-12:
        raise NearZeroMarginalError(f"marginal density at y1={y1} is {total:.3e}")
    cdf = cumulative_simpson(row, x=grid.y2, initial=0.0)
    cdf = np.clip(cdf / cdf[-1], 0.0, 1.0)
    y2_nodes = grid.y2

    def evaluator(y2):
        return np.interp(np.asarray(y2, dtype=float), y2_nodes, cdf, left=0.0, right=1.0)

    return evaluator
