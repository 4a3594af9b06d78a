"""Independent reference implementations used only by the tests.

Everything here is written against mpmath (arbitrary precision) or plain
first-principles numpy, sharing no code with the package paths it checks.
"""

import mpmath as mp
import numpy as np


def cf_mp(p, c, th1, th2):
    """Characteristic function of Y(c) in mpmath arithmetic."""
    a = mp.mpf(p.a)
    al = [mp.mpf(float(x)) for x in p.alpha]
    mu = [mp.mpf(float(x)) for x in p.mu]
    m = [mp.mpf(float(x)) for x in p.m]
    s = [[mp.mpf(float(p.sigma[i, j])) for j in range(2)] for i in range(2)]
    th = [th1, th2]
    adm = [al[k] * mu[k] for k in range(2)]
    ads = [[s[i][j] * min(al[i], al[j]) for j in range(2)] for i in range(2)]
    quad = sum(th[i] * ads[i][j] * th[j] for i in range(2) for j in range(2))
    psi = -a * mp.log(1 - 1j * (adm[0] * th1 + adm[1] * th2) + quad / 2)
    for k in range(2):
        bk = (1 - a * al[k]) / al[k]
        psi -= bk * mp.log(1 - 1j * al[k] * mu[k] * th[k]
                           + al[k] * th[k] ** 2 * s[k][k] / 2)
    return mp.e ** (1j * mp.mpf(c) * (th1 * m[0] + th2 * m[1]) + mp.mpf(c) * psi)


def fd_moments(p, c, dps=40):
    """Central moments of Y(c) by arbitrary-precision differentiation of the
    characteristic function at zero."""
    with mp.workdps(dps):
        mean = [float((mp.diff(lambda u: cf_mp(p, c, u, 0), 0, 1) / 1j).real),
                float((mp.diff(lambda u: cf_mp(p, c, 0, u), 0, 1) / 1j).real)]

        def cfc(t1, t2):
            return cf_mp(p, c, t1, t2) * mp.e ** (-1j * (t1 * mean[0] + t2 * mean[1]))

        out = {"mean": mean}
        out["var"] = [float((mp.diff(lambda u: cfc(u, 0), 0, 2) / 1j**2).real),
                      float((mp.diff(lambda u: cfc(0, u), 0, 2) / 1j**2).real)]
        out["m3"] = [float((mp.diff(lambda u: cfc(u, 0), 0, 3) / 1j**3).real),
                     float((mp.diff(lambda u: cfc(0, u), 0, 3) / 1j**3).real)]
        out["m4"] = [float((mp.diff(lambda u: cfc(u, 0), 0, 4) / 1j**4).real),
                     float((mp.diff(lambda u: cfc(0, u), 0, 4) / 1j**4).real)]
        out["cross"] = float((mp.diff(cfc, (0, 0), (1, 1)) / 1j**2).real)
        out["cross22"] = float((mp.diff(cfc, (0, 0), (2, 2)) / 1j**4).real)
        return out


def vg1_pdf_mp(x, b, mu, s2, t, dps=30):
    """Univariate VG density by mpmath oscillatory quadrature of the
    Fourier-inversion integral (valid for b*t > 1/2)."""
    with mp.workdps(dps):
        b_, mu_, s2_, t_, x_ = map(mp.mpf, (b, mu, s2, t, x))

        def phi(th):
            z = 1 - 1j * mu_ * th / b_ + s2_ * th**2 / (2 * b_)
            return mp.e ** (-b_ * t_ * mp.log(z))

        if x == 0:
            val = mp.quad(lambda th: phi(th).real, [0, 1, 10, 100, mp.inf])
        else:
            f = lambda th: (mp.e ** (-1j * th * x_) * phi(th)).real
            val = mp.quadosc(f, [0, mp.inf], period=2 * mp.pi / abs(x_))
        return float(val / mp.pi)


def random_feasible_params(rng, scale=1.0):
    """Random feasible parameter set for property sweeps."""
    from wvag.model import WvagParams

    a = rng.uniform(0.2, 2.5)
    alpha = rng.uniform(0.1, 0.95 / a, size=2)
    mu = rng.normal(scale=0.5 * scale, size=2)
    s11, s22 = rng.uniform(0.2, 2.0, size=2) * scale**2
    rho = rng.uniform(-0.95, 0.95)
    sigma = np.array([[s11, rho * np.sqrt(s11 * s22)],
                      [rho * np.sqrt(s11 * s22), s22]])
    m = rng.normal(scale=0.5 * scale, size=2)
    return WvagParams(a=a, alpha=alpha, mu=mu, sigma=sigma, m=m)
