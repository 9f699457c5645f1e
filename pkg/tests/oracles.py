"""
Reference computations used only by the tests.

Each oracle avoids the code path it checks: extended precision instead of
the scaled recurrence, a textbook unnormalized recurrence in float32,
direct Fourier integrals instead of the Toeplitz eigenproblem, and
geodesic destination formulas instead of rotation matrices.
"""
import math

import mpmath
import numpy as np
import scipy.integrate


def legendre_mp(l, m, t, dps=60):
    """Fully normalized P_lm(t) (no Condon-Shortley phase) at high precision."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        raw = mpmath.legenp(l, m, t) * (-1) ** m  # undo mpmath's phase
        norm = mpmath.sqrt((2 * l + 1) / (4 * mpmath.pi) * (1 if m == 0 else 2)
                           * mpmath.factorial(l - m) / mpmath.factorial(l + m))
        return float(raw * norm)


def naive_legendre_float32(lmax, t):
    """
    Unnormalized recurrence followed by multiplication with the
    normalization constant, all in float32.  Returns the first degree at
    which a non-finite value appears, or None.
    """
    f = np.float32
    with np.errstate(all="ignore"):
        t = f(t)
        u = f(np.sqrt(f(1) - t * t))
        fact = [f(1)]
        for k in range(1, 2 * lmax + 2):
            fact.append(f(fact[-1] * f(k)))
        pmm = f(1)
        for m in range(lmax + 1):
            if m > 0:
                pmm = f(pmm * f(2 * m - 1) * u)
            p_prev, p = f(0), pmm
            for l in range(m, lmax + 1):
                if l > m:
                    p_prev, p = p, f((f(2 * l - 1) * t * p - f(l + m - 1) * p_prev) / f(l - m))
                norm = f(np.sqrt(f(2 * l + 1) / f(4 * np.pi) * fact[l - m] / fact[l + m]))
                if not np.isfinite(f(p * norm)):
                    return l
    return None


def band_concentration(v, w):
    """Fraction of a sequence's spectral energy inside |f| <= w by direct integration."""
    n = np.arange(len(v))

    def power(f):
        z = np.exp(-2j * np.pi * f * n) @ v
        return (z * z.conjugate()).real

    inside = scipy.integrate.quad(power, -w, w, limit=200, epsabs=1e-14, epsrel=1e-13)[0]
    total = float(np.dot(v, v))  # Parseval over one period
    return inside / total


def destination(lon, lat, distance, bearing):
    """Point reached from (lon, lat) after ``distance`` degrees along ``bearing``."""
    p1 = np.radians(lat)
    l1 = np.radians(lon)
    d = np.radians(distance)
    b = np.radians(bearing)
    p2 = np.arcsin(np.clip(np.sin(p1) * np.cos(d) + np.cos(p1) * np.sin(d) * np.cos(b), -1, 1))
    l2 = l1 + np.arctan2(np.sin(b) * np.sin(d) * np.cos(p1),
                         np.cos(d) - np.sin(p1) * np.sin(p2))
    return np.degrees(l2), np.degrees(p2)


def cap_quadrature(clon, clat, theta, n_radial, n_azimuth):
    """
    Nodes and weights integrating over a cap of radius ``theta`` around
    (clon, clat): Gauss-Legendre in cos(distance) times uniform bearing.
    """
    x, w = np.polynomial.legendre.leggauss(n_radial)
    lo = math.cos(math.radians(theta))
    c = lo + (1.0 - lo) * (x + 1.0) / 2.0
    wc = w * (1.0 - lo) / 2.0
    dist = np.degrees(np.arccos(c))
    bear = np.arange(n_azimuth) * 360.0 / n_azimuth
    D, B = np.meshgrid(dist, bear, indexing="ij")
    lon, lat = destination(clon, clat, D.ravel(), B.ravel())
    weights = np.repeat(wc, n_azimuth) * (2.0 * np.pi / n_azimuth)
    return lon, lat, weights
