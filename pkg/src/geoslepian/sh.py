"""
Real spherical harmonics on the unit sphere.

Convention: orthonormal real harmonics (unit L2 norm over the sphere, the
1/sqrt(4 pi) factor absorbed), no Condon-Shortley phase.  For order m > 0
the function is ``Pbar_lm(cos theta) * cos(m lon)``, for m < 0 it is
``Pbar_l|m|(cos theta) * sin(|m| lon)``.

Flat index ordering is degree-major; inside a degree the orders run
0, +1, -1, +2, -2, ..., +l, -l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.special

from .errors import DomainError

__all__ = [
    "SH_CONVENTION",
    "GeoPoint",
    "ShBasisSpec",
    "QuadratureGrid",
    "sh_index",
    "sh_degree_order",
    "legendre_normalized",
    "legendre_table",
    "legendre_rows",
    "sh_eval",
    "build_quadrature",
    "to_polar",
]

#: tag written into every persisted basis so cached coefficients are unambiguous
SH_CONVENTION = "real-orthonormal-4pi;no-condon-shortley;order:0,+1,-1,...;v1"

_INV_SQRT_4PI = 1.0 / np.sqrt(4.0 * np.pi)
# recurrence mantissas are rescaled once they pass 2**_RESCALE_BITS
_RESCALE_BITS = 480
_RESCALE_LIMIT = 2.0 ** _RESCALE_BITS
_RESCALE_FACTOR = 2.0 ** -_RESCALE_BITS
# sectoral seeds with binary exponent at or above this are stored unscaled
_PLAIN_EXP = -600


@dataclass(frozen=True)
class GeoPoint:
    """Longitude/latitude in degrees; longitude is wrapped into [-180, 180)."""

    lon: float
    lat: float

    def __post_init__(self):
        lat = float(self.lat)
        if not (-90.0 <= lat <= 90.0):
            raise DomainError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", _wrap_lon(float(self.lon)))

    @property
    def colatitude(self):
        """Colatitude in degrees (0 at the north pole)."""
        return 90.0 - self.lat


def _wrap_lon(lon):
    lon = np.asarray(lon, dtype=float)
    # in-range values pass through untouched (the shift would round them)
    ok = (lon >= -180.0) & (lon < 180.0)
    wrapped = np.where(ok, lon, np.mod(lon + 180.0, 360.0) - 180.0)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def to_polar(lon, lat):
    """Return ``(t, u, lam)``: cos(colatitude), sin(colatitude), longitude in radians.

    Points with ``|lat| == 90`` get ``u == 0`` and ``lam == 0`` exactly, so
    nothing downstream depends on the supplied longitude there.
    """
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    if np.any(np.abs(lat) > 90.0) or not np.all(np.isfinite(lat)):
        raise DomainError("latitude outside [-90, 90]")
    if not np.all(np.isfinite(lon)):
        raise DomainError("non-finite longitude")
    phi = np.radians(lat)
    t = np.sin(phi)
    u = np.cos(phi)
    north = lat == 90.0
    south = lat == -90.0
    pole = north | south
    t = np.where(north, 1.0, np.where(south, -1.0, t))
    u = np.where(pole, 0.0, u)
    lam = np.where(pole, 0.0, np.radians(lon))
    return t, u, lam


@dataclass(frozen=True)
class ShBasisSpec:
    """Band-limit ``lmax`` together with the flat (l, m) ordering."""

    lmax: int

    def __post_init__(self):
        if int(self.lmax) != self.lmax or self.lmax < 0:
            raise DomainError(f"lmax must be a nonnegative integer, got {self.lmax}")
        object.__setattr__(self, "lmax", int(self.lmax))

    @property
    def dim(self):
        return (self.lmax + 1) ** 2

    def index(self, l, m):
        if l > self.lmax:
            raise DomainError(f"degree {l} exceeds lmax {self.lmax}")
        return sh_index(l, m)

    def degree_order(self, i):
        if not 0 <= i < self.dim:
            raise DomainError(f"flat index {i} outside [0, {self.dim})")
        return sh_degree_order(i)

    @cached_property
    def degrees(self):
        """Degree of every flat index, shape (dim,)."""
        return np.repeat(np.arange(self.lmax + 1), 2 * np.arange(self.lmax + 1) + 1)

    @cached_property
    def orders(self):
        """Signed order of every flat index, shape (dim,)."""
        out = np.empty(self.dim, dtype=int)
        for l in range(self.lmax + 1):
            base = l * l
            out[base] = 0
            k = np.arange(1, l + 1)
            out[base + 2 * k - 1] = k
            out[base + 2 * k] = -k
        return out


def sh_index(l, m):
    """Flat index of degree ``l`` and signed order ``m``."""
    l = int(l)
    m = int(m)
    if l < 0 or abs(m) > l:
        raise DomainError(f"invalid (l, m) = ({l}, {m})")
    if m == 0:
        return l * l
    if m > 0:
        return l * l + 2 * m - 1
    return l * l + 2 * (-m)


def sh_degree_order(i):
    """Inverse of :func:`sh_index`."""
    i = int(i)
    if i < 0:
        raise DomainError(f"negative flat index {i}")
    l = math.isqrt(i)
    r = i - l * l
    if r == 0:
        return l, 0
    k = (r + 1) // 2
    return (l, k) if r % 2 == 1 else (l, -k)


def legendre_table(t, lmax, mmax=None, u=None):
    """
    Fully normalized associated Legendre values for many arguments at once.

    The sectoral seeds are carried as separate mantissa/exponent pairs and
    the normalized three-term recurrence in degree runs on the mantissas,
    which are rescaled whenever they grow large.  Values are only converted
    to plain floats on output, so nothing overflows at any degree and tiny
    values underflow gracefully to zero.

    Parameters
    ----------
    t : array_like
        cos(colatitude), each in [-1, 1].
    lmax : int
        Maximum degree.
    mmax : int, optional
        Highest order to compute (default ``lmax``).
    u : array_like, optional
        sin(colatitude); computed as sqrt((1 - t)(1 + t)) when omitted.

    Returns
    -------
    ndarray, shape (n, lmax + 1, mmax + 1)
        ``P[k, l, m]`` for the k-th argument.  Entries with m > l are zero.
    """
    rows = legendre_rows(t, lmax, mmax, u)
    first = next(rows)
    out = np.empty((first.shape[0], int(lmax) + 1, first.shape[1]))
    out[:, 0] = first
    for l, row in enumerate(rows, start=1):
        out[:, l] = row
    return out


def legendre_rows(t, lmax, mmax=None, u=None):
    """
    Generator form of :func:`legendre_table`: yields the (n, mmax + 1)
    slice for degree 0, 1, ..., lmax in turn.  Each yielded array is fresh.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    if np.any(~(np.abs(t) <= 1.0)):
        raise DomainError("Legendre argument outside [-1, 1]")
    if u is None:
        u = np.sqrt((1.0 - t) * (1.0 + t))
    else:
        u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
    lmax = int(lmax)
    mmax = lmax if mmax is None else min(int(mmax), lmax)
    n = t.size

    # running state per (point, order): last two degrees share one exponent
    p1 = np.zeros((n, mmax + 1))
    p2 = np.zeros((n, mmax + 1))
    ex = np.zeros((n, mmax + 1), dtype=np.int64)
    s_man = np.full(n, _INV_SQRT_4PI)
    s_exp = np.zeros(n, dtype=np.int64)
    p1[:, 0] = _INV_SQRT_4PI
    row = np.zeros((n, mmax + 1))
    row[:, 0] = _INV_SQRT_4PI
    scaled = False
    yield row
    tc = t[:, None]

    for l in range(1, lmax + 1):
        row = np.zeros((n, mmax + 1))
        top = min(l - 1, mmax)
        m = np.arange(top + 1, dtype=float)
        lm = (l - m) * (l + m)
        a = np.sqrt((2 * l - 1) * (2 * l + 1) / lm)
        if l >= 2:
            b = np.sqrt(np.maximum((2 * l + 1) * (l + m - 1) * (l - m - 1), 0.0)
                        / (lm * (2 * l - 3)))
        else:
            b = np.zeros_like(m)
        new = a * tc * p1[:, : top + 1] - b * p2[:, : top + 1]
        p2[:, : top + 1] = p1[:, : top + 1]
        p1[:, : top + 1] = new
        if scaled:
            big = np.abs(new) > _RESCALE_LIMIT
            if big.any():
                rows, cols = np.nonzero(big)
                p1[rows, cols] *= _RESCALE_FACTOR
                p2[rows, cols] *= _RESCALE_FACTOR
                ex[rows, cols] += _RESCALE_BITS
            row[:, : top + 1] = np.ldexp(p1[:, : top + 1], ex[:, : top + 1])
        else:
            # unscaled columns hold true values, which stay O(sqrt(l))
            row[:, : top + 1] = new

        if l <= mmax:
            c = np.sqrt(3.0) if l == 1 else np.sqrt((2 * l + 1) / (2.0 * l))
            s_man, e = np.frexp(s_man * (c * u))
            s_exp += e
            # seeds far from underflow start as plain values (a power-of-two
            # shift, so exact); only the rest carry an exponent
            seed = np.ldexp(s_man, s_exp)
            plain = s_exp >= _PLAIN_EXP
            p1[:, l] = np.where(plain, seed, s_man)
            p2[:, l] = 0.0
            ex[:, l] = np.where(plain, 0, s_exp)
            scaled = scaled or not plain.all()
            row[:, l] = seed
        yield row


def legendre_normalized(lmax, t):
    """
    Table of fully normalized associated Legendre values ``Pbar[l, m]``.

    Normalized so that ``Pbar_lm(cos theta) * cos(m lon)`` (or the sine
    partner) has unit L2 norm on the sphere; ``Pbar_00 = 1/sqrt(4 pi)``.
    A scalar ``t`` yields shape (lmax+1, lmax+1); an array adds its shape
    in front.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(np.abs(t_arr) <= 1.0)):
        raise DomainError("Legendre argument outside [-1, 1]")
    table = legendre_table(t_arr, lmax)
    return table.reshape(t_arr.shape + table.shape[1:])


def _trig_table(lam, mmax):
    """cos(m lam), sin(m lam) for m = 0..mmax by angle-addition recursion."""
    n = lam.size
    cs = np.empty((n, mmax + 1))
    sn = np.empty((n, mmax + 1))
    cs[:, 0] = 1.0
    sn[:, 0] = 0.0
    if mmax >= 1:
        c1 = np.cos(lam)
        s1 = np.sin(lam)
        cs[:, 1] = c1
        sn[:, 1] = s1
        for m in range(2, mmax + 1):
            cs[:, m] = cs[:, m - 1] * c1 - sn[:, m - 1] * s1
            sn[:, m] = sn[:, m - 1] * c1 + cs[:, m - 1] * s1
    return cs, sn


def _sh_from_polar(lmax, t, u, lam):
    """Flat real SH matrix (n, (lmax+1)**2) from polar coordinates."""
    spec = ShBasisSpec(lmax)
    P = legendre_table(t, lmax, u=u)
    cs, sn = _trig_table(lam, lmax)
    degs = spec.degrees
    ords = spec.orders
    am = np.abs(ords)
    trig = np.where(ords >= 0, cs[:, am], sn[:, am])
    Y = P[:, degs, am] * trig
    pole = u == 0.0
    if pole.any():
        Y[np.ix_(pole, ords != 0)] = 0.0
    return Y


def sh_eval(spec, lon, lat):
    """
    Evaluate every real SH up to the band-limit at the given points.

    Parameters
    ----------
    spec : ShBasisSpec or int
        Band-limit.
    lon, lat : float or array_like
        Degrees.  Scalars give a vector of length ``dim``; arrays give a
        matrix of shape (n, dim).
    """
    lmax = spec.lmax if isinstance(spec, ShBasisSpec) else int(spec)
    scalar = np.ndim(lon) == 0 and np.ndim(lat) == 0
    lon, lat = np.broadcast_arrays(np.asarray(lon, float), np.asarray(lat, float))
    t, u, lam = to_polar(lon.ravel(), lat.ravel())
    Y = _sh_from_polar(lmax, t, u, lam)
    return Y[0] if scalar else Y


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre latitudes times uniform longitudes.

    ``weights`` has shape (nlat, nlon) in steradians; ``lat``/``lon`` are
    the 1-D node coordinates in degrees.
    """

    lat: np.ndarray
    lon: np.ndarray
    weights: np.ndarray
    t: np.ndarray
    kind: str = "gauss-legendre-latitude x uniform-longitude"

    @property
    def shape(self):
        return self.weights.shape

    @property
    def nlat(self):
        return self.lat.size

    @property
    def nlon(self):
        return self.lon.size

    def points(self):
        """Flattened (lon, lat) node arrays in row-major (lat, lon) order."""
        lon2, lat2 = np.meshgrid(self.lon, self.lat)
        return lon2.ravel(), lat2.ravel()

    def integrate(self, values):
        """Quadrature sum of ``values`` sampled on the flattened grid (last axis)."""
        return np.asarray(values) @ self.weights.ravel()


def build_quadrature(nlat, nlon):
    """
    Product grid exact for spherical polynomials of degree
    ``min(2*nlat - 1, nlon - 1)``.
    """
    nlat = int(nlat)
    nlon = int(nlon)
    if nlat < 1 or nlon < 1:
        raise DomainError("nlat and nlon must be >= 1")
    x, w = scipy.special.roots_legendre(nlat)
    # north to south
    x = x[::-1]
    w = w[::-1]
    lat = np.degrees(np.arcsin(x))
    lon = _wrap_lon(np.arange(nlon) * (360.0 / nlon))
    lon = np.atleast_1d(lon)
    weights = np.outer(w, np.full(nlon, 2.0 * np.pi / nlon))
    return QuadratureGrid(lat=lat, lon=lon, weights=weights, t=x)
