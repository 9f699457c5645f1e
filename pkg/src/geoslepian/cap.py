"""
Spherical-cap concentration problem.

For a cap centered on the north pole the concentration matrix splits into
independent blocks, one per azimuthal order m, each indexed by degree
l = m..lmax.  Every block is assembled by Gauss-Legendre quadrature over
[cos(theta), 1] and diagonalized on its own; an eigenvector of block m
yields a cosine mode and (for m > 0) a sine partner with the same
eigenvalue.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import Selection, SlepianBasis, eval_slepian, select_count
from .errors import DomainError, NumericError
from .sh import GeoPoint, sh_index, legendre_table

__all__ = ["CapSpec", "shannon_cap", "cap_block_matrix", "solve_cap", "eval_slepian"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CapSpec:
    """Cap of angular radius ``theta`` (degrees) around ``center``."""

    theta: float
    center: GeoPoint
    lmax: int

    is_cap = True

    def __post_init__(self):
        theta = float(self.theta)
        if not 0.0 < theta <= 180.0:
            raise DomainError(f"cap radius {theta} outside (0, 180]")
        if int(self.lmax) != self.lmax or self.lmax < 0:
            raise DomainError("lmax must be a nonnegative integer")
        center = self.center
        if not isinstance(center, GeoPoint):
            center = GeoPoint(*center)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "lmax", int(self.lmax))
        object.__setattr__(self, "center", center)

    @property
    def area_fraction(self):
        return (1.0 - math.cos(math.radians(self.theta))) / 2.0

    def contains(self, lon, lat):
        """Boolean mask of points within the cap (great-circle distance)."""
        return angular_distance(self.center.lon, self.center.lat, lon, lat) <= self.theta


def angular_distance(lon1, lat1, lon2, lat2):
    """Great-circle distance in degrees (haversine form)."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dphi = p2 - p1
    dlam = np.radians(np.asarray(lon2, float) - np.asarray(lon1, float))
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2) ** 2
    return np.degrees(2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0))))


def shannon_cap(theta, lmax):
    """Shannon number (1 - cos theta)/2 * (lmax + 1)**2 of a cap (theta in degrees)."""
    theta = float(theta)
    if not 0.0 < theta <= 180.0:
        raise DomainError(f"cap radius {theta} outside (0, 180]")
    if lmax < 0:
        raise DomainError("lmax must be nonnegative")
    return (1.0 - math.cos(math.radians(theta))) / 2.0 * (lmax + 1) ** 2


def _cap_nodes(theta, lmax):
    # degree-2*lmax polynomial integrand: lmax + 1 nodes are exact
    x, w = np.polynomial.legendre.leggauss(lmax + 1)
    lo = math.cos(math.radians(theta))
    if theta == 180.0:
        lo = -1.0
    half = (1.0 - lo) / 2.0
    t = lo + half * (x + 1.0)
    return t, w * half


def _blocks(theta, lmax, orders):
    t, w = _cap_nodes(theta, lmax)
    P = legendre_table(t, lmax, mmax=max(orders))
    for m in orders:
        cols = P[:, m:, m]
        azimuth = 2.0 * np.pi if m == 0 else np.pi
        block = azimuth * (cols.T * w) @ cols
        yield m, 0.5 * (block + block.T)


def cap_block_matrix(theta, lmax, m):
    """
    Order-m block of the pole-cap concentration matrix.

    Entry (i, j) couples degrees ``m + i`` and ``m + j``.  The azimuthal
    integral of cos^2 or sin^2 (pi, or 2 pi for m = 0) is folded in so the
    full-sphere block is the identity.
    """
    if not 0 <= m <= lmax:
        raise DomainError(f"order {m} outside [0, {lmax}]")
    shannon_cap(theta, lmax)
    return next(_blocks(theta, lmax, [m]))[1]


def _canonical_sign(vecs):
    # largest-magnitude entry of each eigenvector positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def solve_cap(spec, selection="shannon"):
    """
    Slepian basis of a spherical cap.

    Parameters
    ----------
    spec : CapSpec
    selection : Selection or str
        ``"shannon"`` keeps ceil(Shannon number) modes, ``"thresh:<mu0>"``
        keeps every mode with eigenvalue above ``mu0``.

    Returns
    -------
    SlepianBasis
        Pole-frame coefficients sorted by eigenvalue (ties: lower order
        first, cosine before sine).  The cap center is applied at
        evaluation time.
    """
    selection = Selection.parse(selection)
    L = spec.lmax
    dim = (L + 1) ** 2
    mus, ms, kinds, ranks, vec_list = [], [], [], [], []
    for m, block in _blocks(spec.theta, L, range(L + 1)):
        try:
            vals, vecs = scipy.linalg.eigh(block)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigensolver failed on order-{m} block: {exc}") from exc
        vals = vals[::-1]
        vecs = _canonical_sign(vecs[:, ::-1])
        for j in range(vals.size):
            for kind in ((0,) if m == 0 else (0, 1)):
                mus.append(vals[j])
                ms.append(m)
                kinds.append(kind)
                ranks.append(j)
                vec_list.append(vecs[:, j])
    mus = np.clip(np.asarray(mus), 0.0, None)
    order = np.lexsort((np.asarray(ranks), np.asarray(kinds), np.asarray(ms), -mus))
    shannon = shannon_cap(spec.theta, L)
    spectrum = mus[order]
    K = select_count(spectrum, selection, shannon)
    coeffs = np.zeros((K, dim))
    for row, idx in enumerate(order[:K]):
        m = ms[idx]
        signed = m if kinds[idx] == 0 else -m
        cols = [sh_index(l, signed) for l in range(m, L + 1)]
        coeffs[row, cols] = vec_list[idx]
    logger.debug("cap theta=%g lmax=%d: K=%d shannon=%.4f", spec.theta, L, K, shannon)
    return SlepianBasis(region=spec, lmax=L, coeffs=coeffs, eigenvalues=spectrum[:K],
                        selection=selection, shannon=shannon, spectrum=spectrum)
