"""Shared Slepian basis container, mode-selection rules and evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError
from .sh import ShBasisSpec, _trig_table, legendre_rows, to_polar

__all__ = ["Selection", "SlepianBasis", "eval_slepian", "select_count"]

# points per chunk when evaluating large point sets
_CHUNK = 2048


@dataclass(frozen=True)
class Selection:
    """Mode-selection rule: ``shannon`` (ceil of the Shannon number) or
    ``threshold`` (keep every mode with eigenvalue above ``mu0``)."""

    rule: str = "shannon"
    mu0: float | None = None

    def __post_init__(self):
        if self.rule not in ("shannon", "threshold"):
            raise DomainError(f"unknown selection rule {self.rule!r}")
        if self.rule == "threshold":
            if self.mu0 is None or not 0.0 < self.mu0 < 1.0:
                raise DomainError("threshold selection needs 0 < mu0 < 1")

    @classmethod
    def parse(cls, text):
        """Parse ``"shannon"`` or ``"thresh:<mu0>"``."""
        if isinstance(text, Selection):
            return text
        text = str(text).strip()
        if text == "shannon":
            return cls("shannon")
        if text.startswith("thresh:"):
            try:
                mu0 = float(text.split(":", 1)[1])
            except ValueError:
                raise DomainError(f"bad threshold in {text!r}") from None
            return cls("threshold", mu0)
        raise DomainError(f"unknown selection {text!r}")

    def __str__(self):
        return "shannon" if self.rule == "shannon" else f"thresh:{self.mu0!r}"


def select_count(eigenvalues, selection, shannon_number):
    """Number of leading modes retained by ``selection``."""
    dim = len(eigenvalues)
    if selection.rule == "shannon":
        # guard against 36.000000000001-style round-off lifting the ceiling
        k = math.ceil(shannon_number - 1e-9)
    else:
        k = int(np.count_nonzero(np.asarray(eigenvalues) > selection.mu0))
    return max(0, min(k, dim))


def _rotation_matrix(clat, clon):
    """Rz(clon) @ Ry(90 - clat): carries the north pole onto the cap center."""
    b = np.radians(90.0 - clat)
    a = np.radians(clon)
    ry = np.array([[np.cos(b), 0.0, np.sin(b)],
                   [0.0, 1.0, 0.0],
                   [-np.sin(b), 0.0, np.cos(b)]])
    rz = np.array([[np.cos(a), -np.sin(a), 0.0],
                   [np.sin(a), np.cos(a), 0.0],
                   [0.0, 0.0, 1.0]])
    return rz @ ry


def _cartesian(lon, lat):
    t, u, lam = to_polar(lon, lat)
    return np.stack([u * np.cos(lam), u * np.sin(lam), t], axis=-1)


def _apply_inverse(R, xyz):
    # R^T x written out elementwise so each point is computed independently
    # of how many others share the call
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    return np.stack([x * R[0, j] + y * R[1, j] + z * R[2, j] for j in range(3)], axis=-1)


def _polar_from_cartesian(xyz):
    x, y, z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    u = np.hypot(x, y)
    t = np.clip(z, -1.0, 1.0)
    # renormalize against rotation round-off
    r = np.hypot(u, t)
    u = u / r
    t = t / r
    lam = np.arctan2(y, x)
    pole = u == 0.0
    lam = np.where(pole, 0.0, lam)
    return t, u, lam


@dataclass(frozen=True, eq=False)
class SlepianBasis:
    """
    K concentrated modes expressed in real SH coefficients.

    Attributes
    ----------
    region : CapSpec or MaskSpec
    coeffs : ndarray, shape (K, (lmax+1)**2)
        Row n holds the SH coefficients of mode n.  For caps these are the
        coefficients of the pole-centered modes; evaluation rotates the
        query point into the pole frame.
    eigenvalues : ndarray, shape (K,)
        Concentration ratios, non-increasing.
    selection : Selection
    shannon : float
        Shannon number of the region at this band-limit.
    spectrum : ndarray
        Eigenvalues of every mode before truncation.
    """

    region: Any
    lmax: int
    coeffs: np.ndarray
    eigenvalues: np.ndarray
    selection: Selection
    shannon: float
    spectrum: np.ndarray | None = None

    def __post_init__(self):
        for name in ("coeffs", "eigenvalues"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] != (self.lmax + 1) ** 2:
            raise DomainError("coefficient matrix does not match lmax")
        if self.coeffs.shape[0] != self.eigenvalues.size:
            raise DomainError("coefficient rows and eigenvalues differ in count")

    @property
    def K(self):
        return self.coeffs.shape[0]

    @property
    def dim(self):
        return self.K

    @property
    def rotated(self):
        return getattr(self.region, "is_cap", False)

    def __call__(self, lon, lat):
        return eval_slepian(self, lon, lat)


def _mode_structure(basis):
    """Evaluation plan when every row lives on a single signed order, else None.

    Returns ``(order, is_sine, profile_order, profile_H, inverse)``: row k
    uses radial profile ``inverse[k]``, whose coefficient at degree l is
    ``profile_H[l, inverse[k]]``.
    """
    spec = ShBasisSpec(basis.lmax)
    ords = spec.orders
    degs = spec.degrees
    K = basis.K
    order = np.zeros(K, dtype=int)
    sine = np.zeros(K, dtype=bool)
    H = np.zeros((basis.lmax + 1, K))
    for k, row in enumerate(basis.coeffs):
        nz = np.flatnonzero(row)
        if nz.size == 0:
            continue
        signed = np.unique(ords[nz])
        if signed.size != 1:
            return None
        m = int(signed[0])
        order[k] = abs(m)
        sine[k] = m < 0
        H[degs[nz], k] = row[nz]
    # cosine/sine partners share a radial profile; evaluate each profile once
    key = np.vstack([order[None, :], H])
    _, first, inverse = np.unique(key, axis=1, return_index=True, return_inverse=True)
    return order, sine, order[first], H[:, first], inverse.ravel()


def _eval_polar(basis, t, u, lam, structure):
    n = t.size
    K = basis.K
    out = np.empty((n, K))
    if K == 0:
        return out
    if structure is not None:
        order, sine, p_order, p_H, inverse = structure
        mmax = int(order.max())
        # accumulate the radial sums degree by degree as the recurrence runs;
        # elementwise only, so each row is independent of the batch
        radial = np.zeros((n, p_order.size))
        for l, P in enumerate(legendre_rows(t, basis.lmax, mmax=mmax, u=u)):
            radial += P[:, p_order] * p_H[l]
        cs, sn = _trig_table(lam, mmax)
        out[:] = radial[:, inverse] * np.where(sine, sn[:, order], cs[:, order])
    else:
        from .sh import _sh_from_polar

        Y = _sh_from_polar(basis.lmax, t, u, lam)
        for k in range(K):
            row = basis.coeffs[k]
            nz = np.flatnonzero(row)
            out[:, k] = (np.ascontiguousarray(Y[:, nz]) * row[nz]).sum(axis=1)
    return out


def eval_slepian(basis, lon, lat):
    """
    Evaluate ``[g_1(x), ..., g_K(x)]`` at one or many points.

    Cap bases rotate the query point into the pole frame of the cap and
    evaluate the pole-centered expansion there; mask bases evaluate in the
    original frame.  Scalar inputs return shape (K,), arrays (n, K).
    """
    scalar = np.ndim(lon) == 0 and np.ndim(lat) == 0
    lon, lat = np.broadcast_arrays(np.asarray(lon, float), np.asarray(lat, float))
    lon = lon.ravel()
    lat = lat.ravel()
    structure = _cached_structure(basis)
    out = np.empty((lon.size, basis.K))
    for s in range(0, lon.size, _CHUNK):
        sl = slice(s, s + _CHUNK)
        if basis.rotated:
            R = _rotation_matrix(basis.region.center.lat, basis.region.center.lon)
            xyz = _cartesian(lon[sl], lat[sl])
            t, u, lam = _polar_from_cartesian(_apply_inverse(R, xyz))
        else:
            t, u, lam = to_polar(lon[sl], lat[sl])
        out[sl] = _eval_polar(basis, t, u, lam, structure)
    return out[0] if scalar else out


_STRUCTURE_ATTR = "_mode_structure_cache"


def _cached_structure(basis):
    try:
        return object.__getattribute__(basis, _STRUCTURE_ATTR)
    except AttributeError:
        s = _mode_structure(basis)
        object.__setattr__(basis, _STRUCTURE_ATTR, s)
        return s
