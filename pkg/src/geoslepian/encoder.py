"""
Positional encoders built from SH and Slepian blocks, plus a gridded cache.

Feature layout is ``[global SH | region 1 | ... | region C]``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .basis import SlepianBasis, eval_slepian
from .errors import CapacityError, DomainError
from .sh import SH_CONVENTION, sh_eval

__all__ = [
    "HybridEncoder",
    "GridSpec",
    "FeatureRaster",
    "encode",
    "encode_batch",
    "build_raster",
    "interpolate",
    "DEFAULT_RASTER_BYTES",
]

#: default memory cap for :func:`build_raster`
DEFAULT_RASTER_BYTES = 2 * 1024 ** 3

_CHUNK = 4096


class HybridEncoder:
    """
    Concatenation of an optional global SH block and regional Slepian blocks.

    Parameters
    ----------
    global_lmax : int or None
        Band-limit of the global block; ``None`` drops the block.
    regions : sequence of SlepianBasis
        Regional blocks in output order.
    """

    def __init__(self, global_lmax=None, regions=()):
        if global_lmax is not None:
            if int(global_lmax) != global_lmax or global_lmax < 0:
                raise DomainError("global_lmax must be a nonnegative integer or None")
            global_lmax = int(global_lmax)
        self.global_lmax = global_lmax
        self.regions = tuple(regions)
        for r in self.regions:
            if not isinstance(r, SlepianBasis):
                raise TypeError(f"region blocks must be SlepianBasis, got {type(r).__name__}")

    @property
    def global_dim(self):
        return 0 if self.global_lmax is None else (self.global_lmax + 1) ** 2

    @property
    def dim(self):
        return self.global_dim + sum(r.K for r in self.regions)

    @property
    def block_slices(self):
        """Slices of the output vector: ``[global, region_1, ...]``."""
        out = [slice(0, self.global_dim)]
        start = self.global_dim
        for r in self.regions:
            out.append(slice(start, start + r.K))
            start += r.K
        return out

    def fingerprint(self):
        """sha256 over everything that determines the encoder's output."""
        h = hashlib.sha256()
        h.update(json.dumps({"global_lmax": self.global_lmax,
                             "sh": SH_CONVENTION,
                             "regions": len(self.regions)}, sort_keys=True).encode())
        for r in self.regions:
            reg = r.region
            if getattr(reg, "is_cap", False):
                desc = {"kind": "cap", "theta": reg.theta, "clat": reg.center.lat,
                        "clon": reg.center.lon}
            else:
                desc = {"kind": "mask", "digest": reg.digest}
            desc["lmax"] = r.lmax
            h.update(json.dumps(desc, sort_keys=True).encode())
            h.update(np.ascontiguousarray(r.coeffs, dtype="<f8").tobytes())
        return h.hexdigest()

    def __call__(self, lon, lat):
        return encode(self, lon, lat)

    def __repr__(self):
        return (f"HybridEncoder(global_lmax={self.global_lmax}, "
                f"regions={[r.K for r in self.regions]}, dim={self.dim})")


def encode_batch(enc, lon, lat):
    """Feature matrix (n, dim); row i depends on point i only."""
    lon = np.atleast_1d(np.asarray(lon, float)).ravel()
    lat = np.atleast_1d(np.asarray(lat, float)).ravel()
    if lon.shape != lat.shape:
        raise DomainError("lon and lat differ in length")
    out = np.empty((lon.size, enc.dim))
    if lon.size == 0:
        return out
    slices = enc.block_slices
    if enc.global_lmax is not None:
        for s in range(0, lon.size, _CHUNK):
            out[s:s + _CHUNK, slices[0]] = sh_eval(enc.global_lmax, lon[s:s + _CHUNK],
                                                   lat[s:s + _CHUNK])
    for sl, basis in zip(slices[1:], enc.regions):
        out[:, sl] = eval_slepian(basis, lon, lat)
    return out


def encode(enc, lon, lat):
    """Encode one point (vector) or many (matrix)."""
    if np.ndim(lon) == 0 and np.ndim(lat) == 0:
        return encode_batch(enc, [lon], [lat])[0]
    return encode_batch(enc, lon, lat)


@dataclass(frozen=True)
class GridSpec:
    """Node-registered lon-lat grid: node (i, j) sits at
    ``(lon0 + j*dlon, lat0 + i*dlat)``."""

    lon0: float
    lat0: float
    dlon: float
    dlat: float
    nlon: int
    nlat: int

    def __post_init__(self):
        if self.nlon < 2 or self.nlat < 2:
            raise DomainError("raster needs at least 2 nodes per axis")
        if self.dlon <= 0 or self.dlat <= 0:
            raise DomainError("grid spacing must be positive")
        if self.lat0 < -90 or self.lat0 + (self.nlat - 1) * self.dlat > 90 + 1e-9:
            raise DomainError("grid latitudes outside [-90, 90]")
        if (self.nlon - 1) * self.dlon > 360 + 1e-9:
            raise DomainError("grid longitudes span more than 360 degrees")

    @classmethod
    def global_grid(cls, res):
        """Global grid at ``res`` degrees, poles included, longitude wrapping."""
        nlon = int(round(360.0 / res))
        nlat = int(round(180.0 / res)) + 1
        if abs(nlon * res - 360.0) > 1e-9 or abs((nlat - 1) * res - 180.0) > 1e-9:
            raise DomainError(f"resolution {res} does not divide the globe evenly")
        return cls(lon0=-180.0, lat0=-90.0, dlon=res, dlat=res, nlon=nlon, nlat=nlat)

    @property
    def wraps(self):
        return abs(self.nlon * self.dlon - 360.0) < 1e-9

    @property
    def lons(self):
        return self.lon0 + self.dlon * np.arange(self.nlon)

    @property
    def lats(self):
        return np.minimum(self.lat0 + self.dlat * np.arange(self.nlat), 90.0)

    def as_dict(self):
        return {k: getattr(self, k) for k in ("lon0", "lat0", "dlon", "dlat", "nlon", "nlat")}


@dataclass(frozen=True, eq=False)
class FeatureRaster:
    """Encoder features cached at grid nodes, shape (nlat, nlon, dim)."""

    grid: GridSpec
    features: np.ndarray
    fingerprint: str

    @property
    def dim(self):
        return self.features.shape[2]

    def check(self, enc):
        """Raise if ``enc`` is not the encoder this raster was built from."""
        if enc.fingerprint() != self.fingerprint:
            raise DomainError("raster fingerprint does not match encoder")


def build_raster(enc, grid, max_bytes=DEFAULT_RASTER_BYTES):
    """Evaluate ``enc`` at every node of ``grid``."""
    need = grid.nlat * grid.nlon * enc.dim * 8
    if need > max_bytes:
        raise CapacityError(f"raster needs {need} bytes, cap is {max_bytes}")
    lon2, lat2 = np.meshgrid(grid.lons, grid.lats)
    feats = encode_batch(enc, lon2.ravel(), lat2.ravel())
    return FeatureRaster(grid=grid, features=feats.reshape(grid.nlat, grid.nlon, enc.dim),
                         fingerprint=enc.fingerprint())


def _snap(x):
    r = np.round(x)
    return np.where(np.abs(x - r) < 1e-9, r, x)


def interpolate(raster, lon, lat):
    """
    Bilinear interpolation of cached features.

    Longitudes wrap on global rasters.  Latitudes beyond the outermost node
    rows of a global raster are clamped to those rows; on regional rasters
    anything outside the node extent raises :class:`DomainError`.
    """
    scalar = np.ndim(lon) == 0 and np.ndim(lat) == 0
    lon = np.atleast_1d(np.asarray(lon, float)).ravel()
    lat = np.atleast_1d(np.asarray(lat, float)).ravel()
    g = raster.grid
    F = raster.features
    x = _snap((lon - g.lon0) / g.dlon)
    y = _snap((lat - g.lat0) / g.dlat)
    if g.wraps:
        x = np.mod(x, g.nlon)
        y = np.clip(y, 0.0, g.nlat - 1)
    elif np.any((x < 0) | (x > g.nlon - 1) | (y < 0) | (y > g.nlat - 1)):
        raise DomainError("query point outside raster extent")
    j0 = np.minimum(np.floor(x).astype(int), g.nlon - 1)
    i0 = np.minimum(np.floor(y).astype(int), g.nlat - 1)
    fx = (x - j0)[:, None]
    fy = (y - i0)[:, None]
    j1 = (j0 + 1) % g.nlon if g.wraps else np.minimum(j0 + 1, g.nlon - 1)
    i1 = np.minimum(i0 + 1, g.nlat - 1)
    f00 = F[i0, j0]
    f01 = F[i0, j1]
    f10 = F[i1, j0]
    f11 = F[i1, j1]
    bottom = f00 + fx * (f01 - f00)
    top = f10 + fx * (f11 - f10)
    out = bottom + fy * (top - bottom)
    return out[0] if scalar else out
