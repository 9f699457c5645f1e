"""
Concentration problem for arbitrary regions given as a grid mask.

The region is sampled on a Gauss-Legendre x uniform-longitude grid; each
node counts with its full quadrature weight when inside.  The dense
(lmax+1)**2 square concentration matrix is assembled from the inside nodes
and diagonalized directly.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import Selection, SlepianBasis, select_count
from .errors import CapacityError, DomainError, IngestError, NumericError
from .sh import QuadratureGrid, build_quadrature, sh_eval

__all__ = [
    "MAX_DENSE_LMAX",
    "MaskRaster",
    "MaskSpec",
    "mask_concentration_matrix",
    "solve_mask",
    "read_mask_text",
    "write_mask_text",
    "read_mask",
]

logger = logging.getLogger(__name__)

#: the dense path is refused above this band-limit (dim 4096)
MAX_DENSE_LMAX = 63

_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class MaskRaster:
    """Cell-registered lon-lat boolean raster.

    ``inside[i, j]`` covers latitudes ``south + i*dlat .. south + (i+1)*dlat``
    and longitudes ``west + j*dlon .. west + (j+1)*dlon``; row 0 is the
    southernmost row.
    """

    west: float
    south: float
    dlon: float
    dlat: float
    inside: np.ndarray

    @property
    def is_global_lon(self):
        return abs(self.inside.shape[1] * self.dlon - 360.0) < 1e-9

    def sample(self, lon, lat):
        """Nearest-cell lookup; points off the raster are outside."""
        lon = np.asarray(lon, float)
        lat = np.asarray(lat, float)
        nrows, ncols = self.inside.shape
        i = np.floor((lat - self.south) / self.dlat).astype(int)
        # north edge of the top row belongs to that row
        i = np.where(lat == self.south + nrows * self.dlat, nrows - 1, i)
        x = (lon - self.west) / self.dlon
        if self.is_global_lon:
            x = np.mod(x, ncols)
        j = np.floor(x).astype(int)
        ok = (i >= 0) & (i < nrows) & (j >= 0) & (j < ncols)
        out = np.zeros(lon.shape, dtype=bool)
        out[ok] = self.inside[i[ok], j[ok]]
        return out


def read_mask_text(path):
    """
    Read an ESRI ASCII grid of 0/1 values.

    Header keys (case-insensitive): ``ncols``, ``nrows``, ``xllcorner`` or
    ``xllcenter``, ``yllcorner`` or ``yllcenter``, ``cellsize`` (or
    ``dx``/``dy``), optional ``nodata_value`` (treated as outside).  Data
    rows run north to south.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = {}
    lineno = 0
    while lineno < len(lines):
        parts = lines[lineno].split()
        if not parts:
            lineno += 1
            continue
        if parts[0][0].isalpha():
            if len(parts) != 2:
                raise IngestError(f"bad header line {lines[lineno]!r}", lineno + 1)
            try:
                header[parts[0].lower()] = float(parts[1])
            except ValueError:
                raise IngestError(f"bad header value {parts[1]!r}", lineno + 1) from None
            lineno += 1
        else:
            break
    for key in ("ncols", "nrows"):
        if key not in header:
            raise IngestError(f"missing header key {key!r}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    dlon = header.get("dx", header.get("cellsize"))
    dlat = header.get("dy", header.get("cellsize"))
    if dlon is None or dlat is None or dlon <= 0 or dlat <= 0:
        raise IngestError("missing or non-positive cell size")
    if "xllcorner" in header:
        west = header["xllcorner"]
    elif "xllcenter" in header:
        west = header["xllcenter"] - dlon / 2
    else:
        raise IngestError("missing xllcorner/xllcenter")
    if "yllcorner" in header:
        south = header["yllcorner"]
    elif "yllcenter" in header:
        south = header["yllcenter"] - dlat / 2
    else:
        raise IngestError("missing yllcorner/yllcenter")
    nodata = header.get("nodata_value")
    rows = []
    for k in range(lineno, len(lines)):
        parts = lines[k].split()
        if not parts:
            continue
        if len(parts) != ncols:
            raise IngestError(f"expected {ncols} values, got {len(parts)}", k + 1)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise IngestError("non-numeric raster value", k + 1) from None
        row = []
        for v in vals:
            if nodata is not None and v == nodata:
                row.append(False)
            elif v in (0.0, 1.0):
                row.append(v == 1.0)
            else:
                raise IngestError(f"mask value {v} is not 0 or 1", k + 1)
        rows.append(row)
    if len(rows) != nrows:
        raise IngestError(f"expected {nrows} data rows, got {len(rows)}")
    inside = np.array(rows, dtype=bool)[::-1]
    return MaskRaster(west=west, south=south, dlon=dlon, dlat=dlat, inside=inside)


def write_mask_text(path, raster):
    nrows, ncols = raster.inside.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ncols {ncols}\nnrows {nrows}\n")
        fh.write(f"xllcorner {raster.west!r}\nyllcorner {raster.south!r}\n")
        if raster.dlon == raster.dlat:
            fh.write(f"cellsize {raster.dlon!r}\n")
        else:
            fh.write(f"dx {raster.dlon!r}\ndy {raster.dlat!r}\n")
        for row in raster.inside[::-1]:
            fh.write(" ".join("1" if v else "0" for v in row) + "\n")


def read_mask(path):
    """Read a mask from an ESRI ASCII grid or a one-channel feature raster file."""
    with open(path, "rb") as fh:
        head = fh.read(5)
    if head == b"SLEPR":
        from .io import load_raster

        fr = load_raster(path)
        if fr.dim != 1:
            raise IngestError(f"mask raster must have one channel, found {fr.dim}")
        g = fr.grid
        inside = fr.features[:, :, 0] > 0.5
        return MaskRaster(west=g.lon0 - g.dlon / 2, south=g.lat0 - g.dlat / 2,
                          dlon=g.dlon, dlat=g.dlat, inside=inside)
    return read_mask_text(path)


@dataclass(frozen=True, eq=False)
class MaskSpec:
    """Boolean mask on a quadrature grid plus the regional band-limit."""

    grid: QuadratureGrid
    mask: np.ndarray
    lmax: int

    is_cap = False

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.grid.shape:
            raise DomainError(f"mask shape {mask.shape} != grid shape {self.grid.shape}")
        if not mask.any():
            raise DomainError("mask has no inside cells")
        if int(self.lmax) != self.lmax or self.lmax < 0:
            raise DomainError("lmax must be a nonnegative integer")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "lmax", int(self.lmax))

    @classmethod
    def from_function(cls, inside, lmax, nlat=None, nlon=None):
        """Build from a predicate ``inside(lon, lat) -> bool array``."""
        grid = _grid_for(lmax, nlat, nlon)
        lon, lat = grid.points()
        return cls(grid, np.asarray(inside(lon, lat), bool).reshape(grid.shape), lmax)

    @classmethod
    def from_raster(cls, raster, lmax, nlat=None, nlon=None):
        """Resample a :class:`MaskRaster` onto a quadrature grid."""
        grid = _grid_for(lmax, nlat, nlon)
        lon, lat = grid.points()
        return cls(grid, raster.sample(lon, lat).reshape(grid.shape), lmax)

    @property
    def area(self):
        """Quadrature-measured area in steradians."""
        return float(self.grid.weights[self.mask].sum())

    @property
    def area_fraction(self):
        return self.area / (4.0 * np.pi)

    @property
    def digest(self):
        """sha256 over the grid shape and packed mask bits."""
        h = hashlib.sha256()
        h.update(np.asarray(self.grid.shape, dtype="<i8").tobytes())
        h.update(np.packbits(self.mask).tobytes())
        return h.hexdigest()


def _grid_for(lmax, nlat, nlon):
    nlat = lmax + 1 if nlat is None else int(nlat)
    nlon = 2 * lmax + 1 if nlon is None else int(nlon)
    return build_quadrature(nlat, nlon)


def mask_concentration_matrix(spec):
    """
    Dense concentration matrix ``K_ij = sum_p w_p mask_p Y_i(x_p) Y_j(x_p)``.

    Raises
    ------
    CapacityError
        ``lmax`` above :data:`MAX_DENSE_LMAX`.
    DomainError
        Grid not exact to degree 2*lmax, or empty mask.
    """
    L = spec.lmax
    if L > MAX_DENSE_LMAX:
        raise CapacityError(
            f"dense mask path limited to lmax <= {MAX_DENSE_LMAX} "
            f"(requested {L}, dim {(L + 1) ** 2}); use a cap for higher band-limits")
    if spec.grid.nlat < L + 1 or spec.grid.nlon < 2 * L + 1:
        raise DomainError(
            f"grid {spec.grid.shape} not exact to degree {2 * L}: "
            f"need nlat >= {L + 1}, nlon >= {2 * L + 1}")
    lon, lat = spec.grid.points()
    sel = spec.mask.ravel()
    if not sel.any():
        raise DomainError("mask has no inside cells")
    lon = lon[sel]
    lat = lat[sel]
    w = spec.grid.weights.ravel()[sel]
    dim = (L + 1) ** 2
    K = np.zeros((dim, dim))
    for s in range(0, lon.size, _CHUNK):
        Y = sh_eval(L, lon[s:s + _CHUNK], lat[s:s + _CHUNK])
        K += (Y * w[s:s + _CHUNK, None]).T @ Y
    return 0.5 * (K + K.T)


def solve_mask(spec, selection="shannon"):
    """
    Slepian basis of a masked region via the dense eigenproblem.

    ``shannon`` selection uses the trace of the assembled matrix.  Ties in
    eigenvalue are ordered by the larger leading coefficient first.
    """
    selection = Selection.parse(selection)
    K = mask_concentration_matrix(spec)
    try:
        vals, vecs = scipy.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed on mask matrix: {exc}") from exc
    vals = np.clip(vals, 0.0, None)
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    lead = np.abs(lead)
    order = np.lexsort((-lead, -vals))
    vals = vals[order]
    vecs = vecs[:, order]
    shannon = float(np.trace(K))
    k = select_count(vals, selection, shannon)
    logger.debug("mask lmax=%d: K=%d trace=%.6f", spec.lmax, k, shannon)
    return SlepianBasis(region=spec, lmax=spec.lmax, coeffs=vecs[:, :k].T,
                        eigenvalues=vals[:k], selection=selection, shannon=shannon,
                        spectrum=vals)
