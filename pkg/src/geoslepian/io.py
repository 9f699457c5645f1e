"""
Binary persistence for bases, feature rasters, DPSS bases and feature tables.

Every file is one envelope::

    magic (5 bytes) | version (1 byte) | header length n (uint32 LE)
    | header (n bytes UTF-8 JSON, sorted keys) | payload (float64 LE)
    | checksum (8 bytes, BLAKE2b-64 of the payload bytes)

Writes go to a temporary sibling file that is renamed into place.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .basis import Selection, SlepianBasis
from .cap import CapSpec
from .encoder import FeatureRaster, GridSpec
from .errors import CorruptFileError, DomainError
from .sh import SH_CONVENTION
from .temporal import DpssBasis, DpssSpec

__all__ = [
    "VERSION",
    "MAGIC_BASIS",
    "MAGIC_RASTER",
    "MAGIC_DPSS",
    "MAGIC_FEATURES",
    "StoredMask",
    "save_basis",
    "load_basis",
    "save_raster",
    "load_raster",
    "save_dpss",
    "load_dpss",
    "save_features",
    "load_features",
    "read_header",
    "info",
    "atomic_write",
]

VERSION = 1
MAGIC_BASIS = b"SLEPB"
MAGIC_RASTER = b"SLEPR"
MAGIC_DPSS = b"SLEPT"
MAGIC_FEATURES = b"SLEPF"
_MAGICS = {MAGIC_BASIS: "basis", MAGIC_RASTER: "raster", MAGIC_DPSS: "dpss",
           MAGIC_FEATURES: "features"}
_LE = np.dtype("<f8")

# mkstemp creates 0600 files; published artifacts follow the process umask
_UMASK = os.umask(0)
os.umask(_UMASK)


def checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def atomic_write(path, data: bytes):
    """Write ``data`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        os.chmod(tmp, 0o666 & ~_UMASK)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _pack(magic, header, arrays):
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(a, dtype=_LE).tobytes() for a in arrays)
    return (magic + bytes([VERSION]) + struct.pack("<I", len(head)) + head
            + payload + checksum(payload))


def _unpack(path, magic=None, header_only=False):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 10 or blob[:5] not in _MAGICS:
        raise CorruptFileError(f"{path}: unknown magic {blob[:5]!r}")
    if magic is not None and blob[:5] != magic:
        raise CorruptFileError(f"{path}: expected {_MAGICS[magic]} file, "
                               f"found {_MAGICS[blob[:5]]}")
    if blob[5] != VERSION:
        raise CorruptFileError(f"{path}: unsupported version {blob[5]}")
    (n,) = struct.unpack("<I", blob[6:10])
    if 10 + n + 8 > len(blob):
        raise CorruptFileError(f"{path}: truncated header")
    try:
        header = json.loads(blob[10:10 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFileError(f"{path}: unreadable header ({exc})") from None
    if header_only:
        return blob[:5], header, len(blob) - 18 - n
    payload = blob[10 + n:-8]
    if checksum(payload) != blob[-8:]:
        raise CorruptFileError(f"{path}: checksum mismatch")
    if len(payload) % 8:
        raise CorruptFileError(f"{path}: payload is not whole float64 values")
    return blob[:5], header, np.frombuffer(payload, dtype=_LE).astype(float)


def _take(flat, sizes, path):
    if flat.size != sum(sizes):
        raise CorruptFileError(f"{path}: payload holds {flat.size} values, "
                               f"header implies {sum(sizes)}")
    out = []
    start = 0
    for s in sizes:
        out.append(flat[start:start + s])
        start += s
    return out


@dataclass(frozen=True)
class StoredMask:
    """Mask-region descriptor recovered from a basis file (no mask bits)."""

    nlat: int
    nlon: int
    digest: str
    lmax: int

    is_cap = False


def _basis_header(b):
    reg = b.region
    h = {"kind": "cap" if reg.is_cap else "mask", "lmax": b.lmax,
         "selection": str(b.selection), "sh_convention": SH_CONVENTION,
         "K": b.K, "shannon": b.shannon}
    if reg.is_cap:
        h["cap"] = {"theta_deg": reg.theta, "clat": reg.center.lat, "clon": reg.center.lon}
    else:
        nlat, nlon = (reg.nlat, reg.nlon) if isinstance(reg, StoredMask) else reg.grid.shape
        h["mask"] = {"grid": {"nlat": nlat, "nlon": nlon, "kind": "gauss-legendre"},
                     "digest": reg.digest}
    return h


def save_basis(path, basis):
    atomic_write(path, _pack(MAGIC_BASIS, _basis_header(basis),
                             [basis.eigenvalues, basis.coeffs]))


def load_basis(path):
    _, h, flat = _unpack(path, MAGIC_BASIS)
    try:
        if h["sh_convention"] != SH_CONVENTION:
            raise CorruptFileError(f"{path}: SH convention {h['sh_convention']!r} "
                                   f"differs from {SH_CONVENTION!r}")
        L, K = int(h["lmax"]), int(h["K"])
        ev, co = _take(flat, [K, K * (L + 1) ** 2], path)
        if h["kind"] == "cap":
            c = h["cap"]
            region = CapSpec(c["theta_deg"], (c["clon"], c["clat"]), L)
        else:
            m = h["mask"]
            region = StoredMask(m["grid"]["nlat"], m["grid"]["nlon"], m["digest"], L)
        return SlepianBasis(region=region, lmax=L, coeffs=co.reshape(K, -1), eigenvalues=ev,
                            selection=Selection.parse(h["selection"]),
                            shannon=float(h["shannon"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"{path}: bad basis header ({exc})") from None


def save_raster(path, raster):
    h = {"grid": raster.grid.as_dict(), "dim": raster.dim, "fingerprint": raster.fingerprint}
    atomic_write(path, _pack(MAGIC_RASTER, h, [raster.features]))


def load_raster(path):
    _, h, flat = _unpack(path, MAGIC_RASTER)
    try:
        grid = GridSpec(**h["grid"])
        dim = int(h["dim"])
        (f,) = _take(flat, [grid.nlat * grid.nlon * dim], path)
        return FeatureRaster(grid, f.reshape(grid.nlat, grid.nlon, dim), h["fingerprint"])
    except (KeyError, TypeError, DomainError) as exc:
        raise CorruptFileError(f"{path}: bad raster header ({exc})") from None


def save_dpss(path, basis):
    s = basis.spec
    h = {"n": s.n, "w": s.w, "k": s.k}
    atomic_write(path, _pack(MAGIC_DPSS, h,
                             [basis.eigenvalues, basis.sequences, basis.projection]))


def load_dpss(path):
    _, h, flat = _unpack(path, MAGIC_DPSS)
    try:
        spec = DpssSpec(int(h["n"]), float(h["w"]), int(h["k"]))
    except (KeyError, TypeError, DomainError) as exc:
        raise CorruptFileError(f"{path}: bad DPSS header ({exc})") from None
    k, n = spec.k, spec.n
    ev, seq, proj = _take(flat, [k, k * n, k * k], path)
    return DpssBasis(spec, seq.reshape(k, n), ev, proj.reshape(k, k))


def save_features(path, features, meta=None):
    """Row-major (rows, cols) float64 table with optional JSON metadata."""
    features = np.asarray(features, float)
    if features.ndim != 2:
        raise DomainError("feature table must be 2-D")
    h = {"rows": features.shape[0], "cols": features.shape[1], "meta": meta or {}}
    atomic_write(path, _pack(MAGIC_FEATURES, h, [features]))


def load_features(path):
    """Returns (features, meta)."""
    _, h, flat = _unpack(path, MAGIC_FEATURES)
    try:
        r, c = int(h["rows"]), int(h["cols"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"{path}: bad feature header ({exc})") from None
    (f,) = _take(flat, [r * c], path)
    return f.reshape(r, c), h.get("meta", {})


def read_header(path):
    """(kind, header) without reading or checking the payload."""
    magic, h, _ = _unpack(path, header_only=True)
    return _MAGICS[magic], h


def info(path):
    """Header fields plus envelope facts; the checksum is verified."""
    magic, h, flat = _unpack(path)
    out = dict(h)
    out["file_kind"] = _MAGICS[magic]
    out["version"] = VERSION
    out["payload_values"] = int(flat.size)
    return out
