"""
Discrete prolate spheroidal sequences as a temporal encoder.

Sequences of length ``n`` live on knots mapped affinely onto t in [-1, 1]
and are interpolated with natural cubic splines for continuous time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.interpolate
import scipy.linalg

from .errors import CapacityError, DomainError, NumericError

__all__ = [
    "MAX_DPSS_N",
    "DpssSpec",
    "DpssBasis",
    "dpss_matrix",
    "dpss_solve",
    "time_encode",
    "fourier_time",
    "legendre_time",
    "spacetime_encode",
]

#: dense guard on the sequence length
MAX_DPSS_N = 8192


@dataclass(frozen=True)
class DpssSpec:
    """Length ``n``, normalized half-bandwidth ``w`` and retained count ``k``.

    ``k`` defaults to floor(2 n w).  The time-bandwidth product NW maps to
    ``w = NW / n``.
    """

    n: int
    w: float
    k: int | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("sequence length must be an integer >= 2")
        if not 0.0 < self.w < 0.5:
            raise DomainError(f"half-bandwidth {self.w} outside (0, 0.5)")
        k = self.k
        if k is None:
            k = math.floor(2 * self.n * self.w + 1e-9)
        if int(k) != k or not 1 <= k <= self.n:
            raise DomainError(f"retained count {k} outside [1, {self.n}]")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "w", float(self.w))
        object.__setattr__(self, "k", int(k))

    @classmethod
    def from_nw(cls, n, nw, k=None):
        return cls(n, nw / n, k)

    @property
    def shannon(self):
        return 2.0 * self.n * self.w


def dpss_matrix(n, w):
    """Symmetric Toeplitz matrix with 2w on the diagonal and
    sin(2 pi w d)/(pi d) at offset d."""
    DpssSpec(n, w, 1)
    return scipy.linalg.toeplitz(_column(n, w))


def _column(n, w):
    d = np.arange(1, n)
    col = np.empty(n)
    col[0] = 2.0 * w
    col[1:] = np.sin(2.0 * np.pi * w * d) / (np.pi * d)
    return col


def _sign_fix(v, k):
    # even modes: positive mean; odd (antisymmetric) modes: first entry that
    # stands clear of round-off positive
    if k % 2 == 0:
        s = v.sum()
    else:
        big = np.flatnonzero(np.abs(v) > 1e-6 * np.abs(v).max())
        s = v[big[0]]
    return -v if s < 0 else v


@dataclass(frozen=True, eq=False)
class DpssBasis:
    """
    Retained sequences, their concentrations and the output projection.

    Attributes
    ----------
    spec : DpssSpec
    sequences : ndarray, shape (k, n)
        Orthonormal rows, most concentrated first.
    eigenvalues : ndarray, shape (k,)
        Fraction of each row's energy inside [-w, w].
    projection : ndarray, shape (k, k)
        Linear map applied after interpolation (identity by default).
    """

    spec: DpssSpec
    sequences: np.ndarray
    eigenvalues: np.ndarray
    projection: np.ndarray

    def __post_init__(self):
        k, n = self.spec.k, self.spec.n
        seq = np.array(self.sequences, dtype=float)
        ev = np.array(self.eigenvalues, dtype=float)
        proj = np.array(self.projection, dtype=float)
        if seq.shape != (k, n) or ev.shape != (k,) or proj.shape != (k, k):
            raise DomainError("DPSS array shapes do not match spec")
        for name, arr in (("sequences", seq), ("eigenvalues", ev), ("projection", proj)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self):
        return self.spec.k

    @cached_property
    def knots(self):
        n = self.spec.n
        return -1.0 + 2.0 * np.arange(n) / (n - 1)

    @cached_property
    def interpolant(self):
        return scipy.interpolate.CubicSpline(self.knots, self.sequences.T, bc_type="natural")

    @cached_property
    def spectrum(self):
        """Every eigenvalue of the Toeplitz matrix, descending (dense solve)."""
        B = dpss_matrix(self.spec.n, self.spec.w)
        return scipy.linalg.eigvalsh(B)[::-1]

    def with_projection(self, projection):
        return DpssBasis(self.spec, self.sequences, self.eigenvalues, projection)

    def with_random_orthogonal(self, seed):
        """Copy whose projection is a seeded random orthogonal matrix."""
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.standard_normal((self.dim, self.dim)))
        return self.with_projection(q * np.sign(np.diag(r)))

    def __call__(self, t):
        return time_encode(self, t)


def dpss_solve(spec):
    """
    Leading DPSS for ``spec``.

    Eigenvectors come from the tridiagonal matrix that commutes with the
    Toeplitz concentration matrix (same eigenvectors, well separated
    eigenvalues); concentrations are their Rayleigh quotients on the
    Toeplitz matrix.
    """
    n, w, k = spec.n, spec.w, spec.k
    if n > MAX_DPSS_N:
        raise CapacityError(f"sequence length {n} above dense guard {MAX_DPSS_N}")
    i = np.arange(n)
    diag = ((n - 1 - 2 * i) / 2.0) ** 2 * np.cos(2 * np.pi * w)
    off = i[1:] * (n - i[1:]) / 2.0
    try:
        _, vecs = scipy.linalg.eigh_tridiagonal(diag, off, select="i",
                                                select_range=(n - k, n - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"tridiagonal eigensolver failed: {exc}") from exc
    vecs = vecs[:, ::-1]
    seq = np.stack([_sign_fix(vecs[:, j], j) for j in range(k)])
    col = _column(n, w)
    Bv = scipy.linalg.matmul_toeplitz(col, seq.T)
    mu = np.clip(np.einsum("ij,ji->i", seq, Bv), 0.0, 1.0)
    return DpssBasis(spec, seq, mu, np.eye(k))


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(np.abs(t) <= 1.0)):
        raise DomainError("normalized time outside [-1, 1]")
    return t


def time_encode(basis, t):
    """Projected, spline-interpolated sequences at ``t``; (k,) or (len(t), k)."""
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t).ravel()
    n = basis.spec.n
    pos = (t + 1.0) * (n - 1) / 2.0
    idx = np.round(pos).astype(int)
    on_knot = np.abs(pos - idx) < 1e-9
    raw = basis.interpolant(t)
    raw[on_knot] = basis.sequences[:, idx[on_knot]].T
    out = raw @ basis.projection.T
    return out[0] if scalar else out


def fourier_time(k, t):
    """[sin(pi t), cos(pi t), ..., sin(k pi t), cos(k pi t)]."""
    if k < 1:
        raise DomainError("need k >= 1")
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t).ravel()[:, None]
    freq = np.pi * np.arange(1, k + 1)
    out = np.empty((t.shape[0], 2 * k))
    out[:, 0::2] = np.sin(freq * t)
    out[:, 1::2] = np.cos(freq * t)
    return out[0] if scalar else out


def legendre_time(k, t):
    """[P_0(t), ..., P_{k-1}(t)] by Bonnet's recurrence."""
    if k < 1:
        raise DomainError("need k >= 1")
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t).ravel()
    out = np.empty((t.size, k))
    out[:, 0] = 1.0
    if k > 1:
        out[:, 1] = t
    for j in range(2, k):
        out[:, j] = ((2 * j - 1) * t * out[:, j - 1] - (j - 1) * out[:, j - 2]) / j
    return out[0] if scalar else out


def spacetime_encode(enc, temporal, lon, lat, t):
    """``[spatial(lon, lat) | temporal(t)]``.

    ``temporal`` is a :class:`DpssBasis` or any callable mapping t to
    features (for example ``functools.partial(fourier_time, 8)``).
    """
    from .encoder import encode

    t = _check_t(t)
    if isinstance(temporal, DpssBasis):
        tf = time_encode(temporal, t)
    else:
        tf = temporal(t)
    sf = encode(enc, lon, lat)
    if sf.ndim == 1 and np.ndim(tf) == 1:
        return np.concatenate([sf, tf])
    sf = np.atleast_2d(sf)
    tf = np.atleast_2d(tf)
    if tf.shape[0] == 1 and sf.shape[0] > 1:
        tf = np.repeat(tf, sf.shape[0], axis=0)
    if sf.shape[0] != tf.shape[0]:
        raise DomainError("spatial and temporal inputs differ in length")
    return np.hstack([sf, tf])
