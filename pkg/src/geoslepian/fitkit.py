"""
Ridge-regression harness for judging encoders with a linear head.

Protocol: seeded shuffle into train/val/test, per-column z-scoring fit on
train, ridge strength picked on validation R^2 over a fixed log grid, then
metrics on all three splits.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, IngestError, NumericError
from .sh import GeoPoint, sh_eval

__all__ = [
    "Dataset",
    "SplitSpec",
    "RidgeModel",
    "Standardizer",
    "FitResult",
    "LAMBDA_GRID",
    "CALIFORNIA_ROWS",
    "CALIFORNIA_COLUMNS",
    "split",
    "ridge_fit",
    "metrics",
    "synth_bandlimited",
    "load_california",
    "fit_protocol",
    "fit_seeds",
    "coverage_radii",
    "coverage_curve",
    "monotone_with_tolerance",
]

logger = logging.getLogger(__name__)

#: default ridge grid, 1e-6 .. 1e2
LAMBDA_GRID = tuple(float(x) for x in np.logspace(-6, 2, 9))

CALIFORNIA_ROWS = 20640
#: (longitude, latitude, target) header names in the canonical housing.csv
CALIFORNIA_COLUMNS = ("longitude", "latitude", "median_house_value")
# generous bounding box for the state; rejects swapped or mis-signed columns
_CA_LON = (-124.6, -114.0)
_CA_LAT = (32.4, 42.1)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Points (lon, lat, optional normalized time) with scalar targets."""

    lon: np.ndarray
    lat: np.ndarray
    targets: np.ndarray
    t: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        lon = np.asarray(self.lon, float).ravel()
        lat = np.asarray(self.lat, float).ravel()
        y = np.asarray(self.targets, float).ravel()
        if not (lon.size == lat.size == y.size):
            raise DomainError("lon, lat and targets differ in length")
        if not np.all(np.isfinite(y)):
            raise DomainError("targets must be finite")
        if np.any(np.abs(lat) > 90) or not np.all(np.isfinite(lon)):
            raise DomainError("coordinates out of range")
        object.__setattr__(self, "lon", lon)
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "targets", y)
        if self.t is not None:
            t = np.asarray(self.t, float).ravel()
            if t.size != y.size:
                raise DomainError("t and targets differ in length")
            object.__setattr__(self, "t", t)

    def __len__(self):
        return self.targets.size

    @property
    def points(self):
        return [GeoPoint(a, b) for a, b in zip(self.lon, self.lat)]


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        f = tuple(float(x) for x in self.fractions)
        if len(f) != 3 or min(f) <= 0 or abs(sum(f) - 1.0) > 1e-9:
            raise DomainError(f"split fractions {f} must be three positives summing to 1")
        object.__setattr__(self, "fractions", f)


def split(ds, spec):
    """Seeded permutation cut into (train, val, test) index arrays.

    ``ds`` may be a Dataset or a plain count.
    """
    n = ds if isinstance(ds, (int, np.integer)) else len(ds)
    n_train = int(round(n * spec.fractions[0]))
    n_val = int(round(n * spec.fractions[1]))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise DomainError(f"split of {n} items leaves an empty part "
                          f"({n_train}/{n_val}/{n_test})")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float

    def predict(self, X):
        return np.asarray(X, float) @ self.weights + self.intercept


def ridge_fit(X, y, lam):
    """
    Minimize ``||X w + b - y||^2 + lam ||w||^2`` with ``b`` unpenalized.

    Solved on centered data by Cholesky of ``Xc^T Xc + lam I``.

    Raises
    ------
    NumericError
        The system is singular (only possible for ``lam == 0``).
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size or y.size < 1:
        raise DomainError(f"bad shapes X{X.shape}, y{y.shape}")
    if lam < 0 or not math.isfinite(lam):
        raise DomainError("ridge strength must be finite and >= 0")
    if not np.all(np.isfinite(X)):
        raise DomainError("features must be finite")
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    A = Xc.T @ Xc
    A[np.diag_indices_from(A)] += lam
    rhs = Xc.T @ (y - ym)
    d = A.shape[0]
    if d == 0:
        return RidgeModel(np.zeros(0), float(ym), float(lam))
    scale = max(float(np.abs(np.diag(A)).max()), 1e-300)
    try:
        c, low = scipy.linalg.cho_factor(A)
    except np.linalg.LinAlgError:
        c = None
    # without a ridge term, a factor that exists but is numerically rank
    # deficient is singular too
    deficient = lam == 0 and c is not None and \
        np.diag(c).min() ** 2 < 1e3 * np.finfo(float).eps * scale * d
    if c is None or deficient:
        raise NumericError("normal equations are singular; use a ridge strength > 0")
    w = scipy.linalg.cho_solve((c, low), rhs)
    return RidgeModel(w, float(ym - xm @ w), float(lam))


def metrics(y_true, y_pred):
    """``{"r2", "rmse", "mae"}``.  Zero-variance truth raises DomainError."""
    y_true = np.asarray(y_true, float).ravel()
    y_pred = np.asarray(y_pred, float).ravel()
    if y_true.size != y_pred.size or y_true.size < 2:
        raise DomainError("need two or more paired values")
    res = y_true - y_pred
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DomainError("R^2 undefined: truth has zero variance")
    return {"r2": 1.0 - float((res ** 2).sum()) / ss_tot,
            "rmse": float(np.sqrt((res ** 2).mean())),
            "mae": float(np.abs(res).mean())}


def synth_bandlimited(lmax, seed, n_points):
    """Random field ``sum c_lm Y_lm`` (c ~ N(0,1)) sampled at area-uniform points."""
    if int(lmax) != lmax or lmax < 0:
        raise DomainError("lmax must be a nonnegative integer")
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((lmax + 1) ** 2)
    lon = rng.uniform(-180.0, 180.0, n_points)
    lat = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, n_points)))
    y = sh_eval(int(lmax), lon, lat) @ coeffs
    return Dataset(lon, lat, y, name=f"synth-L{lmax}-s{seed}")


def load_california(path, expect_rows=CALIFORNIA_ROWS):
    """
    Read the California housing CSV and min-max scale the target to [0, 1].

    Required header columns are :data:`CALIFORNIA_COLUMNS`; other columns
    are ignored.  Any missing, non-numeric or out-of-state value raises
    :class:`IngestError` naming the line.
    """
    lon, lat, y = [], [], []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty file", 1) from None
        header = [h.strip() for h in header]
        missing = [c for c in CALIFORNIA_COLUMNS if c not in header]
        if missing:
            raise IngestError(f"missing columns {missing}", 1)
        cols = [header.index(c) for c in CALIFORNIA_COLUMNS]
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            try:
                a, b, v = (float(row[c]) for c in cols)
            except (IndexError, ValueError):
                raise IngestError("missing or non-numeric value", line) from None
            if not (_CA_LON[0] <= a <= _CA_LON[1] and _CA_LAT[0] <= b <= _CA_LAT[1]):
                raise IngestError(f"point ({a}, {b}) outside the California extent", line)
            if not math.isfinite(v):
                raise IngestError("non-finite target", line)
            lon.append(a)
            lat.append(b)
            y.append(v)
    if expect_rows is not None and len(y) != expect_rows:
        raise IngestError(f"expected {expect_rows} data rows, found {len(y)}")
    y = np.asarray(y)
    lo, hi = y.min(), y.max()
    if hi == lo:
        raise IngestError("target column is constant")
    return Dataset(lon, lat, (y - lo) / (hi - lo), name="california")


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-column z-score; constant columns pass through centered."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std < 1e-12 * max(1.0, float(np.abs(mean).max(initial=0.0)))] = 1.0
        return cls(mean, std)

    def __call__(self, X):
        return (X - self.mean) / self.scale


@dataclass
class FitResult:
    lam: float
    metrics: dict
    sizes: dict
    seed: int
    val_curve: list = field(default_factory=list)
    test_index: np.ndarray | None = None
    test_pred: np.ndarray | None = None


def fit_protocol(X, y, spec, lambda_grid=LAMBDA_GRID):
    """
    Split, standardize, choose lambda on validation R^2, report all splits.

    Ties on validation R^2 go to the larger lambda.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float).ravel()
    tr, va, te = split(y.size, spec)
    std = Standardizer.fit(X[tr])
    Xtr, Xva, Xte = std(X[tr]), std(X[va]), std(X[te])
    best = None
    curve = []
    for lam in sorted(lambda_grid):
        try:
            model = ridge_fit(Xtr, y[tr], lam)
        except NumericError:
            curve.append((lam, None))
            continue
        r2 = metrics(y[va], model.predict(Xva))["r2"]
        curve.append((lam, r2))
        if best is None or r2 >= best[0]:
            best = (r2, model)
    if best is None:
        raise NumericError("every ridge strength in the grid was singular")
    model = best[1]
    pred_te = model.predict(Xte)
    out = {"train": metrics(y[tr], model.predict(Xtr)),
           "val": metrics(y[va], model.predict(Xva)),
           "test": metrics(y[te], pred_te)}
    logger.debug("seed %d: lambda=%g test r2=%.4f", spec.seed, model.lam, out["test"]["r2"])
    return FitResult(lam=model.lam, metrics=out, seed=spec.seed,
                     sizes={"train": tr.size, "val": va.size, "test": te.size},
                     val_curve=curve, test_index=te, test_pred=pred_te)


def fit_seeds(X, y, seeds, fractions=(0.6, 0.2, 0.2), lambda_grid=LAMBDA_GRID):
    """Run :func:`fit_protocol` per seed; returns (per-seed results, mean metrics)."""
    runs = [fit_protocol(X, y, SplitSpec(fractions, s), lambda_grid) for s in seeds]
    mean = {part: {k: float(np.mean([r.metrics[part][k] for r in runs]))
                   for k in ("r2", "rmse", "mae")}
            for part in ("train", "val", "test")}
    return runs, mean


def coverage_radii(ds, center, fractions=(0.10, 0.25, 0.50, 0.75, 1.00)):
    """Cap radii (degrees) around ``center`` = (lon, lat) enclosing the given
    fractions of the dataset's points."""
    from .cap import angular_distance

    d = angular_distance(center[0], center[1], ds.lon, ds.lat)
    return [float(np.quantile(d, f)) for f in fractions]


def coverage_curve(ds, center, radii, lmax_r=80, lmax_g=10, seeds=range(5),
                   selection="thresh:0.05", lambda_grid=LAMBDA_GRID):
    """
    Linear-head accuracy as the regional cap grows.

    For each radius a hybrid encoder (global ``lmax_g`` plus one cap of that
    radius at ``lmax_r``) is fit with :func:`fit_protocol` per seed; R^2 is
    reported on all test points and on the test points inside the cap.

    Returns
    -------
    list of dict
        ``radius``, ``coverage`` (fraction of all points in the cap), ``K``,
        ``r2_test`` and ``r2_within`` (seed means).
    """
    from .cap import CapSpec, angular_distance, solve_cap
    from .encoder import HybridEncoder, encode_batch

    d = angular_distance(center[0], center[1], ds.lon, ds.lat)
    out = []
    for radius in radii:
        basis = solve_cap(CapSpec(radius, center, lmax_r), selection)
        X = encode_batch(HybridEncoder(lmax_g, [basis]), ds.lon, ds.lat)
        within, full = [], []
        for s in seeds:
            res = fit_protocol(X, ds.targets, SplitSpec(seed=s), lambda_grid)
            te = res.test_index
            inside = d[te] <= radius
            full.append(res.metrics["test"]["r2"])
            within.append(metrics(ds.targets[te][inside], res.test_pred[inside])["r2"])
        out.append({"radius": float(radius), "coverage": float(np.mean(d <= radius)),
                    "K": basis.K, "r2_test": float(np.mean(full)),
                    "r2_within": float(np.mean(within))})
        logger.info("radius %.3f: K=%d within-cap r2=%.4f", radius, basis.K, out[-1]["r2_within"])
    return out


def monotone_with_tolerance(values, tol=0.01, max_inversions=1):
    """True if ``values`` never decrease, allowing up to ``max_inversions``
    drops each no larger than ``tol``."""
    drops = [a - b for a, b in zip(values, values[1:]) if b < a]
    return len(drops) <= max_inversions and all(x <= tol for x in drops)
