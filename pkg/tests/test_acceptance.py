"""
Acceptance criteria 1-12.  Each test is one criterion; the terminal summary
(see conftest.py) prints one PASS/FAIL/SKIP line per criterion with timing.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import california_csv
from geoslepian import (CapSpec, DpssSpec, GridSpec, HybridEncoder, MaskSpec, angular_distance,
                        build_quadrature, build_raster, dpss_matrix, dpss_solve, encode_batch,
                        eval_slepian, legendre_normalized, sh_eval, shannon_cap, solve_cap,
                        solve_mask)
from geoslepian import io as gio
from geoslepian.cli import main as cli_main
from geoslepian.fitkit import (coverage_curve, coverage_radii, fit_seeds, load_california,
                               monotone_with_tolerance)
from oracles import band_concentration, cap_quadrature, naive_legendre_float32

CALIFORNIA_CENTER = (-119.5, 37.0)
SEEDS = range(5)


@contextmanager
def budget(seconds):
    """Fail if the block takes longer than its runtime budget."""
    start = time.perf_counter()
    yield
    took = time.perf_counter() - start
    assert took < seconds, f"took {took:.1f} s, budget {seconds} s"


# 1 ----------------------------------------------------------------------

def test_criterion_01_sh_suite():
    with budget(10):
        g = build_quadrature(21, 41)
        lon, lat = g.points()
        Y = sh_eval(20, lon, lat)
        gram = (Y * g.weights.ravel()[:, None]).T @ Y
        assert np.abs(gram - np.eye(441)).max() < 1e-10

        rng = np.random.default_rng(1)
        lon = rng.uniform(-180, 180, 200)
        lat = np.degrees(np.arcsin(rng.uniform(-1, 1, 200)))
        Y = sh_eval(50, lon, lat)
        for l in range(51):
            s = (Y[:, l * l:(l + 1) ** 2] ** 2).sum(axis=1)
            assert np.abs(s / ((2 * l + 1) / (4 * math.pi)) - 1).max() < 1e-10

        for pole in (90.0, -90.0):
            ref = sh_eval(40, 0.0, pole).tobytes()
            for lon in rng.uniform(-180, 180, 50):
                assert sh_eval(40, lon, pole).tobytes() == ref


# 2 ----------------------------------------------------------------------

def test_criterion_02_stability():
    with budget(30):
        first_bad = [naive_legendre_float32(120, t) for t in (0.0, 0.3, 0.7)]
        assert all(d is not None and d <= 120 for d in first_bad), first_bad
        for t in (-1.0, -0.5, 0.0, 0.3, 0.999, 1.0):
            assert np.all(np.isfinite(legendre_normalized(2000, t)))


# 3 ----------------------------------------------------------------------

def test_criterion_03_trace_identities():
    with budget(60):
        for theta in (5, 10, 30, 180):
            for L in (10, 20, 40):
                b = solve_cap(CapSpec(theta, (0, 90), L))
                expect = (1 - math.cos(math.radians(theta))) / 2 * (L + 1) ** 2
                assert b.spectrum.sum() == pytest.approx(expect, rel=1e-8)
        hemi = MaskSpec.from_function(lambda lon, lat: lat > 0, 10, nlat=12)
        assert solve_mask(hemi).shannon == pytest.approx(60.5, rel=1e-6)


# 4 ----------------------------------------------------------------------

def test_criterion_04_small_island_budget():
    with budget(1):
        assert math.ceil(shannon_cap(1.3026, 256)) == 9
        assert (256 + 1) ** 2 == 66049
        assert round(66049, -3) == 66000


# 5 ----------------------------------------------------------------------

def test_criterion_05_degenerate_reduction():
    with budget(10):
        g = build_quadrature(6, 11)
        lon, lat = g.points()
        w = g.weights.ravel()
        cap = solve_cap(CapSpec(180, (23.0, -41.0), 5))
        full = solve_mask(MaskSpec.from_function(lambda lo, la: np.ones(np.shape(lo), bool), 5))
        for b in (cap, full):
            assert b.K == 36
            assert np.abs(b.eigenvalues - 1).max() < 1e-8
            G = eval_slepian(b, lon, lat)
            assert np.abs((G * w[:, None]).T @ G - np.eye(36)).max() < 1e-9


# 6 ----------------------------------------------------------------------

def test_criterion_06_regional_energy():
    with budget(60):
        b = solve_cap(CapSpec(20, (33.0, 47.0), 20))
        lon, lat, w = cap_quadrature(33.0, 47.0, 20.0, 40, 81)
        G = eval_slepian(b, lon, lat)
        energy = (G ** 2 * w[:, None]).sum(axis=0)
        assert np.abs(energy - b.eigenvalues).max() < 1e-6
        count = int((b.spectrum > 0.5).sum())
        assert abs(count - round(shannon_cap(20, 20))) <= 2


# 7 ----------------------------------------------------------------------

def test_criterion_07_mask_matches_cap():
    with budget(120):
        spec = MaskSpec.from_function(lambda lon, lat: lat > 70, 15, nlat=4096, nlon=64)
        top = solve_mask(spec, "thresh:0.001").eigenvalues[:10]
        ref = solve_cap(CapSpec(20, (0, 90), 15)).spectrum[:10]
        assert np.abs(top - ref).max() < 1e-3


# 8 ----------------------------------------------------------------------

def test_criterion_08_dpss_suite():
    with budget(30):
        for n, w in ((8, 0.1), (32, 0.1), (256, 4 / 256)):
            assert np.trace(dpss_matrix(n, w)) == pytest.approx(2 * n * w, rel=1e-15)
            b = dpss_solve(DpssSpec(n, w))
            assert np.abs(b.sequences @ b.sequences.T - np.eye(b.dim)).max() < 1e-10
        b = dpss_solve(DpssSpec(2, 0.25, 2))
        assert np.abs(b.eigenvalues - [0.5 + 1 / np.pi, 0.5 - 1 / np.pi]).max() < 1e-15
        b = dpss_solve(DpssSpec(8, 0.1))
        assert band_concentration(b.sequences[0], 0.1) == pytest.approx(b.eigenvalues[0], abs=1e-6)
        b = dpss_solve(DpssSpec(32, 0.1))
        B = dpss_matrix(32, 0.1)
        x = np.random.default_rng(0).standard_normal((200, 32))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        assert np.einsum("ij,jk,ik->i", x, B, x).max() <= b.eigenvalues[0]


# 9 ----------------------------------------------------------------------

need_california = pytest.mark.skipif(
    california_csv() is None,
    reason="California housing CSV absent; set GEOSLEPIAN_CALIFORNIA_CSV")


@need_california
def test_criterion_09_california_linear_head():
    with budget(600):
        ds = load_california(california_csv())
        r2 = {}
        _, m = fit_seeds(sh_eval(40, ds.lon, ds.lat), ds.targets, SEEDS)
        r2["sh40"] = m["test"]["r2"]
        cap = solve_cap(CapSpec(5, CALIFORNIA_CENTER, 120), "thresh:0.05")
        X = encode_batch(HybridEncoder(10, [cap]), ds.lon, ds.lat)
        _, m = fit_seeds(X, ds.targets, SEEDS)
        r2["hybrid120"] = m["test"]["r2"]
        _, m = fit_seeds(sh_eval(10, ds.lon, ds.lat), ds.targets, SEEDS)
        r2["sh10"] = m["test"]["r2"]
        print("test R2:", json.dumps(r2))
        assert abs(r2["sh40"] - 0.32) <= 0.05
        assert abs(r2["hybrid120"] - 0.32) <= 0.05
        assert abs(r2["sh10"] - 0.24) <= 0.05
        assert r2["sh40"] > r2["sh10"] and r2["hybrid120"] > r2["sh10"]


# 10 ---------------------------------------------------------------------

@need_california
def test_criterion_10_coverage_monotone():
    with budget(900):
        ds = load_california(california_csv())
        radii = coverage_radii(ds, CALIFORNIA_CENTER)
        curve = coverage_curve(ds, CALIFORNIA_CENTER, radii, lmax_r=80, lmax_g=10,
                               seeds=SEEDS)
        within = [c["r2_within"] for c in curve]
        print("within-cap R2 by radius:", [(round(c["radius"], 3), round(c["r2_within"], 4))
                                           for c in curve])
        assert monotone_with_tolerance(within, tol=0.01, max_inversions=1)


# 11 ---------------------------------------------------------------------

def _california_like_points(n=20640, seed=0):
    path = california_csv()
    if path is not None:
        ds = load_california(path)
        return ds.lon, ds.lat
    rng = np.random.default_rng(seed)
    lo, hi = np.sin(np.radians([32.4, 42.1]))
    return rng.uniform(-124.6, -114.0, n), np.degrees(np.arcsin(rng.uniform(lo, hi, n)))


def test_criterion_11_compute_direction():
    with budget(600):
        lon, lat = _california_like_points()
        # warm both paths once so neither pays import or first-call costs
        solve_cap(CapSpec(5, CALIFORNIA_CENTER, 8))
        solve_mask(MaskSpec.from_function(lambda lo, la: la > 0, 8))

        start = time.perf_counter()
        cap = solve_cap(CapSpec(5, CALIFORNIA_CENTER, 120), "thresh:0.05")
        F = encode_batch(HybridEncoder(None, [cap]), lon, lat)
        t_cap = time.perf_counter() - start

        # the mask grid resolves the 5 degree cap at 0.25 degrees
        start = time.perf_counter()
        inside = lambda lo, la: angular_distance(*CALIFORNIA_CENTER, lo, la) <= 5.0
        spec = MaskSpec.from_function(inside, 40, nlat=720, nlon=1440)
        mask = solve_mask(spec, "thresh:0.05")
        t_mask = time.perf_counter() - start

        print(f"cap L_r=120 build+encode of {lon.size} points: {t_cap:.3f} s (K={cap.K}); "
              f"dense mask L=40 construction: {t_mask:.3f} s (K={mask.K})")
        assert np.all(np.isfinite(F))
        assert t_cap < t_mask


# 12 ---------------------------------------------------------------------

def test_criterion_12_persistence_and_cli(tmp_path, capsys):
    with budget(10):
        cap = solve_cap(CapSpec(5, CALIFORNIA_CENTER, 40), "thresh:0.05")
        mask = solve_mask(MaskSpec.from_function(lambda lo, la: la > 45, 8))
        enc = HybridEncoder(4, [cap, mask])
        raster = build_raster(enc, GridSpec(-125.0, 32.0, 1.0, 1.0, 12, 11))
        dpss = dpss_solve(DpssSpec.from_nw(64, 4)).with_random_orthogonal(3)
        table = np.random.default_rng(0).standard_normal((17, 5))

        for b in (cap, mask):
            gio.save_basis(tmp_path / "b", b)
            c = gio.load_basis(tmp_path / "b")
            assert c.coeffs.tobytes() == b.coeffs.tobytes()
            assert c.eigenvalues.tobytes() == b.eigenvalues.tobytes()
        gio.save_raster(tmp_path / "r", raster)
        assert gio.load_raster(tmp_path / "r").features.tobytes() == raster.features.tobytes()
        gio.save_dpss(tmp_path / "d", dpss)
        d = gio.load_dpss(tmp_path / "d")
        assert d.sequences.tobytes() == dpss.sequences.tobytes()
        assert d.projection.tobytes() == dpss.projection.tobytes()
        gio.save_features(tmp_path / "f", table)
        assert gio.load_features(tmp_path / "f")[0].tobytes() == table.tobytes()

        reports = []
        for name in ("a.json", "b.json"):
            assert cli_main(["fit", "--task", "synth", "--seed", "11",
                             "--report", str(tmp_path / name)]) == 0
            reports.append((tmp_path / name).read_bytes())
        assert reports[0] == reports[1]
        capsys.readouterr()
