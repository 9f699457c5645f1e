import json
import os

import numpy as np
import pytest

from geoslepian import (CapSpec, CorruptFileError, DpssSpec, GridSpec, HybridEncoder, MaskSpec,
                        build_raster, dpss_solve, encode_batch, solve_cap, solve_mask)
from geoslepian import io as gio
from geoslepian.cli import encoder_from_config, main, read_points
from geoslepian.errors import IngestError


@pytest.fixture(scope="module")
def cap_basis():
    return solve_cap(CapSpec(10, (-119.5, 37.0), 20))


@pytest.fixture(scope="module")
def mask_basis():
    return solve_mask(MaskSpec.from_function(lambda lon, lat: (lat > 30) & (lon < 0), 6))


def test_basis_round_trip_cap(tmp_path, cap_basis):
    p = tmp_path / "b.slepb"
    gio.save_basis(p, cap_basis)
    b = gio.load_basis(p)
    assert b.eigenvalues.tobytes() == cap_basis.eigenvalues.tobytes()
    assert b.coeffs.tobytes() == cap_basis.coeffs.tobytes()
    assert b.region == cap_basis.region
    assert str(b.selection) == str(cap_basis.selection)
    lon, lat = np.array([-120.0, 0.0, 10.0]), np.array([36.0, 90.0, -5.0])
    assert b(lon, lat).tobytes() == cap_basis(lon, lat).tobytes()
    q = tmp_path / "c.slepb"
    gio.save_basis(q, b)
    assert p.read_bytes() == q.read_bytes()


def test_basis_round_trip_mask(tmp_path, mask_basis):
    p = tmp_path / "m.slepb"
    gio.save_basis(p, mask_basis)
    b = gio.load_basis(p)
    assert b.coeffs.tobytes() == mask_basis.coeffs.tobytes()
    assert b.region.digest == mask_basis.region.digest
    assert HybridEncoder(2, [b]).fingerprint() == HybridEncoder(2, [mask_basis]).fingerprint()
    gio.save_basis(tmp_path / "n.slepb", b)
    assert p.read_bytes() == (tmp_path / "n.slepb").read_bytes()


def test_raster_round_trip(tmp_path, cap_basis):
    enc = HybridEncoder(3, [cap_basis])
    r = build_raster(enc, GridSpec(-125.0, 32.0, 0.5, 0.5, 9, 7))
    p = tmp_path / "r.slepr"
    gio.save_raster(p, r)
    s = gio.load_raster(p)
    assert s.features.tobytes() == r.features.tobytes()
    assert s.grid == r.grid and s.fingerprint == r.fingerprint
    s.check(enc)


def test_dpss_round_trip(tmp_path):
    b = dpss_solve(DpssSpec.from_nw(50, 3)).with_random_orthogonal(2)
    p = tmp_path / "d.slept"
    gio.save_dpss(p, b)
    c = gio.load_dpss(p)
    for name in ("sequences", "eigenvalues", "projection"):
        assert getattr(c, name).tobytes() == getattr(b, name).tobytes()
    assert c.spec == b.spec


def test_features_round_trip(tmp_path):
    F = np.random.default_rng(0).standard_normal((7, 3))
    p = tmp_path / "f.bin"
    gio.save_features(p, F, {"columns": ["a", "b", "c"]})
    G, meta = gio.load_features(p)
    assert G.tobytes() == F.tobytes() and meta == {"columns": ["a", "b", "c"]}


def test_envelope_layout(tmp_path):
    b = dpss_solve(DpssSpec(4, 0.2, 1))
    p = tmp_path / "d.slept"
    gio.save_dpss(p, b)
    blob = p.read_bytes()
    assert blob[:5] == b"SLEPT" and blob[5] == 1
    n = int.from_bytes(blob[6:10], "little")
    header = json.loads(blob[10:10 + n])
    assert header == {"k": 1, "n": 4, "w": 0.2}
    payload = blob[10 + n:-8]
    assert len(payload) == 8 * (1 + 4 + 1)
    assert np.frombuffer(payload[:8], "<f8")[0] == b.eigenvalues[0]


def _corrupt(path, offset, value=None):
    blob = bytearray(path.read_bytes())
    blob[offset] = (blob[offset] ^ 0xFF) if value is None else value
    path.write_bytes(bytes(blob))


@pytest.mark.parametrize("where", ["payload", "checksum", "magic", "version"])
def test_corruption_detected(tmp_path, cap_basis, where):
    p = tmp_path / "b.slepb"
    gio.save_basis(p, cap_basis)
    size = p.stat().st_size
    offset = {"payload": size - 100, "checksum": size - 1, "magic": 0, "version": 5}[where]
    _corrupt(p, offset)
    with pytest.raises(CorruptFileError):
        gio.load_basis(p)


def test_truncated_and_wrong_kind(tmp_path, cap_basis):
    p = tmp_path / "b.slepb"
    gio.save_basis(p, cap_basis)
    with pytest.raises(CorruptFileError):
        gio.load_raster(p)
    p.write_bytes(p.read_bytes()[:-30])
    with pytest.raises(CorruptFileError):
        gio.load_basis(p)
    p.write_bytes(b"SLEPB\x01")
    with pytest.raises(CorruptFileError):
        gio.load_basis(p)


def test_header_determines_payload(tmp_path, cap_basis):
    blob = gio._pack(gio.MAGIC_BASIS, dict(gio._basis_header(cap_basis), K=cap_basis.K + 1),
                     [cap_basis.eigenvalues, cap_basis.coeffs])
    p = tmp_path / "b.slepb"
    p.write_bytes(blob)
    with pytest.raises(CorruptFileError, match="header implies"):
        gio.load_basis(p)


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.bin"

    def boom(fd):
        raise OSError("disk full")

    monkeypatch.setattr(os, "fsync", boom)
    with pytest.raises(OSError):
        gio.atomic_write(target, b"abc")
    assert list(tmp_path.iterdir()) == []


# --- command line ---------------------------------------------------------

def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_full_sphere(tmp_path, capsys):
    code, out, _ = run(capsys, "basis-cap", "--lmax", 40, "--theta", 180,
                       "--select", "shannon", "--out", tmp_path / "a.slepb")
    assert code == 0 and "K=1681" in out
    b = gio.load_basis(tmp_path / "a.slepb")
    assert np.abs(b.eigenvalues - 1).max() < 1e-8


def test_cli_small_island_budget(tmp_path, capsys):
    code, out, _ = run(capsys, "basis-cap", "--lmax", 256, "--theta", 1.3026,
                       "--clat", 7.9, "--clon", 80.7, "--out", tmp_path / "s.slepb")
    assert code == 0 and out.startswith("K=9 ")


def test_cli_unwritable_output(tmp_path, capsys):
    out = tmp_path / "missing" / "b.slepb"
    code, _, err = run(capsys, "basis-cap", "--lmax", 5, "--theta", 20, "--out", out)
    assert code == 4 and "io error" in err
    assert not out.exists() and list(tmp_path.iterdir()) == []


def test_cli_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["basis-cap", "--theta", "20"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["basis-cap", "--lmax", "5", "--theta", "20", "--select", "best", "--out", "x"])
    assert e.value.code == 2
    code, _, _ = run(capsys, "basis-cap", "--lmax", 5, "--theta", 200, "--out", tmp_path / "x")
    assert code == 2
    p = tmp_path / "m.asc"
    p.write_text("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 1\n")
    code, _, err = run(capsys, "basis-mask", "--lmax", 64, "--mask", p, "--out", tmp_path / "y")
    assert code == 2 and "dense mask path" in err


def test_cli_numeric_error(tmp_path, capsys, monkeypatch):
    import scipy.linalg

    def boom(*a, **k):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(scipy.linalg, "eigh", boom)
    code, _, err = run(capsys, "basis-cap", "--lmax", 5, "--theta", 20, "--out", tmp_path / "b")
    assert code == 3 and "order-0 block" in err


def test_cli_encode_csv(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    pts.write_text("lon,lat\n0,0\n-119.5,37\n45,90\n")
    code, out, _ = run(capsys, "encode", "--points", pts, "--global-lmax", 10,
                       "--out", tmp_path / "e.csv")
    assert code == 0
    rows = (tmp_path / "e.csv").read_text().splitlines()
    assert len(rows) == 4 and all(len(r.split(",")) == 121 for r in rows)
    vals = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    ref = encode_batch(HybridEncoder(10), [0, -119.5, 45], [0, 37, 90])
    assert vals.tobytes() == ref.tobytes()


def test_cli_encode_binary_with_time(tmp_path, capsys, cap_basis):
    gio.save_basis(tmp_path / "c.slepb", cap_basis)
    run(capsys, "dpss", "--n", 64, "--nw", 4, "--out", tmp_path / "d.slept")
    pts = tmp_path / "p.csv"
    pts.write_text("lon,lat,t\n0,0,-1\n-119.5,37,0.25\n")
    code, out, _ = run(capsys, "encode", "--points", pts, "--global-lmax", 2,
                       "--basis", tmp_path / "c.slepb", "--dpss", tmp_path / "d.slept",
                       "--out", tmp_path / "e.bin")
    assert code == 0
    F, meta = gio.load_features(tmp_path / "e.bin")
    assert F.shape == (2, 9 + cap_basis.K + 8)
    assert meta["columns"][-1] == "t7"


def test_cli_info_matches_flags(tmp_path, capsys):
    run(capsys, "basis-cap", "--lmax", 12, "--theta", 7.5, "--clat", -33, "--clon", 151,
        "--select", "thresh:0.2", "--out", tmp_path / "b.slepb")
    code, out, _ = run(capsys, "info", "--file", tmp_path / "b.slepb")
    h = json.loads(out)
    assert code == 0
    assert h["lmax"] == 12 and h["selection"] == "thresh:0.2" and h["kind"] == "cap"
    assert h["cap"] == {"theta_deg": 7.5, "clat": -33.0, "clon": 151.0}
    assert h["file_kind"] == "basis"


def test_cli_raster_and_mask(tmp_path, capsys):
    asc = tmp_path / "m.asc"
    rows = "\n".join(" ".join("1" if j < 18 else "0" for j in range(36)) for _ in range(18))
    asc.write_text(f"ncols 36\nnrows 18\nxllcorner -180\nyllcorner -90\ncellsize 10\n{rows}\n")
    code, out, _ = run(capsys, "basis-mask", "--lmax", 6, "--mask", asc,
                       "--out", tmp_path / "m.slepb")
    assert code == 0
    code, out, _ = run(capsys, "raster", "--res", 30, "--global-lmax", 2,
                       "--basis", tmp_path / "m.slepb", "--out", tmp_path / "r.slepr")
    assert code == 0
    r = gio.load_raster(tmp_path / "r.slepr")
    assert r.features.shape[:2] == (7, 12)
    code, out, _ = run(capsys, "raster", "--res", 1, "--extent", 0, 0, 2, 3,
                       "--global-lmax", 1, "--out", tmp_path / "q.slepr")
    assert code == 0 and gio.load_raster(tmp_path / "q.slepr").features.shape == (4, 3, 4)


def test_cli_fit_deterministic(tmp_path, capsys):
    for name in ("a.json", "b.json"):
        code, _, _ = run(capsys, "fit", "--task", "synth", "--seed", 7,
                         "--report", tmp_path / name)
        assert code == 0
    a = (tmp_path / "a.json").read_bytes()
    assert a == (tmp_path / "b.json").read_bytes()
    rep = json.loads(a)
    assert set(rep) == {"task", "encoder", "dims", "seed", "lambda", "split", "metrics"}
    assert set(rep["metrics"]) == {"train", "val", "test"}


def test_cli_fit_with_config(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("GEOSLEPIAN_CALIFORNIA_CSV", raising=False)
    cfg = tmp_path / "enc.json"
    cfg.write_text(json.dumps({"global_lmax": 3, "regions": [
        {"type": "cap", "theta": 40, "clat": 0, "clon": 0, "lmax": 6}]}))
    code, out, _ = run(capsys, "fit", "--task", "synth", "--encoder-config", cfg,
                       "--lambda-grid", "1e-4,1e-2", "--seed", 1)
    rep = json.loads(out)
    assert code == 0 and rep["lambda"] in (1e-4, 1e-2)
    assert rep["dims"]["total"] == 16 + rep["dims"]["regions"][0]
    bad = tmp_path / "bad.json"
    bad.write_text('{"global_lmax": 3,\n "regions": [}')
    code, _, err = run(capsys, "fit", "--task", "synth", "--encoder-config", bad)
    assert code == 4 and "line 2" in err
    code, _, _ = run(capsys, "fit", "--task", "california")
    assert code == 2


def test_encoder_config_sources(tmp_path, cap_basis):
    gio.save_basis(tmp_path / "c.slepb", cap_basis)
    asc = tmp_path / "m.asc"
    asc.write_text("ncols 2\nnrows 1\nxllcorner -180\nyllcorner -90\ncellsize 180\n1 0\n")
    enc = encoder_from_config({"global_lmax": None, "regions": [
        {"type": "file", "path": "c.slepb"},
        {"type": "mask", "mask": "m.asc", "lmax": 3}]}, tmp_path)
    assert enc.regions[0].K == cap_basis.K
    assert enc.dim == cap_basis.K + enc.regions[1].K
    from geoslepian import DomainError

    with pytest.raises(DomainError):
        encoder_from_config({"global": 3})
    with pytest.raises(DomainError):
        encoder_from_config({"regions": [{"type": "cap", "theta": 3}]})


@pytest.mark.parametrize("text,line", [
    ("lon,lat\n0,0\n1,2,3\n", 3),
    ("lon,lat\n0,0\n\n5,95\n", 4),
    ("lon,lat,t\n0,0,0.5\n0,0,1.5\n", 3),
    ("lon,lat\n0,x\n", 2),
    ("x,y\n0,0\n", 1),
])
def test_points_csv_errors(tmp_path, text, line):
    p = tmp_path / "p.csv"
    p.write_text(text)
    with pytest.raises(IngestError) as e:
        read_points(p)
    assert e.value.line == line


def test_cli_points_error_exit(tmp_path, capsys):
    p = tmp_path / "p.csv"
    p.write_text("lon,lat\n0,0\n0,91\n")
    code, _, err = run(capsys, "encode", "--points", p, "--global-lmax", 1,
                       "--out", tmp_path / "o.csv")
    assert code == 4 and "line 3" in err


def test_cli_california_from_env(tmp_path, capsys, monkeypatch):
    from test_fitkit import _fake_california

    monkeypatch.setenv("GEOSLEPIAN_CALIFORNIA_CSV", str(_fake_california(tmp_path / "h.csv")))
    code, out, _ = run(capsys, "fit", "--task", "california", "--lambda-grid", "1e-2")
    rep = json.loads(out)
    assert code == 0 and rep["split"]["sizes"] == {"train": 12384, "val": 4128, "test": 4128}


def test_cli_corrupt_file_exit(tmp_path, capsys, cap_basis):
    p = tmp_path / "b.slepb"
    gio.save_basis(p, cap_basis)
    _corrupt(p, p.stat().st_size - 50)
    code, _, err = run(capsys, "info", "--file", p)
    assert code == 4 and "checksum mismatch" in err and err.startswith("corrupt file")
