"""
``geoslepian`` command line.

Exit codes: 0 success, 2 bad usage or argument values, 3 numerical
failure, 4 input/output failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import io as gio
from .basis import Selection
from .cap import CapSpec, solve_cap
from .encoder import GridSpec, HybridEncoder, build_raster, encode_batch
from .errors import (CapacityError, CorruptFileError, DomainError, IngestError,
                     NumericError)
from .fitkit import (LAMBDA_GRID, SplitSpec, fit_protocol, load_california,
                     synth_bandlimited)
from .mask import MaskSpec, read_mask, solve_mask
from .temporal import DpssSpec, dpss_solve, time_encode

__all__ = ["main", "build_parser", "read_points", "encoder_from_config"]

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

#: environment variable naming the California housing CSV
CALIFORNIA_ENV = "GEOSLEPIAN_CALIFORNIA_CSV"

log = logging.getLogger("geoslepian")


def read_points(path):
    """
    Read a points CSV with header ``lon,lat`` or ``lon,lat,t``.

    Returns (lon, lat, t_or_None).  Malformed rows raise IngestError with
    the 1-based line number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError("empty points file", 1) from None
        if header not in (["lon", "lat"], ["lon", "lat", "t"]):
            raise IngestError(f"header must be lon,lat[,t], got {','.join(header)}", 1)
        ncol = len(header)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise IngestError(f"expected {ncol} fields, got {len(row)}", line)
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise IngestError("non-numeric field", line) from None
            if not all(np.isfinite(vals)):
                raise IngestError("non-finite field", line)
            if abs(vals[1]) > 90:
                raise IngestError(f"latitude {vals[1]} outside [-90, 90]", line)
            if ncol == 3 and abs(vals[2]) > 1:
                raise IngestError(f"time {vals[2]} outside [-1, 1]", line)
            rows.append(vals)
    arr = np.array(rows, dtype=float).reshape(-1, ncol)
    return arr[:, 0], arr[:, 1], (arr[:, 2] if ncol == 3 else None)


def _basis_for(entry, base_dir):
    kind = entry.get("type")
    sel = entry.get("select", "shannon")
    if kind == "cap":
        spec = CapSpec(entry["theta"], (entry["clon"], entry["clat"]), entry["lmax"])
        return solve_cap(spec, sel)
    if kind == "mask":
        raster = read_mask(os.path.join(base_dir, entry["mask"]))
        spec = MaskSpec.from_raster(raster, entry["lmax"], entry.get("nlat"), entry.get("nlon"))
        return solve_mask(spec, sel)
    if kind == "file":
        return gio.load_basis(os.path.join(base_dir, entry["path"]))
    raise DomainError(f"unknown region type {kind!r}")


def encoder_from_config(config, base_dir="."):
    """
    Build a HybridEncoder from a config mapping::

        {"global_lmax": 10,
         "regions": [{"type": "cap", "theta": 5, "clat": 37, "clon": -119.5,
                      "lmax": 120, "select": "thresh:0.05"},
                     {"type": "mask", "mask": "region.asc", "lmax": 20},
                     {"type": "file", "path": "basis.slepb"}]}

    Relative paths resolve against ``base_dir``.
    """
    unknown = set(config) - {"global_lmax", "regions"}
    if unknown:
        raise DomainError(f"unknown encoder config keys {sorted(unknown)}")
    try:
        regions = [_basis_for(e, base_dir) for e in config.get("regions", [])]
    except KeyError as exc:
        raise DomainError(f"region entry missing key {exc}") from None
    return HybridEncoder(config.get("global_lmax"), regions)


def _encoder_from_args(args):
    regions = [gio.load_basis(p) for p in (args.basis or [])]
    if args.global_lmax is None and not regions:
        raise DomainError("need --global-lmax and/or at least one --basis")
    return HybridEncoder(args.global_lmax, regions)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(repr(float(v)) for v in r) for r in rows)
    gio.atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _print_json(obj):
    print(json.dumps(obj, sort_keys=True, indent=2))


def cmd_basis_cap(args):
    spec = CapSpec(args.theta, (args.clon, args.clat), args.lmax)
    basis = solve_cap(spec, args.select)
    gio.save_basis(args.out, basis)
    print(f"K={basis.K} shannon={basis.shannon:.6f}")


def cmd_basis_mask(args):
    raster = read_mask(args.mask)
    spec = MaskSpec.from_raster(raster, args.lmax, args.nlat, args.nlon)
    basis = solve_mask(spec, args.select)
    gio.save_basis(args.out, basis)
    print(f"K={basis.K} shannon={basis.shannon:.6f}")


def cmd_encode(args):
    enc = _encoder_from_args(args)
    lon, lat, t = read_points(args.points)
    feats = encode_batch(enc, lon, lat)
    names = [f"f{i}" for i in range(enc.dim)]
    if args.dpss:
        if t is None:
            raise DomainError("--dpss needs a points file with a t column")
        tb = gio.load_dpss(args.dpss)
        feats = np.hstack([feats, time_encode(tb, t)])
        names += [f"t{i}" for i in range(tb.dim)]
    if _is_binary(args.out, args.format):
        gio.save_features(args.out, feats, {"columns": names,
                                            "fingerprint": enc.fingerprint()})
    else:
        _write_csv(args.out, names, feats)
    print(f"rows={feats.shape[0]} cols={feats.shape[1]}")


def _is_binary(path, fmt):
    if fmt:
        return fmt == "bin"
    return not path.lower().endswith(".csv")


def cmd_raster(args):
    enc = _encoder_from_args(args)
    if args.extent:
        west, south, east, north = args.extent
        nlon = int(round((east - west) / args.res)) + 1
        nlat = int(round((north - south) / args.res)) + 1
        grid = GridSpec(west, south, args.res, args.res, nlon, nlat)
    else:
        grid = GridSpec.global_grid(args.res)
    raster = build_raster(enc, grid, max_bytes=args.max_bytes)
    gio.save_raster(args.out, raster)
    print(f"nlat={grid.nlat} nlon={grid.nlon} dim={raster.dim}")


def cmd_dpss(args):
    spec = DpssSpec.from_nw(args.n, args.nw, args.k)
    basis = dpss_solve(spec)
    if args.orthogonal_seed is not None:
        basis = basis.with_random_orthogonal(args.orthogonal_seed)
    gio.save_dpss(args.out, basis)
    print(f"K={basis.dim} shannon={spec.shannon:.6f}")


def cmd_fit(args):
    if args.encoder_config:
        with open(args.encoder_config, encoding="utf-8") as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                raise IngestError(f"encoder config: {exc.msg}", exc.lineno) from None
        base_dir = os.path.dirname(os.path.abspath(args.encoder_config))
    else:
        config = {"global_lmax": 10}
        base_dir = "."
    enc = encoder_from_config(config, base_dir)
    if args.task == "california":
        path = args.data or os.environ.get(CALIFORNIA_ENV)
        if not path:
            raise DomainError(f"--task california needs --data or ${CALIFORNIA_ENV}")
        ds = load_california(path)
    else:
        ds = synth_bandlimited(args.synth_lmax, args.seed, args.n_points)
    X = encode_batch(enc, ds.lon, ds.lat)
    grid = LAMBDA_GRID if args.lambda_grid is None else args.lambda_grid
    res = fit_protocol(X, ds.targets, SplitSpec((0.6, 0.2, 0.2), args.seed), grid)
    report = {
        "task": args.task,
        "encoder": config,
        "dims": {"global": enc.global_dim, "regions": [r.K for r in enc.regions],
                 "total": enc.dim},
        "seed": args.seed,
        "lambda": res.lam,
        "split": {"fractions": [0.6, 0.2, 0.2], "sizes": res.sizes},
        "metrics": res.metrics,
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.report:
        gio.atomic_write(args.report, text.encode("utf-8"))
    print(text, end="")


def cmd_info(args):
    _print_json(gio.info(args.file))


def _selection(text):
    try:
        return Selection.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser():
    p = argparse.ArgumentParser(prog="geoslepian",
                                description="Slepian and spherical-harmonic encoders.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("basis-cap", help="solve a spherical-cap basis")
    s.add_argument("--lmax", type=int, required=True)
    s.add_argument("--theta", type=float, required=True, help="cap radius, degrees")
    s.add_argument("--clat", type=float, default=90.0)
    s.add_argument("--clon", type=float, default=0.0)
    s.add_argument("--select", type=_selection, default=Selection("shannon"),
                   help="shannon or thresh:<mu0>")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_basis_cap)

    s = sub.add_parser("basis-mask", help="solve a basis for a raster mask")
    s.add_argument("--lmax", type=int, required=True)
    s.add_argument("--mask", required=True, help="ESRI ASCII grid or one-channel raster file")
    s.add_argument("--select", type=_selection, default=Selection("shannon"))
    s.add_argument("--nlat", type=int, help="quadrature latitudes (default lmax+1)")
    s.add_argument("--nlon", type=int, help="quadrature longitudes (default 2*lmax+1)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_basis_mask)

    for name, func, helptext in (("encode", cmd_encode, "encode a points CSV"),
                                 ("raster", cmd_raster, "cache features on a grid")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--basis", action="append", help="basis file (repeatable)")
        s.add_argument("--global-lmax", type=int)
        s.add_argument("--out", required=True)
        s.set_defaults(func=func)
        if name == "encode":
            s.add_argument("--points", required=True)
            s.add_argument("--dpss", help="DPSS file; appends temporal features from t")
            s.add_argument("--format", choices=("csv", "bin"),
                           help="default: csv if --out ends in .csv, else bin")
        else:
            s.add_argument("--res", type=float, required=True, help="node spacing, degrees")
            s.add_argument("--extent", type=float, nargs=4,
                           metavar=("WEST", "SOUTH", "EAST", "NORTH"))
            s.add_argument("--max-bytes", type=int, default=2 * 1024 ** 3)

    s = sub.add_parser("dpss", help="solve a DPSS temporal basis")
    s.add_argument("--n", type=int, required=True, help="sequence length")
    s.add_argument("--nw", type=float, required=True, help="time-bandwidth product")
    s.add_argument("--k", type=int, help="retained sequences (default floor(2 nw))")
    s.add_argument("--orthogonal-seed", type=int,
                   help="seeded random orthogonal projection instead of identity")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_dpss)

    s = sub.add_parser("fit", help="ridge-regression run with a JSON report")
    s.add_argument("--task", choices=("california", "synth"), required=True)
    s.add_argument("--data", help=f"California housing CSV (default ${CALIFORNIA_ENV})")
    s.add_argument("--encoder-config", help="JSON encoder description")
    s.add_argument("--lambda-grid", type=_float_list)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--synth-lmax", type=int, default=10)
    s.add_argument("--n-points", type=int, default=2000)
    s.add_argument("--report")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("info", help="print a binary file's header")
    s.add_argument("--file", required=True)
    s.set_defaults(func=cmd_info)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (DomainError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IngestError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CorruptFileError as exc:
        print(f"corrupt file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
