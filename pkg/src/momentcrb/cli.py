"""Command-line harness: CRB tables, Monte Carlo runs, and plot data.

Subcommands: crb, simulate, compare, reproduce-fig3.  Configuration is a
JSON document (see README for the schema); --seed/--trials/--out override
the corresponding config fields.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import direct, montecarlo, spade
from .exceptions import ConfigError, MomentCrbError
from .measures import BandlimitedSincPSF, FlatTop, GaussianPSF, PointSources, Tabulated

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(x):
    return f"{x:.17g}"


def _fail(field, message):
    raise ConfigError(f"config field {field!r}: {message}")


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def build_model(cfg):
    spec = cfg.get("object")
    if not isinstance(spec, dict) or "type" not in spec:
        _fail("object", "must be an object with a 'type'")
    kind = spec["type"]
    try:
        if kind == "flat_top":
            return FlatTop(theta0=float(spec.get("theta0", 1.0)),
                           delta=float(spec.get("delta", 0.0)))
        if kind == "point_sources":
            return PointSources(positions=tuple(spec["positions"]),
                                weights=tuple(spec["weights"]))
        if kind == "tabulated":
            return Tabulated(grid=np.asarray(spec["grid"], dtype=float),
                             density=np.asarray(spec["density"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        _fail("object", str(exc))
    _fail("object.type", f"unknown object type {kind!r}")


def build_psf(cfg):
    spec = cfg.get("psf")
    if not isinstance(spec, dict):
        _fail("psf", "must be an object with 'type' and 'tau'")
    kind = spec.get("type", "gaussian")
    try:
        tau = float(spec.get("tau", 1.0))
        if kind == "gaussian":
            return GaussianPSF(tau=tau)
        if kind == "bandlimited":
            return BandlimitedSincPSF(tau=tau)
    except (TypeError, ValueError) as exc:
        _fail("psf", str(exc))
    _fail("psf.type", f"unknown PSF type {kind!r}")


def get_estimands(cfg):
    if "estimands" in cfg:
        raw = cfg["estimands"]
        if not isinstance(raw, list) or not raw:
            _fail("estimands", "must be a nonempty list of weight vectors")
        return [np.asarray(u, dtype=float) for u in raw]
    if "weights" in cfg:
        return [np.asarray(cfg["weights"], dtype=float)]
    _fail("weights", "missing estimand weights")


def get_measurement(cfg):
    m = cfg.get("measurement", "direct")
    if m not in (montecarlo.DIRECT, montecarlo.SPADE):
        _fail("measurement", f"must be 'direct' or 'spade', got {m!r}")
    return m


def _positive_int(cfg, key, default=None, minimum=0):
    val = cfg.get(key, default)
    if val is None:
        return None
    try:
        val = int(val)
    except (TypeError, ValueError):
        _fail(key, "must be an integer")
    if val < minimum:
        _fail(key, f"must be >= {minimum}")
    return val


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands

def cmd_crb(args):
    cfg = load_config(args.config)
    model = build_model(cfg)
    psf = build_psf(cfg)
    measurement = get_measurement(cfg)
    Q = _positive_int(cfg.get("truncations", {}), "Q", minimum=1)
    rows = []
    for u in get_estimands(cfg):
        nz = np.nonzero(u)[0]
        k = int(nz[-1]) if nz.size else 0
        if measurement == montecarlo.DIRECT:
            crb = direct.crb_direct(model, psf, u)
            ccrb = direct.constrained_crb_direct(model, psf, u) if u[0] == 0 else None
        else:
            crb = spade.crb_spade(model, psf, u, Q=Q)
            ccrb = spade.constrained_crb_spade(model, psf, u, Q=Q) if u[0] == 0 else None
        rows.append({"method": measurement, "k": k, "crb": crb,
                     "constrained_crb": ccrb})
    fmt = cfg.get("output", {}).get("format", "csv")
    if fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        text = _rows_to_csv(
            ["method", "k", "crb", "constrained_crb"],
            [(r["method"], r["k"], r["crb"],
              "" if r["constrained_crb"] is None else r["constrained_crb"])
             for r in rows],
        )
    _emit(text, args.out or cfg.get("output", {}).get("path"))
    return EXIT_OK


def cmd_simulate(args):
    cfg = load_config(args.config)
    model = build_model(cfg)
    psf = build_psf(cfg)
    measurement = get_measurement(cfg)
    trials = args.trials if args.trials is not None else _positive_int(cfg, "trials", 0)
    if trials is None or trials < 2:
        _fail("trials", "must be >= 2")
    seed = args.seed if args.seed is not None else _positive_int(cfg, "master_seed", 0)
    Q = _positive_int(cfg.get("truncations", {}), "Q", minimum=1)
    (u,) = get_estimands(cfg)[:1]
    report = montecarlo.run_trials(model, psf, measurement, u, trials, seed, Q=Q)
    fmt = cfg.get("output", {}).get("format", "json")
    if fmt == "csv":
        d = report.to_dict()
        keys = list(d)
        text = _rows_to_csv(keys, [[d[k] for k in keys]])
    else:
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    _emit(text, args.out or cfg.get("output", {}).get("path"))
    return EXIT_OK


def cmd_compare(args):
    cfg = load_config(args.config)
    model = build_model(cfg)
    psf = build_psf(cfg)
    (u,) = get_estimands(cfg)[:1]
    if args.delta_min >= args.delta_max or args.delta_min <= 0:
        _fail("delta range", "need 0 < delta-min < delta-max")
    if args.points < 2:
        _fail("points", "need at least 2 grid points")
    grid = np.geomspace(args.delta_min, args.delta_max, args.points)
    rows = montecarlo.compare_methods(model, psf, u, grid)
    text = _rows_to_csv(["delta", "crb_direct", "crb_spade", "ratio"], rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_reproduce_fig3(args):
    if args.delta_min <= 0 or args.delta_min >= args.delta_max:
        _fail("delta range", "need 0 < delta-min < delta-max")
    if args.points < 2:
        _fail("points", "need at least 2 grid points")
    psf = GaussianPSF(tau=args.tau)
    u = np.array([0.0, 0.0, 1.0])
    grid = np.geomspace(args.delta_min, args.delta_max, args.points)
    rows = []
    for d in grid:
        model = FlatTop(theta0=args.theta0, delta=float(d))
        rows.append((float(d),
                     direct.crb_direct(model, psf, u),
                     spade.crb_spade(model, psf, u)))
    text = _rows_to_csv(["delta", "crb_direct", "crb_spade"], rows)
    _emit(text, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="momentcrb",
        description="Semiparametric CRBs and Monte Carlo checks for "
                    "incoherent-imaging moment estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crb", help="CRB table for the configured estimands")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_crb)

    p = sub.add_parser("simulate", help="Monte Carlo trial report")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="direct vs SPADE CRBs over flat-top widths")
    p.add_argument("--config", required=True)
    p.add_argument("--delta-min", type=float, default=0.01)
    p.add_argument("--delta-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("reproduce-fig3",
                       help="CSV of both second-moment CRBs over a width grid")
    p.add_argument("--delta-min", type=float, default=0.01)
    p.add_argument("--delta-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=60)
    p.add_argument("--tau", type=float, default=1e4)
    p.add_argument("--theta0", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce_fig3)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MomentCrbError, np.linalg.LinAlgError, OverflowError,
            FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
