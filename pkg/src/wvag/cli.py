"""Command-line interface.

Subcommands: ingest (prices -> log returns), fit, study, lrt, density.
Exit codes: 0 success, 2 input error, 3 numerical failure.  All commands
are byte-reproducible for a fixed (seed, config, input data); wall-clock
timings go to stderr only.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import sys
import time
import warnings

import numpy as np

from .charfn import fourier_invertible
from .dme import export_error_surface, fit_dme
from .errors import FeasibilityError, WvagError
from .gof import bootstrap_se, gof_report, likelihood_ratio_test
from .inversion import joint_density
from .mle import MleConfig, fit_mle
from .model import WvagParams
from .moments import fit_mom
from .reports import FitReport, data_hash, write_atomic
from .simulate import ReturnSample, RngStream
from .study import run_study, study_to_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class InputError(Exception):
    pass


def read_prices(path):
    """Parse a date,price1,price2 CSV; returns (dates, prices, n_dropped).

    Rows missing either price are dropped pairwise; dates must be ISO format
    and strictly increasing; prices must be positive.
    """
    dates, prices = [], []
    dropped = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["date", "price1", "price2"]:
            raise InputError(f"{path}: expected header date,price1,price2, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3 or not row[1].strip() or not row[2].strip():
                dropped += 1
                continue
            try:
                d = _dt.date.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad date {row[0]!r}: {exc}") from None
            try:
                p1, p2 = float(row[1]), float(row[2])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad price: {exc}") from None
            if p1 <= 0 or p2 <= 0:
                raise InputError(f"{path}:{lineno}: non-positive price ({p1}, {p2})")
            if dates and d <= dates[-1]:
                raise InputError(f"{path}:{lineno}: dates not strictly increasing at {d}")
            dates.append(d)
            prices.append((p1, p2))
    if len(prices) < 2:
        raise InputError(f"{path}: need at least 2 price rows, got {len(prices)}")
    return dates, np.array(prices), dropped


def ingest_prices(path, c: float):
    """Log returns ln(S_j / S_{j-1}) of a price file; returns
    (ReturnSample, n_dropped)."""
    _, prices, dropped = read_prices(path)
    rets = np.diff(np.log(prices), axis=0)
    return ReturnSample(c=c, observations=rets), dropped


def _load_sample(args) -> ReturnSample:
    if args.input.endswith(".csv") and _looks_like_prices(args.input):
        sample, dropped = ingest_prices(args.input, args.c)
        if dropped:
            print(f"warning: dropped {dropped} incomplete price rows", file=sys.stderr)
        return sample
    return ReturnSample.from_csv(args.input, c=args.c)


def _looks_like_prices(path) -> bool:
    with open(path, newline="") as fh:
        header = fh.readline().strip().lower()
    return header.startswith("date,")


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _mle_config(cfg: dict, override: bool) -> MleConfig:
    kwargs = dict(cfg.get("mle", {}))
    if override:
        kwargs["override_invertibility"] = True
    return MleConfig(**kwargs)


def cmd_ingest(args):
    sample, dropped = ingest_prices(args.input, args.c)
    if dropped:
        print(f"warning: dropped {dropped} incomplete price rows", file=sys.stderr)
    meta = args.out + ".meta.json" if args.meta is None else args.meta
    sample.to_csv(args.out, meta_path=meta, seed=None)
    print(f"wrote {sample.n} return pairs to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args):
    t0 = time.time()
    cfg = _load_config(args.config)
    sample = _load_sample(args)
    stream = RngStream(args.seed)
    mle_cfg = _mle_config(cfg, args.override_invertibility)
    if args.method == "mom":
        fr = fit_mom(sample, model=args.model, seed=args.seed)
    elif args.method == "mle":
        fr = fit_mle(sample, model=args.model, cfg=mle_cfg, seed=args.seed)
    elif args.method == "dme":
        fr = fit_dme(sample, model=args.model, stream=stream)
    else:
        raise InputError(f"unknown method {args.method}")
    margin = fourier_invertible(fr.params, sample.c)
    gof = None
    if not args.no_gof:
        gof = gof_report(fr.params, sample, stream=stream.child(900),
                         n_rep=args.gof_reps, cfg=mle_cfg)
    se = None
    if args.bootstrap:
        def refit(s):
            if args.method == "mom":
                return fit_mom(s, model=args.model, seed=args.seed).params
            if args.method == "mle":
                return fit_mle(s, model=args.model, cfg=mle_cfg, seed=args.seed).params
            return fit_dme(s, model=args.model, stream=stream).params

        se, n_failed = bootstrap_se(sample, refit, b=args.bootstrap,
                                    stream=stream.child(7000))
        if n_failed:
            print(f"warning: {n_failed} bootstrap refits failed", file=sys.stderr)
    report = FitReport(
        model=args.model, method=args.method, params=fr.params, seed=args.seed,
        n_obs=sample.n, c=sample.c,
        invertibility_value=margin.value, invertibility_ok=margin.ok,
        gof=gof, bootstrap_se=se, config=cfg,
        data_sha256=data_hash(args.input),
        diagnostics={"converged": fr.diagnostics.converged,
                     "message": fr.diagnostics.message},
    )
    text = report.to_json()
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"fit completed in {time.time() - t0:.1f}s", file=sys.stderr)
    return EXIT_OK


def cmd_study(args):
    t0 = time.time()
    cfg = _load_config(args.config)
    with open(args.truth) as fh:
        truth = WvagParams.from_json(fh.read())
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    mle_cfg = _mle_config(cfg, args.override_invertibility
                          or not fourier_invertible(truth, args.c).ok)
    result = run_study(truth, args.c, args.N, args.reps, methods=methods,
                       model=args.model, seed=args.seed, mle_cfg=mle_cfg)
    study_to_csv(result, args.out)
    print(f"study ({args.reps} reps, methods {methods}) completed in "
          f"{time.time() - t0:.1f}s -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_lrt(args):
    t0 = time.time()
    cfg = _load_config(args.config)
    sample = _load_sample(args)
    mle_cfg = _mle_config(cfg, args.override_invertibility)
    res = likelihood_ratio_test(sample, null=args.null, cfg=mle_cfg, seed=args.seed)
    payload = {
        "null": args.null,
        "stat": res.stat,
        "df": res.df,
        "p_value": res.p_value,
        "reject_at_5pct": bool(res.reject_5pct),
        "null_estimates": res.null_fit.params.to_dict(),
        "alt_estimates": res.alt_fit.params.to_dict(),
        "seed": args.seed,
        "data_sha256": data_hash(args.input),
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"lrt completed in {time.time() - t0:.1f}s", file=sys.stderr)
    return EXIT_OK


def cmd_density(args):
    with open(args.params) as fh:
        p = WvagParams.from_json(fh.read())
    box = None
    if args.box:
        vals = [float(v) for v in args.box.split(",")]
        if len(vals) != 4:
            raise InputError("--box expects lo1,hi1,lo2,hi2")
        box = [(vals[0], vals[1]), (vals[2], vals[3])]
    sample = None
    if args.sample:
        sample = ReturnSample.from_csv(args.sample, c=args.t).observations
    if args.override_invertibility:
        warnings.warn("invertibility override active", RuntimeWarning)
    grid = joint_density(p, args.t, box=box, resolution=args.res, sample=sample,
                         override=args.override_invertibility)
    grid.to_csv(args.out)
    meta = {
        "t": args.t, "box": grid.box, "resolution": list(grid.resolution),
        "integral": grid.integral, "tail_mass_bound": grid.tail_mass_bound,
        "theta_max": [float(x) for x in grid.theta_max],
        "clipped_neg_mass": grid.clipped_neg_mass,
    }
    write_atomic(args.out + ".meta.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")
    if sample is not None and args.scatter_out:
        with open(args.scatter_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y1", "y2"])
            for row in sample:
                w.writerow([repr(float(row[0])), repr(float(row[1]))])
    print(f"density grid {grid.resolution} integral={grid.integral:.6f} -> {args.out}",
          file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wvag",
                                 description="bivariate weak variance-alpha-gamma toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="price CSV -> log-return CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--c", type=float, default=1.0, help="sampling interval")
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None, help="metadata sidecar path")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("fit", help="calibrate a model to return data")
    p.add_argument("--in", dest="input", required=True,
                   help="price CSV (date,price1,price2) or return CSV (y1,y2)")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--model", choices=["wvag", "vag"], default="wvag")
    p.add_argument("--method", choices=["mom", "mle", "dme"], default="mle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--override-invertibility", action="store_true")
    p.add_argument("--no-gof", action="store_true")
    p.add_argument("--gof-reps", type=int, default=100,
                   help="fitted-model samples averaged in the KS statistic")
    p.add_argument("--bootstrap", type=int, default=0,
                   help="bootstrap replicates for standard errors (0 = off)")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("study", help="replicated simulation study")
    p.add_argument("--truth", required=True, help="parameter JSON")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--methods", default="mom,mle,dme")
    p.add_argument("--model", choices=["wvag", "vag"], default="wvag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--override-invertibility", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_study)

    p = sub.add_parser("lrt", help="likelihood-ratio test of a pinned null")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--null", choices=["sigma12", "mu"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--override-invertibility", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_lrt)

    p = sub.add_parser("density", help="export a joint density grid as CSV")
    p.add_argument("--params", required=True, help="parameter JSON")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--box", default=None, help="lo1,hi1,lo2,hi2")
    p.add_argument("--res", type=int, default=512)
    p.add_argument("--sample", default=None, help="return CSV for box/scatter")
    p.add_argument("--scatter-out", default=None)
    p.add_argument("--override-invertibility", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_density)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, FileNotFoundError, FeasibilityError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WvagError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
