"""Command-line interface.

Subcommands:

    ingest        validate a chain CSV and rewrite it normalized
    synth         generate synthetic chains from a known model
    audit         parity-audit ITM quotes against their OTM counterparts
    evaluate      run the out-of-sample protocol and write report CSVs
    calibrate-vg  fit Variance-Gamma parameters to one day's quotes
    price         fit one estimator on a day and price a query list
    report        render previously written report CSVs as text tables

The master seed comes from --seed, overridden by the PRICELAB_SEED
environment variable when set. Exit status is 0 on success and 2 on any
diagnosed failure; diagnostics name the subcommand and the offending
input.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import os
import sys
from pathlib import Path

from . import harness, market_data, reporting, synth
from .errors import PricelabError
from .estimators import EstimatorLabel, PredictStatus, fit, predict
from .harness import DEFAULT_MASTER_SEED, ProtocolConfig, load_config, run_protocol
from .market_data import OptionKind, load_chains, save_chains
from .parity import estimate_dividend_curve, itm_parity_records
from .variance_gamma import vg_calibrate

_ENV_SEED = "PRICELAB_SEED"


def _master_seed(args: argparse.Namespace) -> int:
    env = os.environ.get(_ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{_ENV_SEED} must be an integer, got {env!r}") from None
    return args.seed


def _parse_kind(text: str) -> OptionKind:
    try:
        return {"put": OptionKind.PUT, "call": OptionKind.CALL}[text.lower()]
    except KeyError:
        raise ValueError(f"kind must be put or call, got {text!r}") from None


def _load_input(path: str) -> list[market_data.DailyChain]:
    if not Path(path).exists():
        raise FileNotFoundError(f"input file {path} does not exist")
    return load_chains(path)


def _single_day(chains, date_text: str | None):
    if date_text:
        wanted = dt.date.fromisoformat(date_text)
        for chain in chains:
            if chain.env.date == wanted:
                return chain
        raise ValueError(f"no quotes dated {wanted} in the input")
    if len(chains) != 1:
        dates = ", ".join(c.env.date.isoformat() for c in chains)
        raise ValueError(f"input holds several days ({dates}); pick one with --date")
    return chains[0]


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_ingest(args: argparse.Namespace) -> int:
    chains = _load_input(args.input)
    out = _out_dir(args) / "chains.csv"
    save_chains(chains, out, include_iv=args.with_iv)
    total = sum(len(c) for c in chains)
    print(f"ingested {total} quotes over {len(chains)} days -> {out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    chains = synth.synth_chain(
        args.model,
        spot=args.spot,
        rate=args.rate,
        dividend=args.dividend,
        sigma=args.sigma,
        theta=args.theta,
        alpha=args.alpha,
        maturities_days=tuple(int(d) for d in args.maturities.split(",")),
        start_date=dt.date.fromisoformat(args.start_date),
        n_days=args.days,
        noise=args.noise,
        seed=_master_seed(args),
    )
    out = _out_dir(args) / "chains.csv"
    save_chains(chains, out)
    total = sum(len(c) for c in chains)
    print(f"wrote {total} {args.model.upper()} quotes over {len(chains)} days -> {out}")
    return 0


def _cmd_audit(args: argparse.Namespace) -> int:
    chains = _load_input(args.input)
    records = []
    unmatched = 0
    for chain in chains:
        liquid = market_data.filter_liquidity(chain)
        curve = estimate_dividend_curve(liquid)
        day_records, skipped = itm_parity_records(liquid, curve)
        records.extend(day_records)
        unmatched += skipped
    merged = reporting.aggregate(
        records, "all", label="PARITY", extra={"unmatched_itm": float(unmatched)}
    )
    out = _out_dir(args) / "audit.csv"
    reporting.write_report_csv(merged, out)
    print(reporting.render_reports([merged]))
    print(f"wrote {out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    chains = _load_input(args.input)
    config = load_config(args.config) if args.config else ProtocolConfig()
    overrides: dict = {"master_seed": _master_seed(args)}
    if args.labels:
        overrides["labels"] = tuple(s.strip().upper() for s in args.labels.split(","))
    if args.kind:
        overrides["kind"] = _parse_kind(args.kind)
    if args.trim:
        overrides["trim"] = True
    if args.fraction is not None:
        overrides["fraction"] = args.fraction
    if args.partitions:
        overrides["partitions"] = tuple(s.strip() for s in args.partitions.split(","))
    if args.workers is not None:
        overrides["workers"] = args.workers
    config = dataclasses.replace(config, **overrides)
    for name in config.labels:
        EstimatorLabel(name)

    result = run_protocol(chains, config)
    out = _out_dir(args)
    written = result.write(out)
    reports = [result.reports[key] for key in sorted(result.reports)]
    print(reporting.render_reports(reports))
    print(f"wrote {len(written)} reports -> {out}")
    return 0


def _cmd_calibrate_vg(args: argparse.Namespace) -> int:
    chains = _load_input(args.input)
    chain = _single_day(chains, args.date)
    liquid = market_data.filter_liquidity(chain)
    kind = _parse_kind(args.kind)
    quotes = [
        (q.strike, q.tau, q.mid)
        for q in liquid.quotes
        if q.kind == kind and q.tau > 0.0 and q.mid > 0.0
    ]
    if not quotes:
        raise ValueError(f"no usable {args.kind} quotes on {chain.env.date}")
    params, objective = vg_calibrate(
        quotes, kind, liquid.env.spot, liquid.env.rate, liquid.env.div_hist
    )
    out = _out_dir(args) / "vg_params.csv"
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["theta", "sigma", "alpha", "eta", "objective"])
        writer.writerow([repr(params.theta), repr(params.sigma), repr(params.alpha),
                         repr(params.eta), repr(objective)])
    print(f"theta={params.theta:.6g} sigma={params.sigma:.6g} alpha={params.alpha:.6g} "
          f"eta={params.eta:.6g} objective={objective:.3e}")
    print(f"wrote {out}")
    return 0


def _cmd_price(args: argparse.Namespace) -> int:
    chains = _load_input(args.input)
    chain = _single_day(chains, args.date)
    liquid = market_data.filter_liquidity(chain)
    kind = _parse_kind(args.kind)
    label = EstimatorLabel(args.label.upper())
    try:
        curve = estimate_dividend_curve(liquid)
    except PricelabError:
        curve = None
    day = liquid.of_kind(kind)
    estimator = fit(label, kind, day.quotes, liquid.env, curve=curve)

    queries = []
    with open(args.queries, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"strike", "tau"} <= set(reader.fieldnames):
            raise ValueError(f"query file {args.queries} needs strike,tau columns")
        for row in reader:
            queries.append((float(row["strike"]), float(row["tau"])))

    out = _out_dir(args) / "prices.csv"
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["strike", "tau", "price", "status"])
        for strike, tau in queries:
            prediction = predict(estimator, strike, tau)
            if prediction.status is PredictStatus.PRICED:
                status = "extrapolated" if prediction.extrapolated else "priced"
                price_text = repr(prediction.price)
            else:
                status = prediction.status.value
                price_text = ""
            writer.writerow([repr(strike), repr(tau), price_text, status])
    print(f"priced {len(queries)} queries with {label.value} -> {out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    paths = sorted(Path(args.input).glob("report_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no report_*.csv files under {args.input}")
    reports = [reporting.read_report_csv(path) for path in paths]
    print(reporting.render_reports(reports))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pricelab",
        description="Daily option-chain pricing estimators and their evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, output: bool = True) -> None:
        if output:
            p.add_argument("--output-dir", default=".", help="directory for outputs")
        p.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED,
                       help=f"master seed (env {_ENV_SEED} overrides)")

    p = sub.add_parser("ingest", help="validate and normalize a chain CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--with-iv", action="store_true", help="include the implied_vol column")
    common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate synthetic chains")
    p.add_argument("--model", default="BS", choices=["BS", "VG", "bs", "vg"])
    p.add_argument("--spot", type=float, default=100.0)
    p.add_argument("--rate", type=float, default=0.02)
    p.add_argument("--dividend", type=float, default=0.01)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--theta", type=float, default=-0.1)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--maturities", default="30,91,182,365", help="days, comma separated")
    p.add_argument("--start-date", default="2012-01-03")
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.0)
    common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("audit", help="parity-audit ITM quotes")
    p.add_argument("--input", required=True)
    common(p)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("evaluate", help="run the out-of-sample protocol")
    p.add_argument("--input", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--labels", help="comma-separated estimator labels")
    p.add_argument("--kind", help="put or call")
    p.add_argument("--trim", action="store_true", help="apply the price/vol trim")
    p.add_argument("--fraction", type=float, help="training fraction")
    p.add_argument("--partitions", help="comma-separated partition names")
    p.add_argument("--workers", type=int, help="parallel day workers")
    common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("calibrate-vg", help="fit Variance-Gamma parameters to one day")
    p.add_argument("--input", required=True)
    p.add_argument("--date", help="day to calibrate (defaults to the only day)")
    p.add_argument("--kind", default="put")
    common(p)
    p.set_defaults(func=_cmd_calibrate_vg)

    p = sub.add_parser("price", help="fit one estimator and price queries")
    p.add_argument("--input", required=True)
    p.add_argument("--date", help="day to fit (defaults to the only day)")
    p.add_argument("--label", required=True)
    p.add_argument("--kind", default="put")
    p.add_argument("--queries", required=True, help="CSV with strike,tau columns")
    common(p)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("report", help="render report CSVs as text tables")
    p.add_argument("--input", required=True, help="directory holding report_*.csv")
    common(p, output=False)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PricelabError, ValueError, OSError) as exc:
        print(f"pricelab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
