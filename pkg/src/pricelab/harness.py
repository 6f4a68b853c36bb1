"""Out-of-sample evaluation protocol.

Each trading day is split 90/10 into training and test quotes with a
seed derived deterministically from (master seed, date), every label is
fit on the training side and asked to price the test side, and each test
quote becomes one PricingError record. Aggregation slices the records by
partition (all, in-hull, outside-hull, price above one dollar).

The protocol is reproducible end to end: the same input file and master
seed produce byte-identical report files, regardless of worker count.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .black_scholes import fill_implied_vols
from .errors import NoAtmPairs, PricelabError
from .estimators import EstimatorLabel, PredictStatus, fit, predict
from .market_data import (
    DEFAULT_MAX_IV,
    DEFAULT_MIN_PRICE,
    DEFAULT_MIN_TTM_DAYS,
    DEFAULT_MIN_VOLUME,
    DailyChain,
    OptionKind,
    filter_liquidity,
    trim,
)
from .parity import DividendCurve, estimate_dividend_curve
from .reporting import (
    CDF_THRESHOLDS,
    ErrorReport,
    ErrorStatus,
    PARTITIONS,
    PricingError,
    aggregate,
)

DEFAULT_MASTER_SEED = 20120103
DEFAULT_TRAIN_FRACTION = 0.9
DEFAULT_SPOT_TOLERANCE = 0.05

__all__ = [
    "DEFAULT_MASTER_SEED",
    "DEFAULT_TRAIN_FRACTION",
    "DaySplit",
    "ProtocolConfig",
    "ProtocolResult",
    "CrossDateMatch",
    "ErrorReport",
    "PricingError",
    "ErrorStatus",
    "CDF_THRESHOLDS",
    "aggregate",
    "day_seed",
    "split_day",
    "prepare_day",
    "evaluate_day",
    "run_protocol",
    "cross_date_report",
    "load_config",
]


def day_seed(master_seed: int, date: dt.date) -> int:
    """Stable 63-bit seed for one day, independent of platform and run."""
    digest = hashlib.sha256(f"{master_seed}:{date.isoformat()}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class DaySplit:
    """Index split of one day's quote list into train and test."""

    date: dt.date
    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int


def split_day(
    n_quotes: int,
    date: dt.date,
    master_seed: int = DEFAULT_MASTER_SEED,
    fraction: float = DEFAULT_TRAIN_FRACTION,
) -> DaySplit:
    """Random index split: ceil(fraction * n) training quotes, capped at
    n - 1 whenever n >= 2 so the test side is never empty."""
    if n_quotes < 1:
        raise ValueError("cannot split an empty day")
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n_train = math.ceil(fraction * n_quotes)
    if n_quotes >= 2:
        n_train = min(n_train, n_quotes - 1)
    seed = day_seed(master_seed, date)
    order = np.random.default_rng(seed).permutation(n_quotes)
    return DaySplit(
        date=date,
        train=tuple(sorted(int(i) for i in order[:n_train])),
        test=tuple(sorted(int(i) for i in order[n_train:])),
        seed=seed,
    )


@dataclass(frozen=True)
class ProtocolConfig:
    master_seed: int = DEFAULT_MASTER_SEED
    fraction: float = DEFAULT_TRAIN_FRACTION
    labels: tuple[str, ...] = ("LI", "BS", "NW", "NWCV", "LIB")
    kind: OptionKind = OptionKind.PUT
    trim: bool = False
    min_ttm_days: int = DEFAULT_MIN_TTM_DAYS
    min_volume: int = DEFAULT_MIN_VOLUME
    max_iv: float = DEFAULT_MAX_IV
    min_price: float = DEFAULT_MIN_PRICE
    partitions: tuple[str, ...] = ("all", "hull", "nohull", "gt1")
    workers: int = 1

    def resolved_labels(self) -> tuple[EstimatorLabel, ...]:
        return tuple(EstimatorLabel(name) for name in self.labels)


def prepare_day(chain: DailyChain, config: ProtocolConfig) -> tuple[DailyChain, DividendCurve | None]:
    """Shape one raw day for evaluation.

    Applies the liquidity filter, estimates the dividend curve from the
    filtered chain (both kinds; None when no ATM pairs exist), optionally
    fills vols and trims, then keeps the requested kind's positive-mid
    quotes. The returned chain is exactly what split indices refer to.
    """
    liquid = filter_liquidity(chain, config.min_ttm_days, config.min_volume)
    try:
        curve = estimate_dividend_curve(liquid)
    except NoAtmPairs:
        curve = None
    if config.trim:
        filled, _ = fill_implied_vols(liquid, curve)
        liquid = trim(filled, config.max_iv, config.min_price)
    kept = tuple(q for q in liquid.quotes if q.kind == config.kind and q.mid > 0.0)
    return DailyChain(liquid.env, kept), curve


def evaluate_day(
    label: EstimatorLabel,
    day: DailyChain,
    split: DaySplit,
    curve: DividendCurve | None = None,
    lib_strike_range: tuple[float, float] | None = None,
) -> list[PricingError]:
    """Fit on the day's training quotes and price its test quotes.

    One record per test quote. A fit failure (too few quotes, stalled
    calibration, degenerate geometry) marks the whole day FAILED rather
    than raising; per-query failures are likewise recorded, not thrown.
    """
    label = EstimatorLabel(label)
    quotes = day.quotes
    indices = split.train + split.test
    if indices and max(indices) >= len(quotes):
        raise ValueError("split indices do not match the day's quote list")
    kinds = {q.kind for q in quotes}
    if len(kinds) != 1:
        raise ValueError("evaluate_day expects a prepared single-kind day")
    kind = kinds.pop()
    train = [quotes[i] for i in split.train]
    test = [quotes[i] for i in split.test]

    try:
        estimator = fit(
            label, kind, train, day.env, curve=curve, lib_strike_range=lib_strike_range
        )
    except (PricelabError, ValueError):
        estimator = None

    records: list[PricingError] = []
    for q in test:
        if estimator is None:
            records.append(
                PricingError(
                    date=day.env.date, label=label.value, strike=q.strike, tau=q.tau,
                    true_price=q.mid, est_price=None, rel_error=None, status=ErrorStatus.FAILED,
                )
            )
            continue
        prediction = predict(estimator, q.strike, q.tau)
        if prediction.status is PredictStatus.OUTSIDE_HULL:
            status, est_price, rel = ErrorStatus.OUTSIDE_HULL, None, None
        elif prediction.status is PredictStatus.FAILED:
            status, est_price, rel = ErrorStatus.FAILED, None, None
        else:
            est_price = prediction.price
            rel = abs(1.0 - est_price / q.mid)
            status = ErrorStatus.EXTRAPOLATED if prediction.extrapolated else ErrorStatus.PRICED
        records.append(
            PricingError(
                date=day.env.date, label=label.value, strike=q.strike, tau=q.tau,
                true_price=q.mid, est_price=est_price, rel_error=rel, status=status,
            )
        )
    return records


def _evaluate_one_day(args) -> list[PricingError]:
    chain, config = args
    day, curve = prepare_day(chain, config)
    if len(day) < 2:
        return []
    split = split_day(len(day), day.env.date, config.master_seed, config.fraction)
    strikes = [q.strike for q in day.quotes]
    lib_range = (min(strikes), max(strikes))
    records: list[PricingError] = []
    for label in config.resolved_labels():
        records.extend(evaluate_day(label, day, split, curve, lib_range))
    return records


@dataclass
class ProtocolResult:
    config: ProtocolConfig
    errors: list[PricingError]
    reports: dict[tuple[str, str], ErrorReport] = field(default_factory=dict)

    def report(self, label: str, partition: str) -> ErrorReport:
        return self.reports[(label, partition)]

    def write(self, out_dir: str | Path) -> list[Path]:
        """One CSV per (label, partition), deterministically ordered and
        formatted, so reruns are byte-identical."""
        from .reporting import write_report_csv

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for (label, partition) in sorted(self.reports):
            path = out_dir / f"report_{label}_{partition}.csv"
            write_report_csv(self.reports[(label, partition)], path)
            written.append(path)
        return written


def run_protocol(chains: Sequence[DailyChain], config: ProtocolConfig = ProtocolConfig()) -> ProtocolResult:
    """Evaluate every label over every day and aggregate by partition.

    Days run independently (optionally across a bounded worker pool);
    results are collected in input order, so the outcome does not depend
    on scheduling.
    """
    for name in config.partitions:
        if name not in PARTITIONS:
            raise ValueError(f"unknown partition {name!r}")
    jobs = [(chain, config) for chain in sorted(chains, key=lambda c: c.env.date)]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_day = list(pool.map(_evaluate_one_day, jobs))
    else:
        per_day = [_evaluate_one_day(job) for job in jobs]

    errors = [record for day_records in per_day for record in day_records]
    result = ProtocolResult(config=config, errors=errors)
    for label in config.labels:
        label_records = [e for e in errors if e.label == label]
        for partition in config.partitions:
            result.reports[(label, partition)] = aggregate(label_records, partition, label=label)
    return result


@dataclass(frozen=True)
class CrossDateMatch:
    """The same contract quoted on two days with nearly equal spots."""

    date_a: dt.date
    date_b: dt.date
    kind: OptionKind
    strike: float
    ttm_days: int
    price_a: float
    price_b: float

    @property
    def diff(self) -> float:
        return self.price_b - self.price_a


def cross_date_report(
    chains: Sequence[DailyChain], spot_tolerance: float = DEFAULT_SPOT_TOLERANCE
) -> list[CrossDateMatch]:
    """Stability check: for every pair of days whose spots differ by at
    most the tolerance, list quotes matching on (kind, strike, days to
    expiry) with their price difference."""
    chains = sorted(chains, key=lambda c: c.env.date)
    matches: list[CrossDateMatch] = []
    for i in range(len(chains)):
        for j in range(i + 1, len(chains)):
            a, b = chains[i], chains[j]
            if abs(a.env.spot - b.env.spot) > spot_tolerance:
                continue
            quotes_b = {(q.kind, q.strike, q.ttm_days): q.mid for q in b.quotes}
            for q in a.quotes:
                other = quotes_b.get((q.kind, q.strike, q.ttm_days))
                if other is None:
                    continue
                matches.append(
                    CrossDateMatch(
                        date_a=a.env.date, date_b=b.env.date, kind=q.kind,
                        strike=q.strike, ttm_days=q.ttm_days,
                        price_a=q.mid, price_b=other,
                    )
                )
    return matches


def load_config(path: str | Path, base: ProtocolConfig = ProtocolConfig()) -> ProtocolConfig:
    """Read key=value lines (hash comments allowed) into a ProtocolConfig.

    Keys: master_seed, fraction, labels (comma list), kind (put/call),
    trim (true/false), min_ttm_days, min_volume, max_iv, min_price,
    partitions (comma list), workers.
    """
    values: dict[str, str] = {}
    for raw_line in Path(path).read_text().splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line {raw_line!r}, expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()

    def parse_kind(text: str) -> OptionKind:
        try:
            return {"put": OptionKind.PUT, "call": OptionKind.CALL}[text.lower()]
        except KeyError:
            raise ValueError(f"bad kind {text!r}, expected put or call") from None

    updates: dict = {}
    casts = {
        "master_seed": int,
        "fraction": float,
        "labels": lambda t: tuple(s.strip().upper() for s in t.split(",") if s.strip()),
        "kind": parse_kind,
        "trim": lambda t: t.lower() in ("true", "1", "yes"),
        "min_ttm_days": int,
        "min_volume": int,
        "max_iv": float,
        "min_price": float,
        "partitions": lambda t: tuple(s.strip() for s in t.split(",") if s.strip()),
        "workers": int,
    }
    for key, text in values.items():
        if key not in casts:
            raise ValueError(f"unknown config key {key!r}")
        updates[key] = casts[key](text)
    return dataclasses.replace(base, **updates)
