"""Option-chain data model and CSV persistence.

A chain file is one CSV holding any number of trading days. Required
columns, in any order:

    date,kind,strike,expiry,bid,ask,volume,spot,rate,div_hist

Dates are ISO (YYYY-MM-DD), kind is C or P, and the per-day market
environment (spot, rate, div_hist) must repeat identically on every row
of that day. An optional implied_vol column is accepted on input and
written when requested, so derived chains round-trip through the same
schema.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ChainParseError

# Calendar-day year fraction used everywhere a maturity in days becomes
# a year fraction.
DAYS_PER_YEAR = 365.0

_REQUIRED_COLUMNS = (
    "date",
    "kind",
    "strike",
    "expiry",
    "bid",
    "ask",
    "volume",
    "spot",
    "rate",
    "div_hist",
)
_OPTIONAL_COLUMNS = ("implied_vol",)

# Liquidity-filter defaults: drop quotes expiring in under a day or with
# volume under 100 contracts. Bounds are inclusive for retention.
DEFAULT_MIN_TTM_DAYS = 1
DEFAULT_MIN_VOLUME = 100

# Trim defaults: drop quotes priced under 1/8 or with implied vol above
# 0.7. Bounds are inclusive for retention.
DEFAULT_MAX_IV = 0.7
DEFAULT_MIN_PRICE = 0.125


class OptionKind(enum.Enum):
    CALL = "C"
    PUT = "P"


@dataclass(frozen=True)
class OptionQuote:
    """One quoted option: static terms plus the day's bid/ask/volume."""

    kind: OptionKind
    strike: float
    expiry: dt.date
    ttm_days: int
    bid: float
    ask: float
    volume: int
    implied_vol: float | None = None

    @property
    def mid(self) -> float:
        return 0.5 * (self.bid + self.ask)

    @property
    def tau(self) -> float:
        """Time to expiry in years."""
        return self.ttm_days / DAYS_PER_YEAR


@dataclass(frozen=True)
class MarketEnv:
    """Per-day market environment: spot, flat short rate, and the
    historical dividend-yield estimate used as a fallback when no
    option-implied dividend curve is available."""

    date: dt.date
    spot: float
    rate: float
    div_hist: float


@dataclass(frozen=True)
class DailyChain:
    """All quotes of one trading day plus that day's environment."""

    env: MarketEnv
    quotes: tuple[OptionQuote, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.quotes)

    def of_kind(self, kind: OptionKind) -> "DailyChain":
        return DailyChain(self.env, tuple(q for q in self.quotes if q.kind == kind))


def _parse_date(text: str, line: int, column: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ChainParseError(line, f"bad {column} {text!r}, expected YYYY-MM-DD") from None


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ChainParseError(line, f"bad {column} {text!r}") from None
    if not math.isfinite(value):
        raise ChainParseError(line, f"non-finite {column} {text!r}")
    return value


def _parse_int(text: str, line: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ChainParseError(line, f"bad {column} {text!r}") from None


def quote_sort_key(q: OptionQuote):
    """Canonical within-day quote order: kind, then expiry, then strike.
    Loading and saving both normalize to it, so chain files have one
    well-defined byte representation."""
    return (q.kind.value, q.expiry, q.strike)


def load_chains(path: str | Path) -> list[DailyChain]:
    """Parse a chain CSV into per-day chains, sorted by date.

    Validates each row (prices, volume, date ordering) and the per-day
    environment consistency; any violation raises ChainParseError with
    the offending line number.
    """
    path = Path(path)
    days: dict[dt.date, list[OptionQuote]] = {}
    envs: dict[dt.date, MarketEnv] = {}
    env_lines: dict[dt.date, int] = {}

    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ChainParseError(1, "empty file, expected a header row")
        names = [name.strip() for name in reader.fieldnames]
        missing = [c for c in _REQUIRED_COLUMNS if c not in names]
        unexpected = [c for c in names if c not in _REQUIRED_COLUMNS + _OPTIONAL_COLUMNS]
        if missing or unexpected:
            raise ChainParseError(
                1,
                f"bad header: missing {missing or 'none'}, unexpected {unexpected or 'none'}",
            )
        has_iv = "implied_vol" in names

        for row in reader:
            line = reader.line_num
            if any(row.get(c) is None for c in _REQUIRED_COLUMNS):
                raise ChainParseError(line, "wrong number of fields")
            date = _parse_date(row["date"], line, "date")
            expiry = _parse_date(row["expiry"], line, "expiry")
            kind_text = row["kind"].strip()
            try:
                kind = OptionKind(kind_text)
            except ValueError:
                raise ChainParseError(line, f"bad kind {kind_text!r}, expected C or P") from None

            strike = _parse_float(row["strike"], line, "strike")
            bid = _parse_float(row["bid"], line, "bid")
            ask = _parse_float(row["ask"], line, "ask")
            volume = _parse_int(row["volume"], line, "volume")
            spot = _parse_float(row["spot"], line, "spot")
            rate = _parse_float(row["rate"], line, "rate")
            div_hist = _parse_float(row["div_hist"], line, "div_hist")

            if strike <= 0.0:
                raise ChainParseError(line, f"strike must be positive, got {strike}")
            if spot <= 0.0:
                raise ChainParseError(line, f"spot must be positive, got {spot}")
            if bid < 0.0:
                raise ChainParseError(line, f"bid must be non-negative, got {bid}")
            if ask < bid:
                raise ChainParseError(line, f"crossed quote: bid {bid} > ask {ask}")
            if volume < 0:
                raise ChainParseError(line, f"volume must be non-negative, got {volume}")
            ttm_days = (expiry - date).days
            if ttm_days < 0:
                raise ChainParseError(line, f"expiry {expiry} precedes quote date {date}")

            iv: float | None = None
            if has_iv:
                text = (row.get("implied_vol") or "").strip()
                if text:
                    iv = _parse_float(text, line, "implied_vol")

            env = MarketEnv(date=date, spot=spot, rate=rate, div_hist=div_hist)
            if date in envs:
                if envs[date] != env:
                    seen = envs[date]
                    diffs = ", ".join(
                        f"{name} {getattr(seen, name)} != {getattr(env, name)}"
                        for name in ("spot", "rate", "div_hist")
                        if getattr(seen, name) != getattr(env, name)
                    )
                    raise ChainParseError(
                        line,
                        f"environment for {date} conflicts with line {env_lines[date]}: {diffs}",
                    )
            else:
                envs[date] = env
                env_lines[date] = line
                days[date] = []

            days[date].append(
                OptionQuote(
                    kind=kind,
                    strike=strike,
                    expiry=expiry,
                    ttm_days=ttm_days,
                    bid=bid,
                    ask=ask,
                    volume=volume,
                    implied_vol=iv,
                )
            )

    return [
        DailyChain(envs[date], tuple(sorted(days[date], key=quote_sort_key)))
        for date in sorted(days)
    ]


def save_chains(chains: Iterable[DailyChain], path: str | Path, include_iv: bool = False) -> None:
    """Write chains back out in the input schema.

    Floats are written with shortest round-trip repr, so load(save(x))
    reproduces x exactly. Pass include_iv=True to append the implied_vol
    column (blank for quotes without one).
    """
    path = Path(path)
    columns = list(_REQUIRED_COLUMNS) + (["implied_vol"] if include_iv else [])
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for chain in sorted(chains, key=lambda c: c.env.date):
            env = chain.env
            for q in sorted(chain.quotes, key=quote_sort_key):
                row = [
                    env.date.isoformat(),
                    q.kind.value,
                    repr(q.strike),
                    q.expiry.isoformat(),
                    repr(q.bid),
                    repr(q.ask),
                    str(q.volume),
                    repr(env.spot),
                    repr(env.rate),
                    repr(env.div_hist),
                ]
                if include_iv:
                    row.append("" if q.implied_vol is None else repr(q.implied_vol))
                writer.writerow(row)


def filter_liquidity(
    chain: DailyChain,
    min_ttm_days: int = DEFAULT_MIN_TTM_DAYS,
    min_volume: int = DEFAULT_MIN_VOLUME,
) -> DailyChain:
    """Drop quotes expiring too soon or too thinly traded (inclusive bounds)."""
    kept = tuple(
        q for q in chain.quotes if q.ttm_days >= min_ttm_days and q.volume >= min_volume
    )
    return DailyChain(chain.env, kept)


def trim(
    chain: DailyChain,
    max_iv: float = DEFAULT_MAX_IV,
    min_price: float = DEFAULT_MIN_PRICE,
) -> DailyChain:
    """Drop cheap quotes and extreme-vol quotes (inclusive retention bounds).

    Expects implied_vol populated; quotes whose vol could not be computed
    (implied_vol is None) are dropped here, having been counted by
    black_scholes.fill_implied_vols.
    """
    kept = tuple(
        q
        for q in chain.quotes
        if q.implied_vol is not None and q.mid >= min_price and q.implied_vol <= max_iv
    )
    return DailyChain(chain.env, kept)


def replace_quotes(chain: DailyChain, quotes: Sequence[OptionQuote]) -> DailyChain:
    return DailyChain(chain.env, tuple(quotes))


def with_implied_vol(quote: OptionQuote, iv: float | None) -> OptionQuote:
    return dataclasses.replace(quote, implied_vol=iv)
