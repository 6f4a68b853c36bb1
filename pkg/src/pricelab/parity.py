"""Put-call parity with a dividend yield, and what it buys you.

For European options on the same strike and expiry,

    C - P = S e^{-q tau} - K e^{-r tau},

so a call/put pair reveals the market's dividend yield:

    q = -(1/tau) log[(C - P + K e^{-r tau}) / S].

At-the-money pairs give the cleanest read (their prices carry the most
time value relative to intrinsic), so the per-day dividend curve is the
per-maturity median over ATM pairs. The same identity prices an
illiquid in-the-money option off its liquid out-of-the-money
counterpart; itm_parity_audit measures how well that works on a day of
quotes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NoAtmPairs
from .market_data import DailyChain, MarketEnv, OptionKind
from .reporting import ErrorReport, ErrorStatus, PricingError, aggregate

# Moneyness band: with M = log(K / forward), a quote is at the money
# when M is within [log 0.95, log 1.05].
ATM_LO = math.log(0.95)
ATM_HI = math.log(1.05)


class Moneyness(enum.Enum):
    ITM = "ITM"
    ATM = "ATM"
    OTM = "OTM"


@dataclass(frozen=True)
class MoneynessClass:
    value: float
    label: Moneyness


class ParityPrice(NamedTuple):
    """Price implied by parity; negative marks an arbitrage-violating input."""

    price: float
    negative: bool


@dataclass(frozen=True)
class ParityLeg:
    """A call/put pair on one strike and expiry."""

    strike: float
    tau: float
    call_mid: float
    put_mid: float


def parity_price(
    kind: OptionKind,
    counterpart_mid: float,
    spot: float,
    strike: float,
    rate: float,
    dividend: float,
    tau: float,
) -> ParityPrice:
    """Price an option of the given kind from its opposite-kind counterpart.

    Returns the parity value as-is; a negative value (crossed or stale
    inputs) is flagged, not raised."""
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    carry = spot * math.exp(-dividend * tau) - strike * math.exp(-rate * tau)
    if kind is OptionKind.CALL:
        value = counterpart_mid + carry
    else:
        value = counterpart_mid - carry
    return ParityPrice(value, value < 0.0)


def implied_dividend(leg: ParityLeg, spot: float, rate: float) -> float:
    """Dividend yield implied by one call/put pair.

    Raises ValueError when C - P + K e^{-r tau} is non-positive (crossed
    or stale quotes make the log argument invalid)."""
    if leg.tau <= 0.0:
        raise ValueError(f"tau must be positive, got {leg.tau}")
    argument = (leg.call_mid - leg.put_mid + leg.strike * math.exp(-rate * leg.tau)) / spot
    if argument <= 0.0:
        raise ValueError(f"parity log argument {argument} is non-positive; quotes are inconsistent")
    return -math.log(argument) / leg.tau


def forward_price(spot: float, rate: float, dividend: float, tau: float) -> float:
    """Forward of the underlying at horizon tau."""
    if tau < 0.0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    return spot * math.exp((rate - dividend) * tau)


def classify_moneyness(kind: OptionKind, strike: float, env: MarketEnv, tau: float) -> MoneynessClass:
    """Log-moneyness against the day's forward, bucketed to ITM/ATM/OTM.

    The forward uses the environment's rate and historical dividend, so
    classification never depends on the option-implied dividend it is
    often used to estimate. Calls are in the money below the band and
    out above it; puts the reverse.
    """
    if strike <= 0.0:
        raise ValueError(f"strike must be positive, got {strike}")
    value = math.log(strike / forward_price(env.spot, env.rate, env.div_hist, tau))
    if ATM_LO <= value <= ATM_HI:
        label = Moneyness.ATM
    elif value < ATM_LO:
        label = Moneyness.ITM if kind is OptionKind.CALL else Moneyness.OTM
    else:
        label = Moneyness.OTM if kind is OptionKind.CALL else Moneyness.ITM
    return MoneynessClass(value, label)


class DividendCurve:
    """Piecewise-linear dividend yield in tau, constant outside the knots."""

    def __init__(self, taus, yields):
        taus = np.asarray(taus, dtype=float)
        yields = np.asarray(yields, dtype=float)
        if taus.size == 0:
            raise ValueError("a dividend curve needs at least one knot")
        if taus.size != yields.size:
            raise ValueError("knot and yield counts differ")
        order = np.argsort(taus)
        taus, yields = taus[order], yields[order]
        if np.any(np.diff(taus) <= 0.0):
            raise ValueError("knot maturities must be strictly increasing")
        self.taus = taus
        self.yields = yields

    def value_at(self, tau: float) -> float:
        return float(np.interp(tau, self.taus, self.yields))

    def __call__(self, tau: float) -> float:
        return self.value_at(tau)

    def __repr__(self) -> str:
        knots = ", ".join(f"{t:g}: {q:g}" for t, q in zip(self.taus, self.yields))
        return f"DividendCurve({{{knots}}})"


def _atm_pairs(chain: DailyChain) -> dict[float, list[ParityLeg]]:
    """ATM call/put pairs keyed by tau, matched on (expiry, strike)."""
    calls: dict[tuple, float] = {}
    puts: dict[tuple, float] = {}
    taus: dict[tuple, float] = {}
    for q in chain.quotes:
        key = (q.expiry, q.strike)
        taus[key] = q.tau
        if q.kind is OptionKind.CALL:
            calls[key] = q.mid
        else:
            puts[key] = q.mid

    pairs: dict[float, list[ParityLeg]] = {}
    for key in calls.keys() & puts.keys():
        expiry, strike = key
        tau = taus[key]
        if tau <= 0.0:
            continue
        if classify_moneyness(OptionKind.CALL, strike, chain.env, tau).label is not Moneyness.ATM:
            continue
        pairs.setdefault(tau, []).append(
            ParityLeg(strike=strike, tau=tau, call_mid=calls[key], put_mid=puts[key])
        )
    return pairs


def estimate_dividend_curve(chain: DailyChain) -> DividendCurve:
    """Per-maturity median implied dividend over the day's ATM pairs.

    Raises NoAtmPairs when no maturity has a usable pair."""
    pairs = _atm_pairs(chain)
    knots: list[tuple[float, float]] = []
    for tau in sorted(pairs):
        estimates = []
        for leg in pairs[tau]:
            try:
                estimates.append(implied_dividend(leg, chain.env.spot, chain.env.rate))
            except ValueError:
                continue
        if estimates:
            knots.append((tau, float(np.median(estimates))))
    if not knots:
        raise NoAtmPairs(f"no at-the-money call/put pairs on {chain.env.date}")
    return DividendCurve([t for t, _ in knots], [q for _, q in knots])


def itm_parity_records(chain: DailyChain, curve: DividendCurve) -> tuple[list[PricingError], int]:
    """Per-quote parity audit records plus the skipped-ITM count."""
    mids: dict[tuple, float] = {}
    for q in chain.quotes:
        mids[(q.kind, q.expiry, q.strike)] = q.mid

    other = {OptionKind.CALL: OptionKind.PUT, OptionKind.PUT: OptionKind.CALL}
    records: list[PricingError] = []
    skipped = 0
    for q in chain.quotes:
        if q.tau <= 0.0:
            continue
        if classify_moneyness(q.kind, q.strike, chain.env, q.tau).label is not Moneyness.ITM:
            continue
        counterpart = mids.get((other[q.kind], q.expiry, q.strike))
        if counterpart is None or q.mid <= 0.0:
            skipped += 1
            continue
        estimate = parity_price(
            q.kind, counterpart, chain.env.spot, q.strike, chain.env.rate,
            curve.value_at(q.tau), q.tau,
        ).price
        records.append(
            PricingError(
                date=chain.env.date,
                label="PARITY",
                strike=q.strike,
                tau=q.tau,
                true_price=q.mid,
                est_price=estimate,
                rel_error=abs(1.0 - estimate / q.mid),
                status=ErrorStatus.PRICED,
            )
        )
    return records, skipped


def itm_parity_audit(chain: DailyChain, curve: DividendCurve) -> ErrorReport:
    """Reprice every in-the-money quote off its out-of-the-money
    counterpart via parity and report the relative errors.

    A counterpart is the opposite kind on the same expiry and strike;
    sharing the log-moneyness, it is out of the money exactly when the
    audited quote is in. Unmatched or zero-mid ITM quotes are skipped
    and counted in the report's extra column.
    """
    records, skipped = itm_parity_records(chain, curve)
    return aggregate(records, "all", label="PARITY", extra={"unmatched_itm": float(skipped)})
