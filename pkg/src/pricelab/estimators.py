"""The pricing estimators under evaluation, behind one fit/predict surface.

Labels:

    LI      linear interpolation of prices in normalized coordinates
    BS      linear interpolation of implied vols, repriced through the
            pricing formula with the day's dividend curve
    NW      kernel regression of prices on raw (strike, tau), Silverman
            bandwidths
    NWCV    same, bandwidths by leave-one-out cross-validation
    BSNW    kernel regression of implied vols, repriced
    BSNWCV  same, cross-validated bandwidths
    VG      Variance-Gamma parametric fit
    LIB     LI on quotes augmented with fictitious expiring options

LI, BS, and LIB are hull-domain estimators: outside the convex hull of
their training samples (in normalized coordinates) they return the
OUTSIDE_HULL marker. The kernel and parametric labels answer every
query but flag extrapolation whenever the query leaves the training
hull, so downstream reports can split errors by hull membership.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .black_scholes import BsInputs, bs_price, implied_vol
from .errors import InsufficientData, NoArbitrageViolation, NoConvergence, PricelabError
from .kernel import NwModel, loo_cv_bandwidths, nw_estimate, silverman_bandwidths
from .market_data import MarketEnv, OptionKind, OptionQuote
from .parity import DividendCurve
from .surface import OUTSIDE_HULL, augment_zero_maturity, normalized_li_price, normalized_li_values
from .variance_gamma import vg_calibrate, vg_price_quadrature


class EstimatorLabel(enum.Enum):
    LI = "LI"
    BS = "BS"
    NW = "NW"
    NWCV = "NWCV"
    BSNW = "BSNW"
    BSNWCV = "BSNWCV"
    VG = "VG"
    LIB = "LIB"


HULL_LABELS = frozenset({EstimatorLabel.LI, EstimatorLabel.BS, EstimatorLabel.LIB})


class PredictStatus(enum.Enum):
    PRICED = "priced"
    OUTSIDE_HULL = "outside_hull"
    FAILED = "failed"


@dataclass(frozen=True)
class Prediction:
    """price is set exactly when status is PRICED; extrapolated marks a
    priced query outside the training hull (unrestricted labels only)."""

    price: float | None
    status: PredictStatus
    extrapolated: bool = False


class _TrainingHull:
    """Membership test for the raw (strike, tau) training scatter, used to
    flag extrapolation. Falls back to the bounding box when the points
    cannot span a triangulation."""

    def __init__(self, strikes: np.ndarray, taus: np.ndarray):
        points = np.column_stack([strikes, taus])
        self._tri = None
        if len(points) >= 3:
            try:
                tri = Delaunay(points)
                if tri.simplices.size:
                    self._tri = tri
            except QhullError:
                self._tri = None
        self._lo = points.min(axis=0)
        self._hi = points.max(axis=0)

    def contains(self, strike: float, tau: float) -> bool:
        if self._tri is not None:
            return bool(self._tri.find_simplex((strike, tau)) >= 0)
        return bool(
            self._lo[0] <= strike <= self._hi[0] and self._lo[1] <= tau <= self._hi[1]
        )


@dataclass(frozen=True)
class PricingEstimator:
    """A fitted estimator: immutable, so predictions are safe to run
    concurrently. meta records fitting diagnostics (dropped quotes,
    coordinate conventions, selected bandwidths, fitted parameters)."""

    label: EstimatorLabel
    kind: OptionKind
    env: MarketEnv
    price_fn: Callable[[float, float], float | object] = field(repr=False)
    hull_fn: Callable[[float, float], bool] = field(repr=False)
    meta: dict = field(default_factory=dict)


def _usable(quotes: Sequence[OptionQuote], kind: OptionKind) -> list[OptionQuote]:
    return [q for q in quotes if q.kind == kind and q.tau >= 0.0]


def _require(quotes: list, label: EstimatorLabel, minimum: int) -> None:
    if len(quotes) < minimum:
        raise InsufficientData(
            f"{label.value} needs at least {minimum} usable quotes, got {len(quotes)}"
        )


def _invert_vols(
    quotes: Sequence[OptionQuote], env: MarketEnv, dividend_at: Callable[[float], float]
) -> tuple[list[OptionQuote], list[float], int]:
    """Implied vols for the quotes that admit one; returns the kept
    quotes, their vols, and the dropped count."""
    kept: list[OptionQuote] = []
    vols: list[float] = []
    dropped = 0
    for q in quotes:
        if q.tau <= 0.0 or q.mid <= 0.0:
            dropped += 1
            continue
        try:
            vols.append(
                implied_vol(q.kind, q.mid, env.spot, q.strike, env.rate, dividend_at(q.tau), q.tau)
            )
            kept.append(q)
        except (NoArbitrageViolation, NoConvergence, ValueError):
            dropped += 1
    return kept, vols, dropped


def fit(
    label: EstimatorLabel,
    kind: OptionKind,
    quotes: Sequence[OptionQuote],
    env: MarketEnv,
    curve: DividendCurve | None = None,
    lib_strike_range: tuple[float, float] | None = None,
) -> PricingEstimator:
    """Fit one estimator to a day's training quotes.

    curve supplies the dividend yield by maturity for the implied-vol
    routes, falling back to env.div_hist when absent. lib_strike_range
    widens the fictitious-strike span for LIB beyond the training quotes
    (pass the full day's range when the quotes are a training subset).

    Raises InsufficientData when too few usable quotes remain for the
    label, and propagates calibration or geometry failures.
    """
    quotes = _usable(quotes, kind)
    if curve is not None:
        dividend_at: Callable[[float], float] = curve.value_at
    else:
        flat = env.div_hist
        dividend_at = lambda tau: flat
    meta: dict = {"n_train": len(quotes)}

    if label is EstimatorLabel.LI:
        _require(quotes, label, 3)
        surf = normalized_li_price(quotes, kind, env.spot)
        meta["coords"] = "normalized"
        return PricingEstimator(label, kind, env, surf.value_at, surf.in_domain, meta)

    if label is EstimatorLabel.LIB:
        _require(quotes, label, 3)
        augmented = augment_zero_maturity(
            quotes, kind, env.spot, strike_range=lib_strike_range, expiry=env.date
        )
        surf = normalized_li_price(augmented, kind, env.spot)
        meta["coords"] = "normalized"
        meta["n_fictitious"] = len(augmented) - len(quotes)
        return PricingEstimator(label, kind, env, surf.value_at, surf.in_domain, meta)

    if label is EstimatorLabel.BS:
        kept, vols, dropped = _invert_vols(quotes, env, dividend_at)
        _require(kept, label, 3)
        strikes = np.array([q.strike for q in kept])
        taus = np.array([q.tau for q in kept])
        surf = normalized_li_values(strikes, taus, np.array(vols), env.spot, value_scale=1.0)
        meta.update({"coords": "normalized", "dropped_noninvertible": dropped})

        def price_fn(strike: float, tau: float):
            vol = surf.value_at(strike, tau)
            if vol is OUTSIDE_HULL:
                return OUTSIDE_HULL
            return bs_price(
                BsInputs(kind, env.spot, strike, env.rate, dividend_at(tau), vol, tau)
            )

        return PricingEstimator(label, kind, env, price_fn, surf.in_domain, meta)

    if label in (EstimatorLabel.NW, EstimatorLabel.NWCV):
        pricable = [q for q in quotes if q.tau > 0.0]
        _require(pricable, label, 3 if label is EstimatorLabel.NWCV else 1)
        strikes = np.array([q.strike for q in pricable])
        taus = np.array([q.tau for q in pricable])
        prices = np.array([q.mid for q in pricable])
        points = np.column_stack([strikes, taus])
        if label is EstimatorLabel.NWCV:
            bandwidths = loo_cv_bandwidths(points, prices)
        else:
            bandwidths = silverman_bandwidths(points)
        model = NwModel(strikes, taus, prices, bandwidths)
        hull = _TrainingHull(strikes, taus)
        meta.update({"coords": "raw", "bandwidths": (bandwidths.eps1, bandwidths.eps2)})
        return PricingEstimator(
            label, kind, env, lambda k, t: nw_estimate(model, k, t), hull.contains, meta
        )

    if label in (EstimatorLabel.BSNW, EstimatorLabel.BSNWCV):
        kept, vols, dropped = _invert_vols(quotes, env, dividend_at)
        _require(kept, label, 3 if label is EstimatorLabel.BSNWCV else 1)
        strikes = np.array([q.strike for q in kept])
        taus = np.array([q.tau for q in kept])
        vols = np.array(vols)
        points = np.column_stack([strikes, taus])
        # Vols are smoothed on the same raw coordinates as prices.
        if label is EstimatorLabel.BSNWCV:
            bandwidths = loo_cv_bandwidths(points, vols)
        else:
            bandwidths = silverman_bandwidths(points)
        model = NwModel(strikes, taus, vols, bandwidths)
        hull = _TrainingHull(strikes, taus)
        meta.update({
            "coords": "raw",
            "dropped_noninvertible": dropped,
            "bandwidths": (bandwidths.eps1, bandwidths.eps2),
        })

        def price_fn(strike: float, tau: float):
            vol = nw_estimate(model, strike, tau)
            return bs_price(
                BsInputs(kind, env.spot, strike, env.rate, dividend_at(tau), vol, tau)
            )

        return PricingEstimator(label, kind, env, price_fn, hull.contains, meta)

    if label is EstimatorLabel.VG:
        pricable = [q for q in quotes if q.tau > 0.0 and q.mid > 0.0]
        _require(pricable, label, 3)
        triples = [(q.strike, q.tau, q.mid) for q in pricable]
        dividend = dividend_at(float(np.median([q.tau for q in pricable])))
        params, objective = vg_calibrate(triples, kind, env.spot, env.rate, dividend)
        strikes = np.array([q.strike for q in pricable])
        taus = np.array([q.tau for q in pricable])
        hull = _TrainingHull(strikes, taus)
        meta.update({
            "params": (params.theta, params.sigma, params.alpha),
            "objective": objective,
            "dividend": dividend,
        })
        return PricingEstimator(
            label, kind, env,
            lambda k, t: vg_price_quadrature(kind, env.spot, k, env.rate, dividend, t, params),
            hull.contains, meta,
        )

    raise ValueError(f"unknown label {label!r}")


def predict(estimator: PricingEstimator, strike: float, tau: float) -> Prediction:
    """Evaluate a fitted estimator at one query.

    Hull-domain labels return OUTSIDE_HULL status outside their training
    hull; unrestricted labels always price but flag extrapolation there.
    Numerical failures at a query (kernel underflow, quadrature trouble)
    come back as FAILED, never as exceptions.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    if strike <= 0.0:
        raise ValueError(f"strike must be positive, got {strike}")
    try:
        value = estimator.price_fn(strike, tau)
    except (PricelabError, ValueError, FloatingPointError):
        return Prediction(price=None, status=PredictStatus.FAILED)
    if value is OUTSIDE_HULL:
        return Prediction(price=None, status=PredictStatus.OUTSIDE_HULL)
    value = float(value)
    if not math.isfinite(value):
        return Prediction(price=None, status=PredictStatus.FAILED)
    in_hull = estimator.hull_fn(strike, tau)
    return Prediction(price=value, status=PredictStatus.PRICED, extrapolated=not in_hull)
