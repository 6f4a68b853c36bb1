"""Gamma-clock pricing: quadrature against brute-force integration,
Monte Carlo agreement, domain rules, and calibration."""

import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import gamma as gamma_dist

from pricelab.errors import CalibrationFailure, DomainViolation
from pricelab.market_data import OptionKind
from pricelab.variance_gamma import (
    VgParams,
    gamma_expectation,
    has_finite_variance,
    vg_calibrate,
    vg_eta,
    vg_price_mc,
    vg_price_quadrature,
)

CALL, PUT = OptionKind.CALL, OptionKind.PUT


def riemann_price(kind, spot, strike, rate, dividend, tau, params, n=400_001):
    """Trapezoid integration of the conditional price against the clock
    density on a dense grid. Only for tau >= 1, where the density is
    bounded at zero."""
    assert tau >= 1.0
    law = gamma_dist(a=tau, scale=1.0 / params.alpha)
    grid = np.linspace(1e-12, float(law.ppf(1.0 - 1e-14)), n)
    a = math.log(spot / strike) + (rate - dividend + params.eta) * tau
    leg_spot = spot * math.exp((-dividend + params.eta) * tau)
    leg_strike = strike * math.exp(-rate * tau)
    scale = params.sigma * np.sqrt(grid)
    d_plus = (a + (params.theta + params.sigma**2) * grid) / scale
    d_minus = (a + params.theta * grid) / scale
    lift = np.exp((params.theta + 0.5 * params.sigma**2) * grid)
    if kind is CALL:
        conditional = leg_spot * lift * ndtr(d_plus) - leg_strike * ndtr(d_minus)
    else:
        conditional = leg_strike * ndtr(-d_minus) - leg_spot * lift * ndtr(-d_plus)
    return float(np.trapezoid(conditional * law.pdf(grid), grid))


def test_eta_value_and_domain():
    assert vg_eta(0.1, 0.2, 2.0) == pytest.approx(math.log1p(-(0.1 + 0.02) / 2.0), rel=1e-15)
    with pytest.raises(DomainViolation):
        vg_eta(0.1, 0.0, 2.0)
    with pytest.raises(DomainViolation):
        vg_eta(0.1, 0.2, 0.0)
    with pytest.raises(DomainViolation):
        vg_eta(2.0, 0.5, 2.0)  # theta + sigma^2/2 >= alpha


def test_params_carry_eta():
    params = VgParams(-0.1, 0.25, 3.0)
    assert params.eta == pytest.approx(vg_eta(-0.1, 0.25, 3.0))
    with pytest.raises(DomainViolation):
        VgParams(5.0, 1.0, 2.0)


def test_finite_variance_boundary():
    assert has_finite_variance(VgParams(0.0, 0.3, 3.0))
    assert not has_finite_variance(VgParams(0.2, 0.5, 0.6))  # 0.65 >= 0.6
    assert not has_finite_variance(VgParams(0.0, 1.0, 1.0))  # equality


@pytest.mark.parametrize("shape, rate", [(0.5, 2.0), (1.0, 1.5), (2.5, 0.7)])
def test_gamma_expectation_moments(shape, rate):
    assert gamma_expectation(lambda g: 1.0, shape, rate) == pytest.approx(1.0, rel=1e-9)
    assert gamma_expectation(lambda g: g, shape, rate) == pytest.approx(shape / rate, rel=1e-8)
    assert gamma_expectation(lambda g: g * g, shape, rate) == pytest.approx(
        shape * (shape + 1.0) / rate**2, rel=1e-8
    )


@pytest.mark.parametrize("shape, rate, w", [(0.5, 2.0, 0.7), (0.5, 2.0, -3.0), (2.0, 1.0, 0.5)])
def test_gamma_expectation_mgf(shape, rate, w):
    expected = (1.0 - w / rate) ** (-shape)
    assert gamma_expectation(None, shape, rate, log_f=lambda g: w * g) == pytest.approx(
        expected, rel=1e-8
    )


def test_gamma_expectation_contracts():
    with pytest.raises(ValueError):
        gamma_expectation(None, 1.0, 1.0)
    with pytest.raises(ValueError):
        gamma_expectation(lambda g: g, 1.0, 1.0, log_f=lambda g: g)
    with pytest.raises(ValueError):
        gamma_expectation(lambda g: g, 0.0, 1.0)
    with pytest.raises(ValueError):
        gamma_expectation(lambda g: g, 1.0, -1.0)


@pytest.mark.parametrize(
    "kind, strike, tau, params",
    [
        (CALL, 100.0, 1.0, VgParams(-0.1, 0.25, 3.0)),
        (PUT, 100.0, 1.0, VgParams(-0.1, 0.25, 3.0)),
        (CALL, 115.0, 1.5, VgParams(0.05, 0.3, 2.0)),
        (PUT, 85.0, 2.0, VgParams(0.0, 0.2, 5.0)),
    ],
)
def test_quadrature_matches_riemann_oracle(kind, strike, tau, params):
    quad_price = vg_price_quadrature(kind, 100.0, strike, 0.02, 0.01, tau, params)
    oracle = riemann_price(kind, 100.0, strike, 0.02, 0.01, tau, params)
    assert quad_price == pytest.approx(oracle, rel=1e-7)


def test_put_call_parity_all_clock_shapes():
    # e^{eta T} cancels the clock's moment generating function exactly,
    # so parity holds with the plain carry legs at every maturity,
    # including the short ones where the clock density is singular.
    rng = np.random.default_rng(13)
    spot, rate, dividend = 100.0, 0.02, 0.01
    for tau in (0.1, 0.5, 1.0, 2.0):
        for _ in range(5):
            sigma = float(rng.uniform(0.1, 0.5))
            alpha = float(rng.uniform(1.0, 6.0))
            theta = float(rng.uniform(-0.4, min(0.4, alpha - 0.5 * sigma**2 - 0.1)))
            params = VgParams(theta, sigma, alpha)
            strike = spot * float(rng.uniform(0.85, 1.2))
            call = vg_price_quadrature(CALL, spot, strike, rate, dividend, tau, params)
            put = vg_price_quadrature(PUT, spot, strike, rate, dividend, tau, params)
            carry = spot * math.exp(-dividend * tau) - strike * math.exp(-rate * tau)
            assert call - put == pytest.approx(carry, abs=1e-7)


def test_parameter_scaling_leaves_prices_unchanged():
    # (theta, sigma^2, alpha) -> (c theta, c sigma^2, c alpha) rescales
    # the clock by 1/c and the conditional variance by c: the law of the
    # log-price, hence every price, is unchanged.
    base = VgParams(-0.15, 0.3, 2.5)
    for c in (0.5, 2.0, 10.0):
        scaled = VgParams(c * base.theta, base.sigma * math.sqrt(c), c * base.alpha)
        for kind, strike, tau in [(CALL, 105.0, 0.5), (PUT, 95.0, 1.25)]:
            assert vg_price_quadrature(kind, 100.0, strike, 0.02, 0.01, tau, scaled) == (
                pytest.approx(
                    vg_price_quadrature(kind, 100.0, strike, 0.02, 0.01, tau, base),
                    rel=1e-7,
                )
            )


def test_vanishing_sigma_collapses_to_carry():
    params = VgParams(0.0, 1e-8, 2.0)
    call = vg_price_quadrature(CALL, 100.0, 80.0, 0.02, 0.01, 1.0, params)
    assert call == pytest.approx(100.0 * math.exp(-0.01) - 80.0 * math.exp(-0.02), rel=1e-9)
    put = vg_price_quadrature(PUT, 100.0, 80.0, 0.02, 0.01, 1.0, params)
    assert put == pytest.approx(0.0, abs=1e-9)


def test_price_input_contracts():
    params = VgParams(0.0, 0.3, 3.0)
    with pytest.raises(ValueError):
        vg_price_quadrature(CALL, 0.0, 100.0, 0.02, 0.01, 1.0, params)
    with pytest.raises(ValueError):
        vg_price_quadrature(CALL, 100.0, -5.0, 0.02, 0.01, 1.0, params)
    with pytest.raises(ValueError):
        vg_price_quadrature(CALL, 100.0, 100.0, 0.02, 0.01, 0.0, params)


def test_mc_reproducible_and_seed_sensitive():
    params = VgParams(-0.1, 0.25, 3.0)
    first = vg_price_mc(CALL, 100.0, 105.0, 0.02, 0.01, 0.5, params, n=5000, seed=7)
    second = vg_price_mc(CALL, 100.0, 105.0, 0.02, 0.01, 0.5, params, n=5000, seed=7)
    assert first == second
    other = vg_price_mc(CALL, 100.0, 105.0, 0.02, 0.01, 0.5, params, n=5000, seed=8)
    assert other.price != first.price
    assert first.n == 5000 and first.seed == 7
    with pytest.raises(ValueError):
        vg_price_mc(CALL, 100.0, 105.0, 0.02, 0.01, 0.5, params, n=1)


@pytest.mark.parametrize(
    "kind, strike, tau, seed",
    [(CALL, 100.0, 0.5, 0), (CALL, 110.0, 0.5, 1), (PUT, 95.0, 1.0, 2), (PUT, 100.0, 0.25, 3)],
)
def test_mc_agrees_with_quadrature(kind, strike, tau, seed):
    params = VgParams(-0.1, 0.25, 3.0)
    reference = vg_price_quadrature(kind, 100.0, strike, 0.02, 0.01, tau, params)
    mc = vg_price_mc(kind, 100.0, strike, 0.02, 0.01, tau, params, n=20_000, seed=seed)
    assert abs(mc.price - reference) <= 3.5 * mc.stderr


def test_mc_warns_on_infinite_variance():
    params = VgParams(0.2, 0.5, 0.6)
    assert not has_finite_variance(params)
    with pytest.warns(RuntimeWarning):
        vg_price_mc(CALL, 100.0, 100.0, 0.02, 0.01, 0.5, params, n=100)

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vg_price_mc(CALL, 100.0, 100.0, 0.02, 0.01, 0.5, VgParams(-0.1, 0.25, 3.0), n=100)


def test_calibration_reprices_single_quote():
    truth = VgParams(-0.1, 0.25, 3.0)
    strike, tau = 105.0, 0.5
    price = vg_price_quadrature(CALL, 100.0, strike, 0.02, 0.01, tau, truth)
    fitted, objective = vg_calibrate([(strike, tau, price)], CALL, 100.0, 0.02, 0.01)
    assert objective <= 1e-10
    refit = vg_price_quadrature(CALL, 100.0, strike, 0.02, 0.01, tau, fitted)
    assert refit == pytest.approx(price, rel=1e-5)


def test_calibration_input_contracts():
    with pytest.raises(ValueError):
        vg_calibrate([], CALL, 100.0, 0.02, 0.01)
    with pytest.raises(ValueError):
        vg_calibrate([(100.0, 0.5, 0.0)], CALL, 100.0, 0.02, 0.01)
    with pytest.raises(ValueError):
        vg_calibrate([(100.0, 0.5, 5.0)], CALL, 100.0, 0.02, 0.01, init=(5.0, 1.0, 2.0))
    with pytest.raises(ValueError):
        vg_calibrate(
            [(100.0, 0.5, 5.0)], CALL, 100.0, 0.02, 0.01, extra_inits=[(5.0, 1.0, 2.0)]
        )


def test_calibration_failure_when_every_start_stalls(monkeypatch):
    import pricelab.variance_gamma as vg

    def stalled(*args, **kwargs):
        return SimpleNamespace(success=False, message="out of budget")

    monkeypatch.setattr(vg, "minimize", stalled)
    with pytest.raises(CalibrationFailure, match="out of budget"):
        vg_calibrate([(100.0, 0.5, 5.0)], CALL, 100.0, 0.02, 0.01)
