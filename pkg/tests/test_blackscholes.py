import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heston_xpand import oracles
from heston_xpand.blackscholes import (
    MAX_ORDER,
    BsState,
    DerivOrder,
    bs_call,
    bs_price,
    bs_put,
    bs_vega,
    derivative_polynomials,
    gamma_bs,
    gamma_derivatives,
    lambda_gamma_bs,
    lambda_gamma_from_stack,
)
from heston_xpand.model import DomainError, OrderOutOfRange

X100 = math.log(100.0)


def payoff_integral(s0, strike, r, y, tau):
    """Discounted call payoff integrated against the lognormal density."""
    with mpmath.workdps(30):
        m = mpmath.log(s0) + (r - y * y / 2) * tau
        sd = y * mpmath.sqrt(tau)

        def integrand(z):
            st_ = mpmath.exp(m + sd * z)
            return max(st_ - strike, 0) * mpmath.npdf(z)

        lo = (mpmath.log(strike) - m) / sd
        return float(mpmath.exp(-r * tau) * mpmath.quad(integrand, [lo, lo + 5, mpmath.inf]))


def test_atm_price_matches_payoff_integral():
    price = bs_price(BsState(X100, 0.2, 1.0, 100.0))
    assert price == pytest.approx(7.9655674554058, abs=1e-10)
    assert price == pytest.approx(payoff_integral(100.0, 100.0, 0.0, 0.2, 1.0), rel=1e-12)


@pytest.mark.parametrize("strike,r,y,tau", [(80.0, 0.03, 0.3, 0.5), (130.0, 0.0, 0.15, 2.0), (100.0, 0.05, 0.6, 3.0)])
def test_price_matches_payoff_integral(strike, r, y, tau):
    assert bs_price(BsState(X100, y, tau, strike, r)) == pytest.approx(payoff_integral(100.0, strike, r, y, tau), rel=1e-11)


def test_limits():
    assert bs_price(BsState(X100, 0.2, 1.0, 1e-12)) == pytest.approx(100.0, rel=1e-12)
    assert bs_price(BsState(math.log(80.0), 1e-9, 1.0, 100.0)) == 0.0


def test_state_validation():
    with pytest.raises(DomainError, match="y"):
        BsState(X100, 0.0, 1.0, 100.0)
    with pytest.raises(DomainError, match="tau"):
        BsState(X100, 0.2, 0.0, 100.0)


def test_order_range():
    DerivOrder(0, 6)
    DerivOrder(12, 0)
    with pytest.raises(OrderOutOfRange):
        DerivOrder(1, 6)
    with pytest.raises(OrderOutOfRange):
        DerivOrder(-1, 0)
    with pytest.raises(OrderOutOfRange):
        gamma_derivatives(X100, 100.0, 0.0, 0.2, 1.0, 3).shape and lambda_gamma_from_stack(np.zeros((4, 1)), 1, 0)
    assert MAX_ORDER == 12


def test_identity_order_is_price():
    s = BsState(X100, 0.25, 0.7, 95.0, 0.02)
    assert lambda_gamma_bs(s, DerivOrder(0, 0)) == bs_price(s)


def test_gamma_closed_form():
    s = BsState(X100, 0.2, 1.0, 100.0)
    expected = 100.0 * math.exp(-0.5 * 0.1**2) / math.sqrt(2 * math.pi) / 0.2
    assert lambda_gamma_bs(s, DerivOrder(0, 1)) == pytest.approx(expected, rel=1e-14)
    assert gamma_bs(s) == pytest.approx(expected, rel=1e-14)
    assert lambda_gamma_bs(s, DerivOrder(0, 1)) == pytest.approx(oracles.fd_lambda_gamma(X100, 100.0, 0.0, 0.2, 1.0, 0, 1), rel=1e-10)


@pytest.mark.parametrize("strike", [70.0, 100.0, 130.0])
@pytest.mark.parametrize("tau", [0.25, 3.0])
def test_lambda2_gamma2_against_fd(strike, tau):
    s = BsState(X100, math.sqrt(0.225), tau, strike, 0.001)
    fd = oracles.fd_lambda_gamma(s.x, strike, 0.001, s.y, tau, 2, 2)
    assert abs(lambda_gamma_bs(s, (2, 2)) - fd) <= 1e-6 * abs(fd)


@pytest.mark.parametrize("a,b", [(a, b) for a in range(9) for b in range(5) if a + 2 * b <= 8])
def test_all_orders_against_fd(a, b):
    for strike, y in [(85.0, 0.2), (115.0, 0.5)]:
        s = BsState(X100, y, 0.8, strike, 0.02)
        fd = oracles.fd_lambda_gamma(s.x, strike, 0.02, y, 0.8, a, b)
        assert abs(lambda_gamma_bs(s, DerivOrder(a, b)) - fd) / (1 + abs(fd)) < 1e-6


def test_polynomial_degree():
    polys = derivative_polynomials(10, 0.3)
    for n, p in enumerate(polys):
        assert len(p) == n + 1
        assert p[-1] != 0.0


@pytest.mark.parametrize("strike,y,tau", [(70.0, 0.1, 0.1), (100.0, 0.3, 1.0), (140.0, 0.8, 5.0)])
def test_hermite_stack_matches_polynomial_recursion(strike, y, tau):
    stack = gamma_derivatives(X100, strike, 0.01, y, tau, 9)
    s = BsState(X100, y, tau, strike, 0.01)
    for a in range(5):
        for b in range(1, 4):
            if a + 2 * b <= 10:
                ref = lambda_gamma_bs(s, DerivOrder(a, b))
                assert float(lambda_gamma_from_stack(stack, a, b)) == pytest.approx(ref, rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("strike,y,tau", [(80.0, 0.2, 0.5), (100.0, 0.45, 1.0), (125.0, 0.3, 3.0)])
def test_vega_identity(strike, y, tau):
    s = BsState(X100, y, tau, strike, 0.01)
    fd = oracles.fd_vega(X100, strike, 0.01, y, tau)
    assert y * tau * gamma_bs(s) == pytest.approx(fd, rel=1e-7)
    assert bs_vega(s) == pytest.approx(fd, rel=1e-7)


def test_derivative_scaling_is_bounded():
    scaled = oracles.derivative_scaling(8)
    assert np.all(np.isfinite(scaled))
    assert scaled.max() < 1e4


def test_extreme_moneyness_is_finite():
    for strike in (1e-3, 1e6):
        s = BsState(X100, 0.05, 0.01, strike)
        assert abs(s.d_plus) > 40
        for o in [(0, 0), (1, 0), (0, 1), (3, 3)]:
            assert math.isfinite(lambda_gamma_bs(s, o))


@settings(max_examples=200)
@given(
    strike=st.floats(20.0, 300.0),
    r=st.floats(0.0, 0.1),
    y=st.floats(0.02, 1.5),
    tau=st.floats(0.01, 10.0),
)
def test_parity_and_bounds(strike, r, y, tau):
    call = float(bs_call(X100, strike, r, y, tau))
    put = float(bs_put(X100, strike, r, y, tau))
    assert call - put == pytest.approx(100.0 - strike * math.exp(-r * tau), abs=1e-9)
    assert max(0.0, 100.0 - strike * math.exp(-r * tau)) - 1e-9 <= call <= 100.0


@given(y=st.floats(0.05, 1.0), tau=st.floats(0.05, 5.0))
def test_call_decreasing_convex_in_strike(y, tau):
    strikes = np.linspace(50.0, 150.0, 41)
    c = bs_call(X100, strikes, 0.01, y, tau)
    assert np.all(np.diff(c) <= 1e-12)
    assert np.all(np.diff(c, 2) >= -1e-10)
