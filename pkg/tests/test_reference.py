import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heston_xpand.approximators import lognormal_limit
from heston_xpand.bench import figure_params
from heston_xpand.blackscholes import bs_call
from heston_xpand.terms import v_squared
from heston_xpand.model import DomainError, HestonParams, Method, OptionSpec
from heston_xpand.reference import (
    DEFAULT_QUADRATURE,
    QuadratureConfig,
    heston_cf,
    price_reference,
    put_reference,
    reference_prices,
)


def test_cf_normalisation():
    p = figure_params(4)
    for tau in (0.25, 1.0, 3.0):
        assert heston_cf(0.0, p, tau) == pytest.approx(1.0, abs=1e-14)
        assert heston_cf(-1j, p, tau) == pytest.approx(p.s0 * math.exp(p.r * tau), rel=1e-13)


def test_cf_modulus_at_most_one_on_real_axis():
    p = figure_params(4)
    u = np.linspace(-50, 50, 201)
    cf = heston_cf(u, p, 1.0) * np.exp(-1j * u * math.log(p.s0 * math.exp(p.r)))
    assert np.all(np.abs(cf) <= 1 + 1e-12)


@pytest.mark.parametrize("strike,tau", [(70.0, 0.25), (100.0, 1.0), (130.0, 3.0)])
def test_lognormal_limit(strike, tau):
    spec = OptionSpec(strike, tau)
    gaps = []
    for nu in (1e-5, 1e-6):
        p = HestonParams(1.5, 0.2, nu, -0.5, 0.25, 0.001, 100.0)
        gaps.append(price_reference(p, spec).price / lognormal_limit(p, spec) - 1)
    assert abs(gaps[1]) < 1e-6
    assert gaps[1] / gaps[0] == pytest.approx(0.1, rel=1e-3)


def test_put_call_parity():
    p = figure_params(3)
    for k, tau in [(80.0, 0.5), (100.0, 1.0), (120.0, 3.0)]:
        spec = OptionSpec(k, tau)
        lhs = price_reference(p, spec).price - put_reference(p, spec)
        assert lhs == pytest.approx(p.s0 - k * math.exp(-p.r * tau), abs=1e-10)


@pytest.mark.parametrize("fig", range(1, 7))
def test_node_doubling(fig):
    p = figure_params(fig)
    k = np.linspace(70, 130, 13)
    t = np.full_like(k, 1.0)
    a = reference_prices(p, k, t)
    b = reference_prices(p, k, t, QuadratureConfig(n_nodes=256))
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=0)


def test_adaptive_matches_fixed():
    p = figure_params(4)
    k = np.array([70.0, 100.0, 130.0])
    t = np.array([0.25, 1.0, 3.0])
    fixed = reference_prices(p, k, t)
    adaptive = reference_prices(p, k, t, QuadratureConfig(scheme="adaptive"))
    np.testing.assert_allclose(fixed, adaptive, rtol=1e-11, atol=0)


@pytest.mark.parametrize("fig", [2, 4, 6])
def test_bounds_and_shape_in_strike(fig):
    p = figure_params(fig)
    k = np.linspace(60, 140, 33)
    for tau in (0.25, 3.0):
        c = reference_prices(p, k, np.full_like(k, tau))
        lower = np.maximum(p.s0 - k * math.exp(-p.r * tau), 0.0)
        assert np.all(c >= lower - 1e-10)
        assert np.all(c <= p.s0)
        assert np.all(np.diff(c) < 0)
        assert np.all(np.diff(c, 2) > -1e-10)


def test_price_result():
    res = price_reference(figure_params(1), OptionSpec(100.0, 1.0))
    assert res.method is Method.REF_FOURIER
    assert res.error_indicator is None
    assert res.price == pytest.approx(18.806338, abs=1e-6)


def test_quadrature_config_validation():
    assert DEFAULT_QUADRATURE.n_nodes == 128
    with pytest.raises(DomainError):
        QuadratureConfig(n_nodes=16)
    with pytest.raises(DomainError):
        QuadratureConfig(abs_tol=1e-3)
    with pytest.raises(DomainError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(DomainError):
        QuadratureConfig(scheme="simpson")


@settings(max_examples=25, deadline=None)
@given(
    kappa=st.floats(0.3, 5.0),
    theta=st.floats(0.02, 0.5),
    frac=st.floats(0.05, 1.0),
    rho=st.floats(-0.95, 0.95),
    v0=st.floats(0.02, 0.5),
    tau=st.floats(0.1, 4.0),
)
def test_random_params_within_bounds(kappa, theta, frac, rho, v0, tau):
    p = HestonParams(kappa, theta, frac * math.sqrt(2 * kappa * theta), rho, v0, 0.01, 100.0)
    k = np.array([75.0, 100.0, 125.0])
    c = reference_prices(p, k, np.full(3, tau))
    assert np.all(c >= np.maximum(p.s0 - k * math.exp(-p.r * tau), 0.0) - 1e-9)
    assert np.all(c <= p.s0)
    assert np.all(np.diff(c) < 0)


def test_scalar_bs_control():
    # the control variate alone must be the lognormal price at the same volatility
    p = figure_params(5)
    spec = OptionSpec(100.0, 1.0)
    y = math.sqrt(v_squared(p, 1.0))
    assert float(bs_call(math.log(100.0), 100.0, p.r, y, 1.0)) == pytest.approx(lognormal_limit(p, spec))
