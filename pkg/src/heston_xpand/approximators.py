"""Closed-form Heston call approximations from a small vol-of-vol expansion.

Each formula prices with the lognormal (Black-Scholes) call at the volatility
``y = sqrt(v_sq)`` and then adds corrections of the form ``(Lambda^a Gamma^b BS) * term``:

    O2  = BS + LG(1,1) U + LG(0,2) R
    O3  = O2 + 1/2 LG(2,2) U^2 + rho LG(2,1) (rho/2) LWLWM
    O4  = O3 + 1/6 LG(3,3) U^3 + LG(1,3) U R + rho LG(1,2) LW_R + 1/2 LG(1,2) (rho/2) DM_LWM
             + rho LG(3,2) U (rho/2) LWLWM + rho LG(3,1) (rho^2/2) LWLWLWM
    ZC  = BS + LG(0,2) R + 1/2 LG(0,4) R^2 + 1/2 LG(0,3) DM_R          (rho = 0 only)

with ``LG(a, b) = Lambda^a Gamma^b BS``. Pieces are summed largest first with
compensated summation.

The error indicator is the structural factor of the error bound, ``nu^p`` times a
correlation polynomial times ``min(1/r, tau)``. The model-dependent constant in
front of it is unknown, so the indicator ranks methods and parameter sets. It is
not a rigorous bound.
"""

from __future__ import annotations

import enum
import math
import time

import numpy as np

from . import _backend
from .blackscholes import bs_call
from .model import HestonParams, Method, OptionSpec, PriceResult, RhoNotZero
from .terms import v_squared


class ApproxOrder(str, enum.Enum):
    O2_baseline = "o2"
    O3_thm41 = "o3"
    O4_thm42 = "o4"
    O6_zero_corr = "zc"

    @property
    def method(self) -> Method:
        return _METHODS[self]


_METHODS = {
    ApproxOrder.O2_baseline: Method.APPROX_O2,
    ApproxOrder.O3_thm41: Method.APPROX_O3,
    ApproxOrder.O4_thm42: Method.APPROX_O4,
    ApproxOrder.O6_zero_corr: Method.APPROX_ZERO_CORR,
}


def horizon_factor(r: float, tau):
    """``min(1/r, tau)``, which is ``tau`` when ``r = 0``."""
    tau = np.asarray(tau, dtype=float)
    out = tau if r == 0.0 else np.minimum(1.0 / r, tau)
    return out if out.ndim else float(out)


def error_indicator(order, p: HestonParams, tau):
    order = ApproxOrder(order)
    nu, a = p.nu, abs(p.rho)
    if order is ApproxOrder.O2_baseline:
        factor = nu**2 * (a + nu) ** 2
    elif order is ApproxOrder.O3_thm41:
        factor = nu**3 * (a + a**3 + nu)
    elif order is ApproxOrder.O4_thm42:
        rho2 = p.rho * p.rho
        factor = nu**4 * (1.0 + rho2 * (1.0 + rho2) + a * nu * (1.0 + rho2))
    else:
        factor = nu**6
    return factor * horizon_factor(p.r, tau)


def _check_order(order: ApproxOrder, p: HestonParams) -> None:
    if order is ApproxOrder.O6_zero_corr and p.rho != 0.0:
        raise RhoNotZero(f"zero-correlation formula needs rho = 0, got {p.rho}")


def price_batch(order, p: HestonParams, strikes, maturities, backend: str | None = None) -> np.ndarray:
    """Prices for paired strike/maturity arrays (maturities are times to expiry)."""
    order = ApproxOrder(order)
    _check_order(order, p)
    strikes, taus = np.broadcast_arrays(
        np.atleast_1d(np.asarray(strikes, dtype=float)), np.atleast_1d(np.asarray(maturities, dtype=float))
    )
    code = _backend.METHOD_CODES[order.value]
    return _backend.get(backend).approx_prices(code, p.as_tuple(), strikes, taus)


def _price(order: ApproxOrder, p: HestonParams, spec: OptionSpec) -> PriceResult:
    start = time.perf_counter()
    price = float(price_batch(order, p, spec.strike, spec.tau)[0])
    elapsed = time.perf_counter() - start
    return PriceResult(price, order.method, error_indicator(order, p, spec.tau), elapsed)


def price_o2(p: HestonParams, spec: OptionSpec) -> PriceResult:
    return _price(ApproxOrder.O2_baseline, p, spec)


def price_o3(p: HestonParams, spec: OptionSpec) -> PriceResult:
    return _price(ApproxOrder.O3_thm41, p, spec)


def price_o4(p: HestonParams, spec: OptionSpec) -> PriceResult:
    return _price(ApproxOrder.O4_thm42, p, spec)


def price_zero_corr(p: HestonParams, spec: OptionSpec) -> PriceResult:
    """Four-term formula for uncorrelated models; raises :class:`RhoNotZero` otherwise."""
    return _price(ApproxOrder.O6_zero_corr, p, spec)


PRICERS = {
    ApproxOrder.O2_baseline: price_o2,
    ApproxOrder.O3_thm41: price_o3,
    ApproxOrder.O4_thm42: price_o4,
    ApproxOrder.O6_zero_corr: price_zero_corr,
}


def lognormal_limit(p: HestonParams, spec: OptionSpec) -> float:
    """The ``nu -> 0`` limit shared by all formulas: BS at the mean average variance."""
    return float(bs_call(math.log(p.s0), spec.strike, p.r, math.sqrt(v_squared(p, spec.tau)), spec.tau))
