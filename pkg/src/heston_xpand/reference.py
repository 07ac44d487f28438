"""Semi-closed Heston call price by one Fourier integral (Lewis form).

With forward ``F = s0 e^{r tau}``, ``k = ln(F / K)`` and ``f`` the characteristic
function of ``ln(S_T / F)``,

    C = e^{-r tau} [F - sqrt(F K) / pi * int_0^inf Re(e^{i u k} f(u - i/2)) / (u^2 + 1/4) du].

The same identity holds for a lognormal model with total variance ``vbar * tau``,
whose transform at ``u - i/2`` is ``exp(-vbar tau (u^2 + 1/4) / 2)``. Subtracting
the two representations gives

    C = BS(vbar) + e^{-r tau} sqrt(F K) / pi * int_0^inf Re(e^{i u k} (f_BS - f)(u - i/2)) / (u^2 + 1/4) du,

which removes the ``F - ...`` cancellation. ``vbar`` is the expected average variance
over the option's life. The integrand then vanishes identically as ``nu -> 0``.

Characteristic exponent (``iz`` denotes ``i * z``)::

    xi = kappa - rho nu iz,  d = sqrt(xi^2 + nu^2 (iz + z^2)),  Re d >= 0
    A  = (xi - d) / nu^2 = -(iz + z^2) / (xi + d)
    g  = (xi - d) / (xi + d)
    ln f(z) = kappa theta [A tau - (2 / nu^2) ln((1 - g e^{-d tau}) / (1 - g))]
              + v0 A (1 - e^{-d tau}) / (1 - g e^{-d tau})

This is the rotation-free branch (``|g e^{-d tau}| < 1``), so the principal complex
logarithm never crosses its cut as ``z`` moves along the contour. ``A`` and the
logarithm divided by ``nu^2`` are formed without dividing by ``nu^2`` explicitly,
so the exponent stays accurate when ``nu`` is tiny.

The fixed scheme maps ``[0, u_max]`` onto ``[0, w_max]`` through
``u = L tan(pi w / 2)`` with ``L = scale / sqrt(vbar tau)``. It then applies
Gauss-Legendre in ``w``, which concentrates nodes where the integrand lives for
short and long maturities alike.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate

from . import _backend
from .blackscholes import bs_call, bs_put
from .model import DomainError, HestonParams, Method, OptionSpec, PriceResult, QuadratureNonConvergence
from .terms import v_squared


@dataclass(frozen=True)
class QuadratureConfig:
    scheme: Literal["gauss_legendre_fixed", "adaptive"] = "gauss_legendre_fixed"
    n_nodes: int = 128
    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    u_max: float = 200.0
    scale: float = 4.0
    max_subintervals: int = 500

    def __post_init__(self):
        if self.scheme not in ("gauss_legendre_fixed", "adaptive"):
            raise DomainError("scheme", f"unknown quadrature scheme {self.scheme!r}")
        if self.n_nodes < 32:
            raise DomainError("n_nodes", f"must be >= 32, got {self.n_nodes}")
        for name in ("abs_tol", "rel_tol"):
            tol = getattr(self, name)
            if not 0.0 < tol <= 1e-6:
                raise DomainError(name, f"must lie in (0, 1e-6], got {tol}")
        if not self.u_max > 0.0:
            raise DomainError("u_max", f"must be > 0, got {self.u_max}")
        if not self.scale > 0.0:
            raise DomainError("scale", f"must be > 0, got {self.scale}")


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=16)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _log1p_over(a):
    """``log(1 + a) / a`` for complex ``a``, accurate as ``a -> 0``."""
    b = 1.0 + a
    tiny = b == 1.0
    return np.where(tiny, 1.0 + 0j, np.log(np.where(tiny, 2.0, b)) / np.where(tiny, 1.0, b - 1.0))


def log_cf_forward(z, kappa, theta, nu, rho, v0, tau):
    """``ln E[exp(i z ln(S_T / F))]`` for complex ``z``; broadcasts over ``z`` and ``tau``."""
    z = np.asarray(z, dtype=complex)
    iz = 1j * z
    q = iz + z * z
    xi = kappa - rho * nu * iz
    d = np.sqrt(xi * xi + nu * nu * q)
    xpd = xi + d
    a_coef = -q / xpd
    g = a_coef * (nu * nu) / xpd
    e = np.exp(-d * tau)
    one_minus_e = -np.expm1(-d * tau) if np.isrealobj(d) else 1.0 - e
    w = a_coef * one_minus_e / (xpd * (1.0 - g))
    log_term = w * _log1p_over(w * (nu * nu))
    return kappa * theta * (a_coef * tau - 2.0 * log_term) + v0 * a_coef * one_minus_e / (1.0 - g * e)


def heston_cf(u, p: HestonParams, tau: float):
    """Characteristic function of ``X_T = ln S_T`` started from ``ln s0``."""
    u = np.asarray(u, dtype=complex)
    drift = 1j * u * (math.log(p.s0) + p.r * tau)
    out = np.exp(drift + log_cf_forward(u, p.kappa, p.theta, p.nu, p.rho, p.v0, tau))
    return out if out.ndim else complex(out)


def _adaptive_integral(p: HestonParams, strike: float, tau: float, vbar: float, q: QuadratureConfig) -> float:
    fwd = p.s0 * math.exp(p.r * tau)
    k = math.log(fwd / strike)
    length = q.scale / math.sqrt(vbar * tau)
    w_max = (2.0 / math.pi) * math.atan(q.u_max / length)

    def integrand(w):
        angle = 0.5 * math.pi * w
        u = length * math.tan(angle)
        shift = u * u + 0.25
        heston = np.exp(log_cf_forward(u - 0.5j, p.kappa, p.theta, p.nu, p.rho, p.v0, tau))
        val = (np.exp(1j * u * k) * (math.exp(-0.5 * vbar * tau * shift) - heston)).real / shift
        return float(val) * length * 0.5 * math.pi / math.cos(angle) ** 2

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(
                integrand, 0.0, w_max, epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subintervals
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonConvergence(str(exc).strip().splitlines()[0]) from None
    return value


def reference_prices(
    p: HestonParams, strikes, maturities, q: QuadratureConfig = DEFAULT_QUADRATURE, backend: str | None = None
) -> np.ndarray:
    """Vectorised call prices for paired arrays of strikes and times to maturity."""
    strikes, taus = np.broadcast_arrays(
        np.atleast_1d(np.asarray(strikes, dtype=float)), np.atleast_1d(np.asarray(maturities, dtype=float))
    )
    strikes = np.ascontiguousarray(strikes)
    taus = np.ascontiguousarray(taus)
    if q.scheme == "gauss_legendre_fixed":
        nodes, weights = gauss_legendre(q.n_nodes)
        return _backend.get(backend).reference_prices(p.as_tuple(), strikes, taus, nodes, weights, q.scale, q.u_max)
    out = np.empty(strikes.shape)
    for i, (strike, tau) in enumerate(zip(strikes, taus)):
        vbar = v_squared(p, tau)
        cv = float(bs_call(math.log(p.s0), strike, p.r, math.sqrt(vbar), tau))
        integral = _adaptive_integral(p, strike, tau, vbar, q)
        out[i] = cv + math.exp(-p.r * tau) * math.sqrt(p.s0 * math.exp(p.r * tau) * strike) / math.pi * integral
    return out


def price_reference(p: HestonParams, spec: OptionSpec, q: QuadratureConfig = DEFAULT_QUADRATURE) -> PriceResult:
    start = time.perf_counter()
    price = float(reference_prices(p, spec.strike, spec.tau, q)[0])
    return PriceResult(price, Method.REF_FOURIER, None, time.perf_counter() - start)


def put_reference(p: HestonParams, spec: OptionSpec, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Put price from the same correction integral, with a lognormal put as control variate."""
    tau = spec.tau
    vbar = v_squared(p, tau)
    x = math.log(p.s0)
    y = math.sqrt(vbar)
    call = float(reference_prices(p, spec.strike, tau, q)[0])
    correction = call - float(bs_call(x, spec.strike, p.r, y, tau))
    return float(bs_put(x, spec.strike, p.r, y, tau)) + correction
