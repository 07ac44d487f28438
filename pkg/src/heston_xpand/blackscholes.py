"""Black-Scholes call in log-spot coordinates and its x-derivatives.

The operators used throughout are ``Lambda = d/dx`` and ``Gamma = d^2/dx^2 - d/dx``
acting on ``BS(x, y) = e^x N(d+) - K e^{-r tau} N(d-)`` with

    d+- = (x - ln K + (r +- y^2 / 2) tau) / (y sqrt(tau)).

``Gamma BS`` has the closed form ``G = e^x n(d+) / (y sqrt(tau))`` and every further
x-derivative is ``G * P(d+)`` for a polynomial ``P``; the polynomials follow

    P_{n+1}(z) = P_n(z) (1 - z / s) + P_n'(z) / s,     s = y sqrt(tau),  P_0 = 1.

Because ``e^x n(d+) = K e^{-r tau} n(d-)``, the same derivatives can be written with
probabilists' Hermite polynomials, ``d^n G / dx^n = G (-1/s)^n He_n(d-)``. The
vectorised helpers below use that three-term recurrence; :func:`lambda_gamma_bs`
uses the polynomial recursion. The two are cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import erfc

from .model import DomainError, OrderOutOfRange

MAX_ORDER = 12  # a + 2b
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(z):
    """Standard normal CDF through ``erfc`` so that the lower tail keeps full relative accuracy."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class BsState:
    """Point at which BS and its derivatives are evaluated."""

    x: float
    y: float
    tau: float
    strike: float
    r: float = 0.0

    def __post_init__(self):
        if not self.y > 0.0:
            raise DomainError("y", f"must be > 0, got {self.y}")
        if not self.tau > 0.0:
            raise DomainError("tau", f"must be > 0, got {self.tau}")
        if not self.strike > 0.0:
            raise DomainError("strike", f"must be > 0, got {self.strike}")

    @property
    def total_vol(self) -> float:
        return self.y * math.sqrt(self.tau)

    @property
    def d_plus(self) -> float:
        return (self.x - math.log(self.strike) + (self.r + 0.5 * self.y**2) * self.tau) / self.total_vol

    @property
    def d_minus(self) -> float:
        return self.d_plus - self.total_vol


@dataclass(frozen=True)
class DerivOrder:
    """``Lambda^a Gamma^b``."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or int(self.a) != self.a or int(self.b) != self.b:
            raise OrderOutOfRange(f"orders must be non-negative integers, got ({self.a}, {self.b})")
        if self.a + 2 * self.b > MAX_ORDER:
            raise OrderOutOfRange(f"a + 2b = {self.a + 2 * self.b} exceeds {MAX_ORDER}")


def bs_call(x, strike, r, y, tau):
    """Vectorised call price; ``x`` is log-spot and ``y`` the volatility."""
    x, strike, y, tau = (np.asarray(v, dtype=float) for v in (x, strike, y, tau))
    s = y * np.sqrt(tau)
    dp = (x - np.log(strike) + (r + 0.5 * y * y) * tau) / s
    return np.exp(x) * norm_cdf(dp) - strike * np.exp(-r * tau) * norm_cdf(dp - s)


def bs_put(x, strike, r, y, tau):
    x, strike, y, tau = (np.asarray(v, dtype=float) for v in (x, strike, y, tau))
    s = y * np.sqrt(tau)
    dp = (x - np.log(strike) + (r + 0.5 * y * y) * tau) / s
    return strike * np.exp(-r * tau) * norm_cdf(s - dp) - np.exp(x) * norm_cdf(-dp)


def bs_price(s: BsState) -> float:
    return float(bs_call(s.x, s.strike, s.r, s.y, s.tau))


def bs_vega(s: BsState) -> float:
    """dBS/dy."""
    return math.exp(s.x) * float(norm_pdf(s.d_plus)) * math.sqrt(s.tau)


def gamma_bs(s: BsState) -> float:
    return math.exp(s.x) * float(norm_pdf(s.d_plus)) / s.total_vol


def derivative_polynomials(n: int, total_vol: float) -> list[np.ndarray]:
    """Coefficients (ascending in ``d+``) of ``P_0 .. P_n`` with ``d^k G/dx^k = G P_k(d+)``."""
    inv_s = 1.0 / total_vol
    polys = [np.array([1.0])]
    for _ in range(n):
        p = polys[-1]
        nxt = np.zeros(p.size + 1)
        nxt[: p.size] += p
        nxt[1:] -= p * inv_s
        nxt[: p.size - 1] += np.arange(1, p.size) * p[1:] * inv_s
        polys.append(nxt)
    return polys


def _gamma_combination(a: int, b: int) -> dict[int, int]:
    """``Lambda^a Gamma^b = sum_k c_k d^k Gamma`` for b >= 1 (expansion of (d^2 - d)^(b-1) d^a)."""
    return {a + b - 1 + j: comb(b - 1, j) * (-1) ** (b - 1 - j) for j in range(b)}


def lambda_gamma_bs(s: BsState, o: DerivOrder) -> float:
    """``(Lambda^a Gamma^b)(BS)`` at ``s``, analytically."""
    if not isinstance(o, DerivOrder):
        o = DerivOrder(*o)
    a, b = o.a, o.b
    if a == 0 and b == 0:
        return bs_price(s)
    dp = s.d_plus
    g = gamma_bs(s)
    if b == 0:
        # Lambda BS = e^x N(d+) and Lambda^2 BS - Lambda BS = G
        polys = derivative_polynomials(max(a - 2, 0), s.total_vol)
        tail = sum(np.polynomial.polynomial.polyval(dp, polys[k]) for k in range(a - 1))
        return math.exp(s.x) * float(norm_cdf(dp)) + g * float(tail)
    combo = _gamma_combination(a, b)
    polys = derivative_polynomials(max(combo), s.total_vol)
    total = np.zeros(polys[-1].size)
    for k, c in combo.items():
        total[: polys[k].size] += c * polys[k]
    return g * float(np.polynomial.polynomial.polyval(dp, total))


def gamma_derivatives(x, strike, r, y, tau, nmax: int) -> np.ndarray:
    """Stack ``[d^n G/dx^n for n in 0..nmax]`` (shape ``(nmax + 1, ...)``), via Hermite recurrence."""
    x, strike, y, tau = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, strike, y, tau)))
    s = y * np.sqrt(tau)
    dm = (x - np.log(strike) + (r - 0.5 * y * y) * tau) / s
    g = strike * np.exp(-r * tau) * norm_pdf(dm) / s
    out = np.empty((nmax + 1,) + np.shape(x))
    he_prev, he = np.zeros_like(dm), np.ones_like(dm)
    scale = np.ones_like(dm)
    for n in range(nmax + 1):
        out[n] = g * scale * he
        he_prev, he = he, dm * he - n * he_prev
        scale = -scale / s
    return out


def lambda_gamma_from_stack(derivs: np.ndarray, a: int, b: int) -> np.ndarray:
    """Combine a :func:`gamma_derivatives` stack into ``Lambda^a Gamma^b BS`` (b >= 1)."""
    if b < 1:
        raise OrderOutOfRange("stack combination needs b >= 1")
    return sum(c * derivs[k] for k, c in _gamma_combination(a, b).items())
