"""Closed forms of the scalar expansion terms in the Heston model.

Every term has the shape

    value = scale * nu^p * kappa^(-q) * (theta * F_theta(x) + v0 * F_v0(x)),   x = kappa * tau,

where each ``F`` is an exponential polynomial ``sum_m P_m(x) e^{-m x}`` whose Taylor
series starts at ``x^q``. Writing ``kappa^-q = tau^q / x^q`` the value becomes
``scale * nu^p * tau^q * (theta * H_theta(x) + v0 * H_v0(x))`` with ``H = F / x^q``.
``v_sq`` is an average rather than an integral, so it carries ``tau^(q-1)`` instead.
For ``x`` above :data:`SERIES_SWITCH` ``H`` is evaluated directly; below it the exact
Taylor coefficients (rational arithmetic, computed once at import) are summed instead,
which avoids the cancellation hidden behind the ``kappa^-5`` prefactors.

Term definitions (valuation time 0, horizon tau, ``E s2(u) = theta + (v0 - theta) e^{-kappa u}``,
``phi(u) = (1 - e^{-kappa (tau - u)}) / kappa``)::

    U        = (rho nu / 2) int E s2(u) phi(u) du
    R        = (nu^2 / 8)   int E s2(u) phi(u)^2 du
    LWLWM    = nu^2 int E s2(u) k1(u) du,             k1(u) = int_u e^{-kappa (z-u)} phi(z) dz
    LW_R     = (nu^3 / 8) int E s2(u) k2(u) du,       k2(u) = int_u e^{-kappa (z-u)} phi(z)^2 dz
    DM_LWM   = nu^3 int E s2(u) phi(u) k1(u) du
    LWLWLWM  = nu^3 int E s2(u) int_u k1(s) e^{-kappa (s-u)} ds du
    DM_R     = (nu^4 / 8) int E s2(u) phi(u) k2(u) du

Here ``LW_R`` is ``L[W, D[M,M]/8]``, ``DM_LWM`` is ``D[M, L[W,M]]``, and ``DM_R`` is
``D[M, D[M,M]/8]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Mapping

import numpy as np

from .model import HestonParams

SERIES_SWITCH = 1.0
SERIES_TERMS = 34
_MAX_EXP = 3
_MAX_DEG = 4  # polynomial degree + 1


@dataclass(frozen=True)
class ExpPoly:
    """``sum_m P_m(x) e^{-m x}``; ``parts[m]`` holds the coefficients of ``P_m`` in ascending order."""

    parts: Mapping[int, tuple[int, ...]]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for m, coeffs in self.parts.items():
            total = total + np.polynomial.polynomial.polyval(x, coeffs) * np.exp(-m * x)
        return total

    def taylor(self, n: int) -> list[Fraction]:
        """Exact Taylor coefficients ``c_0 .. c_{n-1}`` about ``x = 0``."""
        out = [Fraction(0)] * n
        for m, coeffs in self.parts.items():
            exp_series = [Fraction((-m) ** k, math.factorial(k)) for k in range(n)]
            for j, a in enumerate(coeffs):
                for k in range(n - j):
                    out[j + k] += a * exp_series[k]
        return out

    def table(self) -> np.ndarray:
        """Dense ``(_MAX_EXP + 1, _MAX_DEG)`` coefficient table for the compiled kernel."""
        tab = np.zeros((_MAX_EXP + 1, _MAX_DEG))
        for m, coeffs in self.parts.items():
            tab[m, : len(coeffs)] = coeffs
        return tab


@dataclass(frozen=True)
class ClosedForm:
    name: str
    nu_power: int
    kappa_power: int
    scale: Fraction
    theta_part: ExpPoly
    v0_part: ExpPoly
    tau_power: int | None = None  # defaults to kappa_power

    @property
    def tau_exponent(self) -> int:
        return self.kappa_power if self.tau_power is None else self.tau_power

    def series(self, part: ExpPoly) -> np.ndarray:
        q = self.kappa_power
        coeffs = part.taylor(q + SERIES_TERMS)
        if any(coeffs[:q]):
            raise ArithmeticError(f"{self.name}: series does not start at x^{q}")
        return np.array([float(c) for c in coeffs[q:]])

    def reduced(self, part: ExpPoly, series: np.ndarray, x):
        """``H(x) = F(x) / x^q`` with the small-x branch."""
        x = np.asarray(x, dtype=float)
        small = x < SERIES_SWITCH
        # x = 0 would divide by zero in the direct branch; it is always masked out
        xs = np.where(small, 1.0, x)
        direct = part(xs) / xs**self.kappa_power
        return np.where(small, np.polynomial.polynomial.polyval(x, series), direct)


# Coefficient tables transcribed from the closed forms; U and R derived by direct integration.
_FORMS = [
    ClosedForm(  # (1/tau) int E s2(u) du
        "v_sq", 0, 1, Fraction(1),
        ExpPoly({0: (-1, 1), 1: (1,)}),
        ExpPoly({0: (1,), 1: (-1,)}),
        tau_power=0,
    ),
    ClosedForm(  # without the rho factor
        "U", 1, 2, Fraction(1, 2),
        ExpPoly({0: (-2, 1), 1: (2, 1)}),
        ExpPoly({0: (1,), 1: (-1, -1)}),
    ),
    ClosedForm(
        "R", 2, 3, Fraction(1, 16),
        ExpPoly({0: (-5, 2), 1: (4, 4), 2: (1,)}),
        ExpPoly({0: (2,), 1: (0, -4), 2: (-2,)}),
    ),
    ClosedForm(
        "LWLWM", 2, 3, Fraction(1, 2),
        ExpPoly({0: (-6, 2), 1: (6, 4, 1)}),
        ExpPoly({0: (2,), 1: (-2, -2, -1)}),
    ),
    ClosedForm(  # -2 v0 e^{-x} (x^2 - 2 cosh x + 2) expanded
        "LW_R", 3, 4, Fraction(1, 16),
        ExpPoly({0: (-7, 2), 1: (8, 4, 2), 2: (-1,)}),
        ExpPoly({0: (2,), 1: (-4, 0, -2), 2: (2,)}),
    ),
    ClosedForm(
        "DM_LWM", 3, 4, Fraction(1, 4),
        ExpPoly({0: (-13, 4), 1: (8, 12, 2), 2: (5, 2)}),
        ExpPoly({0: (4,), 1: (4, -8, -2), 2: (-8, -4)}),
    ),
    ClosedForm(  # e^{-x} e^{x} 6 (x - 4) folded into m = 0
        "LWLWLWM", 3, 4, Fraction(1, 6),
        ExpPoly({0: (-24, 6), 1: (24, 18, 6, 1)}),
        ExpPoly({0: (6,), 1: (-6, -6, -3, -1)}),
    ),
    ClosedForm(
        "DM_R", 4, 5, Fraction(1, 48),
        ExpPoly({0: (-22, 6), 1: (15, 18, 6), 2: (6, 6), 3: (1,)}),
        ExpPoly({0: (6,), 1: (3, -6, -6), 2: (-6, -12), 3: (-3,)}),
    ),
]
FORMS = {f.name: f for f in _FORMS}
TERM_ORDER = tuple(f.name for f in _FORMS)
_SERIES = {f.name: (f.series(f.theta_part), f.series(f.v0_part)) for f in _FORMS}


def kernel_tables():
    """Flattened tables consumed by the compiled backend, ordered as :data:`TERM_ORDER`."""
    closed = np.stack([np.stack([f.theta_part.table(), f.v0_part.table()]) for f in _FORMS])
    series = np.stack([np.stack(_SERIES[f.name]) for f in _FORMS])
    meta = np.array([[f.nu_power, f.kappa_power, float(f.scale), f.tau_exponent] for f in _FORMS])
    return np.ascontiguousarray(closed), np.ascontiguousarray(series), np.ascontiguousarray(meta)


def evaluate(name: str, kappa, theta, nu, v0, tau):
    """Evaluate one closed form (rho excluded for U); vectorised over ``tau``."""
    form = FORMS[name]
    s_theta, s_v0 = _SERIES[name]
    tau = np.asarray(tau, dtype=float)
    x = kappa * tau
    h = theta * form.reduced(form.theta_part, s_theta, x) + v0 * form.reduced(form.v0_part, s_v0, x)
    value = float(form.scale) * nu**form.nu_power * tau**form.tau_exponent * h
    return value if value.ndim else float(value)


def phi(kappa, tau):
    """``int_0^tau e^{-kappa z} dz = (1 - e^{-kappa tau}) / kappa``."""
    tau = np.asarray(tau, dtype=float)
    value = -np.expm1(-kappa * tau) / kappa
    return value if value.ndim else float(value)


def v_squared(p: HestonParams, tau):
    """Conditional mean of the average variance over ``[0, tau]``."""
    return evaluate("v_sq", p.kappa, p.theta, p.nu, p.v0, tau)


def term_U(p: HestonParams, tau):
    return p.rho * evaluate("U", p.kappa, p.theta, p.nu, p.v0, tau)


def term_R(p: HestonParams, tau):
    return evaluate("R", p.kappa, p.theta, p.nu, p.v0, tau)


def term_LWLWM(p: HestonParams, tau):
    return evaluate("LWLWM", p.kappa, p.theta, p.nu, p.v0, tau)


def term_LW_R(p: HestonParams, tau):
    return evaluate("LW_R", p.kappa, p.theta, p.nu, p.v0, tau)


def term_DM_LWM(p: HestonParams, tau):
    return evaluate("DM_LWM", p.kappa, p.theta, p.nu, p.v0, tau)


def term_LWLWLWM(p: HestonParams, tau):
    return evaluate("LWLWLWM", p.kappa, p.theta, p.nu, p.v0, tau)


def term_DM_R(p: HestonParams, tau):
    return evaluate("DM_R", p.kappa, p.theta, p.nu, p.v0, tau)


@dataclass(frozen=True)
class TermSet:
    v_sq: float
    phi: float
    U: float
    R: float
    LWLWM: float
    LW_R: float
    DM_LWM: float
    LWLWLWM: float
    DM_R: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def term_set(p: HestonParams, tau) -> TermSet:
    """All terms at once; fields are arrays when ``tau`` is."""
    k, th, nu, v0 = p.kappa, p.theta, p.nu, p.v0
    return TermSet(
        v_sq=evaluate("v_sq", k, th, nu, v0, tau),
        phi=phi(k, tau),
        U=p.rho * evaluate("U", k, th, nu, v0, tau),
        R=evaluate("R", k, th, nu, v0, tau),
        LWLWM=evaluate("LWLWM", k, th, nu, v0, tau),
        LW_R=evaluate("LW_R", k, th, nu, v0, tau),
        DM_LWM=evaluate("DM_LWM", k, th, nu, v0, tau),
        LWLWLWM=evaluate("LWLWLWM", k, th, nu, v0, tau),
        DM_R=evaluate("DM_R", k, th, nu, v0, tau),
    )
