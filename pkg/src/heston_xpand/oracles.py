"""Independent oracles used by the test-suite and ``heston-xpand check``.

* Term oracle: the defining integrals of every expansion term are evaluated by
  nested adaptive Gauss-Kronrod quadrature (QUADPACK via ``scipy.integrate.quad``).
  It shares no code with the closed forms in :mod:`terms`.
* Derivative oracle: ``Lambda^a Gamma^b BS`` from Richardson-extrapolated central
  differences of the call price, evaluated in 60-digit arithmetic with ``mpmath``.
  The extra precision is needed because an order-8 stencil loses ~20 digits
  to cancellation.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from math import comb
from pathlib import Path
from typing import Iterable

import mpmath
import numpy as np
from scipy import integrate

from .model import HestonParams

ABS_TOL = 1e-13
REL_TOL = 1e-12
_LIMIT = 200

ORACLE_TERMS = ("v_sq", "U", "R", "LWLWM", "LW_R", "DM_LWM", "LWLWLWM", "DM_R")
GOLDEN_FIELDS = ("kappa", "theta", "nu", "rho", "v0", "tau", "term_name", "value")


def _quad(f, a: float, b: float, depth: int) -> float:
    """Adaptive quadrature; each nesting level tightens the tolerances by one decade."""
    if b <= a:
        return 0.0
    scale = 10.0**-depth
    with warnings.catch_warnings():
        # the innermost tolerances sit at the roundoff floor; QUADPACK says so but the value is fine
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(f, a, b, epsabs=ABS_TOL * scale, epsrel=REL_TOL * scale, limit=_LIMIT)
    return value


@dataclass(frozen=True)
class TermOracle:
    """Defining integrals at valuation time 0 and horizon ``tau``."""

    kappa: float
    theta: float
    nu: float
    v0: float
    tau: float

    def mean_var(self, u: float) -> float:
        return self.theta + (self.v0 - self.theta) * math.exp(-self.kappa * u)

    def phi(self, u: float) -> float:
        # int_u^tau e^{-kappa (z - u)} dz
        return _quad(lambda z: math.exp(-self.kappa * (z - u)), u, self.tau, 2)

    def k1(self, u: float, depth: int) -> float:
        return _quad(lambda z: math.exp(-self.kappa * (z - u)) * self._phi_exact(z), u, self.tau, depth)

    def k2(self, u: float, depth: int) -> float:
        return _quad(lambda z: math.exp(-self.kappa * (z - u)) * self._phi_exact(z) ** 2, u, self.tau, depth)

    def _phi_exact(self, u: float) -> float:
        # innermost kernel; quadrature of a single exponential adds nothing but cost
        return -math.expm1(-self.kappa * (self.tau - u)) / self.kappa

    def value(self, name: str) -> float:
        k, nu, tau = self.kappa, self.nu, self.tau
        m, ph = self.mean_var, self._phi_exact
        if name == "v_sq":
            return _quad(m, 0.0, tau, 0) / tau
        if name == "U":  # without the rho factor
            return 0.5 * nu * _quad(lambda u: m(u) * ph(u), 0.0, tau, 0)
        if name == "R":
            return nu**2 / 8.0 * _quad(lambda u: m(u) * ph(u) ** 2, 0.0, tau, 0)
        if name == "LWLWM":
            return nu**2 * _quad(lambda u: m(u) * self.k1(u, 1), 0.0, tau, 0)
        if name == "LW_R":
            return nu**3 / 8.0 * _quad(lambda u: m(u) * self.k2(u, 1), 0.0, tau, 0)
        if name == "DM_LWM":
            return nu**3 * _quad(lambda u: m(u) * ph(u) * self.k1(u, 1), 0.0, tau, 0)
        if name == "LWLWLWM":

            def inner(u):
                return _quad(lambda s: math.exp(-k * (s - u)) * self.k1(s, 2), u, tau, 1)

            return nu**3 * _quad(lambda u: m(u) * inner(u), 0.0, tau, 0)
        if name == "DM_R":
            return nu**4 / 8.0 * _quad(lambda u: m(u) * ph(u) * self.k2(u, 1), 0.0, tau, 0)
        raise KeyError(name)


def oracle_term(name: str, kappa: float, theta: float, nu: float, v0: float, tau: float) -> float:
    return TermOracle(kappa, theta, nu, v0, tau).value(name)


def sample_term_params(n: int, seed: int) -> list[tuple[HestonParams, float]]:
    """Random valid parameter sets and horizons; a quarter have ``kappa tau < 1``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        kappa = rng.uniform(0.1, 5.0)
        theta = rng.uniform(0.02, 0.6)
        nu = rng.uniform(0.01, 1.0) * math.sqrt(2.0 * kappa * theta)
        rho = rng.uniform(-0.95, 0.95)
        v0 = rng.uniform(0.02, 0.6)
        tau = rng.uniform(0.02, 1.0) / kappa if len(out) % 4 == 0 else rng.uniform(0.05, 5.0)
        out.append((HestonParams(kappa, theta, nu, rho, v0, 0.0, 100.0), float(tau)))
    return out


def write_golden(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GOLDEN_FIELDS)
        for row in rows:
            w.writerow([row["term_name"] if f == "term_name" else f"{row[f]:.17g}" for f in GOLDEN_FIELDS])


def read_golden(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (v if k == "term_name" else float(v)) for k, v in row.items()} for row in rows]


def golden_rows(cases: Iterable[tuple[HestonParams, float]], names=ORACLE_TERMS) -> list[dict]:
    rows = []
    for p, tau in cases:
        for name in names:
            value = oracle_term(name, p.kappa, p.theta, p.nu, p.v0, tau)
            rows.append(dict(kappa=p.kappa, theta=p.theta, nu=p.nu, rho=p.rho, v0=p.v0, tau=tau,
                             term_name=name, value=value))
    return rows


# Derivative oracle ---------------------------------------------------------------------------

_FD_DPS = 60


def _mp_bs(x, strike, r, y, tau):
    s = y * mpmath.sqrt(tau)
    dp = (x - mpmath.log(strike) + (r + y * y / 2) * tau) / s
    return mpmath.exp(x) * mpmath.ncdf(dp) - strike * mpmath.exp(-r * tau) * mpmath.ncdf(dp - s)


def operator_coefficients(a: int, b: int) -> dict[int, int]:
    """``Lambda^a Gamma^b = sum_k c_k d^k`` (all ``k``, including the price itself for ``k = 0``)."""
    out: dict[int, int] = {}
    for j in range(b + 1):
        k = a + b + j  # d^a (d^2)^j (-d)^(b-j)
        out[k] = out.get(k, 0) + comb(b, j) * (-1) ** (b - j)
    return out


def _central(f, x, h, n):
    return sum((-1) ** i * comb(n, i) * f(x + (mpmath.mpf(n) / 2 - i) * h) for i in range(n + 1)) / h**n


def fd_derivative(f, x, n: int, h: float = 0.02, levels: int = 5):
    """``d^n f / dx^n`` by central differences with Richardson extrapolation in ``h^2``."""
    if n == 0:
        return f(x)
    table = [_central(f, x, mpmath.mpf(h) / 2**i, n) for i in range(levels)]
    for lev in range(1, levels):
        factor = mpmath.mpf(4) ** lev
        table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
    return table[0]


def fd_lambda_gamma(x: float, strike: float, r: float, y: float, tau: float, a: int, b: int) -> float:
    with mpmath.workdps(_FD_DPS):
        args = [mpmath.mpf(v) for v in (strike, r, y, tau)]

        def f(t):
            return _mp_bs(t, *args)

        xm = mpmath.mpf(x)
        # the price varies on the scale of the total volatility, so the step must too
        h = min(0.02, 0.2 * y * math.sqrt(tau))
        total = mpmath.mpf(0)
        for k, c in operator_coefficients(a, b).items():
            total += c * fd_derivative(f, xm, k, h=h)
        return float(total)


def fd_vega(x: float, strike: float, r: float, y: float, tau: float) -> float:
    with mpmath.workdps(_FD_DPS):

        def f(t):
            return _mp_bs(mpmath.mpf(x), mpmath.mpf(strike), mpmath.mpf(r), t, mpmath.mpf(tau))

        # deep in or out of the money the price bends on the scale y / d^2
        d = (x - math.log(strike) + r * tau) / (y * math.sqrt(tau))
        return float(fd_derivative(f, mpmath.mpf(y), 1, h=min(0.01, y / 4) / (1.0 + d * d)))


# Diagnostics ---------------------------------------------------------------------------------


def integrated_variance_bounds(p: HestonParams, tau: float) -> tuple[float, float, float]:
    """``(int_0^tau E s2, (theta kappa / 2) phi^2, v0 phi)``; the first must dominate the other two."""
    oracle = TermOracle(p.kappa, p.theta, p.nu, p.v0, tau)
    total = _quad(oracle.mean_var, 0.0, tau, 0)
    ph = oracle.phi(0.0)
    return total, 0.5 * p.theta * p.kappa * ph * ph, p.v0 * ph


def derivative_scaling(n_max: int, strike: float = 100.0, x: float = math.log(100.0), y: float = 0.3,
                       taus=np.geomspace(1e-3, 10.0, 40)) -> np.ndarray:
    """``max_tau |Lambda^n Gamma BS| (y sqrt(tau))^(n+1)`` for ``n = 0..n_max``, at the money."""
    from .blackscholes import BsState, DerivOrder, lambda_gamma_bs

    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        vals = [abs(lambda_gamma_bs(BsState(x, y, t, strike), DerivOrder(n, 1))) * (y * math.sqrt(t)) ** (n + 1)
                for t in taus]
        out[n] = max(vals)
    return out
