"""Domain types shared by every pricer: Heston parameters, option contracts, results.

All quantities are annualised. ``v0`` is the initial *variance* sigma_0^2, not a
volatility.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from os import PathLike
from typing import Any, Mapping


class HestonError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(HestonError, ValueError):
    """A parameter lies outside its admissible range."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class FellerViolation(DomainError):
    """2 * kappa * theta < nu^2."""


class RhoNotZero(HestonError, ValueError):
    """A zero-correlation formula was called with rho != 0."""


class OrderOutOfRange(HestonError, ValueError):
    """Requested derivative order exceeds the supported range."""


class QuadratureNonConvergence(HestonError, ArithmeticError):
    """Adaptive quadrature exhausted its budget without meeting tolerance."""


PARAM_KEYS = ("kappa", "theta", "nu", "rho", "v0", "r", "s0")


def _check_finite(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError(name, f"expected a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise DomainError(name, f"must be finite, got {value}")
    return value


@dataclass(frozen=True)
class HestonParams:
    """Heston model parameters.

    Attributes
    ----------
    kappa : float
        Mean-reversion rate of the variance (> 0).
    theta : float
        Long-run variance (> 0).
    nu : float
        Volatility of variance (> 0).
    rho : float
        Spot/variance correlation, strictly inside (-1, 1).
    v0 : float
        Current variance sigma_t^2 (> 0).
    r : float
        Risk-free rate (>= 0).
    s0 : float
        Current spot (> 0).

    Instances are validated on construction, so every ``HestonParams`` that
    exists satisfies the Feller condition ``2 kappa theta >= nu^2``.
    """

    kappa: float
    theta: float
    nu: float
    rho: float
    v0: float
    r: float = 0.0
    s0: float = 100.0

    def __post_init__(self):
        for name in PARAM_KEYS:
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        for name in ("kappa", "theta", "nu", "v0", "s0"):
            if getattr(self, name) <= 0.0:
                raise DomainError(name, f"must be > 0, got {getattr(self, name)}")
        if self.r < 0.0:
            raise DomainError("r", f"must be >= 0, got {self.r}")
        if not -1.0 < self.rho < 1.0:
            raise DomainError("rho", f"must lie strictly inside (-1, 1), got {self.rho}")
        feller = 2.0 * self.kappa * self.theta
        # one-ulp slack so that nu = sqrt(2 kappa theta) is accepted
        if self.nu * self.nu > feller * (1.0 + 4.0 * 2.0**-52):
            raise FellerViolation(
                "nu", f"Feller condition 2*kappa*theta >= nu^2 fails ({feller:.6g} < {self.nu**2:.6g})"
            )

    @property
    def feller_ratio(self) -> float:
        return 2.0 * self.kappa * self.theta / (self.nu * self.nu)

    def replace(self, **changes: float) -> "HestonParams":
        values = self.as_dict()
        values.update(changes)
        return HestonParams(**values)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_KEYS}

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in PARAM_KEYS)


def validate_params(p: HestonParams) -> HestonParams:
    """Re-check every invariant of ``p`` and return it unchanged.

    Raises :class:`FellerViolation` or :class:`DomainError` naming the field.
    """
    if not isinstance(p, HestonParams):
        raise TypeError(f"expected HestonParams, got {type(p).__name__}")
    HestonParams(**p.as_dict())  # re-runs __post_init__ checks
    return p


def params_from_mapping(data: Mapping[str, Any]) -> HestonParams:
    """Build parameters from a mapping with exactly the keys of :data:`PARAM_KEYS`."""
    unknown = sorted(set(data) - set(PARAM_KEYS))
    if unknown:
        raise DomainError(unknown[0], "unknown parameter key")
    missing = [k for k in PARAM_KEYS if k not in data]
    if missing:
        raise DomainError(missing[0], "missing parameter key")
    return HestonParams(**{k: data[k] for k in PARAM_KEYS})


def load_params(path: str | PathLike) -> HestonParams:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError("params_file", f"invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise DomainError("params_file", "top-level JSON value must be an object")
    return params_from_mapping(data)


def dump_params(p: HestonParams, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(p.as_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class OptionSpec:
    """European call contract: strike ``K``, maturity ``T`` and valuation time ``t``."""

    strike: float
    maturity: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("strike", "maturity", "t"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.strike <= 0.0:
            raise DomainError("strike", f"must be > 0, got {self.strike}")
        if self.t < 0.0:
            raise DomainError("t", f"must be >= 0, got {self.t}")
        if self.maturity <= self.t:
            raise DomainError("maturity", f"must exceed t={self.t}, got {self.maturity}")

    @property
    def tau(self) -> float:
        return self.maturity - self.t

    def moneyness(self, s0: float) -> float:
        return self.strike / s0


class Method(str, enum.Enum):
    REF_FOURIER = "ref_fourier"
    APPROX_O2 = "approx_o2"
    APPROX_O3 = "approx_o3"
    APPROX_O4 = "approx_o4"
    APPROX_ZERO_CORR = "approx_zero_corr"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class PriceResult:
    price: float
    method: Method
    error_indicator: float | None = None
    elapsed: float = 0.0

    def within_call_bounds(self, p: HestonParams, spec: OptionSpec, slack: float = 0.0) -> bool:
        lower = max(0.0, p.s0 - spec.strike * math.exp(-p.r * spec.tau))
        return lower - slack <= self.price <= p.s0 + slack
