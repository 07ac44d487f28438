"""Fast Heston call prices from a small vol-of-vol expansion, with Fourier and Monte Carlo references."""

from . import _backend
from .approximators import (
    ApproxOrder,
    error_indicator,
    price_batch,
    price_o2,
    price_o3,
    price_o4,
    price_zero_corr,
)
from .blackscholes import BsState, DerivOrder, bs_price, lambda_gamma_bs
from .model import (
    DomainError,
    FellerViolation,
    HestonError,
    HestonParams,
    Method,
    OptionSpec,
    OrderOutOfRange,
    PriceResult,
    QuadratureNonConvergence,
    RhoNotZero,
    load_params,
    validate_params,
)
from .montecarlo import McConfig, McEstimate, hull_white_mc, mc_price
from .reference import QuadratureConfig, heston_cf, price_reference, reference_prices
from .terms import TermSet, term_set, v_squared

__version__ = "0.1.0"


def backend() -> str:
    """Name of the kernel backend in use (``"cython"`` or ``"python"``)."""
    return _backend.default_name()


__all__ = [
    "ApproxOrder", "BsState", "DerivOrder", "DomainError", "FellerViolation", "HestonError", "HestonParams",
    "McConfig", "McEstimate", "Method", "OptionSpec", "OrderOutOfRange", "PriceResult", "QuadratureConfig",
    "QuadratureNonConvergence", "RhoNotZero", "TermSet", "backend", "bs_price", "error_indicator", "heston_cf",
    "hull_white_mc", "lambda_gamma_bs", "load_params", "mc_price", "price_batch", "price_o2", "price_o3",
    "price_o4", "price_reference", "price_zero_corr", "reference_prices", "term_set", "v_squared",
    "validate_params",
]
