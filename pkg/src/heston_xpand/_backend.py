"""Kernel backend selection.

The compiled module ``_kernels`` is used when it imports; otherwise the numpy
implementation in ``_fallback`` is. Setting ``HESTON_XPAND_BACKEND=python`` forces
the fallback. Both expose the same functions:

    approx_prices(method, params, strikes, taus) -> ndarray
    reference_prices(params, strikes, taus, nodes, weights, scale, u_max) -> ndarray
    mc_step(x, v, z1, z2, kappa, theta, nu, rho, r, dt) -> int
    hw_step(v, iv, z1, kappa, theta, nu, dt) -> int
"""

from __future__ import annotations

import importlib
import os

METHOD_CODES = {"o2": 0, "o3": 1, "o4": 2, "zc": 3}

_loaded: dict[str, object] = {}


def _load(name: str):
    if name not in _loaded:
        if name == "cython":
            mod = importlib.import_module("heston_xpand._kernels")
            from .terms import kernel_tables

            mod.set_term_tables(*kernel_tables())
        elif name == "python":
            mod = importlib.import_module("heston_xpand._fallback")
        else:
            raise ValueError(f"unknown backend {name!r}")
        _loaded[name] = mod
    return _loaded[name]


def available() -> list[str]:
    names = ["python"]
    try:
        _load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def default_name() -> str:
    if os.environ.get("HESTON_XPAND_BACKEND", "").strip().lower() == "python":
        return "python"
    return available()[0]


def get(name: str | None = None):
    """Backend module by name; ``None`` picks the default."""
    return _load(name or default_name())
