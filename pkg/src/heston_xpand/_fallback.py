"""Pure numpy kernels; same contracts as the compiled ``_kernels`` module."""

from __future__ import annotations

import math

import numpy as np

from . import terms as _terms
from .blackscholes import bs_call, gamma_derivatives, lambda_gamma_from_stack

O2, O3, O4, ZC = 0, 1, 2, 3
_MAX_DERIV = {O2: 2, O3: 4, O4: 7, ZC: 6}


def compensated_sum(parts) -> np.ndarray:
    """Neumaier summation of the rows of ``parts``, largest magnitude first."""
    stack = np.atleast_2d(np.asarray(parts, dtype=float))
    order = np.argsort(-np.abs(stack), axis=0, kind="stable")
    stack = np.take_along_axis(stack, order, axis=0)
    total = stack[0].copy()
    comp = np.zeros_like(total)
    for row in stack[1:]:
        t = total + row
        big = np.abs(total) >= np.abs(row)
        comp += np.where(big, (total - t) + row, (row - t) + total)
        total = t
    return total + comp


def approx_prices(method, params, strikes, taus):
    kappa, theta, nu, rho, v0, r, s0 = params
    strikes = np.asarray(strikes, dtype=float)
    taus = np.asarray(taus, dtype=float)

    def term(name):
        return _terms.evaluate(name, kappa, theta, nu, v0, taus)

    y = np.sqrt(term("v_sq"))
    x = math.log(s0)
    bs = bs_call(x, strikes, r, y, taus)
    stack = gamma_derivatives(x, strikes, r, y, taus, _MAX_DERIV[method])

    def lg(a, b):
        return lambda_gamma_from_stack(stack, a, b)

    R = term("R")
    if method == ZC:
        dmr = term("DM_R")
        parts = [bs, lg(0, 2) * R, 0.5 * lg(0, 4) * R * R, 0.5 * lg(0, 3) * dmr]
        return compensated_sum(parts)

    U = rho * term("U")
    parts = [bs, lg(1, 1) * U, lg(0, 2) * R]
    if method == O2:
        return compensated_sum(parts)

    lwlwm = term("LWLWM")
    parts += [0.5 * lg(2, 2) * U * U, rho * lg(2, 1) * (0.5 * rho * lwlwm)]
    if method == O3:
        return compensated_sum(parts)

    parts += [
        lg(3, 3) * U**3 / 6.0,
        lg(1, 3) * U * R,
        rho * lg(1, 2) * term("LW_R"),
        0.5 * lg(1, 2) * (0.5 * rho * term("DM_LWM")),
        rho * lg(3, 2) * U * (0.5 * rho * lwlwm),
        rho * lg(3, 1) * (0.5 * rho * rho * term("LWLWLWM")),
    ]
    return compensated_sum(parts)


def reference_prices(params, strikes, taus, nodes, weights, scale, u_max):
    from .reference import log_cf_forward

    kappa, theta, nu, rho, v0, r, s0 = params
    strikes = np.asarray(strikes, dtype=float)
    taus = np.asarray(taus, dtype=float)
    # the transform and the nodes depend on the maturity only
    mats, where = np.unique(taus, return_inverse=True)
    vbar = _terms.evaluate("v_sq", kappa, theta, nu, v0, mats)
    vt = vbar * mats
    length = scale / np.sqrt(vt)
    w_max = (2.0 / math.pi) * np.arctan(u_max / length)
    angle = 0.25 * math.pi * (np.asarray(nodes)[None, :] + 1.0) * w_max[:, None]
    u = length[:, None] * np.tan(angle)
    shift = u * u + 0.25
    jac = length[:, None] * 0.25 * math.pi * w_max[:, None] * np.asarray(weights)[None, :] / np.cos(angle) ** 2
    heston = np.exp(log_cf_forward(u - 0.5j, kappa, theta, nu, rho, v0, mats[:, None]))
    diff = (np.exp(-0.5 * vt[:, None] * shift) - heston) * jac / shift

    fwd = s0 * np.exp(r * taus)
    log_moneyness = np.log(fwd / strikes)
    integral = (np.exp(1j * u[where] * log_moneyness[:, None]) * diff[where]).real.sum(axis=1)
    cv = bs_call(math.log(s0), strikes, r, np.sqrt(vbar[where]), taus)
    return cv + np.exp(-r * taus) * np.sqrt(fwd * strikes) / math.pi * integral


def mc_step(x, v, z1, z2, kappa, theta, nu, rho, r, dt):
    truncated = int(np.count_nonzero(v < 0.0))
    vp = np.maximum(v, 0.0)
    sq = np.sqrt(vp * dt)
    x += (r - 0.5 * vp) * dt + sq * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
    v += kappa * (theta - vp) * dt + nu * sq * z1
    return truncated


def hw_step(v, iv, z1, kappa, theta, nu, dt):
    truncated = int(np.count_nonzero(v < 0.0))
    vp = np.maximum(v, 0.0)
    v += kappa * (theta - vp) * dt + nu * np.sqrt(vp * dt) * z1
    iv += 0.5 * (vp + np.maximum(v, 0.0)) * dt
    return truncated
