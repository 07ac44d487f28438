# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contracts as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, log, sqrt, fabs, tan, cos, sin, atan, M_PI

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex cexp(double complex)
    double complex clog(double complex)

cdef enum:
    N_TERMS = 8
    N_SERIES = 34
    MAX_PARTS = 11
    MAX_DERIV = 8

cdef enum:
    T_VSQ = 0
    T_U = 1
    T_R = 2
    T_LWLWM = 3
    T_LW_R = 4
    T_DM_LWM = 5
    T_LWLWLWM = 6
    T_DM_R = 7

cdef double[:, :, :, ::1] _closed
cdef double[:, :, ::1] _series
cdef double[:, ::1] _meta
cdef bint _ready = False

cdef double _INV_SQRT_2PI = 0.3989422804014327
cdef double _SQRT1_2 = 0.7071067811865476


def set_term_tables(closed, series, meta):
    """Install the coefficient tables produced by ``terms.kernel_tables``."""
    global _closed, _series, _meta, _ready
    closed = np.ascontiguousarray(closed, dtype=np.float64)
    series = np.ascontiguousarray(series, dtype=np.float64)
    meta = np.ascontiguousarray(meta, dtype=np.float64)
    if closed.shape != (N_TERMS, 2, 4, 4) or series.shape != (N_TERMS, 2, N_SERIES) or meta.shape != (N_TERMS, 4):
        raise ValueError("term tables have unexpected shapes")
    _closed = closed
    _series = series
    _meta = meta
    _ready = True


cdef inline double _norm_cdf(double z) nogil:
    return 0.5 * erfc(-z * _SQRT1_2)


cdef double _term(int k, double kappa, double theta, double nu, double v0, double tau, double x,
                  double *em) nogil:
    cdef int q = <int>_meta[k, 1]
    cdef int p = <int>_meta[k, 0]
    cdef int tp = <int>_meta[k, 3]
    cdef int m, j, nuse
    cdef double acc, poly, xq
    # theta and v0 parts share the Horner pass
    if x < 1.0:
        # tail below 1e-17 of the largest retained term for these lengths
        nuse = 16 if x < 0.25 else (20 if x < 0.5 else 26)
        acc = 0.0
        for j in range(nuse - 1, -1, -1):
            acc = acc * x + (theta * _series[k, 0, j] + v0 * _series[k, 1, j])
    else:
        xq = 1.0
        for j in range(q):
            xq *= x
        acc = 0.0
        for m in range(4):
            poly = 0.0
            for j in range(3, -1, -1):
                poly = poly * x + (theta * _closed[k, 0, m, j] + v0 * _closed[k, 1, m, j])
            acc += poly * em[m]
        acc /= xq
    acc *= _meta[k, 2]
    for j in range(p):
        acc *= nu
    for j in range(tp):
        acc *= tau
    return acc


cdef void _terms(double kappa, double theta, double nu, double v0, double tau, int upto, double *out) nogil:
    cdef double x = kappa * tau
    cdef double em[4]
    cdef int k
    em[0] = 1.0
    em[1] = exp(-x)
    em[2] = em[1] * em[1]
    em[3] = em[2] * em[1]
    for k in range(upto):
        out[k] = _term(k, kappa, theta, nu, v0, tau, x, em)


cdef double _compensated(double *v, int n) nogil:
    cdef int i, j
    cdef double key, t, total, comp
    for i in range(1, n):
        key = v[i]
        j = i - 1
        while j >= 0 and fabs(v[j]) < fabs(key):
            v[j + 1] = v[j]
            j -= 1
        v[j + 1] = key
    total = v[0]
    comp = 0.0
    for i in range(1, n):
        t = total + v[i]
        if fabs(total) >= fabs(v[i]):
            comp += (total - t) + v[i]
        else:
            comp += (v[i] - t) + total
        total = t
    return total + comp


cdef double _approx_one(int method, double rho, double r, double spot, double strike, double tau,
                        double disc, double *T) nogil:
    # D[n] = d^n Gamma BS / dx^n; Lambda^a Gamma^b BS = sum_j C(b-1, j) (-1)^(b-1-j) D[a+b-1+j]
    cdef double parts[MAX_PARTS]
    cdef double D[MAX_DERIV]
    cdef int nmax, n, npart
    cdef double y, s, inv_s, dp, dm, df, g, he_prev, he, he_next, scale, U, R, lw, lg12
    if method == 0:
        nmax = 2
    elif method == 1:
        nmax = 4
    elif method == 2:
        nmax = 7
    else:
        nmax = 6
    y = sqrt(T[T_VSQ])
    s = y * sqrt(tau)
    inv_s = 1.0 / s
    dp = (log(spot / strike) + (r + 0.5 * y * y) * tau) * inv_s
    dm = dp - s
    df = strike * disc
    g = df * _INV_SQRT_2PI * exp(-0.5 * dm * dm) * inv_s
    he_prev = 0.0
    he = 1.0
    scale = 1.0
    for n in range(nmax + 1):
        D[n] = g * scale * he
        he_next = dm * he - n * he_prev
        he_prev = he
        he = he_next
        scale = -scale * inv_s

    R = T[T_R]
    parts[0] = spot * _norm_cdf(dp) - df * _norm_cdf(dm)
    if method == 3:
        parts[1] = (D[2] - D[1]) * R
        parts[2] = 0.5 * (-D[3] + 3.0 * D[4] - 3.0 * D[5] + D[6]) * R * R
        parts[3] = 0.5 * (D[2] - 2.0 * D[3] + D[4]) * T[T_DM_R]
        return _compensated(parts, 4)

    U = rho * T[T_U]
    parts[1] = D[1] * U
    parts[2] = (D[2] - D[1]) * R
    npart = 3
    if method >= 1:
        lw = T[T_LWLWM]
        parts[3] = 0.5 * (D[4] - D[3]) * U * U
        parts[4] = rho * D[2] * (0.5 * rho * lw)
        npart = 5
    if method == 2:
        lg12 = D[3] - D[2]
        parts[5] = (D[5] - 2.0 * D[6] + D[7]) * U * U * U / 6.0
        parts[6] = (D[3] - 2.0 * D[4] + D[5]) * U * R
        parts[7] = rho * lg12 * T[T_LW_R]
        parts[8] = 0.5 * lg12 * (0.5 * rho * T[T_DM_LWM])
        parts[9] = rho * (D[5] - D[4]) * U * (0.5 * rho * lw)
        parts[10] = rho * D[3] * (0.5 * rho * rho * T[T_LWLWLWM])
        npart = 11
    return _compensated(parts, npart)


def approx_prices(int method, params, strikes, taus):
    if not _ready:
        raise RuntimeError("term tables not installed")
    if method < 0 or method > 3:
        raise ValueError(f"unknown method code {method}")
    cdef double kappa, theta, nu, rho, v0, r, s0
    kappa, theta, nu, rho, v0, r, s0 = params
    cdef const double[::1] K = np.ascontiguousarray(strikes, dtype=np.float64).ravel()
    cdef const double[::1] tt = np.ascontiguousarray(taus, dtype=np.float64).ravel()
    if K.shape[0] != tt.shape[0]:
        raise ValueError("strikes and taus must have equal length")
    cdef Py_ssize_t n = K.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double T[N_TERMS]
    cdef double last_tau = -1.0
    cdef double disc = 1.0
    cdef int upto = 3 if method == 0 else (4 if method == 1 else N_TERMS)
    with nogil:
        for i in range(n):
            if tt[i] != last_tau:
                # terms depend on the maturity only; batches sorted by maturity reuse them
                _terms(kappa, theta, nu, v0, tt[i], upto, T)
                disc = exp(-r * tt[i])
                last_tau = tt[i]
            o[i] = _approx_one(method, rho, r, s0, K[i], tt[i], disc, T)
    return out


cdef inline double complex _log1p_over(double complex a) nogil:
    cdef double complex b = 1.0 + a
    if b == 1.0:
        return 1.0
    return clog(b) / (b - 1.0)


cdef inline double complex _log_cf_forward(double complex z, double kappa, double theta, double nu,
                                           double rho, double v0, double tau) nogil:
    cdef double complex iz = 1j * z
    cdef double complex q = iz + z * z
    cdef double complex xi = kappa - rho * nu * iz
    cdef double complex d = csqrt(xi * xi + nu * nu * q)
    cdef double complex xpd = xi + d
    cdef double complex A = -q / xpd
    cdef double complex g = A * (nu * nu) / xpd
    cdef double complex e = cexp(-d * tau)
    cdef double complex ome = 1.0 - e
    cdef double complex w = A * ome / (xpd * (1.0 - g))
    cdef double complex lt = w * _log1p_over(w * (nu * nu))
    return kappa * theta * (A * tau - 2.0 * lt) + v0 * A * ome / (1.0 - g * e)


def reference_prices(params, strikes, taus, nodes, weights, double scale, double u_max):
    if not _ready:
        raise RuntimeError("term tables not installed")
    cdef double kappa, theta, nu, rho, v0, r, s0
    kappa, theta, nu, rho, v0, r, s0 = params
    cdef const double[::1] K = np.ascontiguousarray(strikes, dtype=np.float64).ravel()
    cdef const double[::1] tt = np.ascontiguousarray(taus, dtype=np.float64).ravel()
    cdef const double[::1] xn = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[::1] wn = np.ascontiguousarray(weights, dtype=np.float64)
    if K.shape[0] != tt.shape[0]:
        raise ValueError("strikes and taus must have equal length")
    cdef Py_ssize_t n = K.shape[0], m = xn.shape[0], i, j
    out = np.empty(n)
    cdef double[::1] o = out
    # per-maturity nodes and weighted transform differences, reused across strikes
    cdef double[::1] uu = np.empty(m)
    cdef double[::1] dre = np.empty(m)
    cdef double[::1] dim = np.empty(m)
    cdef double T[1]
    cdef double tau = -1.0, last_tau = -1.0
    cdef double vt = 0.0, s = 0.0, disc = 1.0, fwd = 0.0
    cdef double dp, k, length, w_max, angle, u, shift, c, integral, cv
    cdef double complex diff
    with nogil:
        for i in range(n):
            tau = tt[i]
            if tau != last_tau:
                _terms(kappa, theta, nu, v0, tau, 1, T)
                vt = T[0] * tau
                s = sqrt(vt)
                disc = exp(-r * tau)
                fwd = s0 / disc
                length = scale / s
                w_max = (2.0 / M_PI) * atan(u_max / length)
                for j in range(m):
                    angle = 0.25 * M_PI * (xn[j] + 1.0) * w_max
                    u = length * tan(angle)
                    c = cos(angle)
                    shift = u * u + 0.25
                    diff = exp(-0.5 * vt * shift) - cexp(_log_cf_forward(u - 0.5j, kappa, theta, nu, rho, v0, tau))
                    diff = diff * (length * 0.25 * M_PI * w_max * wn[j] / (c * c * shift))
                    uu[j] = u
                    dre[j] = diff.real
                    dim[j] = diff.imag
                last_tau = tau
            dp = (log(s0 / K[i]) + r * tau) / s + 0.5 * s
            cv = s0 * _norm_cdf(dp) - K[i] * disc * _norm_cdf(dp - s)
            k = log(fwd / K[i])
            integral = 0.0
            for j in range(m):
                integral += cos(uu[j] * k) * dre[j] - sin(uu[j] * k) * dim[j]
            o[i] = cv + disc * sqrt(fwd * K[i]) / M_PI * integral
    return out


def mc_step(double[::1] x, double[::1] v, const double[::1] z1, const double[::1] z2,
            double kappa, double theta, double nu, double rho, double r, double dt):
    cdef Py_ssize_t n = x.shape[0], i
    cdef long truncated = 0
    cdef double vp, sq, rc = sqrt(1.0 - rho * rho)
    with nogil:
        for i in range(n):
            vp = v[i]
            if vp < 0.0:
                truncated += 1
                vp = 0.0
            sq = sqrt(vp * dt)
            x[i] += (r - 0.5 * vp) * dt + sq * (rho * z1[i] + rc * z2[i])
            v[i] += kappa * (theta - vp) * dt + nu * sq * z1[i]
    return truncated


def hw_step(double[::1] v, double[::1] iv, const double[::1] z1,
            double kappa, double theta, double nu, double dt):
    cdef Py_ssize_t n = v.shape[0], i
    cdef long truncated = 0
    cdef double vp, vn
    with nogil:
        for i in range(n):
            vp = v[i]
            if vp < 0.0:
                truncated += 1
                vp = 0.0
            vn = v[i] + kappa * (theta - vp) * dt + nu * sqrt(vp * dt) * z1[i]
            v[i] = vn
            iv[i] += 0.5 * (vp + (vn if vn > 0.0 else 0.0)) * dt
    return truncated
