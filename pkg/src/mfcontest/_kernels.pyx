# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Bernstein rank payoffs, trinomial tie payoffs and
bridge-corrected two-boundary exits of a drifted Brownian motion."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, lgamma, sqrt, floor, ceil, fabs, INFINITY
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal, random_standard_uniform

cnp.import_array()

BACKEND = "cython"

cdef double _LOG_TINY = -745.0


cdef inline void _window(long m, double p, long *lo, long *hi) noexcept nogil:
    cdef double mean = m * p
    cdef double sd = sqrt(m * p * (1.0 - p))
    cdef double a = floor(mean - 40.0 * sd - 40.0)
    cdef double b = ceil(mean + 40.0 * sd + 40.0)
    lo[0] = <long>a if a > 0 else 0
    hi[0] = <long>b if b < m else m


cdef double _binom_mix(const double[::1] coef, const double[::1] logc, long m, double p) noexcept nogil:
    """sum_j coef[j] * C(m, j) p^j (1-p)^(m-j), Neumaier-compensated."""
    cdef long j, lo, hi
    cdef double lp, lq, term, s = 0.0, comp = 0.0, t
    if p <= 0.0:
        return coef[0]
    if p >= 1.0:
        return coef[m]
    lp = log(p)
    lq = log(1.0 - p)
    _window(m, p, &lo, &hi)
    for j in range(lo, hi + 1):
        term = logc[j] + j * lp + (m - j) * lq
        if term < _LOG_TINY:
            continue
        term = coef[j] * exp(term)
        t = s + term
        if fabs(s) >= fabs(term):
            comp += (s - t) + term
        else:
            comp += (term - t) + s
        s = t
    return s + comp


def log_binom_coeffs(long m):
    cdef cnp.ndarray[double, ndim=1] out = np.empty(m + 1)
    cdef long j
    cdef double lm = lgamma(m + 1.0)
    for j in range(m + 1):
        out[j] = lm - lgamma(j + 1.0) - lgamma(m - j + 1.0)
    return out


def gn_eval(const double[::1] R, const double[::1] y):
    """g_n(y) = E[R_{1+B}], B ~ Bin(n-1, 1-y)."""
    cdef long m = R.shape[0] - 1
    cdef double[::1] logc = log_binom_coeffs(m)
    cdef long i, ny = y.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(ny)
    cdef double[::1] o = out
    with nogil:
        for i in range(ny):
            o[i] = _binom_mix(R, logc, m, 1.0 - y[i])
    return out


def gn_deriv(const double[::1] R, const double[::1] y):
    """g_n'(y) = (n-1) E[R_{1+B'} - R_{2+B'}], B' ~ Bin(n-2, 1-y)."""
    cdef long m = R.shape[0] - 1
    cdef long i, ny = y.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(ny)
    cdef double[::1] o = out
    cdef double[::1] d = np.ascontiguousarray(np.asarray(R)[:-1] - np.asarray(R)[1:])
    cdef double[::1] logc = log_binom_coeffs(m - 1)
    with nogil:
        for i in range(ny):
            o[i] = m * _binom_mix(d, logc, m - 1, 1.0 - y[i])
    return out


def gn_inverse(const double[::1] R, const double[::1] z, double tol=1e-12):
    """Solve g_n(y) = z by safeguarded Newton inside a shrinking bracket."""
    cdef long m = R.shape[0] - 1
    cdef double[::1] logc = log_binom_coeffs(m)
    cdef double[::1] d = np.ascontiguousarray(np.asarray(R)[:-1] - np.asarray(R)[1:])
    cdef double[::1] logc1 = log_binom_coeffs(m - 1)
    cdef long i, it, nz = z.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(nz)
    cdef double[::1] o = out
    cdef double lo, hi, y, f, fp, step, target, bottom = R[m], top = R[0]
    with nogil:
        for i in range(nz):
            target = z[i]
            if target <= bottom:
                o[i] = 0.0
                continue
            if target >= top:
                o[i] = 1.0
                continue
            lo = 0.0
            hi = 1.0
            y = 0.5
            for it in range(200):
                f = _binom_mix(R, logc, m, 1.0 - y) - target
                if f > 0:
                    hi = y
                else:
                    lo = y
                if hi - lo <= tol:
                    break
                fp = m * _binom_mix(d, logc1, m - 1, 1.0 - y)
                if fp > 0:
                    step = y - f / fp
                else:
                    step = -1.0
                if step <= lo or step >= hi:
                    step = 0.5 * (lo + hi)
                y = step
            y = 0.5 * (lo + hi)
            # two Newton polish steps, kept inside the bracket
            for it in range(2):
                f = _binom_mix(R, logc, m, 1.0 - y) - target
                fp = m * _binom_mix(d, logc1, m - 1, 1.0 - y)
                if fp > 0:
                    step = y - f / fp
                    if lo <= step <= hi:
                        y = step
            o[i] = y
    return out


def xi_trinomial(const double[::1] S, double pa, double pb, double pt):
    """Tie-aware n-player payoff at an atom.

    S are prefix sums of the reward vector (S[0] = 0, length n + 1); pa, pb,
    pt are the probabilities that one opponent stops above, below, at x.
    """
    cdef long n = S.shape[0] - 1
    cdef long i, j, k
    cdef double lpa = log(pa) if pa > 0 else -INFINITY
    cdef double lpb = log(pb) if pb > 0 else -INFINITY
    cdef double lpt = log(pt) if pt > 0 else -INFINITY
    cdef double[::1] lf = np.empty(n + 1)
    cdef double lnm, e, term, s = 0.0, comp = 0.0, t, ea, eb, ek
    for i in range(n + 1):
        lf[i] = lgamma(i + 1.0)
    lnm = lf[n - 1]
    with nogil:
        for i in range(n):
            if pa == 0 and i > 0:
                break
            ea = i * lpa if i > 0 else 0.0
            for j in range(n - i):
                if pb == 0 and j > 0:
                    break
                k = n - 1 - i - j
                if pt == 0 and k > 0:
                    continue
                eb = j * lpb if j > 0 else 0.0
                ek = k * lpt if k > 0 else 0.0
                e = lnm - lf[i] - lf[j] - lf[k] + ea + eb + ek
                if e < _LOG_TINY:
                    continue
                term = exp(e) * (S[n - j] - S[i]) / (k + 1.0)
                t = s + term
                if fabs(s) >= fabs(term):
                    comp += (s - t) + term
                else:
                    comp += (term - t) + s
                s = t
    return s + comp


def exit_two_boundary(const double[::1] x_start, const double[::1] lower, const double[::1] upper,
                      double mu, double sigma, double dt, object bit_generator, long max_steps):
    """Exact Gaussian steps of x + mu t + sigma W with Brownian-bridge crossing
    checks; returns (hit_upper, exit_time, unfinished_count)."""
    cdef long n = x_start.shape[0]
    cdef cnp.ndarray[cnp.int8_t, ndim=1] hit = np.zeros(n, dtype=np.int8)
    cdef cnp.ndarray[double, ndim=1] tau = np.zeros(n)
    cdef cnp.int8_t[::1] hv = hit
    cdef double[::1] tv = tau
    cdef long p, steps, unfinished = 0
    cdef double x, xn, lo, hi, sd = sigma * sqrt(dt), drift = mu * dt
    cdef double var2 = 2.0 / (sigma * sigma * dt), pl, ph, u
    cdef bitgen_t *rng
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    with bit_generator.lock, nogil:
        for p in range(n):
            x = x_start[p]
            lo = lower[p]
            hi = upper[p]
            if x <= lo:
                hv[p] = 0
                continue
            if x >= hi:
                hv[p] = 1
                continue
            steps = 0
            while True:
                if steps >= max_steps:
                    hv[p] = -1
                    unfinished += 1
                    break
                xn = x + drift + sd * random_standard_normal(rng)
                steps += 1
                if xn <= lo:
                    hv[p] = 0
                    break
                if xn >= hi:
                    hv[p] = 1
                    break
                pl = exp(-var2 * (x - lo) * (xn - lo)) if lo > -INFINITY else 0.0
                ph = exp(-var2 * (hi - x) * (hi - xn)) if hi < INFINITY else 0.0
                if pl > 1e-300 or ph > 1e-300:
                    u = random_standard_uniform(rng)
                    if u < pl:
                        hv[p] = 0
                        break
                    if u < pl + ph:
                        hv[p] = 1
                        break
                x = xn
            tv[p] = steps * dt
    return hit, tau, unfinished
