"""Pure numpy versions of the compiled kernels (same signatures and semantics)."""
import numpy as np
from scipy.special import gammaln

BACKEND = "python"

_CHUNK = 1 << 22


def log_binom_coeffs(m):
    j = np.arange(m + 1, dtype=float)
    return gammaln(m + 1.0) - gammaln(j + 1.0) - gammaln(m - j + 1.0)


def _binom_mix(coef, m, p):
    coef = np.asarray(coef, dtype=float)
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape)
    logc = log_binom_coeffs(m)
    j = np.arange(m + 1, dtype=float)
    rows = max(1, _CHUNK // (m + 1))
    for s in range(0, len(p), rows):
        pp = p[s:s + rows]
        inner = (pp > 0) & (pp < 1)
        res = np.where(pp <= 0, coef[0], coef[-1]).astype(float)
        if np.any(inner):
            q = pp[inner][:, None]
            with np.errstate(divide="ignore"):
                e = logc[None, :] + j[None, :] * np.log(q) + (m - j)[None, :] * np.log1p(-q)
            res[inner] = np.exp(e) @ coef
        out[s:s + rows] = res
    return out


def gn_eval(R, y):
    R = np.asarray(R, dtype=float)
    return _binom_mix(R, len(R) - 1, 1.0 - np.asarray(y, dtype=float))


def gn_deriv(R, y):
    R = np.asarray(R, dtype=float)
    m = len(R) - 1
    return m * _binom_mix(R[:-1] - R[1:], m - 1, 1.0 - np.asarray(y, dtype=float))


def gn_inverse(R, z, tol=1e-12):
    R = np.asarray(R, dtype=float)
    z = np.asarray(z, dtype=float)
    lo = np.zeros(z.shape)
    hi = np.ones(z.shape)
    y = np.full(z.shape, 0.5)
    active = (z > R[-1]) & (z < R[0])
    for _ in range(200):
        if not np.any(active):
            break
        ya = y[active]
        f = gn_eval(R, ya) - z[active]
        la, ha = lo[active], hi[active]
        la = np.where(f > 0, la, ya)
        ha = np.where(f > 0, ya, ha)
        fp = gn_deriv(R, ya)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp > 0, ya - f / fp, -1.0)
        bad = (step <= la) | (step >= ha)
        step = np.where(bad, 0.5 * (la + ha), step)
        lo[active], hi[active] = la, ha
        y[active] = step
        done = (ha - la) <= tol
        idx = np.nonzero(active)[0]
        active[idx[done]] = False
    y = 0.5 * (lo + hi)
    for _ in range(2):
        f = gn_eval(R, y) - z
        fp = gn_deriv(R, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp > 0, y - f / fp, y)
        y = np.where((step >= lo) & (step <= hi), step, y)
    y = np.where(z <= R[-1], 0.0, y)
    y = np.where(z >= R[0], 1.0, y)
    return y


def xi_trinomial(S, pa, pb, pt):
    S = np.asarray(S, dtype=float)
    n = len(S) - 1
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    k = n - 1 - i - j
    valid = k >= 0
    kk = np.where(valid, k, 0)
    lf = gammaln(np.arange(n + 1) + 1.0)

    def part(cnt, prob):
        if prob > 0:
            return cnt * np.log(prob)
        return np.where(cnt > 0, -np.inf, 0.0)

    e = lf[n - 1] - lf[i] - lf[np.minimum(j, n)] - lf[kk] + part(i, pa) + part(j, pb) + part(kk, pt)
    e = np.where(valid, e, -np.inf)
    jj = np.where(valid, j, 0)
    vals = (S[n - jj] - S[i]) / (kk + 1.0)
    with np.errstate(under="ignore"):
        return float(np.sum(np.exp(e) * vals))


def exit_two_boundary(x_start, lower, upper, mu, sigma, dt, bit_generator, max_steps):
    rng = np.random.Generator(bit_generator)
    x = np.array(x_start, dtype=float)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    n = len(x)
    hit = np.full(n, -1, dtype=np.int8)
    tau = np.zeros(n)
    hit[x <= lo] = 0
    hit[(x >= hi) & (hit < 0)] = 1
    active = np.nonzero(hit < 0)[0]
    sd = sigma * np.sqrt(dt)
    var2 = 2.0 / (sigma * sigma * dt)
    steps = 0
    while len(active) and steps < max_steps:
        steps += 1
        xa = x[active]
        xn = xa + mu * dt + sd * rng.standard_normal(len(active))
        la, ha = lo[active], hi[active]
        with np.errstate(invalid="ignore", over="ignore"):
            pl = np.where(np.isfinite(la), np.exp(-var2 * (xa - la) * (xn - la)), 0.0)
            ph = np.where(np.isfinite(ha), np.exp(-var2 * (ha - xa) * (ha - xn)), 0.0)
        u = rng.random(len(active))
        down = (xn <= la) | ((xn < ha) & (u < pl))
        up = ~down & ((xn >= ha) | (u < pl + ph))
        hit[active[down]] = 0
        hit[active[up]] = 1
        tau[active] = steps * dt
        x[active] = xn
        active = active[~(down | up)]
    return hit, tau, len(active)
