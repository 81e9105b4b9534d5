"""Independent reference computations used as test oracles.

Everything here is written directly from the definitions (exact rationals,
brute-force enumeration, direct sampling) and shares no code with the package.
"""
import itertools
import math
from fractions import Fraction

import numpy as np


def g_n_exact(values, y):
    """Bernstein sum with exact rationals."""
    n = len(values)
    y = Fraction(y)
    return float(sum(Fraction(values[k - 1]) * math.comb(n - 1, k - 1) * y ** (n - k) * (1 - y) ** (k - 1)
                     for k in range(1, n + 1)))


def xi_enumerate(values, pa, pb, pt):
    """Average reward of one player when each of n-1 opponents independently
    stops above (pa), below (pb) or level (pt); ties split uniformly."""
    n = len(values)
    total = 0.0
    for i in range(n):
        for j in range(n - i):
            k = n - 1 - i - j
            prob = (math.factorial(n - 1) / (math.factorial(i) * math.factorial(j) * math.factorial(k))
                    * pa ** i * pb ** j * pt ** k)
            occupied = values[i:n - j]
            total += prob * sum(occupied) / len(occupied)
    return total


def phi(n, k, l):
    f = math.factorial
    return Fraction(f(2 * n - k - l) * f(k + l - 2), f(n - l) * f(l - 1))


def rank_performance(n, k, j, x0=1.0):
    """Printed closed form evaluated with exact integers."""
    f = math.factorial
    s = sum(phi(n, k, l) for l in range(1, j + 1))
    return float(n * x0 * Fraction(f(n), f(2 * n - 1)) * math.comb(n - 1, k - 1) * s / j)


def kth_largest_mc(n, k, j, rounds, seed, x0=1.0):
    """Sample the zero-drift equilibrium for the cutoff-j vector by inverting
    the Bernstein cdf on a fine table, then average the k-th largest draw."""
    rng = np.random.default_rng(seed)
    values = np.zeros(n)
    values[:j] = 1.0 / j
    ygrid = np.linspace(0.0, 1.0, 20001)
    from scipy.stats import binom
    # g_n(y) = E[R_{1+B}], B ~ Bin(n-1, 1-y)
    pm = binom.pmf(np.arange(n)[None, :], n - 1, 1.0 - ygrid[:, None])
    g = pm @ values
    q = x0 * g / values.mean()
    u = rng.random((rounds, n))
    draws = np.interp(u, ygrid, q)
    kth = -np.sort(-draws, axis=1)[:, k - 1]
    return kth.mean(), kth.std(ddof=1) / math.sqrt(rounds)


def h_direct(x, x0, mu, sigma):
    if mu == 0:
        return x / x0
    c = 2 * mu / sigma ** 2
    return (1 - math.exp(-c * x)) / (1 - math.exp(-c * x0))


def brute_best_two_point(w, v, target=1.0):
    """max over pairs (and singletons) of the chord value at target: O(m^2)."""
    best = -math.inf
    for a, b in itertools.combinations_with_replacement(range(len(w)), 2):
        wa, wb = w[a], w[b]
        if wa == wb:
            if wa == target:
                best = max(best, v[a], v[b])
            continue
        lo, hi = (a, b) if wa < wb else (b, a)
        if w[lo] <= target <= w[hi]:
            p = (target - w[lo]) / (w[hi] - w[lo])
            best = max(best, (1 - p) * v[lo] + p * v[hi])
    return best
