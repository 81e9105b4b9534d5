"""Closed-form mean field equilibrium, tie-aware payoffs and best-response verification."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distribution import Piece, StoppingDistribution
from .errors import DomainError, DriftTooLargeError
from .reward import RewardFunction
from .scale import ModelParams, feasibility_residual, mu_bar_infinity

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class EquilibriumSolution:
    cdf: StoppingDistribution
    value_function: Callable
    support_end: float
    params: ModelParams
    diagnostics: dict = field(default_factory=dict)

    def u(self, x):
        return self.value_function(x)


def _value_function(params, bottom, scale, top):
    def u(x):
        x_arr = np.asarray(x, dtype=float)
        out = np.minimum(bottom + scale * params.h(x_arr), top)
        return float(out) if x_arr.ndim == 0 else out
    return u


def _affine_g_piece(params, R, ylo, yhi, glo, ghi):
    """Atomless part of F* where g rises linearly from glo to ghi over (ylo, yhi]."""
    base, scale = R.R1, R.average_reward() - R.R1
    top_w = (R.R0 - base) / scale

    def g_lin(y):
        # convex combination so both endpoints are reproduced exactly
        t = (np.asarray(y) - ylo) / (yhi - ylo)
        return (1.0 - t) * glo + t * ghi

    def quantile(y):
        w = np.clip((g_lin(y) - base) / scale, 0.0, top_w)
        return params.h_inverse(w)

    def cdf(x):
        z = base + scale * params.h(x)
        return ylo + (z - glo) / (ghi - glo) * (yhi - ylo)

    def h_moment(ta, tb):
        return (0.5 * (g_lin(ta) + g_lin(tb)) - base) * (tb - ta) / scale

    return Piece(quantile, cdf, float(ylo), float(yhi), h_moment=h_moment, params=params, label="mf")


def mf_equilibrium(params: ModelParams, R: RewardFunction, verify: bool = False) -> EquilibriumSolution:
    """The unique mean field equilibrium F*(x) = g^{-1}(u*(x)), u* = [R(1) + (Rbar - R(1)) h] ^ R(0)."""
    threshold = mu_bar_infinity(params, R)
    if not params.mu < threshold:
        raise DriftTooLargeError(f"drift {params.mu} must be below {threshold}")
    base, top = R.R1, R.R0
    scale = R.average_reward() - base
    atoms, pieces = [], []
    for seg in R.flat_segments():
        x = params.h_inverse((seg.level - base) / scale)
        atoms.append((x, seg.length))
    ylo, yhi, glo, ghi = R.y_pieces()
    for j in range(len(ylo)):
        if ghi[j] > glo[j]:
            pieces.append(_affine_g_piece(params, R, ylo[j], yhi[j], glo[j], ghi[j]))
    dist = StoppingDistribution(atoms=atoms, pieces=pieces)
    x_end = params.h_inverse((top - base) / scale)
    sol = EquilibriumSolution(dist, _value_function(params, base, scale, top), float(x_end), params,
                              {"h_mean": dist.integrate_h(params),
                               "feasibility_residual": feasibility_residual(dist, params),
                               "mu_bar": threshold})
    if verify:
        report = verify_equilibrium(params, R, dist)
        sol.diagnostics["best_response_gap"] = report.best_response_gap
        sol.diagnostics["verified"] = report.passed
    return sol


def tie_payoff(F: StoppingDistribution, R: RewardFunction, x):
    """Expected reward for stopping at x when everyone else uses F (ties split uniformly)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("stopping level must be nonnegative")
    hi = np.clip(F.cdf(x_arr), 0.0, 1.0)
    lo = np.clip(F.cdf_left(x_arr), 0.0, 1.0)
    out = np.where(hi > lo, R.average_g(lo, np.maximum(hi, lo)), R.g(hi))
    return float(out) if x_arr.ndim == 0 else out


def payoff_against_self(F: StoppingDistribution, R: RewardFunction) -> float:
    """Exact value of the integral of xi^F against F."""
    total = 0.0
    for x, m in F.atoms:
        total += m * tie_payoff(F, R, x)
    for p in F.pieces:
        ya = float(np.clip(F.cdf(p.x_lo), 0.0, 1.0))
        yb = min(1.0, ya + p.mass)
        total += float(R.integrate_g(ya, yb))
    return total


@dataclass(frozen=True)
class ConcaveEnvelope:
    """Upper concave majorant of a finite point set; affine between vertices."""

    w: np.ndarray
    v: np.ndarray

    def __call__(self, w):
        w_arr = np.asarray(w, dtype=float)
        out = np.interp(w_arr, self.w, self.v)
        out = np.where((w_arr < self.w[0]) | (w_arr > self.w[-1]), np.nan, out)
        return float(out) if w_arr.ndim == 0 else out

    def chord(self, w: float) -> tuple[int, int]:
        """Indices of the hull vertices bracketing w (equal when w is a vertex)."""
        i = int(np.searchsorted(self.w, w, side="left"))
        if i < len(self.w) and self.w[i] == w:
            return i, i
        if i == 0 or i == len(self.w):
            raise DomainError("w outside the envelope's domain")
        return i - 1, i


def concave_envelope(w, v) -> ConcaveEnvelope:
    """Smallest concave majorant of the points (w_i, v_i); w must be nondecreasing.

    Repeated abscissae keep the largest value.
    """
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if w.shape != v.shape or w.ndim != 1 or len(w) < 2:
        raise DomainError("concave envelope needs at least two points")
    if np.any(np.diff(w) < 0):
        raise DomainError("abscissae must be nondecreasing")
    uw, start = np.unique(w, return_index=True)
    uv = np.maximum.reduceat(v, start)
    if len(uw) < 2:
        raise DomainError("concave envelope needs two distinct abscissae")
    hull: list[int] = []
    for i in range(len(uw)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or below the chord from a to i
            cross = (uw[b] - uw[a]) * (uv[i] - uv[a]) - (uv[b] - uv[a]) * (uw[i] - uw[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return ConcaveEnvelope(uw[hull], uv[hull])


def response_grid(params: ModelParams, F: StoppingDistribution, n_grid: int = 10_000,
                  extra=None, jump_levels=()) -> np.ndarray:
    """x-grid for envelope computations: uniform in h-space plus every
    breakpoint of F, both one-sided neighbours of each, and the quantiles of
    F at the given rank levels."""
    x_end = F.support_max
    w_end = float(params.h(x_end))
    if math.isfinite(params.h_sup):
        w_max = w_end + 0.5 * (params.h_sup - w_end)
    else:
        w_max = max(2.0 * w_end, w_end + 1.0, 2.0)
    w = np.linspace(0.0, w_max, n_grid)
    pts = [params.h_inverse(w), [params.x0]]
    marks = list(F.breakpoints())
    for y in jump_levels:
        marks.append(float(F.quantile(y)))
        qr = float(F.quantile_right(y))
        if math.isfinite(qr):
            marks.append(qr)
    marks = np.array(marks, dtype=float)
    pts += [marks, np.nextafter(marks, np.inf), np.nextafter(marks[marks > 0], 0.0)]
    if extra is not None:
        pts.append(np.asarray(extra, dtype=float))
    x = np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in pts])
    return np.unique(x[x >= 0])


@dataclass(frozen=True)
class BestResponse:
    value: float
    response: StoppingDistribution
    envelope: ConcaveEnvelope
    max_spacing: float
    coarse: bool


def envelope_response(params: ModelParams, x: np.ndarray, payoff: np.ndarray,
                      coarse_tol: float = 1e-2) -> BestResponse:
    """Value and maximizing one- or two-point law of a payoff curve sampled at x."""
    w = params.h(x)
    env = concave_envelope(w, payoff)
    value = float(env(1.0))
    i, j = env.chord(1.0)
    xl, xr = params.h_inverse(env.w[i]), params.h_inverse(env.w[j])
    if i == j:
        response = StoppingDistribution.dirac(float(xl))
    else:
        p = (1.0 - env.w[i]) / (env.w[j] - env.w[i])
        response = StoppingDistribution.discrete([float(xl), float(xr)], [1.0 - p, p])
    span = w[w <= env.w[j] + 1e-12]
    spacing = float(np.max(np.diff(span))) if len(span) > 1 else math.inf
    coarse = spacing > coarse_tol
    if coarse:
        warnings.warn(f"response grid spacing {spacing:.3g} in h-space exceeds {coarse_tol:g}",
                      RuntimeWarning, stacklevel=3)
    return BestResponse(value, response, env, spacing, coarse)


def best_response_value(params: ModelParams, R: RewardFunction, F: StoppingDistribution,
                        grid=None, n_grid: int = 10_000, coarse_tol: float = 1e-2) -> BestResponse:
    """Optimal stopping value against F: the concave envelope of xi^F o h^{-1} at w = 1."""
    x = response_grid(params, F, n_grid=n_grid, extra=grid, jump_levels=R.jump_set())
    return envelope_response(params, x, tie_payoff(F, R, x), coarse_tol=coarse_tol)


@dataclass(frozen=True)
class VerificationReport:
    h_mean: float
    feasibility_residual: float
    payoff: float
    best_response: float
    best_response_gap: float
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("h_mean", "feasibility_residual", "payoff", "best_response",
                 "best_response_gap", "passed", "tol")}


def verify_equilibrium(params: ModelParams, R: RewardFunction, F: StoppingDistribution,
                       tol: float = DEFAULT_TOL, n_grid: int = 10_000) -> VerificationReport:
    """Check feasibility of F and that no feasible deviation beats it by more than tol."""
    h_mean = F.integrate_h(params)
    resid = feasibility_residual(F, params)
    payoff = payoff_against_self(F, R)
    br = best_response_value(params, R, F, n_grid=n_grid)
    gap = br.value - payoff
    return VerificationReport(h_mean, resid, payoff, br.value, gap, bool(resid <= tol and gap <= tol), tol)
