"""Stopping distributions on [0, inf): finitely many atoms plus continuous monotone pieces."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DistributionError, DivergentIntegralError

MASS_TOL = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _vec(fn, t):
    t_arr = np.asarray(t, dtype=float)
    out = np.asarray(fn(t_arr), dtype=float)
    return float(out) if t_arr.ndim == 0 else out


@dataclass(frozen=True)
class Piece:
    """Atomless mass on [x_lo, x_hi] parametrized by t in [t_lo, t_hi].

    ``quantile`` maps t to x (continuous, strictly increasing) and ``cdf`` is
    its inverse.  The mass is ``weight * (t_hi - t_lo)``.  ``h_moment``, when
    given, returns the exact integral of h(quantile(t)) dt over a t-range for
    the model parameters ``params``.
    """

    quantile: Callable
    cdf: Callable
    t_lo: float
    t_hi: float
    weight: float = 1.0
    h_moment: Optional[Callable] = None
    params: object = None
    label: str = ""

    def __post_init__(self):
        if not self.t_hi > self.t_lo:
            raise DistributionError("piece needs t_hi > t_lo")
        if not self.weight > 0:
            raise DistributionError("piece weight must be positive")
        object.__setattr__(self, "x_lo", float(self.quantile(np.float64(self.t_lo))))
        object.__setattr__(self, "x_hi", float(self.quantile(np.float64(self.t_hi))))
        if not (self.x_lo >= 0 and self.x_hi >= self.x_lo):
            raise DistributionError("piece support must lie in [0, inf) and be increasing")

    @property
    def mass(self) -> float:
        return self.weight * (self.t_hi - self.t_lo)

    def local_t(self, x):
        """t-coordinate of x, clipped to the piece."""
        x_arr = np.asarray(x, dtype=float)
        inside = np.clip(x_arr, self.x_lo, self.x_hi)
        t = np.asarray(self.cdf(inside), dtype=float)
        t = np.clip(t, self.t_lo, self.t_hi)
        t = np.where(x_arr <= self.x_lo, self.t_lo, t)
        t = np.where(x_arr >= self.x_hi, self.t_hi, t)
        return t

    def mass_below(self, x):
        return self.weight * (self.local_t(x) - self.t_lo)

    def restrict(self, x_a: float, x_b: float) -> Optional["Piece"]:
        """The part of the piece on [x_a, x_b], or None if it has no mass."""
        ta = float(self.local_t(x_a))
        tb = float(self.local_t(x_b))
        if tb <= ta:
            return None
        return replace(self, t_lo=ta, t_hi=tb)

    def scaled(self, factor: float) -> "Piece":
        return replace(self, weight=self.weight * factor)

    def integrate(self, fn, panels: int = 64) -> float:
        """Composite Gauss-Legendre quadrature of fn(x) against the piece."""
        edges = np.linspace(self.t_lo, self.t_hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        t = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        vals = np.asarray(fn(np.asarray(self.quantile(t), dtype=float)), dtype=float)
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        return self.weight * float(np.dot(w, vals))

    def integrate_h(self, params) -> float:
        if self.h_moment is not None and self.params == params:
            return self.weight * float(self.h_moment(self.t_lo, self.t_hi))
        coarse = self.integrate(params.h, panels=128)
        fine = self.integrate(params.h, panels=256)
        if not (math.isfinite(fine) and abs(fine - coarse) <= 1e-6 * max(1.0, abs(fine))):
            raise DivergentIntegralError("h-integral of a piece does not converge under refinement")
        return fine


class StoppingDistribution:
    """A law on [0, inf) built from atoms and non-overlapping continuous pieces.

    Exposes the right-continuous cdf, its left limit, both generalized
    inverses, integrals and inverse-cdf sampling.  With ``check_mass=False``
    the object represents a sub-probability measure (used for the pieces of
    a deviation).
    """

    def __init__(self, atoms: Sequence[tuple[float, float]] = (), pieces: Sequence[Piece] = (),
                 check_mass: bool = True):
        merged: dict[float, float] = {}
        for x, m in atoms:
            x, m = float(x), float(m)
            if not (x >= 0 and math.isfinite(x)):
                raise DistributionError("atoms must lie in [0, inf)")
            if m < 0:
                raise DistributionError("atom masses must be nonnegative")
            if m > 0:
                merged[x] = merged.get(x, 0.0) + m
        ax = np.array(sorted(merged), dtype=float)
        am = np.array([merged[x] for x in ax], dtype=float)
        pcs = sorted(pieces, key=lambda p: (p.x_lo, p.x_hi))
        for p, q in zip(pcs, pcs[1:]):
            if q.x_lo < p.x_hi:
                raise DistributionError("continuous pieces overlap")
        for x in ax:
            for p in pcs:
                if p.x_lo < x < p.x_hi:
                    raise DistributionError("atom strictly inside a continuous piece")
        self.atom_x = ax
        self.atom_m = am
        self.pieces = tuple(pcs)
        self.total_mass = float(am.sum() + sum(p.mass for p in pcs))
        if check_mass and abs(self.total_mass - 1.0) > MASS_TOL * 10:
            raise DistributionError(f"total mass {self.total_mass!r} != 1")
        self._build_components()

    # -- constructors -------------------------------------------------------

    @classmethod
    def dirac(cls, x: float) -> "StoppingDistribution":
        return cls(atoms=[(x, 1.0)])

    @classmethod
    def discrete(cls, xs, masses) -> "StoppingDistribution":
        return cls(atoms=list(zip(xs, masses)))

    @classmethod
    def uniform(cls, a: float, b: float, mass: float = 1.0) -> "StoppingDistribution":
        if not b > a >= 0:
            raise DistributionError("uniform needs 0 <= a < b")
        piece = Piece(lambda t: a + (b - a) * np.asarray(t), lambda x: (np.asarray(x) - a) / (b - a),
                      0.0, 1.0, weight=mass, label="uniform")
        return cls(pieces=[piece], check_mass=mass == 1.0)

    @classmethod
    def from_cdf_grid(cls, x, F, atoms=()) -> "StoppingDistribution":
        """Continuous piece interpolating a strictly increasing cdf table."""
        x = np.asarray(x, dtype=float)
        F = np.asarray(F, dtype=float)
        if x.shape != F.shape or x.ndim != 1 or len(x) < 2:
            raise DistributionError("grid needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(F) <= 0):
            raise DistributionError("grid must be strictly increasing in x and F")
        piece = Piece(lambda t: np.interp(t, F, x), lambda s: np.interp(s, x, F),
                      float(F[0]), float(F[-1]), label="grid")
        return cls(atoms=atoms, pieces=[piece])

    @classmethod
    def tabulate(cls, cdf: Callable, x_lo: float, x_hi: float, points: int = 4096, atoms=()):
        """Grid piece for a continuous cdf, with nodes clustered at both support ends."""
        s = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, points))
        x = x_lo + (x_hi - x_lo) * s
        F = np.asarray(cdf(x), dtype=float)
        keep = np.concatenate([[True], np.diff(F) > 0])
        return cls.from_cdf_grid(x[keep], F[keep], atoms=atoms)

    # -- internal layout ----------------------------------------------------

    def _build_components(self):
        comps = [(float(x), float(x), float(m), None) for x, m in zip(self.atom_x, self.atom_m)]
        comps += [(p.x_lo, p.x_hi, p.mass, p) for p in self.pieces]
        comps.sort(key=lambda c: (c[0], c[1]))
        self._comps = comps
        masses = np.array([c[2] for c in comps], dtype=float)
        self._cum = np.cumsum(masses) if len(masses) else np.zeros(0)
        if len(self._cum):
            self._cum[-1] = self.total_mass

    # -- basic queries ------------------------------------------------------

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(x), float(m)) for x, m in zip(self.atom_x, self.atom_m)]

    @property
    def support_min(self) -> float:
        return self._comps[0][0]

    @property
    def support_max(self) -> float:
        return max(c[1] for c in self._comps)

    def breakpoints(self) -> np.ndarray:
        """Atom locations and piece endpoints."""
        pts = [c[0] for c in self._comps] + [c[1] for c in self._comps]
        return np.unique(np.array(pts, dtype=float))

    def support_gaps(self) -> list[tuple[float, float]]:
        """Open intervals between consecutive support components."""
        gaps = []
        right = self._comps[0][1]
        for lo, hi, _, _ in self._comps[1:]:
            if lo > right:
                gaps.append((right, lo))
            right = max(right, hi)
        return gaps

    def _cdf(self, x, strict: bool):
        x_arr = np.asarray(x, dtype=float)
        if strict:
            out = np.searchsorted(self.atom_x, x_arr, side="left")
        else:
            out = np.searchsorted(self.atom_x, x_arr, side="right")
        cm = np.concatenate([[0.0], np.cumsum(self.atom_m)])
        total = cm[out]
        for p in self.pieces:
            total = total + p.mass_below(x_arr)
        total = np.minimum(total, self.total_mass)
        return float(total) if x_arr.ndim == 0 else total

    def cdf(self, x):
        """F(x) = mass of [0, x]."""
        return self._cdf(x, strict=False)

    def cdf_left(self, x):
        """F(x-) = mass of [0, x)."""
        return self._cdf(x, strict=True)

    def atom_mass(self, x):
        x_arr = np.asarray(x, dtype=float)
        i = np.searchsorted(self.atom_x, x_arr)
        i_c = np.clip(i, 0, max(len(self.atom_x) - 1, 0))
        if len(self.atom_x) == 0:
            out = np.zeros_like(x_arr)
        else:
            out = np.where(self.atom_x[i_c] == x_arr, self.atom_m[i_c], 0.0)
        return float(out) if x_arr.ndim == 0 else out

    def _invert(self, y, right: bool):
        y_arr = np.asarray(y, dtype=float)
        side = "right" if right else "left"
        k = np.searchsorted(self._cum, y_arr, side=side)
        out = np.full(y_arr.shape, np.inf)
        k_c = np.clip(k, 0, len(self._comps) - 1)
        before = np.where(k_c > 0, self._cum[np.maximum(k_c - 1, 0)], 0.0)
        for idx in np.unique(k_c):
            sel = (k_c == idx) & (k < len(self._comps))
            if not np.any(sel):
                continue
            lo, hi, mass, piece = self._comps[idx]
            if piece is None:
                out[sel] = lo
            else:
                t = piece.t_lo + (y_arr[sel] - before[sel]) / piece.weight
                t = np.clip(t, piece.t_lo, piece.t_hi)
                out[sel] = np.asarray(piece.quantile(t), dtype=float)
        if not right:
            out = np.where(y_arr <= 0, 0.0, out)
        return float(out) if y_arr.ndim == 0 else out

    def quantile(self, y):
        """Left-continuous inverse inf{x >= 0 : F(x) >= y}."""
        return self._invert(y, right=False)

    def quantile_right(self, y):
        """Right-continuous inverse inf{x >= 0 : F(x) > y} (inf for y >= 1)."""
        return self._invert(y, right=True)

    def sample(self, rng: np.random.Generator, size=None):
        u = 1.0 - rng.random(size)  # (0, 1]
        return self.quantile(u * self.total_mass)

    # -- integrals ----------------------------------------------------------

    def integrate(self, fn, panels: int = 64) -> float:
        """Integral of fn against the measure (quadrature on pieces)."""
        total = 0.0
        if len(self.atom_x):
            total += float(np.dot(self.atom_m, np.asarray(fn(self.atom_x), dtype=float)))
        for p in self.pieces:
            total += p.integrate(fn, panels=panels)
        return total

    def integrate_h(self, params) -> float:
        """h-mean: exact on atoms and closed-form pieces, quadrature on grid pieces."""
        total = 0.0
        if len(self.atom_x):
            total += float(np.dot(self.atom_m, params.h(self.atom_x)))
        for p in self.pieces:
            if not math.isfinite(p.x_hi):
                raise DivergentIntegralError("piece with unbounded support")
            total += p.integrate_h(params)
        if not math.isfinite(total):
            raise DivergentIntegralError("h-integral diverges")
        return total

    def mass_in(self, lo: float, hi: float, lo_closed: bool = True, hi_closed: bool = True) -> float:
        """Mass of the interval between lo and hi with the given endpoint conventions."""
        upper = self.cdf(hi) if hi_closed else self.cdf_left(hi)
        lower = self.cdf_left(lo) if lo_closed else self.cdf(lo)
        return max(0.0, float(upper - lower))

    # -- transformations ----------------------------------------------------

    def reweighted(self, intervals, extra_atoms=(), check_mass: bool = True) -> "StoppingDistribution":
        """Multiply the measure by a piecewise-constant factor and add atoms.

        ``intervals`` is a list of ``(lo, hi, lo_closed, hi_closed, factor)``
        with disjoint intervals; outside them the factor is 1.
        """

        def factor_at(x):
            for lo, hi, lc, hc, f in intervals:
                if (x > lo or (lc and x == lo)) and (x < hi or (hc and x == hi)):
                    return f
            return 1.0

        atoms = [(x, m * factor_at(x)) for x, m in self.atoms]
        cuts = sorted({c for lo, hi, *_ in intervals for c in (lo, hi) if math.isfinite(c)})
        pieces = []
        for p in self.pieces:
            edges = [p.x_lo] + [c for c in cuts if p.x_lo < c < p.x_hi] + [p.x_hi]
            for a, b in zip(edges, edges[1:]):
                sub = p.restrict(a, b)
                if sub is None:
                    continue
                f = factor_at(0.5 * (a + b))
                if f > 0:
                    pieces.append(sub.scaled(f) if f != 1.0 else sub)
        atoms = [(x, m) for x, m in atoms if m > 0] + list(extra_atoms)
        return StoppingDistribution(atoms=atoms, pieces=pieces, check_mass=check_mass)

    def __repr__(self):
        return (f"StoppingDistribution(atoms={self.atoms!r}, "
                f"pieces={[(p.label, p.x_lo, p.x_hi, p.mass) for p in self.pieces]!r})")
