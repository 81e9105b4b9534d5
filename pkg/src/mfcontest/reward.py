"""Rank reward functions R on [0, 1] and their rank-quantile transform g(y) = R(1 - y).

A reward is stored as finitely many contiguous affine pieces.  Piece ``i``
covers ``[r_lo[i], r_hi[i])`` (the last piece is closed at 1) and runs
linearly from ``v_lo[i]`` at ``r_lo[i]`` to the left limit ``v_hi[i]`` at
``r_hi[i]``.  Step pieces have ``v_lo == v_hi``.  R is therefore
right-continuous by construction and ``g`` is left-continuous.

The same pieces are kept in y-coordinates (``y = 1 - r``) so that ``g``, its
one-sided limits and its right-continuous inverse are all evaluated from piece
metadata without re-deriving breakpoints through ``1 - r`` round trips.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstantRewardError, DomainError, LeftContinuityError, RewardError

_EPS = 1e-15


def _out(arr, scalar):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class FlatSegment:
    """g is constant ``level`` on ``(y_lo, y_hi]``."""

    level: float
    y_lo: float
    y_hi: float

    @property
    def length(self) -> float:
        return self.y_hi - self.y_lo


@dataclass(frozen=True, eq=False)
class RewardFunction:
    r_lo: np.ndarray
    r_hi: np.ndarray
    v_lo: np.ndarray
    v_hi: np.ndarray
    kind: str = "mixed"
    # original JSON-level description, kept for lossless round trips
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ("r_lo", "r_hi", "v_lo", "v_hi"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._validate()
        y_lo = (1.0 - self.r_hi)[::-1].copy()
        y_hi = (1.0 - self.r_lo)[::-1].copy()
        y_lo[0], y_hi[-1] = 0.0, 1.0
        y_lo[1:] = y_hi[:-1]
        object.__setattr__(self, "_y_lo", y_lo)
        object.__setattr__(self, "_y_hi", y_hi)
        object.__setattr__(self, "_g_lo", self.v_hi[::-1].copy())
        object.__setattr__(self, "_g_hi", self.v_lo[::-1].copy())

    # -- construction -------------------------------------------------------

    def _validate(self):
        r_lo, r_hi, v_lo, v_hi = self.r_lo, self.r_hi, self.v_lo, self.v_hi
        m = len(r_lo)
        if m == 0 or not (len(r_hi) == len(v_lo) == len(v_hi) == m):
            raise RewardError("reward needs at least one piece with consistent arrays")
        if not np.all(np.isfinite(np.concatenate([r_lo, r_hi, v_lo, v_hi]))):
            raise RewardError("reward data must be finite")
        if r_lo[0] != 0.0 or r_hi[-1] != 1.0:
            raise RewardError("pieces must cover [0, 1]")
        if np.any(r_hi <= r_lo) or np.any(r_lo[1:] != r_hi[:-1]):
            raise RewardError("pieces must be contiguous with positive length")
        if np.any(v_lo < 0) or np.any(v_hi < 0):
            raise RewardError("rewards must be nonnegative")
        if np.any(v_hi > v_lo) or np.any(v_lo[1:] > v_hi[:-1]):
            raise RewardError("reward must be decreasing")
        if not v_lo[0] > v_hi[-1]:
            raise ConstantRewardError("reward must satisfy R(0) > R(1)")

    @classmethod
    def step(cls, breakpoints: Sequence[float], values: Sequence[float]) -> "RewardFunction":
        """R = values[0] on [0, b1), values[1] on [b1, b2), ..., values[-1] on [bm, 1]."""
        b = [float(x) for x in breakpoints]
        v = [float(x) for x in values]
        if len(v) != len(b) + 1:
            raise RewardError("step reward needs len(values) == len(breakpoints) + 1")
        if b and b[-1] >= 1.0:
            if b[-1] == 1.0 and v[-2] > v[-1]:
                raise LeftContinuityError("R(1-) > R(1) is not allowed: the equilibrium is not unique")
            raise RewardError("breakpoints must lie in (0, 1)")
        if b and (b[0] <= 0.0 or any(x >= y for x, y in zip(b, b[1:]))):
            raise RewardError("breakpoints must be strictly increasing in (0, 1)")
        edges = [0.0, *b, 1.0]
        return cls(edges[:-1], edges[1:], v, v, kind="step",
                   source={"kind": "step", "breakpoints": b, "values": v})

    @classmethod
    def piecewise_linear(cls, knots: Sequence[Sequence[float]]) -> "RewardFunction":
        """Linear interpolation between knots ``(r, v)``.

        A repeated ``r`` encodes a jump: the first value is the left limit,
        the second the (right-continuous) value at ``r``.
        """
        pts = [(float(r), float(v)) for r, v in knots]
        if len(pts) < 2 or pts[0][0] != 0.0 or pts[-1][0] != 1.0:
            raise RewardError("knots must start at r=0 and end at r=1")
        if pts[-2][0] == 1.0:
            if pts[-2][1] > pts[-1][1]:
                raise LeftContinuityError("R(1-) > R(1) is not allowed: the equilibrium is not unique")
            raise RewardError("repeated knot at r=1")
        if pts[1][0] == 0.0:
            raise RewardError("repeated knot at r=0")
        r_lo, r_hi, v_lo, v_hi = [], [], [], []
        jumps = False
        for (r0, a), (r1, b) in zip(pts, pts[1:]):
            if r1 < r0:
                raise RewardError("knot ranks must be nondecreasing")
            if r1 == r0:
                jumps = True
                continue
            r_lo.append(r0), r_hi.append(r1), v_lo.append(a), v_hi.append(b)
        for i in range(len(pts) - 2):
            if pts[i][0] == pts[i + 1][0] == pts[i + 2][0]:
                raise RewardError("at most two knots may share a rank")
        kind = "mixed" if jumps else "pwl"
        return cls(r_lo, r_hi, v_lo, v_hi, kind=kind,
                   source={"kind": "pwl", "knots": [list(p) for p in pts]})

    @classmethod
    def cutoff(cls, alpha: float) -> "RewardFunction":
        """The normalized cutoff reward (1/alpha) * 1_[0, alpha)."""
        if not 0.0 < alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        return cls.step([alpha], [1.0 / alpha, 0.0])

    @classmethod
    def linear(cls, top: float = 2.0, bottom: float = 0.0) -> "RewardFunction":
        return cls.piecewise_linear([(0.0, top), (1.0, bottom)])

    @classmethod
    def from_dict(cls, spec: dict) -> "RewardFunction":
        kind = spec.get("kind")
        if kind == "step":
            return cls.step(spec["breakpoints"], spec["values"])
        if kind in ("pwl", "mixed", "piecewise-linear"):
            return cls.piecewise_linear(spec["knots"])
        raise RewardError(f"unknown reward kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> "RewardFunction":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        if self.source:
            return json.loads(json.dumps(self.source))
        if self.kind == "step":
            return {"kind": "step", "breakpoints": [float(b) for b in self.r_lo[1:]],
                    "values": [float(v) for v in self.v_lo]}
        knots = []
        for i in range(len(self.r_lo)):
            knots.append([float(self.r_lo[i]), float(self.v_lo[i])])
            knots.append([float(self.r_hi[i]), float(self.v_hi[i])])
        # collapse duplicated continuous knots
        out = [knots[0]]
        for k in knots[1:]:
            if k != out[-1]:
                out.append(k)
        return {"kind": "pwl", "knots": out}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    # -- evaluation ---------------------------------------------------------

    @property
    def R0(self) -> float:
        return float(self.v_lo[0])

    @property
    def R1(self) -> float:
        return float(self.v_hi[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return self.r_lo[1:]

    def R(self, r):
        """Evaluate R, right-continuous at breakpoints."""
        r_arr = np.asarray(r, dtype=float)
        if np.any((r_arr < 0) | (r_arr > 1)) or np.any(np.isnan(r_arr)):
            raise DomainError("rank must lie in [0, 1]")
        i = np.clip(np.searchsorted(self.r_hi, r_arr, side="right"), 0, len(self.r_hi) - 1)
        return _out(self._lerp(i, r_arr, self.r_lo, self.r_hi, self.v_lo, self.v_hi), r_arr.ndim == 0)

    def R_left(self, r):
        """Left limit R(r-) (R(0) at r = 0)."""
        r_arr = np.asarray(r, dtype=float)
        if np.any((r_arr < 0) | (r_arr > 1)):
            raise DomainError("rank must lie in [0, 1]")
        i = np.clip(np.searchsorted(self.r_lo, r_arr, side="left") - 1, 0, len(self.r_lo) - 1)
        return _out(self._lerp(i, r_arr, self.r_lo, self.r_hi, self.v_lo, self.v_hi), r_arr.ndim == 0)

    @staticmethod
    def _lerp(i, x, x_lo, x_hi, f_lo, f_hi):
        a, b = x_lo[i], x_hi[i]
        fa, fb = f_lo[i], f_hi[i]
        t = np.clip((x - a) / (b - a), 0.0, 1.0)
        return np.where(fa == fb, fa, fa + (fb - fa) * t)

    def g(self, y):
        """g(y) = R(1 - y), increasing and left-continuous."""
        y_arr = np.asarray(y, dtype=float)
        if np.any((y_arr < 0) | (y_arr > 1)) or np.any(np.isnan(y_arr)):
            raise DomainError("rank quantile must lie in [0, 1]")
        j = np.clip(np.searchsorted(self._y_hi, y_arr, side="left"), 0, len(self._y_hi) - 1)
        return _out(self._lerp(j, y_arr, self._y_lo, self._y_hi, self._g_lo, self._g_hi), y_arr.ndim == 0)

    def g_left(self, y):
        """g(y-); equals g(y) by left-continuity (g(0-) := g(0))."""
        return self.g(y)

    def g_right(self, y):
        """g(y+), with the convention g(1+) = g(1) = R(0)."""
        y_arr = np.asarray(y, dtype=float)
        if np.any((y_arr < 0) | (y_arr > 1)):
            raise DomainError("rank quantile must lie in [0, 1]")
        j = np.clip(np.searchsorted(self._y_lo, y_arr, side="right") - 1, 0, len(self._y_lo) - 1)
        val = self._lerp(j, y_arr, self._y_lo, self._y_hi, self._g_lo, self._g_hi)
        val = np.where(y_arr >= 1.0, self.R0, val)
        return _out(val, y_arr.ndim == 0)

    def g_inverse(self, z):
        """Right-continuous inverse inf{y : g(y) > z}, with g^{-1}(R(0)) = 1."""
        z_arr = np.asarray(z, dtype=float)
        lo, hi = self.R1, self.R0
        if np.any((z_arr < lo) | (z_arr > hi)) or np.any(np.isnan(z_arr)):
            raise DomainError(f"z must lie in [R(1), R(0)] = [{lo}, {hi}]")
        j = np.clip(np.searchsorted(self._g_hi, z_arr, side="right"), 0, len(self._g_hi) - 1)
        ylo, yhi = self._y_lo[j], self._y_hi[j]
        glo, ghi = self._g_lo[j], self._g_hi[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = ylo + (z_arr - glo) / (ghi - glo) * (yhi - ylo)
        y = np.where(glo > z_arr, ylo, np.clip(inner, ylo, yhi))
        y = np.where(z_arr >= hi, 1.0, y)
        return _out(y, z_arr.ndim == 0)

    # -- integrals and structure --------------------------------------------

    def integrate_g(self, y1, y2):
        """Exact integral of g over [y1, y2] (vectorized, y1 <= y2)."""
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        scalar = y1.ndim == 0 and y2.ndim == 0
        y1, y2 = np.broadcast_arrays(np.atleast_1d(y1), np.atleast_1d(y2))
        a = np.clip(y1[..., None], self._y_lo, self._y_hi)
        b = np.clip(y2[..., None], self._y_lo, self._y_hi)
        width = self._y_hi - self._y_lo
        slope = (self._g_hi - self._g_lo) / width
        fa = self._g_lo + slope * (a - self._y_lo)
        fb = self._g_lo + slope * (b - self._y_lo)
        total = np.sum(0.5 * (fa + fb) * (b - a), axis=-1)
        return _out(total.reshape(y1.shape) if not scalar else total[0], scalar)

    def average_g(self, y1, y2):
        """Mean of g over [y1, y2]; g(y2) when the interval is degenerate."""
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        width = y2 - y1
        with np.errstate(divide="ignore", invalid="ignore"):
            avg = np.where(width > 0, self.integrate_g(y1, y2) / np.where(width > 0, width, 1.0), self.g(y2))
        return _out(avg, avg.ndim == 0)

    def average_reward(self) -> float:
        """R-bar, the integral of R over [0, 1]."""
        return float(np.sum(0.5 * (self.v_lo + self.v_hi) * (self.r_hi - self.r_lo)))

    @property
    def Rbar(self) -> float:
        return self.average_reward()

    def jump_set(self) -> list[float]:
        """Interior jump points of g, sorted increasingly."""
        idx = np.nonzero(self._g_hi[:-1] < self._g_lo[1:])[0]
        return [float(self._y_hi[i]) for i in idx]

    def flat_segments(self) -> list[FlatSegment]:
        segs: list[FlatSegment] = []
        for j in range(len(self._y_lo)):
            if self._g_lo[j] != self._g_hi[j]:
                continue
            level = float(self._g_lo[j])
            if segs and segs[-1].level == level and segs[-1].y_hi == self._y_lo[j]:
                segs[-1] = FlatSegment(level, segs[-1].y_lo, float(self._y_hi[j]))
            else:
                segs.append(FlatSegment(level, float(self._y_lo[j]), float(self._y_hi[j])))
        return segs

    def is_continuous(self) -> bool:
        return not self.jump_set()

    def y_pieces(self):
        """(y_lo, y_hi, g_lo, g_hi) arrays of the pieces of g in increasing y."""
        return self._y_lo, self._y_hi, self._g_lo, self._g_hi

    def normalize(self) -> "RewardFunction":
        """Affine rescaling with R(1) = 0 and mean 1; the equilibrium is unchanged."""
        base = self.R1
        scale = self.average_reward() - base
        if scale <= 0:
            raise ConstantRewardError("cannot normalize a constant reward")
        # subtract first so the bottom level maps to exactly zero
        return RewardFunction(self.r_lo, self.r_hi, (self.v_lo - base) / scale,
                              (self.v_hi - base) / scale, kind=self.kind)

    def affine(self, a: float, b: float) -> "RewardFunction":
        """Return a*R + b (a > 0)."""
        if a <= 0:
            raise RewardError("affine scale must be positive")
        new = RewardFunction(self.r_lo, self.r_hi, a * self.v_lo + b, a * self.v_hi + b, kind=self.kind)
        return new

    def __eq__(self, other):
        if not isinstance(other, RewardFunction):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("r_lo", "r_hi", "v_lo", "v_hi"))

    def __hash__(self):
        return hash((self.r_lo.tobytes(), self.v_lo.tobytes(), self.v_hi.tobytes()))
