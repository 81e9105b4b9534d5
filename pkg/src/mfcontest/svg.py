"""Minimal static SVG charts (axes, ticks, polylines, markers)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#34495e")


@dataclass
class PlotSpec:
    x: str
    y: Sequence[str]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    mode: str = "line"  # line | scatter | both
    width: int = 640
    height: int = 420
    labels: Sequence[str] = field(default_factory=tuple)


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 8)
        return [float(t) for t in range(a, b + 1, step)]
    span = hi - lo
    raw = span / 6 if span > 0 else 1.0
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v, log):
    if log:
        return f"1e{int(v)}" if abs(v) >= 3 else f"{10 ** v:g}"
    return f"{v:.6g}"


def render(columns: dict, spec: PlotSpec) -> str:
    """SVG document for the named columns of a table."""
    x = np.asarray(columns[spec.x], dtype=float)
    ys = [np.asarray(columns[c], dtype=float) for c in spec.y]
    tx = np.log10(x) if spec.logx else x
    tys = [np.log10(np.where(y > 0, y, np.nan)) if spec.logy else y for y in ys]
    allx = tx[np.isfinite(tx)]
    ally = np.concatenate([t[np.isfinite(t)] for t in tys]) if tys else np.array([0.0])
    if allx.size == 0 or ally.size == 0:
        raise ValueError("nothing finite to plot")
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    W, H = spec.width, spec.height
    L, Rm, T, B = 70, 20, 40 if spec.title else 20, 50

    def px(v):
        return L + (v - x0) / (x1 - x0) * (W - L - Rm)

    def py(v):
        return H - B - (v - y0) / (y1 - y0) * (H - T - B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>']
    if spec.title:
        out.append(f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
                   f'{escape(spec.title)}</text>')
    out.append(f'<line x1="{L}" y1="{H - B}" x2="{W - Rm}" y2="{H - B}" stroke="black"/>')
    out.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>')
    for t in _ticks(x0, x1, spec.logx):
        if x0 <= t <= x1:
            p = px(t)
            out.append(f'<line x1="{p:.2f}" y1="{H - B}" x2="{p:.2f}" y2="{H - B + 5}" stroke="black"/>')
            out.append(f'<text x="{p:.2f}" y="{H - B + 18}" text-anchor="middle">{_fmt(t, spec.logx)}</text>')
    for t in _ticks(y0, y1, spec.logy):
        if y0 <= t <= y1:
            p = py(t)
            out.append(f'<line x1="{L - 5}" y1="{p:.2f}" x2="{L}" y2="{p:.2f}" stroke="black"/>')
            out.append(f'<text x="{L - 8}" y="{p + 4:.2f}" text-anchor="end">{_fmt(t, spec.logy)}</text>')
    if spec.xlabel:
        out.append(f'<text x="{(L + W - Rm) / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(spec.xlabel)}</text>')
    if spec.ylabel:
        out.append(f'<text x="16" y="{(T + H - B) / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {(T + H - B) / 2:.1f})">{escape(spec.ylabel)}</text>')
    labels = list(spec.labels) or list(spec.y)
    for i, ty in enumerate(tys):
        color = PALETTE[i % len(PALETTE)]
        ok = np.isfinite(tx) & np.isfinite(ty)
        pts = [(px(a), py(b)) for a, b in zip(tx[ok], ty[ok])]
        if spec.mode in ("line", "both") and len(pts) > 1:
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if spec.mode in ("scatter", "both"):
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{color}"/>' for a, b in pts)
        ly = T + 14 * (i + 1)
        out.append(f'<rect x="{W - Rm - 150}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{W - Rm - 135}" y="{ly + 1}">{escape(labels[i])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
