"""Minimal polyline/marker SVG charts (no plotting library involved)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "Marker", "chart", "PALETTE"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")

W, H = 720, 480
ML, MR, MT, MB = 70, 150, 40, 55


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str = PALETTE[0]
    dash: str = ""
    width: float = 1.6


@dataclass
class Marker:
    x: float
    y: float
    label: str = ""
    color: str = "#000000"
    shape: str = "circle"   # circle | square | triangle


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if abs(v) < 1e4 else f"{v:.3g}"


def chart(series: list[Series], *, title: str = "", xlabel: str = "", ylabel: str = "",
          markers: list[Marker] | None = None, xlim=None, ylim=None) -> str:
    """Render a line chart as an SVG document string (deterministic output)."""
    markers = markers or []
    xs = [np.asarray(s.x, float) for s in series] + [np.array([m.x for m in markers])]
    ys = [np.asarray(s.y, float) for s in series] + [np.array([m.y for m in markers])]
    allx = np.concatenate([v[np.isfinite(v)] for v in xs]) if xs else np.array([0.0, 1.0])
    ally = np.concatenate([v[np.isfinite(v)] for v in ys]) if ys else np.array([0.0, 1.0])
    x0, x1 = xlim or (float(allx.min(initial=0.0)), float(allx.max(initial=1.0)))
    y0, y1 = ylim or (float(ally.min(initial=0.0)), float(ally.max(initial=1.0)))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - ML - MR, H - MT - MB

    def px(x):
        return ML + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MT + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
        f'<defs><clipPath id="plot"><rect x="{ML}" y="{MT}" width="{pw}" height="{ph}"/></clipPath></defs>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{MT}" x2="{X:.2f}" y2="{MT + ph}" stroke="#eeeeee"/>')
        out.append(f'<text x="{X:.2f}" y="{MT + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{ML}" y1="{Y:.2f}" x2="{ML + pw}" y2="{Y:.2f}" stroke="#eeeeee"/>')
        out.append(f'<text x="{ML - 6}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>')

    for s in series:
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        # break polylines at gaps so masked segments are not bridged
        runs = np.split(np.arange(x.size), np.nonzero(~ok)[0])
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        for run in runs:
            run = run[ok[run]]
            if run.size < 2:
                continue
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[run], y[run]))
            out.append(f'<polyline clip-path="url(#plot)" fill="none" stroke="{s.color}" '
                       f'stroke-width="{s.width}"{dash} points="{pts}"/>')
    for m in markers:
        X, Y = px(m.x), py(m.y)
        if m.shape == "square":
            out.append(f'<rect x="{X - 4:.2f}" y="{Y - 4:.2f}" width="8" height="8" fill="{m.color}"/>')
        elif m.shape == "triangle":
            out.append(f'<polygon points="{X:.2f},{Y - 5:.2f} {X - 5:.2f},{Y + 4:.2f} '
                       f'{X + 5:.2f},{Y + 4:.2f}" fill="{m.color}"/>')
        else:
            out.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="4" fill="{m.color}"/>')

    legend = [(s.label, s.color) for s in series if s.label]
    seen = set()
    for m in markers:
        if m.label and m.label not in seen:
            seen.add(m.label)
            legend.append((m.label, m.color))
    for i, (lab, col) in enumerate(dict.fromkeys(legend)):
        Y = MT + 14 + 18 * i
        out.append(f'<line x1="{ML + pw + 10}" y1="{Y - 4}" x2="{ML + pw + 28}" y2="{Y - 4}" '
                   f'stroke="{col}" stroke-width="3"/>')
        out.append(f'<text x="{ML + pw + 34}" y="{Y}">{escape(lab)}</text>')
    if title:
        out.append(f'<text x="{ML + pw / 2:.1f}" y="{MT - 14}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{MT + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {MT + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
