"""Minimal static SVG scatter and line plots (deterministic bytes, no fonts embedded)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
W, H, PAD = 480, 360, 48


def _scale(v: np.ndarray, lo: float, hi: float, a: float, b: float) -> np.ndarray:
    span = hi - lo if hi > lo else 1.0
    return a + (v - lo) / span * (b - a)


def _bounds(v: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(v)), float(np.max(v))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _frame(title: str, xlabel: str, ylabel: str, xr, yr) -> list[str]:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD // 2}" width="{W - 1.5 * PAD:g}" height="{H - 1.5 * PAD:g}" '
           'fill="none" stroke="black"/>',
           f'<text x="{W / 2:g}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{W / 2:g}" y="{H - 6}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
           f'<text x="12" y="{H / 2:g}" text-anchor="middle" font-size="11" '
           f'transform="rotate(-90 12 {H / 2:g})">{escape(ylabel)}</text>']
    for lo_hi, pos in ((xr, "x"), (yr, "y")):
        for t in np.linspace(lo_hi[0], lo_hi[1], 5):
            if pos == "x":
                px = _scale(t, *xr, PAD, W - PAD / 2)
                out.append(f'<text x="{px:.1f}" y="{H - PAD + 14}" text-anchor="middle" font-size="9">{t:.3g}</text>')
            else:
                py = _scale(t, *yr, H - PAD, PAD / 2)
                out.append(f'<text x="{PAD - 4}" y="{py:.1f}" text-anchor="end" font-size="9">{t:.3g}</text>')
    return out


def _legend(labels: Sequence[str]) -> list[str]:
    out = []
    for i, lab in enumerate(labels):
        y = PAD // 2 + 14 + 14 * i
        out.append(f'<rect x="{W - PAD / 2 - 110:g}" y="{y - 8}" width="8" height="8" '
                   f'fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{W - PAD / 2 - 98:g}" y="{y}" font-size="10">{escape(lab)}</text>')
    return out


def scatter_svg(path, x, y, groups: Sequence[str], title: str = "", xlabel: str = "pc1",
                ylabel: str = "pc2") -> Path:
    x, y = np.asarray(x, float), np.asarray(y, float)
    groups = list(groups)
    xr, yr = _bounds(x), _bounds(y)
    names = sorted(set(groups))
    out = _frame(title, xlabel, ylabel, xr, yr)
    px = _scale(x, *xr, PAD, W - PAD / 2)
    py = _scale(y, *yr, H - PAD, PAD / 2)
    for i, g in enumerate(groups):
        c = PALETTE[names.index(g) % len(PALETTE)]
        out.append(f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="2.5" fill="{c}" fill-opacity="0.7"/>')
    out += _legend(names) + ["</svg>"]
    return _write(path, out)


def line_svg(path, x, series: dict[str, Sequence[float]], errors: dict[str, Sequence[float]] | None = None,
             title: str = "", xlabel: str = "", ylabel: str = "") -> Path:
    """One polyline per series, optional symmetric error bars."""
    x = np.asarray(x, float)
    errors = errors or {}
    ys = [np.asarray(v, float) for v in series.values()]
    lows = [v - np.asarray(errors.get(k, np.zeros_like(v)), float) for k, v in zip(series, ys)]
    highs = [v + np.asarray(errors.get(k, np.zeros_like(v)), float) for k, v in zip(series, ys)]
    xr, yr = _bounds(x), _bounds(np.concatenate(lows + highs))
    out = _frame(title, xlabel, ylabel, xr, yr)
    px = _scale(x, *xr, PAD, W - PAD / 2)
    for i, (name, v) in enumerate(zip(series, ys)):
        c = PALETTE[i % len(PALETTE)]
        py = _scale(v, *yr, H - PAD, PAD / 2)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        lo = _scale(lows[i], *yr, H - PAD, PAD / 2)
        hi = _scale(highs[i], *yr, H - PAD, PAD / 2)
        for a, b, l, h in zip(px, py, lo, hi):
            out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{c}"/>')
            if l != h:
                out.append(f'<line x1="{a:.2f}" y1="{l:.2f}" x2="{a:.2f}" y2="{h:.2f}" stroke="{c}"/>')
    out += _legend(list(series)) + ["</svg>"]
    return _write(path, out)


def _write(path, lines: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path
