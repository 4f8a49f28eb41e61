"""Minimal SVG line plots: axes, ticks, legend and one polyline per series."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
MAX_POINTS = 4000


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def _fmt(v):
    return f"{v:.4g}"


def _thin(x, y):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).astype(int))
    return x[idx], y[idx]


def _panel(series, x0, y0, w, h, title, xlabel, ylabel, legend=True):
    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = np.concatenate([np.asarray(s.y, float) for s in series])
    xlo, xhi = float(np.min(xs)), float(np.max(xs))
    ylo, yhi = float(np.min(ys)), float(np.max(ys))
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    pad = 0.05 * (yhi - ylo) or 1.0
    ylo, yhi = ylo - pad, yhi + pad

    def px(v):
        return x0 + (v - xlo) / (xhi - xlo) * w

    def py(v):
        return y0 + h - (v - ylo) / (yhi - ylo) * h

    out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#333"/>']
    for t in _ticks(xlo, xhi):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{y0 + h}" x2="{X:.2f}" y2="{y0 + h + 5}" stroke="#333"/>')
        out.append(f'<text x="{X:.2f}" y="{y0 + h + 18}" font-size="11" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(ylo, yhi):
        Y = py(t)
        out.append(f'<line x1="{x0 - 5}" y1="{Y:.2f}" x2="{x0}" y2="{Y:.2f}" stroke="#333"/>')
        out.append(f'<text x="{x0 - 8}" y="{Y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    for i, s in enumerate(series):
        x, y = _thin(np.asarray(s.x, float), np.asarray(s.y, float))
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        if legend and s.label:
            ly = y0 + 16 + 16 * i
            out.append(f'<line x1="{x0 + w - 90}" y1="{ly - 4}" x2="{x0 + w - 70}" '
                       f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{x0 + w - 65}" y="{ly}" font-size="12">{escape(s.label)}</text>')
    out.append(f'<text x="{x0 + w / 2}" y="{y0 - 8}" font-size="13" '
               f'text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 34}" font-size="12" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    cx, cy = x0 - 48, y0 + h / 2
    out.append(f'<text x="{cx}" y="{cy}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 {cx} {cy})">{escape(ylabel)}</text>')
    return out


def _document(width, height, body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>',
                      *body, "</svg>\n"])


def line_plot(series, title="", xlabel="", ylabel="", width=760, height=420):
    """One panel holding every series."""
    body = _panel(series, 70, 40, width - 100, height - 100, title, xlabel, ylabel)
    return _document(width, height, body)


def panels(groups, titles, xlabels, ylabels, width=360, height=340):
    """Side-by-side panels, one per group of series."""
    body = []
    for i, (g, t, xl, yl) in enumerate(zip(groups, titles, xlabels, ylabels)):
        body += _panel(g, 70 + i * width, 40, width - 100, height - 100, t, xl, yl, legend=False)
    return _document(width * len(groups), height, body)


def coordinates_svg(traj, title):
    t = traj.times
    series = [Series(t, traj.samples[:, i], f"x{i + 1}") for i in range(traj.dim)]
    return line_plot(series, title, "t", "x_i(t)")


def phase_svg(traj, title):
    """Planar trajectory for two coordinates; the three coordinate-plane
    projections for three or more.  A scalar solution is shown against its
    own values a tenth of the horizon later."""
    x = traj.samples
    if traj.dim == 1:
        lag = max(1, len(x) // 10)
        return line_plot([Series(x[:-lag, 0], x[lag:, 0])], title, "x1(t)",
                         f"x1(t + {lag * traj.dt:.3g})", width=520, height=480)
    if traj.dim == 2:
        return line_plot([Series(x[:, 0], x[:, 1])], title, "x1", "x2", width=520, height=480)
    pairs = [(0, 1), (0, 2), (1, 2)]
    groups = [[Series(x[:, i], x[:, j])] for i, j in pairs]
    titles = [f"{title}: x{i + 1}-x{j + 1}" for i, j in pairs]
    return panels(groups, titles, [f"x{i + 1}" for i, _ in pairs],
                  [f"x{j + 1}" for _, j in pairs])
