"""Minimal self-contained SVG charts.

No plotting dependency and no external assets: every chart is one SVG
string with inline styling, so outputs diff cleanly in version control
and render anywhere. Three shapes cover the reporting needs: bars per
zone, the floor plan shaded by a per-zone value, and a two-axis hourly
line chart for traffic against a pollutant.
"""

from __future__ import annotations

from typing import Sequence

from .core import Deployment

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def svg_bar_chart(
    labels: Sequence[str],
    values: Sequence[float],
    title: str,
    width: int = 800,
    height: int = 360,
) -> str:
    if len(labels) != len(values):
        raise ValueError("labels and values must have equal length")
    left, right, top, bottom = 50, 15, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    vmax = max(max(values, default=0.0), 1e-12)
    n = max(len(values), 1)
    slot = plot_w / n
    bar_w = slot * 0.7

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" {_FONT} font-size="16">{_esc(title)}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h * (1 - frac)
        parts.append(
            f'<line x1="{left}" y1="{_fmt(y)}" x2="{width - right}" y2="{_fmt(y)}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 6}" y="{_fmt(y + 4)}" text-anchor="end" {_FONT} '
            f'font-size="11" fill="#555">{_fmt(vmax * frac)}</text>'
        )
    for i, (label, v) in enumerate(zip(labels, values)):
        h = plot_h * (v / vmax)
        x = left + i * slot + (slot - bar_w) / 2
        y = top + plot_h - h
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w)}" height="{_fmt(h)}" '
            f'fill="#4878a8"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{height - bottom + 16}" text-anchor="middle" '
            f'{_FONT} font-size="11" fill="#333">{_esc(str(label))}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _shade(frac: float) -> str:
    """White to deep blue."""
    frac = min(max(frac, 0.0), 1.0)
    r = round(255 + (40 - 255) * frac)
    g = round(255 + (90 - 255) * frac)
    b = round(255 + (150 - 255) * frac)
    return f"rgb({r},{g},{b})"


def svg_zone_map(
    deployment: Deployment,
    values: dict[int, float],
    title: str,
    width: int = 800,
) -> str:
    """Floor plan with zones shaded by value (white = low)."""
    x_max = max(z.x_max for z in deployment.zones)
    y_max = max(z.y_max for z in deployment.zones)
    top, pad = 40, 20
    scale = (width - 2 * pad) / x_max
    height = int(top + y_max * scale + pad)
    vmax = max(max(values.values(), default=0.0), 1e-12)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" {_FONT} font-size="16">{_esc(title)}</text>',
    ]
    for z in deployment.zones:
        x = pad + z.x_min * scale
        # flip y so the plan reads with y up
        y = top + (y_max - z.y_max) * scale
        w = (z.x_max - z.x_min) * scale
        h = (z.y_max - z.y_min) * scale
        v = values.get(z.id, 0.0)
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="{_shade(v / vmax)}" stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + w / 2)}" y="{_fmt(y + h / 2 - 2)}" text-anchor="middle" '
            f'{_FONT} font-size="12" fill="#222">{z.id}</text>'
        )
        parts.append(
            f'<text x="{_fmt(x + w / 2)}" y="{_fmt(y + h / 2 + 12)}" text-anchor="middle" '
            f'{_FONT} font-size="10" fill="#444">{_fmt(v)}</text>'
        )
    for g in deployment.gateways:
        gx, gy = pad + g.x * scale, top + (y_max - g.y) * scale
        parts.append(f'<circle cx="{_fmt(gx)}" cy="{_fmt(gy)}" r="4" fill="#c0392b"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_dual_line(
    x_labels: Sequence[str],
    left_name: str,
    left_values: Sequence[float],
    right_name: str,
    right_values: Sequence[float],
    title: str,
    width: int = 800,
    height: int = 360,
) -> str:
    """Two series on independent scales over a shared x axis."""
    if not (len(x_labels) == len(left_values) == len(right_values)):
        raise ValueError("x_labels and both series must have equal length")
    left, right, top, bottom = 55, 55, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    n = max(len(x_labels), 1)

    def poly(values: Sequence[float], vmax: float) -> str:
        pts = []
        for i, v in enumerate(values):
            x = left + (plot_w * i / max(n - 1, 1))
            y = top + plot_h * (1 - v / vmax)
            pts.append(f"{_fmt(x)},{_fmt(y)}")
        return " ".join(pts)

    lmax = max(max(left_values, default=0.0), 1e-12)
    rmax = max(max(right_values, default=0.0), 1e-12)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" {_FONT} font-size="16">{_esc(title)}</text>',
        f'<polyline points="{poly(left_values, lmax)}" fill="none" stroke="#4878a8" stroke-width="2"/>',
        f'<polyline points="{poly(right_values, rmax)}" fill="none" stroke="#c0392b" stroke-width="2" '
        f'stroke-dasharray="6,3"/>',
        f'<text x="{left}" y="{top - 8}" {_FONT} font-size="12" fill="#4878a8">{_esc(left_name)}</text>',
        f'<text x="{width - right}" y="{top - 8}" text-anchor="end" {_FONT} font-size="12" '
        f'fill="#c0392b">{_esc(right_name)}</text>',
        f'<text x="{left - 8}" y="{top + 4}" text-anchor="end" {_FONT} font-size="11" '
        f'fill="#4878a8">{_fmt(lmax)}</text>',
        f'<text x="{width - right + 8}" y="{top + 4}" {_FONT} font-size="11" '
        f'fill="#c0392b">{_fmt(rmax)}</text>',
    ]
    step = max(1, n // 12)
    for i in range(0, n, step):
        x = left + (plot_w * i / max(n - 1, 1))
        parts.append(
            f'<text x="{_fmt(x)}" y="{height - bottom + 16}" text-anchor="middle" {_FONT} '
            f'font-size="10" fill="#333">{_esc(str(x_labels[i]))}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
