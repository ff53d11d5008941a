"""Minimal SVG line charts for the curve subcommands."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_W, _H, _PAD = 640, 420, 60


def line_chart(x, series: dict, *, logx: bool = False, xlabel: str = "",
               ylabel: str = "") -> str:
    xs = [math.log10(v) for v in x] if logx else [float(v) for v in x]
    ys = [float(v) for col in series.values() for v in col if math.isfinite(v)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(v):
        return _PAD + (v - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="black"/>',
    ]
    for i, (name, col) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, col) if math.isfinite(b))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{_W - _PAD + 4}" y="{_PAD + 14 * (i + 1)}" font-size="10" '
                     f'fill="{color}">{escape(str(name))}</text>')
    xl = f"log10({xlabel})" if logx else xlabel
    parts.append(f'<text x="{_W / 2}" y="{_H - 15}" font-size="12" text-anchor="middle">'
                 f'{escape(xl)}</text>')
    parts.append(f'<text x="15" y="{_H / 2}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 15 {_H / 2})">{escape(ylabel)}</text>')
    for v, label in ((x0, x0), (x1, x1)):
        parts.append(f'<text x="{px(v):.1f}" y="{_H - _PAD + 14}" font-size="10" '
                     f'text-anchor="middle">{label:.3g}</text>')
    for v in (y0, y1):
        parts.append(f'<text x="{_PAD - 4}" y="{py(v):.1f}" font-size="10" '
                     f'text-anchor="end">{v:.4g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_line_chart(path, x, series: dict, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(line_chart(x, series, **kwargs))
