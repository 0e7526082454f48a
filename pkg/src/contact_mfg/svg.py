"""Minimal self-contained SVG line charts."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot", "write_plot"]

_W, _H, _PAD = 640, 400, 56


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_plot(x, y, title: str = "", stems: bool = False) -> str:
    """Render ``y`` against ``x`` as an SVG document.

    With ``stems`` every sample is drawn as a vertical bar from zero, which
    suits atomic measures.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(min(y.min(), 0.0 if stems else y.min())), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = _W - 2 * _PAD, _H - 2 * _PAD

    def px(v):
        return _PAD + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{_fmt(px(xv))}" y="{_H - _PAD + 18}" font-size="12" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{_PAD - 6}" y="{_fmt(py(yv) + 4)}" font-size="12" text-anchor="end">{yv:.3g}</text>')
    if title:
        out.append(f'<text x="{_W / 2}" y="{_PAD / 2}" font-size="14" text-anchor="middle">{escape(title)}</text>')
    if stems:
        base = py(max(y0, 0.0))
        for xv, yv in zip(x, y):
            if yv != 0.0:
                out.append(
                    f'<line x1="{_fmt(px(xv))}" y1="{_fmt(base)}" x2="{_fmt(px(xv))}" y2="{_fmt(py(yv))}" stroke="steelblue" stroke-width="2"/>'
                )
    else:
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plot(path, x, y, title: str = "", stems: bool = False) -> None:
    with open(path, "w") as fh:
        fh.write(line_plot(x, y, title, stems))
