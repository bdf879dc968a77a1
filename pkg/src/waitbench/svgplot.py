"""Minimal SVG emitters: similarity heatmaps and predicted-vs-actual panels.

No plotting dependency; output is plain XML with a fixed viewport.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

VIEW = 1024

# Linear ramp: similarity 0 -> light yellow, similarity 1 -> dark blue.
_LOW = (255, 255, 178)
_HIGH = (8, 48, 107)


def _ramp(v: float) -> str:
    v = min(max(float(v), 0.0), 1.0)
    r = round(_LOW[0] + (_HIGH[0] - _LOW[0]) * v)
    g = round(_LOW[1] + (_HIGH[1] - _LOW[1]) * v)
    b = round(_LOW[2] + (_HIGH[2] - _LOW[2]) * v)
    return f"rgb({r},{g},{b})"


def heatmap_svg(s: np.ndarray, labels: tuple[str, ...]) -> str:
    """n x n similarity matrix in a fixed 1024x1024 viewport with id labels
    down the left edge and a small legend strip along the bottom."""
    n = s.shape[0]
    margin = 120
    side = (VIEW - margin - 24) / n
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW}" height="{VIEW}" '
        f'viewBox="0 0 {VIEW} {VIEW}">',
        f'<rect width="{VIEW}" height="{VIEW}" fill="white"/>',
    ]
    for i in range(n):
        y = 24 + i * side
        parts.append(
            f'<text x="{margin - 8}" y="{y + side / 2 + 4:.1f}" text-anchor="end" '
            f'font-size="12" font-family="monospace">{escape(labels[i])}</text>'
        )
        for j in range(n):
            x = margin + j * side
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{side:.2f}" height="{side:.2f}" '
                f'fill="{_ramp(s[i, j])}"/>'
            )
    legend_y = VIEW - 60
    for k in range(64):
        x = margin + k * (VIEW - margin - 24) / 64
        parts.append(
            f'<rect x="{x:.2f}" y="{legend_y}" width="{(VIEW - margin - 24) / 64:.2f}" '
            f'height="18" fill="{_ramp(k / 63)}"/>'
        )
    parts.append(
        f'<text x="{margin}" y="{legend_y + 34}" font-size="12" '
        f'font-family="monospace">similarity 0</text>'
    )
    parts.append(
        f'<text x="{VIEW - 24}" y="{legend_y + 34}" text-anchor="end" font-size="12" '
        f'font-family="monospace">1</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _polyline(xs, ys, x0, y0, w, h, x_max, y_max, color, dash=None) -> str:
    if y_max <= 0:
        y_max = 1.0
    pts = []
    for x, y in zip(xs, ys):
        px = x0 + (x / max(x_max, 1)) * w
        py = y0 + h - (min(max(y, 0.0), y_max) / y_max) * h
        pts.append(f"{px:.2f},{py:.2f}")
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
        f'stroke-width="1.5"{dash_attr}/>'
    )


def panels_svg(title: str, panels: list[dict]) -> str:
    """Six-panel figure: each panel dict carries label, actual, predicted
    (lists of per-child count sequences) and a footer metrics line."""
    cols, rows = 2, 3
    W, H = 1024, 1024
    pw, ph = W // cols - 40, (H - 80) // rows - 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="28" text-anchor="middle" font-size="18" '
        f'font-family="monospace">{escape(title)}</text>',
    ]
    for idx, panel in enumerate(panels[: cols * rows]):
        r, c = divmod(idx, cols)
        x0 = 30 + c * (pw + 40)
        y0 = 60 + r * (ph + 60)
        actual = panel.get("actual", [])
        predicted = panel.get("predicted", [])
        y_max = 1.0
        x_max = 1
        for seq in list(actual) + list(predicted):
            if len(seq):
                y_max = max(y_max, max(seq))
                x_max = max(x_max, len(seq) - 1)
        parts.append(
            f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" '
            f'stroke="#888"/>'
        )
        parts.append(
            f'<text x="{x0}" y="{y0 - 8}" font-size="13" font-family="monospace">'
            f"{escape(panel['label'])}</text>"
        )
        for seq in actual:
            parts.append(
                _polyline(range(len(seq)), seq, x0, y0, pw, ph, x_max, y_max, "#1f3d7a")
            )
        for seq in predicted:
            parts.append(
                _polyline(
                    range(len(seq)), seq, x0, y0, pw, ph, x_max, y_max, "#d95f02", dash="5,3"
                )
            )
        footer = panel.get("footer", "")
        if footer:
            parts.append(
                f'<text x="{x0}" y="{y0 + ph + 16}" font-size="11" '
                f'font-family="monospace">{escape(footer)}</text>'
            )
    parts.append(
        f'<text x="30" y="{H - 16}" font-size="11" font-family="monospace">'
        f"solid: actual counts, dashed: predicted counts</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
