"""Hand-rolled SVG 1.1 line chart for sweep results."""

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 50, 190, 30, 50

# column, legend label, colour, dash pattern
SERIES = (
    ("alpha1_ts", "alpha1 T->S", "#000000", None),
    ("alpha1_st", "alpha1 S->T", "#000000", "2,3"),
    ("alpha2_ts", "alpha2 T->S", "#1a9641", None),
    ("alpha2_st", "alpha2 S->T", "#1a9641", "2,3"),
    ("grad_match", "gradient matching", "#d7191c", None),
    ("knowledge_dist", "knowledge transfer", "#2b83ba", None),
)


def _scale(values: np.ndarray) -> np.ndarray:
    # each series gets its own [min, max]; a flat series sits mid-height
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-15 * max(1.0, abs(hi)):
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)


def render_svg(rows: list[dict]) -> str:
    if len(rows) < 2:
        raise ValueError("need at least two sweep rows to draw a chart")
    t = np.array([r["t"] for r in rows], dtype=np.float64)
    t_lo, t_hi = float(t.min()), float(t.max())
    span = t_hi - t_lo if t_hi > t_lo else 1.0
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    xs = LEFT + (t - t_lo) / span * plot_w

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#888888" stroke-width="1"/>',
        f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 15}" font-family="sans-serif" '
        'font-size="12" text-anchor="middle">t (perturbation scale)</text>',
        f'<text x="{LEFT}" y="{TOP + plot_h + 16}" font-family="sans-serif" font-size="10" '
        f'text-anchor="middle">{t_lo:g}</text>',
        f'<text x="{LEFT + plot_w}" y="{TOP + plot_h + 16}" font-family="sans-serif" '
        f'font-size="10" text-anchor="middle">{t_hi:g}</text>',
    ]
    for idx, (col, label, colour, dash) in enumerate(SERIES):
        vals = np.array([r[col] for r in rows], dtype=np.float64)
        ys = TOP + (1.0 - _scale(vals)) * plot_h
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(
            f'<polyline id="{col}" points="{pts}" fill="none" stroke="{colour}" '
            f'stroke-width="1.5"{dash_attr}/>'
        )
        ly = TOP + 14 + 20 * idx
        lx = WIDTH - RIGHT + 15
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{colour}" '
            f'stroke-width="1.5"{dash_attr}/>'
        )
        out.append(
            f'<text x="{lx + 32}" y="{ly + 4}" font-family="sans-serif" font-size="11">'
            f"{escape(label)}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(rows: list[dict], path) -> None:
    Path(path).write_text(render_svg(rows))
