"""Minimal SVG emission for proximity-target curves (no plotting dependency).

Curves are drawn as polylines with per-curve vertex markers (circles for one,
eight-point stars for the other), linear axes with a handful of ticks, and a
small legend.  The horizontal axis carries proximity; pass flip_x=True to
show it decreasing left to right (runs then progress rightward).
"""

import numpy as np

_WIDTH, _HEIGHT = 640.0, 440.0
_ML, _MR, _MT, _MB = 70.0, 20.0, 20.0, 50.0
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v):
    return f"{v:.6g}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = np.linspace(lo, hi, n)
    return [float(v) for v in raw]


def _star(cx, cy, r):
    pts = []
    for i in range(16):
        rad = r if i % 2 == 0 else 0.4 * r
        ang = np.pi * i / 8.0
        pts.append(f"{_fmt(cx + rad * np.cos(ang))},{_fmt(cy - rad * np.sin(ang))}")
    return "<polygon points=\"" + " ".join(pts) + "\""


def plot_curves(named_curves, path, flip_x=False, xlabel="proximity", ylabel="target"):
    """Write an SVG overlay of (label, vertices) pairs.

    vertices is an (n, 2) array of (proximity, target) points; they are
    connected in order and individually marked.
    """
    all_pts = np.vstack([np.asarray(v, dtype=np.float64) for _, v in named_curves])
    x_lo, x_hi = float(all_pts[:, 0].min()), float(all_pts[:, 0].max())
    y_lo, y_hi = float(all_pts[:, 1].min()), float(all_pts[:, 1].max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_x = 0.04 * (x_hi - x_lo)
    pad_y = 0.08 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    span_x = _WIDTH - _ML - _MR
    span_y = _HEIGHT - _MT - _MB

    def sx(v):
        frac = (v - x_lo) / (x_hi - x_lo)
        if flip_x:
            frac = 1.0 - frac
        return _ML + frac * span_x

    def sy(v):
        return _MT + (1.0 - (v - y_lo) / (y_hi - y_lo)) * span_y

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{_fmt(_ML)}" y1="{_fmt(_HEIGHT - _MB)}" x2="{_fmt(_WIDTH - _MR)}" '
        f'y2="{_fmt(_HEIGHT - _MB)}" stroke="black"/>',
        f'<line x1="{_fmt(_ML)}" y1="{_fmt(_MT)}" x2="{_fmt(_ML)}" '
        f'y2="{_fmt(_HEIGHT - _MB)}" stroke="black"/>',
    ]
    for v in _ticks(x_lo, x_hi):
        px = sx(v)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(_HEIGHT - _MB)}" x2="{_fmt(px)}" '
            f'y2="{_fmt(_HEIGHT - _MB + 5)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{_fmt(_HEIGHT - _MB + 18)}" font-size="11" '
            f'text-anchor="middle">{_fmt(v)}</text>'
        )
    for v in _ticks(y_lo, y_hi):
        py = sy(v)
        out.append(
            f'<line x1="{_fmt(_ML - 5)}" y1="{_fmt(py)}" x2="{_fmt(_ML)}" '
            f'y2="{_fmt(py)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(_ML - 8)}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end">{_fmt(v)}</text>'
        )
    out.append(
        f'<text x="{_fmt(_ML + span_x / 2)}" y="{_fmt(_HEIGHT - 10)}" font-size="13" '
        f'text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="16" y="{_fmt(_MT + span_y / 2)}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {_fmt(_MT + span_y / 2)})">{ylabel}</text>'
    )

    for ci, (label, vertices) in enumerate(named_curves):
        vertices = np.asarray(vertices, dtype=np.float64)
        color = _COLORS[ci % len(_COLORS)]
        pts = " ".join(f"{_fmt(sx(p))},{_fmt(sy(t))}" for p, t in vertices)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for p, t in vertices:
            if ci % 2 == 0:
                out.append(f'{_star(sx(p), sy(t), 4.5)} fill="{color}"/>')
            else:
                out.append(
                    f'<circle cx="{_fmt(sx(p))}" cy="{_fmt(sy(t))}" r="3" fill="none" '
                    f'stroke="{color}" stroke-width="1.2"/>'
                )
        ly = _MT + 16 + 16 * ci
        out.append(
            f'<line x1="{_fmt(_WIDTH - _MR - 150)}" y1="{_fmt(ly - 4)}" '
            f'x2="{_fmt(_WIDTH - _MR - 120)}" y2="{_fmt(ly - 4)}" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{_fmt(_WIDTH - _MR - 114)}" y="{_fmt(ly)}" font-size="12">{label}</text>'
        )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
