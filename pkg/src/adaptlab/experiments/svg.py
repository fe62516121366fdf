"""Minimal deterministic SVG line plots.

The output depends only on the inputs: fixed canvas, fixed palette, and
coordinates printed with a fixed number of decimals.
"""

import numpy as np

WIDTH, HEIGHT = 960, 540
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 200, 30, 60
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
TICKS = 5

def _escape(text):
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")

def _range(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if lo == hi:
        pad = 0.5 if lo == 0 else 0.5 * abs(lo)
        return lo - pad, hi + pad
    return lo, hi

def line_plot(series, log_y=False, x_label="t", y_label=""):
    """Render ``series`` (a list of ``(label, t, y)``) to SVG text.

    With ``log_y`` the plotted value is ``log10(y)``; non-positive and
    non-finite samples are dropped.  A series with one point becomes a marker.
    """
    prepared = []
    for label, t, y in series:
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(t) & np.isfinite(y)
        if log_y:
            keep &= y > 0
        t, y = t[keep], y[keep]
        prepared.append((label, t, np.log10(y) if log_y else y))
    nonempty = [p for p in prepared if p[1].size]
    if nonempty:
        tx0, tx1 = _range(np.concatenate([p[1] for p in nonempty]))
        y0, y1 = _range(np.concatenate([p[2] for p in nonempty]))
    else:
        tx0, tx1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(t):
        return MARGIN_LEFT + (t - tx0) / (tx1 - tx0) * pw

    def py(v):
        return MARGIN_TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i in range(TICKS + 1):
        tv = tx0 + (tx1 - tx0) * i / TICKS
        yv = y0 + (y1 - y0) * i / TICKS
        ylab = f"1e{yv:.1f}" if log_y else f"{yv:.3g}"
        out.append(f'<text x="{px(tv):.2f}" y="{HEIGHT - MARGIN_BOTTOM + 20}" font-size="12" text-anchor="middle">{tv:.3g}</text>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{py(yv) + 4:.2f}" font-size="12" text-anchor="end">{ylab}</text>')
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" font-size="14" text-anchor="middle">{_escape(x_label)}</text>')
    if y_label:
        out.append(
            f'<text x="20" y="{MARGIN_TOP + ph / 2:.2f}" font-size="14" text-anchor="middle" '
            f'transform="rotate(-90 20 {MARGIN_TOP + ph / 2:.2f})">{_escape(y_label)}</text>'
        )
    for k, (label, t, y) in enumerate(prepared):
        colour = PALETTE[k % len(PALETTE)]
        if t.size == 1:
            out.append(f'<circle cx="{px(t[0]):.2f}" cy="{py(y[0]):.2f}" r="4" fill="{colour}"/>')
        elif t.size > 1:
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t, y))
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_TOP + 20 * (k + 1)
        lx = WIDTH - MARGIN_RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}" font-size="12">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

def decimate(t, y, max_points=2000):
    """Keep at most ``max_points`` evenly spaced samples (always the last one)."""
    n = len(t)
    if n <= max_points:
        return t, y
    idx = np.unique(np.append(np.linspace(0, n - 1, max_points).astype(int), n - 1))
    return np.asarray(t)[idx], np.asarray(y)[idx]

