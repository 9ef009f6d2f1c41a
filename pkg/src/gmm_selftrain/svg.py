"""Minimal deterministic SVG line plots.

Just enough to render the bound/simulation curves without external
plotting dependencies: linear or log-y axes, ticks, legend.  Output is
a pure function of the inputs (no timestamps, no ids), so emitted
figures are byte-stable across reruns.
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#17becf", "#7f7f7f")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64.0, 16.0, 34.0, 46.0


def _nice_step(span: float, target: int = 5) -> float:
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mult * mag >= raw:
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float):
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _log_ticks(lo: float, hi: float):
    return [10.0 ** k for k in range(math.ceil(math.log10(lo)),
                                     math.floor(math.log10(hi)) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_line_svg(series, title: str = "", xlabel: str = "", ylabel: str = "",
                    logy: bool = False, width: int = 720, height: int = 460) -> str:
    """Render labelled (xs, ys) series as an SVG document string.

    series: iterable of (label, xs, ys).  Non-finite y values split the
    polyline rather than corrupting it (log-y treats y <= 0 the same
    way).  Returns the full <svg> markup.
    """
    series = [(str(label), [float(x) for x in xs], [float(y) for y in ys])
              for label, xs, ys in series]

    def usable(y):
        return math.isfinite(y) and (not logy or y > 0.0)

    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)
           if math.isfinite(x) and usable(y)]
    if not pts:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                f'height="{height}"><text x="{width / 2}" y="{height / 2}" '
                f'text-anchor="middle">no finite data</text></svg>')

    x_lo, x_hi = min(p[0] for p in pts), max(p[0] for p in pts)
    y_lo, y_hi = min(p[1] for p in pts), max(p[1] for p in pts)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if logy:
        if y_hi == y_lo:
            y_lo, y_hi = y_lo / 10.0, y_hi * 10.0
        ly_lo, ly_hi = math.log10(y_lo), math.log10(y_hi)
        pad = 0.05 * (ly_hi - ly_lo) or 0.1
        ly_lo, ly_hi = ly_lo - pad, ly_hi + pad

        def ty(y):
            return (math.log10(y) - ly_lo) / (ly_hi - ly_lo)
        y_ticks = _log_ticks(10.0 ** ly_lo, 10.0 ** ly_hi) or [y_lo, y_hi]
    else:
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

        def ty(y):
            return (y - y_lo) / (y_hi - y_lo)
        y_ticks = _linear_ticks(y_lo, y_hi)
    x_pad = 0.03 * (x_hi - x_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(x):
        return _MARGIN_L + plot_w * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        return _MARGIN_T + plot_h * (1.0 - ty(y))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w:.2f}" '
           f'height="{plot_h:.2f}" fill="none" stroke="#333"/>']
    if title:
        out.append(f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" '
                   f'font-size="14">{title}</text>')

    for t in _linear_ticks(x_lo, x_hi):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{_MARGIN_T + plot_h:.2f}" x2="{x:.2f}" '
                   f'y2="{_MARGIN_T + plot_h + 5:.2f}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{_MARGIN_T + plot_h + 18:.2f}" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in y_ticks:
        if not (y_lo <= t <= y_hi) and not logy:
            continue
        y = py(t)
        out.append(f'<line x1="{_MARGIN_L - 5}" y1="{y:.2f}" x2="{_MARGIN_L}" '
                   f'y2="{y:.2f}" stroke="#333"/>')
        out.append(f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    if xlabel:
        out.append(f'<text x="{_MARGIN_L + plot_w / 2:.2f}" y="{height - 8}" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        y_mid = _MARGIN_T + plot_h / 2
        out.append(f'<text x="14" y="{y_mid:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {y_mid:.2f})">{ylabel}</text>')

    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        run = []
        segments = []
        for x, y in zip(xs, ys):
            if math.isfinite(x) and usable(y):
                run.append(f"{px(x):.2f},{py(y):.2f}")
            elif run:
                segments.append(run)
                run = []
        if run:
            segments.append(run)
        for seg in segments:
            if len(seg) == 1:
                cx, cy = seg[0].split(",")
                out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
            else:
                out.append(f'<polyline points="{" ".join(seg)}" fill="none" '
                           f'stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN_T + 14 + 16 * i
        lx = _MARGIN_L + plot_w - 150
        out.append(f'<line x1="{lx:.2f}" y1="{ly - 4:.2f}" x2="{lx + 18:.2f}" '
                   f'y2="{ly - 4:.2f}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 24:.2f}" y="{ly:.2f}">{label}</text>')

    out.append("</svg>")
    return "\n".join(out)
