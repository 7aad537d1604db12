"""Dependency-free SVG line charts for training metrics."""

import numpy as np


def moving_average(values, window):
    """Simple moving average; output i covers input [i, i+window)."""
    values = np.asarray(values, dtype=np.float64)
    window = int(window)
    if window < 1:
        raise ValueError("window must be >= 1")
    if values.size < window:
        raise ValueError(
            f"need at least {window} rows for window {window}, got {values.size}"
        )
    return np.convolve(values, np.ones(window) / window, mode="valid")


def _fmt(v):
    return f"{v:.6g}"


def _panel(x, series, labels, colors, title, x0, y0, width, height):
    """One framed panel with polylines scaled to the data range."""
    all_vals = np.concatenate([np.asarray(s, dtype=np.float64) for s in series])
    lo, hi = float(all_vals.min()), float(all_vals.max())
    if hi - lo < 1e-12:
        pad = 1.0 if hi == 0 else abs(hi) * 0.05 + 1e-9
        lo, hi = lo - pad, hi + pad
    x = np.asarray(x, dtype=np.float64)
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5

    def sx(v):
        return x0 + (v - x_lo) / (x_hi - x_lo) * width

    def sy(v):
        return y0 + height - (v - lo) / (hi - lo) * height

    parts = [
        f'<rect x="{x0}" y="{y0}" width="{width}" height="{height}" '
        'fill="none" stroke="#888"/>',
        f'<text x="{x0}" y="{y0 - 6}" font-size="12" fill="#222">{title}</text>',
        f'<text x="{x0 - 4}" y="{sy(hi):.2f}" font-size="10" fill="#444" '
        f'text-anchor="end">{_fmt(hi)}</text>',
        f'<text x="{x0 - 4}" y="{sy(lo):.2f}" font-size="10" fill="#444" '
        f'text-anchor="end">{_fmt(lo)}</text>',
        f'<text x="{x0}" y="{y0 + height + 14}" font-size="10" fill="#444">'
        f"{_fmt(x_lo)}</text>",
        f'<text x="{x0 + width}" y="{y0 + height + 14}" font-size="10" '
        f'fill="#444" text-anchor="end">{_fmt(x_hi)}</text>',
    ]
    for s, label, color in zip(series, labels, colors):
        pts = " ".join(
            f"{sx(xi):.2f},{sy(vi):.2f}" for xi, vi in zip(x, np.asarray(s))
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
    for i, (label, color) in enumerate(zip(labels, colors)):
        lx = x0 + width - 90
        ly = y0 + 14 + 14 * i
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 16}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 20}" y="{ly}" font-size="10" fill="#222">{label}</text>'
        )
    return "\n".join(parts)


def metrics_chart(episodes, reward_sma, vx_sma, vy_sma, window) -> str:
    """Two stacked panels: smoothed reward, smoothed mean speeds."""
    w, h = 640, 480
    margin = 50
    panel_h = 170
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        _panel(
            episodes,
            [reward_sma],
            [f"reward (window {window})"],
            ["#1f6fb2"],
            "episode reward, moving average",
            margin,
            40,
            w - 2 * margin,
            panel_h,
        ),
        _panel(
            episodes,
            [vx_sma, vy_sma],
            ["|vx| m/s", "|vy| m/s"],
            ["#b23a1f", "#2a8c4a"],
            "mean command speeds, moving average",
            margin,
            40 + panel_h + 60,
            w - 2 * margin,
            panel_h,
        ),
        "</svg>",
    ]
    return "\n".join(body) + "\n"
