"""Static SVG rendering of VPC bands, one panel per stratum.

Each panel shows the band as a grey region, the replicate mean as a white
line, and the observed Kaplan-Meier curve as a dashed black step line.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PANEL_W = 320
PANEL_H = 240
MARGIN = dict(left=48, right=12, top=28, bottom=36)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _step_points(t, s):
    """Vertices of a right-continuous step curve sampled at ``t``."""
    pts = [(t[0], s[0])]
    for k in range(1, len(t)):
        if s[k] != s[k - 1]:
            pts.append((t[k], s[k - 1]))
        pts.append((t[k], s[k]))
    return pts


def _panel(title, time, mean, lower, upper, observed, x0, tmax):
    plot_w = PANEL_W - MARGIN["left"] - MARGIN["right"]
    plot_h = PANEL_H - MARGIN["top"] - MARGIN["bottom"]
    left = x0 + MARGIN["left"]
    top = MARGIN["top"]

    def px(t):
        return left + plot_w * (t / tmax if tmax > 0 else 0.0)

    def py(s):
        return top + plot_h * (1.0 - s)

    def path(pts):
        return " ".join(("M" if i == 0 else "L") + f"{_fmt(px(a))},{_fmt(py(b))}"
                        for i, (a, b) in enumerate(pts))

    upper_pts = _step_points(time, upper)
    lower_pts = _step_points(time, lower)[::-1]
    band = path(upper_pts + lower_pts) + " Z"
    out = [
        '<g class="panel">',
        f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{plot_w}" height="{plot_h}" '
        f'fill="white" stroke="black" stroke-width="1"/>',
        f'<path d="{band}" fill="#bdbdbd" stroke="none"/>',
        f'<path d="{path(_step_points(time, mean))}" fill="none" stroke="white" stroke-width="1.5"/>',
        f'<path d="{path(_step_points(time, observed))}" fill="none" stroke="black" '
        f'stroke-width="1.2" stroke-dasharray="4,3"/>',
        f'<text x="{_fmt(left + plot_w / 2)}" y="{top - 10}" text-anchor="middle" '
        f'font-size="12">{escape(title)}</text>',
    ]
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(
            f'<text x="{_fmt(left - 6)}" y="{_fmt(py(s) + 4)}" text-anchor="end" '
            f'font-size="10">{s:.2f}</text>'
        )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        t = frac * tmax
        out.append(
            f'<text x="{_fmt(px(t))}" y="{_fmt(top + plot_h + 14)}" text-anchor="middle" '
            f'font-size="10">{t:.2f}</text>'
        )
    out.append(
        f'<text x="{_fmt(left + plot_w / 2)}" y="{_fmt(top + plot_h + 30)}" '
        f'text-anchor="middle" font-size="11">time</text>'
    )
    out.append("</g>")
    return out


def render_bands(bands: dict, title_prefix: str = "stratum") -> str:
    """SVG document for ``{stratum: {time, mean, lower, upper, observed_km}}``."""
    labels = list(bands)
    width = PANEL_W * max(1, len(labels))
    tmax = max((float(np.max(b["time"])) for b in bands.values()), default=1.0)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" '
        f'viewBox="0 0 {width} {PANEL_H}">'
    ]
    for k, label in enumerate(labels):
        b = bands[label]
        lines += _panel(f"{title_prefix} {label}", np.asarray(b["time"]), b["mean"],
                        b["lower"], b["upper"], b["observed_km"], k * PANEL_W, tmax)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def result_to_bands(result) -> dict:
    """Adapt a :class:`~ipocvpc.vpc.VpcResult` to :func:`render_bands` input."""
    out = {}
    for label, sr in result.strata.items():
        out[label] = {
            "time": result.grid,
            "mean": sr.band.mean,
            "lower": sr.band.lower,
            "upper": sr.band.upper,
            "observed_km": sr.observed.survival.survival_at(result.grid),
        }
    return out
