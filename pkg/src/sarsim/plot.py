"""Dependency-free SVG rendering of a flight trace over its scenario.

Output is plain text built with fixed number formatting, so the same inputs
always give byte-identical files.
"""

from __future__ import annotations

import logging
from xml.sax.saxutils import escape

from sarsim.engine import TraceRecord
from sarsim.mission import Mode
from sarsim.world import Rect, Scenario

log = logging.getLogger(__name__)

WIDTH = 640
MARGIN = 24
MODE_COLORS = {Mode.SCAN: "#1f77b4", Mode.CHECK: "#ff7f0e"}
SLACK = 1.0  # m; trace points this far outside the area still count as inside


def _marks(records, key: str) -> list[tuple[float, float]]:
    out = []
    for r in records:
        for part in r.detail.split():
            if part.startswith(key + "="):
                x, y = part[len(key) + 1:].split(":")
                out.append((float(x), float(y)))
    return out


def _bounds(area: Rect, records) -> tuple[float, float, float, float]:
    xs = [area.x_min, area.x_max] + [r.x for r in records]
    ys = [area.y_min, area.y_max] + [r.y for r in records]
    return min(xs), min(ys), max(xs), max(ys)


def check_consistency(records, scenario: Scenario) -> list[str]:
    """Warnings for trace points that fall outside the scenario area."""
    a = scenario.area
    outside = [r for r in records if not (a.x_min - SLACK <= r.x <= a.x_max + SLACK and a.y_min - SLACK <= r.y <= a.y_max + SLACK)]
    if not outside:
        return []
    r = outside[0]
    return [f"{len(outside)} trace points lie outside the scenario area, first at t={r.t:.1f} ({r.x:.1f}, {r.y:.1f})"]


def _segments(records):
    """Split the ground track into runs of constant mode; runs share their joining point."""
    runs: list[tuple[Mode, list[tuple[float, float]]]] = []
    prev = None
    for r in records:
        p = (r.x, r.y)
        if runs and runs[-1][0] is r.mode:
            if p != prev:
                runs[-1][1].append(p)
        else:
            runs.append((r.mode, [p] if prev is None else [prev, p]))
        prev = p
    return runs


def render_svg(records: list[TraceRecord], scenario: Scenario, title: str = "") -> str:
    for w in check_consistency(records, scenario):
        log.warning(w)
    x0, y0, x1, y1 = _bounds(scenario.area, records)
    scale = (WIDTH - 2 * MARGIN) / max(x1 - x0, y1 - y0, 1e-9)
    height = round((y1 - y0) * scale + 2 * MARGIN)

    def px(x: float, y: float) -> str:
        # SVG y grows downward
        return f"{MARGIN + (x - x0) * scale:.2f},{height - MARGIN - (y - y0) * scale:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}">',
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>',
    ]
    a = scenario.area
    ax, ay = px(a.x_min, a.y_max).split(",")
    out.append(
        f'<rect x="{ax}" y="{ay}" width="{a.width * scale:.2f}" height="{a.height * scale:.2f}" '
        'fill="none" stroke="#999" stroke-dasharray="4 3"/>'
    )
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN - 8}" font-size="12" font-family="sans-serif">{escape(title)}</text>')

    for mode, pts in _segments(records):
        if len(pts) < 2:
            continue
        out.append(
            f'<polyline class="{mode.value.lower()}" fill="none" stroke="{MODE_COLORS[mode]}" stroke-width="1.5" '
            f'points="{" ".join(px(x, y) for x, y in pts)}"/>'
        )

    for t in scenario.targets:
        cx, cy = px(t.x, t.y).split(",")
        out.append(f'<circle class="target" cx="{cx}" cy="{cy}" r="4" fill="none" stroke="black"/>')

    for x, y in _marks(records, "confirmed"):
        cx, cy = px(x, y).split(",")
        out.append(f'<circle class="confirmed" cx="{cx}" cy="{cy}" r="2.5" fill="#2ca02c"/>')
        out.append(f'<text x="{float(cx) + 5:.2f}" y="{float(cy) - 5:.2f}" font-size="9" fill="#2ca02c">R</text>')
    for x, y in _marks(records, "discarded"):
        cx, cy = px(x, y).split(",")
        fx, fy = float(cx), float(cy)
        out.append(
            f'<path class="discarded" d="M{fx - 3:.2f},{fy - 3:.2f}L{fx + 3:.2f},{fy + 3:.2f}'
            f'M{fx - 3:.2f},{fy + 3:.2f}L{fx + 3:.2f},{fy - 3:.2f}" stroke="#d62728" stroke-width="1.5"/>'
        )
        out.append(f'<text x="{fx + 5:.2f}" y="{fy - 5:.2f}" font-size="9" fill="#d62728">fp</text>')

    legend_y = height - 6
    out.append(f'<text x="{MARGIN}" y="{legend_y}" font-size="10" fill="{MODE_COLORS[Mode.SCAN]}">SCAN</text>')
    out.append(f'<text x="{MARGIN + 40}" y="{legend_y}" font-size="10" fill="{MODE_COLORS[Mode.CHECK]}">CHECK</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
