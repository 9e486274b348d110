"""Static SVG snapshots of a single round."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .core import TaskSpec

PALETTE = (
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
SCALE = 6.0
MARGIN = 20.0


def _color(origin) -> str:
    return "#000000" if origin is None else PALETTE[origin % len(PALETTE)]


def frame_svg(frame, spec: TaskSpec) -> str:
    """Robots colored by plan origin, goals as crosses, dashed comm-range rings."""
    a = spec.arena
    w = (a.xmax - a.xmin) * SCALE + 2 * MARGIN
    h = (a.ymax - a.ymin) * SCALE + 2 * MARGIN

    def px(x: float) -> float:
        return MARGIN + (x - a.xmin) * SCALE

    def py(y: float) -> float:
        # flip y so the arena reads like a plot
        return MARGIN + (a.ymax - y) * SCALE

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
        f'viewBox="0 0 {w:.0f} {h:.0f}">',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{w - 2 * MARGIN:.1f}" '
        f'height="{h - 2 * MARGIN:.1f}" fill="white" stroke="#999"/>',
        f'<text x="{MARGIN}" y="{MARGIN - 6}" font-size="12" font-family="sans-serif">'
        f"{escape(f'Step {frame.round}  error={frame.error_mean_dist:.2f}')}</text>",
    ]
    r_comm = spec.comm_range * SCALE
    arm = 1.2 * SCALE
    for i, (p, g, origin) in enumerate(zip(frame.positions, frame.goals, frame.plan_origins)):
        c = _color(origin)
        out.append(
            f'<circle cx="{px(p.x):.2f}" cy="{py(p.y):.2f}" r="{r_comm:.2f}" fill="none" '
            f'stroke="{c}" stroke-opacity="0.4" stroke-dasharray="4 4"/>'
        )
        gx, gy = px(g.x), py(g.y)
        out.append(
            f'<path d="M{gx - arm:.2f},{gy - arm:.2f} L{gx + arm:.2f},{gy + arm:.2f} '
            f'M{gx - arm:.2f},{gy + arm:.2f} L{gx + arm:.2f},{gy - arm:.2f}" '
            f'stroke="{c}" stroke-width="1.5"/>'
        )
        out.append(
            f'<circle cx="{px(p.x):.2f}" cy="{py(p.y):.2f}" r="{SCALE:.2f}" fill="{c}"/>'
        )
        if i < len(frame.influences):
            out.append(
                f'<text x="{px(p.x):.2f}" y="{py(p.y) - SCALE - 3:.2f}" font-size="10" '
                f'text-anchor="middle" font-family="sans-serif">{frame.influences[i]:.2f}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
