"""Self-contained vector drawing of one flight plan.

No plotting dependency: the trajectory figure is assembled as plain SVG
markup with a fixed coordinate mapping, so identical inputs give
byte-identical files.
"""

import numpy as np

_WIDTH = 640.0
_PAD = 14.0


def _dwell_points(q: np.ndarray):
    """Hover locations: runs of two or more equal consecutive positions,
    with their dwell length in slots."""
    points = []
    i = 0
    while i < len(q):
        j = i
        while j + 1 < len(q) and np.allclose(q[j + 1], q[i], atol=1e-9):
            j += 1
        if j > i:
            points.append((q[i], j - i + 1))
        i = j + 1
    return points


def trajectory_svg(scenario, q: np.ndarray) -> str:
    """SVG figure: covered square, user markers, flight polyline, hover
    rings sized by dwell time."""
    q = np.asarray(q, dtype=float)
    su = scenario.su_positions
    qu = scenario.qu_positions
    all_x = np.concatenate([[-50.0, 50.0], q[:, 0], su[:, 0], qu[:, 0]])
    all_y = np.concatenate([[-50.0, 50.0], q[:, 1], su[:, 1], qu[:, 1]])
    lo = min(all_x.min(), all_y.min()) - 10.0
    hi = max(all_x.max(), all_y.max()) + 10.0
    span = hi - lo
    scale = (_WIDTH - 2 * _PAD) / span

    def px(x: float) -> str:
        return f"{_PAD + (x - lo) * scale:.2f}"

    def py(y: float) -> str:
        return f"{_PAD + (hi - y) * scale:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" '
        f'height="{_WIDTH:.0f}" viewBox="0 0 {_WIDTH:.0f} {_WIDTH:.0f}">',
        f'<rect x="0" y="0" width="{_WIDTH:.0f}" height="{_WIDTH:.0f}" fill="#ffffff"/>',
        # Covered region outline.
        f'<rect x="{px(-50.0)}" y="{py(50.0)}" '
        f'width="{100.0 * scale:.2f}" height="{100.0 * scale:.2f}" '
        'fill="none" stroke="#999999" stroke-dasharray="6 4" stroke-width="1"/>',
    ]

    # Flight path polyline, closed through the start and end positions.
    chain = np.vstack([scenario.q_initial, q, scenario.q_final])
    pts = " ".join(f"{px(p[0])},{py(p[1])}" for p in chain)
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="#1f5fbf" stroke-width="2"/>'
    )
    for p in q:
        parts.append(
            f'<circle cx="{px(p[0])}" cy="{py(p[1])}" r="2" fill="#1f5fbf"/>'
        )
    for point, dwell in _dwell_points(q):
        parts.append(
            f'<circle cx="{px(point[0])}" cy="{py(point[1])}" '
            f'r="{4.0 + min(dwell, 20):.1f}" fill="none" '
            'stroke="#1f5fbf" stroke-width="1.5" stroke-dasharray="2 2"/>'
        )

    start = scenario.q_initial
    parts.append(
        f'<circle cx="{px(start[0])}" cy="{py(start[1])}" r="5" '
        'fill="#ffffff" stroke="#1f5fbf" stroke-width="2"/>'
    )

    for i, p in enumerate(su):
        parts.append(
            f'<circle cx="{px(p[0])}" cy="{py(p[1])}" r="6" fill="#c23b3b"/>'
        )
        parts.append(
            f'<text x="{px(p[0])}" y="{py(p[1] + 4.5)}" font-size="12" '
            f'text-anchor="middle" fill="#c23b3b">S{i + 1}</text>'
        )
    for i, p in enumerate(qu):
        x0 = float(px(p[0])) - 5.0
        y0 = float(py(p[1])) - 5.0
        parts.append(
            f'<rect x="{x0:.2f}" y="{y0:.2f}" width="10" height="10" fill="#2d8a4e"/>'
        )
        parts.append(
            f'<text x="{px(p[0])}" y="{py(p[1] + 4.5)}" font-size="12" '
            f'text-anchor="middle" fill="#2d8a4e">Q{i + 1}</text>'
        )

    parts.append(
        f'<text x="{_PAD:.0f}" y="{_WIDTH - 6:.0f}" font-size="12" fill="#333333">'
        "dot: security user, square: quality user, dashed ring: hover"
        "</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
