"""Static views of a scenario and its plans: ASCII map and SVG file."""

from __future__ import annotations

from .scenario import Scenario

_COLORS = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
]


def ascii_map(scenario: Scenario, solution_data: dict | None = None) -> str:
    """Top row is y = height-1 so the origin sits bottom-left."""
    cells = {}
    for t in scenario.collaborative_tasks:
        cells[t.region] = "C"
    for tasks in scenario.individual_tasks.values():
        for t in tasks:
            cells[t.cell] = "t"
    for r in scenario.robots:
        cells[r.start] = str(r.id % 10)
    lines = []
    for y in reversed(range(scenario.height)):
        row = []
        for x in range(scenario.width):
            if (x, y) in scenario.blocked:
                row.append("#")
            else:
                row.append(cells.get((x, y), "."))
        lines.append(" ".join(row))
    legend = [
        "# blocked   . free   C collaborative task   t individual task   "
        "digits: robot starts"
    ]
    if solution_data:
        legend.append("")
        for robot, timeline in sorted(
            solution_data.get("plans", {}).items(), key=lambda kv: int(kv[0])
        ):
            steps = []
            for entry in timeline:
                mark = f"@{entry['performs']}" if entry.get("performs") else ""
                steps.append(f"{tuple(entry['region'])}{mark}")
            legend.append(f"robot {robot}: " + " -> ".join(steps))
    return "\n".join(lines + [""] + legend)


def svg_render(scenario: Scenario, solution_data: dict | None = None) -> str:
    cell = 32
    pad = 8
    width = scenario.width * cell + 2 * pad
    height = scenario.height * cell + 2 * pad

    def cx(x):
        return pad + x * cell + cell / 2

    def cy(y):
        # flip so the origin is bottom-left
        return pad + (scenario.height - 1 - y) * cell + cell / 2

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="10">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for x in range(scenario.width):
        for y in range(scenario.height):
            fill = "#333333" if (x, y) in scenario.blocked else "none"
            parts.append(
                f'<rect x="{pad + x * cell}" y="{pad + (scenario.height - 1 - y) * cell}" '
                f'width="{cell}" height="{cell}" fill="{fill}" stroke="#cccccc"/>'
            )
    for t in scenario.collaborative_tasks:
        x, y = t.region
        parts.append(
            f'<text x="{cx(x)}" y="{cy(y) - 6}" text-anchor="middle" '
            f'fill="#b00">{t.name}</text>'
        )
    for tasks in scenario.individual_tasks.values():
        for t in tasks:
            x, y = t.cell
            parts.append(
                f'<text x="{cx(x)}" y="{cy(y) - 6}" text-anchor="middle" '
                f'fill="#555">{t.name}</text>'
            )
    if solution_data:
        for idx, (robot, timeline) in enumerate(
            sorted(solution_data.get("plans", {}).items(), key=lambda kv: int(kv[0]))
        ):
            color = _COLORS[idx % len(_COLORS)]
            points = " ".join(
                f"{cx(e['region'][0])},{cy(e['region'][1])}" for e in timeline
            )
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                f'stroke-width="2" opacity="0.7"/>'
            )
            for step, e in enumerate(timeline):
                x, y = e["region"]
                parts.append(
                    f'<circle cx="{cx(x)}" cy="{cy(y)}" r="7" fill="{color}" '
                    f'opacity="0.75"/>'
                )
                parts.append(
                    f'<text x="{cx(x)}" y="{cy(y) + 3}" text-anchor="middle" '
                    f'fill="white">{step}</text>'
                )
    for r in scenario.robots:
        x, y = r.start
        parts.append(
            f'<text x="{cx(x)}" y="{cy(y) + 12}" text-anchor="middle" '
            f'fill="#000">R{r.id}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
