"""Deterministic SVG heatmaps for phase grids.

No plotting stack: one <rect> per cell, a fixed 256-step monotone color
ramp, and the full value matrix embedded as a metadata comment so rendered
files diff reproducibly.
"""

from __future__ import annotations

from .numerics import PhaseGrid

RAMP_LOW = (68, 1, 84)
RAMP_HIGH = (253, 231, 37)
RAMP_STEPS = 256

CELL = 14
PAD_LEFT = 46
PAD_TOP = 34
PAD_BOTTOM = 30
TICK_EVERY = 5


def ramp_color(value: float) -> str:
    """Map [0,1] to one of 256 colors interpolated RAMP_LOW -> RAMP_HIGH."""
    v = min(1.0, max(0.0, value))
    idx = round(v * (RAMP_STEPS - 1))
    t = idx / (RAMP_STEPS - 1)
    rgb = tuple(round(lo + t * (hi - lo))
                for lo, hi in zip(RAMP_LOW, RAMP_HIGH))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_phase_grid(grid: PhaseGrid) -> str:
    rows, cols = grid.y_star.shape
    width = PAD_LEFT + cols * CELL + 10
    height = PAD_TOP + rows * CELL + PAD_BOTTOM
    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">')
    out.append("<!--")
    out.append(f"  smallest fixed point of map={grid.map_id} at theta={grid.theta}")
    out.append(f"  color ramp: {RAMP_STEPS} linear RGB steps from "
               f"rgb{RAMP_LOW} (value 0) to rgb{RAMP_HIGH} (value 1)")
    out.append("  values (rows d ascending top to bottom, columns kappa ascending):")
    out.append("  d\\kappa," + ",".join(str(int(k)) for k in grid.kappa_values))
    for i, d in enumerate(grid.d_values):
        vals = ",".join(repr(float(v)) for v in grid.y_star[i])
        out.append(f"  {int(d)},{vals}")
    out.append("-->")
    out.append(f'<text x="{PAD_LEFT}" y="14" font-size="11" '
               f'font-family="monospace">map={grid.map_id} theta={grid.theta} '
               f'(rows: d, cols: kappa)</text>')
    for i in range(rows):
        y = PAD_TOP + i * CELL
        for j in range(cols):
            x = PAD_LEFT + j * CELL
            color = ramp_color(float(grid.y_star[i, j]))
            out.append(f'<rect x="{x}" y="{y}" width="{CELL}" '
                       f'height="{CELL}" fill="{color}"/>')
        if i % TICK_EVERY == 0 or i == rows - 1:
            out.append(f'<text x="4" y="{y + CELL - 3}" font-size="9" '
                       f'font-family="monospace">d={int(grid.d_values[i])}</text>')
    for j in range(cols):
        if j % TICK_EVERY == 0 or j == cols - 1:
            x = PAD_LEFT + j * CELL
            y = PAD_TOP + rows * CELL + 12
            out.append(f'<text x="{x}" y="{y}" font-size="9" '
                       f'font-family="monospace">{int(grid.kappa_values[j])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
