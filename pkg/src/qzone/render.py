"""Partition maps and impact heatmaps as SVG (primary) or binary PPM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .qubo import Assignment
from .zoning import TrafficInstance, cut_edges

BOUNDARY_COLOR = "#101010"


@dataclass(frozen=True)
class RenderSpec:
    """How to draw a grid: cell size in pixels, region fills, cut outlines.

    palette[0] fills region B (bit 0, light by convention) and palette[1]
    fills region A (bit 1, dark).
    """

    cell_size: int = 24
    palette: tuple[str, str] = ("#f5f1e6", "#2f5d8a")
    show_boundary: bool = True

    def __post_init__(self) -> None:
        if self.cell_size < 1:
            raise ValidationError(f"cell size must be >= 1, got {self.cell_size}")
        if len(self.palette) != 2:
            raise ValidationError("palette must hold exactly two colors")
        for color in self.palette:
            _hex_to_rgb(color)


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    if not (isinstance(color, str) and color.startswith("#") and len(color) == 7):
        raise ValidationError(f"colors must look like '#rrggbb', got {color!r}")
    try:
        return tuple(int(color[k : k + 2], 16) for k in (1, 3, 5))  # type: ignore[return-value]
    except ValueError as exc:
        raise ValidationError(f"colors must look like '#rrggbb', got {color!r}") from exc


def _check_sizes(instance: TrafficInstance, x: Assignment) -> None:
    if len(x) != instance.num_zones:
        raise ValidationError(
            f"assignment length {len(x)} does not match instance with "
            f"{instance.num_zones} zones"
        )


def _boundary_segments(
    instance: TrafficInstance, x: Assignment, s: int
) -> list[tuple[float, float, float, float]]:
    """Line segments along cut edges; non-grid edges fall back to center lines."""
    segments = []
    for i, j, _ in cut_edges(instance, x):
        ri, ci = instance.zone_coords(i)
        rj, cj = instance.zone_coords(j)
        if ri == rj and cj == ci + 1:
            segments.append((cj * s, ri * s, cj * s, (ri + 1) * s))
        elif ci == cj and rj == ri + 1:
            segments.append((ci * s, rj * s, (ci + 1) * s, rj * s))
        else:
            segments.append(
                ((ci + 0.5) * s, (ri + 0.5) * s, (cj + 0.5) * s, (rj + 0.5) * s)
            )
    return segments


def render_partition_svg(
    instance: TrafficInstance, x: Assignment, spec: RenderSpec = RenderSpec()
) -> str:
    """Two-color region map; cut edges are outlined when the spec asks."""
    _check_sizes(instance, x)
    s = spec.cell_size
    width, height = instance.cols * s, instance.rows * s
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for i in range(instance.num_zones):
        r, c = instance.zone_coords(i)
        fill = spec.palette[x[i]]
        parts.append(
            f'<rect x="{c * s}" y="{r * s}" width="{s}" height="{s}" fill="{fill}"/>'
        )
    if spec.show_boundary:
        stroke = max(1, s // 8)
        for x1, y1, x2, y2 in _boundary_segments(instance, x, s):
            parts.append(
                f'<line x1="{x1:g}" y1="{y1:g}" x2="{x2:g}" y2="{y2:g}" '
                f'stroke="{BOUNDARY_COLOR}" stroke-width="{stroke}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_partition_ppm(
    instance: TrafficInstance, x: Assignment, spec: RenderSpec = RenderSpec()
) -> bytes:
    """Binary P6 raster of the region map.

    Boundary marks are drawn only along grid-adjacent cut edges; other cut
    edges have no shared border strip to paint.
    """
    _check_sizes(instance, x)
    s = spec.cell_size
    width, height = instance.cols * s, instance.rows * s
    img = np.zeros((height, width, 3), dtype=np.uint8)
    colors = [np.array(_hex_to_rgb(c), dtype=np.uint8) for c in spec.palette]
    for i in range(instance.num_zones):
        r, c = instance.zone_coords(i)
        img[r * s : (r + 1) * s, c * s : (c + 1) * s] = colors[x[i]]
    if spec.show_boundary:
        bw = max(1, s // 8)
        mark = np.array(_hex_to_rgb(BOUNDARY_COLOR), dtype=np.uint8)
        for i, j, _ in cut_edges(instance, x):
            ri, ci = instance.zone_coords(i)
            rj, cj = instance.zone_coords(j)
            if ri == rj and cj == ci + 1:
                left = cj * s
                img[ri * s : (ri + 1) * s, max(0, left - bw) : left + bw] = mark
            elif ci == cj and rj == ri + 1:
                top = rj * s
                img[max(0, top - bw) : top + bw, ci * s : (ci + 1) * s] = mark
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + img.tobytes()


def render_impact_svg(
    instance: TrafficInstance,
    impacts: np.ndarray,
    spec: RenderSpec = RenderSpec(),
) -> str:
    """Grayscale heatmap of |impact| per zone: darker means more influential."""
    values = np.asarray(impacts, dtype=np.float64)
    if values.shape != (instance.num_zones,):
        raise ValidationError(
            f"impact vector shape {values.shape} does not match instance with "
            f"{instance.num_zones} zones"
        )
    mags = np.abs(values)
    top = float(mags.max()) if mags.size else 0.0
    s = spec.cell_size
    width, height = instance.cols * s, instance.rows * s
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for i in range(instance.num_zones):
        r, c = instance.zone_coords(i)
        level = mags[i] / top if top > 0 else 0.0
        gray = int(round(240 - level * 208))
        parts.append(
            f'<rect x="{c * s}" y="{r * s}" width="{s}" height="{s}" '
            f'fill="rgb({gray},{gray},{gray})">'
            f"<title>zone {i}: {values[i]:.6g}</title></rect>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
