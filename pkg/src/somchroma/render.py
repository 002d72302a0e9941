"""SVG rendering of the colored SOM grid, the projection scatter, and plane swatches.

Units are drawn with gaps so the reference background color shows between
them (perceived lightness depends on surround, so a consistent reference
color interleaves the data colors). Output is byte-deterministic: fixed
element order and fixed 3-decimal coordinate formatting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .colorspace import ColorPlane, RgbColor, lab_to_srgb, plane_color, rgb_to_hex
from .som import SomGrid

__all__ = [
    "RenderSpec",
    "Overlay",
    "MARKER_SHAPES",
    "assign_markers",
    "hex_layout",
    "render_som_svg",
    "render_scatter_svg",
    "render_plane_swatch_svg",
]

MARKER_SHAPES = ("circle", "triangle", "rectangle")

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

_SCATTER_CANVAS = 480.0


@dataclass(frozen=True)
class RenderSpec:
    """Geometry and styling for SVG output."""

    unit_shape: str = "circle"
    spacing_fraction: float = 0.15
    background: RgbColor = RgbColor(1.0, 1.0, 1.0)
    unit_radius_px: float = 18.0
    label_font_size_px: float = 11.0
    marker_map: dict[str, str] | None = None
    marker_radius_px: float | None = None

    def __post_init__(self):
        if self.unit_shape not in ("circle", "hexagon"):
            raise ValueError(f"unit_shape must be circle or hexagon, got {self.unit_shape!r}")
        if not 0.0 <= self.spacing_fraction < 0.5:
            raise ValueError(
                f"spacing_fraction must be in [0, 0.5), got {self.spacing_fraction}"
            )
        if self.unit_radius_px <= 0 or self.label_font_size_px <= 0:
            raise ValueError("unit_radius_px and label_font_size_px must be positive")
        if self.marker_map is not None:
            for tag, shape in self.marker_map.items():
                if shape not in MARKER_SHAPES:
                    raise ValueError(f"marker shape for {tag!r} must be one of {MARKER_SHAPES}")

    @property
    def marker_radius(self) -> float:
        return self.marker_radius_px if self.marker_radius_px is not None else 0.22 * self.unit_radius_px


@dataclass
class Overlay:
    """Per-unit text labels and class-tagged markers."""

    labels: dict[int, list[str]] = field(default_factory=dict)
    markers: dict[int, list[str]] = field(default_factory=dict)

    def validate(self, m: int):
        for idx in list(self.labels) + list(self.markers):
            if not 0 <= idx < m:
                raise ValueError(f"overlay references unit {idx}, grid has {m} units")

    def all_tags(self) -> list[str]:
        tags = {t for tags in self.markers.values() for t in tags}
        return sorted(tags)


def assign_markers(tags) -> dict[str, str]:
    """Deterministic class-tag -> marker-shape assignment (sorted tags, cycling)."""
    return {tag: MARKER_SHAPES[i % len(MARKER_SHAPES)] for i, tag in enumerate(sorted(set(tags)))}


def _fmt(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def hex_layout(grid: SomGrid, spec: RenderSpec) -> tuple[np.ndarray, tuple[float, float]]:
    """Pixel-space unit centers and the canvas size that contains them.

    Odd rows are offset by half a horizontal step; the vertical step is
    sqrt(3)/2 of the horizontal one, so lattice neighbors stay equidistant.
    The step leaves a gap of spacing_fraction times the unit diameter.
    """
    step = 2.0 * spec.unit_radius_px * (1.0 + spec.spacing_fraction)
    pad = step / 2.0
    centers = grid.unit_positions * step + pad
    width = float(centers[:, 0].max() + pad)
    height = float(centers[:, 1].max() + pad)
    return centers, (width, height)


def _svg_open(width: float, height: float) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
    ]


def _background(width: float, height: float, color: RgbColor) -> str:
    return (
        f'<rect x="0.000" y="0.000" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'fill="{rgb_to_hex(color)}"/>'
    )


def _hexagon_points(cx: float, cy: float, r: float) -> str:
    pts = []
    for k in range(6):  # pointy-top orientation matches the lattice
        ang = math.pi / 2.0 + k * math.pi / 3.0
        pts.append(f"{_fmt(cx + r * math.cos(ang))},{_fmt(cy - r * math.sin(ang))}")
    return " ".join(pts)


def _unit_shape_element(shape: str, cx: float, cy: float, r: float, fill: str) -> str:
    if shape == "circle":
        return f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{fill}"/>'
    return f'<polygon points="{_hexagon_points(cx, cy, r)}" fill="{fill}"/>'


def _marker_element(shape: str, cx: float, cy: float, r: float) -> str:
    style = 'fill="none" stroke="#000000" stroke-width="1.000"'
    if shape == "circle":
        return f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" {style}/>'
    if shape == "triangle":
        rr = 1.2 * r
        pts = []
        for ang in (math.pi / 2.0, math.pi / 2.0 + 2.0 * math.pi / 3.0, math.pi / 2.0 + 4.0 * math.pi / 3.0):
            pts.append(f"{_fmt(cx + rr * math.cos(ang))},{_fmt(cy - rr * math.sin(ang))}")
        return f'<polygon points="{" ".join(pts)}" {style}/>'
    side = 1.7 * r
    return (
        f'<rect x="{_fmt(cx - side / 2.0)}" y="{_fmt(cy - side / 2.0)}" '
        f'width="{_fmt(side)}" height="{_fmt(side)}" {style}/>'
    )


def _marker_offsets(count: int, unit_radius: float) -> list[tuple[float, float]]:
    """Deterministic golden-angle spiral for stacking markers inside a unit."""
    if count == 1:
        return [(0.0, 0.0)]
    offsets = []
    for k in range(count):
        rho = 0.55 * unit_radius * math.sqrt((k + 0.5) / count)
        ang = k * _GOLDEN_ANGLE
        offsets.append((rho * math.cos(ang), rho * math.sin(ang)))
    return offsets


def render_som_svg(grid: SomGrid, colors, overlay: Overlay, spec: RenderSpec) -> str:
    """SVG of the colored grid with class markers and labels.

    Circles (default) leave room for the reference background; markers for
    data mapped to a unit stack in a small spiral, ordered by class tag then
    insertion order. Identical inputs yield identical bytes.
    """
    m = grid.m
    if len(colors) != m:
        raise ValueError(f"{len(colors)} colors for {m} units")
    overlay.validate(m)

    centers, (width, height) = hex_layout(grid, spec)
    r = spec.unit_radius_px
    fs = spec.label_font_size_px
    max_lines = max((len(v) for v in overlay.labels.values()), default=0)
    top_extra = max_lines * fs + 4.0 if max_lines else 0.0
    centers = centers + np.array([0.0, top_extra])
    height += top_extra

    marker_map = spec.marker_map if spec.marker_map is not None else assign_markers(overlay.all_tags())

    lines = _svg_open(width, height)
    lines.append(_background(width, height, spec.background))
    for k in range(m):
        cx, cy = centers[k]
        lines.append(_unit_shape_element(spec.unit_shape, cx, cy, r, rgb_to_hex(colors[k])))
    for k in sorted(overlay.markers):
        tags = sorted(
            range(len(overlay.markers[k])), key=lambda i: (overlay.markers[k][i], i)
        )
        offsets = _marker_offsets(len(tags), r)
        cx, cy = centers[k]
        for (dx, dy), i in zip(offsets, tags):
            tag = overlay.markers[k][i]
            if tag not in marker_map:
                raise ValueError(f"no marker shape assigned for class {tag!r}")
            lines.append(_marker_element(marker_map[tag], cx + dx, cy + dy, spec.marker_radius))
    for k in sorted(overlay.labels):
        cx, cy = centers[k]
        texts = overlay.labels[k]
        for i, text in enumerate(texts):
            y = cy - r - 4.0 - (len(texts) - 1 - i) * fs
            lines.append(
                f'<text x="{_fmt(cx)}" y="{_fmt(y)}" font-size="{_fmt(fs)}" '
                f'text-anchor="middle" font-family="sans-serif">{escape(text)}</text>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_scatter_svg(embedding: np.ndarray, colors, spec: RenderSpec) -> str:
    """SVG scatter of the raw 2D embedding, isotropically fitted with 5% margin.

    A dimension with zero extent falls back to a unit-sized viewport so a
    single or collinear point set still renders at the canvas center.
    """
    pts = np.asarray(embedding, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an Mx2 embedding, got {pts.shape}")
    if len(colors) != pts.shape[0]:
        raise ValueError(f"{len(colors)} colors for {pts.shape[0]} points")

    size = _SCATTER_CANVAS
    margin = 0.05 * size
    avail = size - 2.0 * margin
    mins = pts.min(axis=0)
    maxs = pts.max(axis=0)
    ranges = np.where(maxs - mins > 0.0, maxs - mins, 1.0)
    scale = avail / ranges.max()
    mid = (maxs + mins) / 2.0

    dot_r = max(2.0, 0.25 * spec.unit_radius_px)
    lines = _svg_open(size, size)
    lines.append(_background(size, size, spec.background))
    for k in range(pts.shape[0]):
        x = size / 2.0 + (pts[k, 0] - mid[0]) * scale
        y = size / 2.0 - (pts[k, 1] - mid[1]) * scale  # flip: y grows downward in SVG
        lines.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(dot_r)}" '
            f'fill="{rgb_to_hex(colors[k])}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_plane_swatch_svg(
    plane: ColorPlane, steps_u: int, steps_v: int, spec: RenderSpec
) -> str:
    """SVG swatch grid sampling the plane, gaps exposing the background.

    Lightness (v) increases upward; hue (u) increases rightward.
    """
    if steps_u < 2 or steps_v < 2:
        raise ValueError("swatch sampling needs at least 2 steps per axis")
    pitch = 2.0 * spec.unit_radius_px * (1.0 + spec.spacing_fraction)
    side = 2.0 * spec.unit_radius_px
    pad = pitch / 2.0
    width = (steps_u - 1) * pitch + side + 2.0 * pad
    height = (steps_v - 1) * pitch + side + 2.0 * pad

    lines = _svg_open(width, height)
    lines.append(_background(width, height, spec.background))
    for j in range(steps_v):  # top row first: v = 1 at the top
        v = 1.0 - j / (steps_v - 1)
        for i in range(steps_u):
            u = i / (steps_u - 1)
            fill = rgb_to_hex(lab_to_srgb(plane_color(plane, u, v)))
            x = pad + i * pitch
            y = pad + j * pitch
            lines.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(side)}" '
                f'height="{_fmt(side)}" fill="{fill}"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
