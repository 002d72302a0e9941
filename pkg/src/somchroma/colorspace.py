"""Two-dimensional CIELAB color planes and display conversion.

A color plane maps the unit square to (L*, a*, b*): the u axis sweeps a line
in the a*b* plane (hue) and the v axis sweeps lightness. Because the plane
lives inside CIELAB, Euclidean distance between any two of its colors is
exactly the perceptual difference Delta-E*ab.

Display conversion is CIELAB -> XYZ (D65) -> linear RGB (sRGB primaries) ->
sRGB gamma encoding. The reference white is taken as the XYZ of RGB(1,1,1)
under the sRGB matrix, which makes L*=100 map to exact display white.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "LabColor",
    "RgbColor",
    "ColorPlane",
    "builtin_planes",
    "get_plane",
    "plane_from_dict",
    "plane_to_dict",
    "plane_color",
    "lab_to_srgb",
    "srgb_to_lab",
    "in_gamut",
    "colorize",
    "delta_e",
    "rgb_to_hex",
    "hex_to_rgb",
    "check_plane_gamut",
    "GAMUT_TOLERANCE",
]

# CIE constants in exact rational form
_EPSILON = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0

# sRGB D65 linear-RGB -> XYZ (IEC 61966-2-1 primaries)
_M_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_M_XYZ_TO_RGB = np.linalg.inv(_M_RGB_TO_XYZ)

# White implied by the matrix (nominal D65); guarantees Lab(100,0,0) -> (1,1,1)
REFERENCE_WHITE = _M_RGB_TO_XYZ @ np.ones(3)

GAMUT_TOLERANCE = 0.002
GAMUT_SWEEP_STEPS = 101


class LabColor(NamedTuple):
    L: float
    a: float
    b: float


class RgbColor(NamedTuple):
    r: float
    g: float
    b: float


@dataclass(frozen=True)
class ColorPlane:
    """2D subspace of CIELAB over the unit square.

    b_rule is either a constant b* value or the string "a", meaning b* tracks
    a* (a diagonal line in the a*b* plane).
    """

    name: str
    L_range: tuple[float, float]
    a_range: tuple[float, float]
    b_rule: float | str

    def __post_init__(self):
        lo, hi = self.L_range
        if not (0.0 <= lo < hi <= 100.0):
            raise ValueError(f"L_range must satisfy 0 <= lo < hi <= 100, got {self.L_range}")
        if isinstance(self.b_rule, str):
            if self.b_rule != "a":
                raise ValueError(f'b_rule must be a number or "a", got {self.b_rule!r}')
        else:
            object.__setattr__(self, "b_rule", float(self.b_rule))


def builtin_planes() -> list[ColorPlane]:
    """The two built-in scales: green-yellow-red and cyan-gray-red."""
    return [
        ColorPlane("green-yellow-red", (20.0, 80.0), (-60.0, 60.0), 40.0),
        ColorPlane("cyan-gray-red", (20.0, 80.0), (-45.0, 45.0), "a"),
    ]


def get_plane(name: str) -> ColorPlane:
    for plane in builtin_planes():
        if plane.name == name:
            return plane
    known = ", ".join(p.name for p in builtin_planes())
    raise ValueError(f"unknown color plane {name!r}; built-in planes: {known}")


def plane_from_dict(payload: dict) -> ColorPlane:
    """Build a plane from config ({name, L_range, a_range, b_rule})."""
    try:
        return ColorPlane(
            name=str(payload["name"]),
            L_range=(float(payload["L_range"][0]), float(payload["L_range"][1])),
            a_range=(float(payload["a_range"][0]), float(payload["a_range"][1])),
            b_rule=payload["b_rule"],
        )
    except KeyError as exc:
        raise ValueError(f"plane definition missing key {exc}") from None


def plane_to_dict(plane: ColorPlane) -> dict:
    return {
        "name": plane.name,
        "L_range": list(plane.L_range),
        "a_range": list(plane.a_range),
        "b_rule": plane.b_rule,
    }


def _plane_lab(plane: ColorPlane, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    L = plane.L_range[0] + v * (plane.L_range[1] - plane.L_range[0])
    a = plane.a_range[0] + u * (plane.a_range[1] - plane.a_range[0])
    b = a if plane.b_rule == "a" else np.full_like(a, plane.b_rule)
    return np.stack([L, a, b], axis=-1)


def plane_color(plane: ColorPlane, u: float, v: float) -> LabColor:
    """Lab color at (u, v): u drives hue (the a*b* line), v drives lightness."""
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise ValueError(f"(u, v) must lie in the unit square, got ({u}, {v})")
    lab = _plane_lab(plane, np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return LabColor(float(lab[..., 0]), float(lab[..., 1]), float(lab[..., 2]))


def _lab_to_xyz(lab: np.ndarray) -> np.ndarray:
    L, a, b = lab[..., 0], lab[..., 1], lab[..., 2]
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0

    def f_inv(f):
        f3 = f ** 3
        return np.where(f3 > _EPSILON, f3, (116.0 * f - 16.0) / _KAPPA)

    # KAPPA * EPSILON == 8 exactly
    yr = np.where(L > 8.0, fy ** 3, L / _KAPPA)
    return np.stack([f_inv(fx), yr, f_inv(fz)], axis=-1) * REFERENCE_WHITE


def _xyz_to_lab(xyz: np.ndarray) -> np.ndarray:
    r = xyz / REFERENCE_WHITE
    f = np.where(r > _EPSILON, np.cbrt(r), (_KAPPA * r + 16.0) / 116.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def _gamma_encode(linear: np.ndarray) -> np.ndarray:
    # sign-preserving so slightly negative channels stay comparable
    sign = np.sign(linear)
    mag = np.abs(linear)
    with np.errstate(invalid="ignore"):
        enc = np.where(mag <= 0.0031308, 12.92 * mag, 1.055 * mag ** (1.0 / 2.4) - 0.055)
    return sign * enc


def _gamma_decode(encoded: np.ndarray) -> np.ndarray:
    sign = np.sign(encoded)
    mag = np.abs(encoded)
    lin = np.where(mag <= 0.04045, mag / 12.92, ((mag + 0.055) / 1.055) ** 2.4)
    return sign * lin


def _lab_to_encoded_rgb(lab: np.ndarray) -> np.ndarray:
    """Gamma-encoded sRGB channels before any clamping."""
    xyz = _lab_to_xyz(np.asarray(lab, dtype=float))
    linear = np.einsum("ij,...j->...i", _M_XYZ_TO_RGB, xyz)
    return _gamma_encode(linear)


def lab_to_srgb(c: LabColor) -> RgbColor:
    """Display encoding of a Lab color; out-of-gamut channels are clamped.

    Gamut status is queryable separately via in_gamut.
    """
    enc = _lab_to_encoded_rgb(np.array([c.L, c.a, c.b]))
    enc = np.clip(enc, 0.0, 1.0)
    return RgbColor(float(enc[0]), float(enc[1]), float(enc[2]))


def srgb_to_lab(c: RgbColor) -> LabColor:
    """Inverse display conversion (sRGB in [0,1] per channel)."""
    linear = _gamma_decode(np.array([c.r, c.g, c.b], dtype=float))
    xyz = _M_RGB_TO_XYZ @ linear
    lab = _xyz_to_lab(xyz)
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def in_gamut(c: LabColor, tolerance: float = GAMUT_TOLERANCE) -> bool:
    """True when all pre-clamp encoded channels lie in [-tolerance, 1+tolerance]."""
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    enc = _lab_to_encoded_rgb(np.array([c.L, c.a, c.b]))
    return bool(np.all(enc >= -tolerance) and np.all(enc <= 1.0 + tolerance))


def delta_e(c1: LabColor, c2: LabColor) -> float:
    """CIE 1976 color difference (Euclidean distance in Lab)."""
    return math.sqrt((c1.L - c2.L) ** 2 + (c1.a - c2.a) ** 2 + (c1.b - c2.b) ** 2)


def colorize(embedding: np.ndarray, plane: ColorPlane) -> list[RgbColor]:
    """Map normalized embedding coordinates to unit colors.

    Dimension 1 drives hue (u) and dimension 2 lightness (v), per the
    recommendation that hue carry the dominant component.
    """
    pts = np.asarray(embedding, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an Mx2 embedding, got {pts.shape}")
    if np.any(pts < 0.0) or np.any(pts > 1.0):
        bad = np.argwhere((pts < 0.0) | (pts > 1.0))[0]
        raise ValueError(
            f"embedding coordinate outside the unit square at row {bad[0]}, dim {bad[1]}"
        )
    lab = _plane_lab(plane, pts[:, 0], pts[:, 1])
    enc = np.clip(_lab_to_encoded_rgb(lab), 0.0, 1.0)
    return [RgbColor(float(r), float(g), float(b)) for r, g, b in enc]


def rgb_to_hex(c: RgbColor) -> str:
    """#RRGGBB with channels rounded half-up from [0,1]."""
    def chan(x: float) -> int:
        return min(255, int(x * 255.0 + 0.5))

    return f"#{chan(c.r):02X}{chan(c.g):02X}{chan(c.b):02X}"


def hex_to_rgb(text: str) -> RgbColor:
    """Parse #RRGGBB into channel floats in [0, 1]."""
    if not (len(text) == 7 and text.startswith("#")):
        raise ValueError(f"expected a #RRGGBB color, got {text!r}")
    try:
        r, g, b = (int(text[i:i + 2], 16) for i in (1, 3, 5))
    except ValueError:
        raise ValueError(f"expected a #RRGGBB color, got {text!r}") from None
    return RgbColor(r / 255.0, g / 255.0, b / 255.0)


def check_plane_gamut(
    plane: ColorPlane,
    tolerance: float = GAMUT_TOLERANCE,
    steps: int = GAMUT_SWEEP_STEPS,
) -> tuple[bool, tuple[float, float], float]:
    """Sweep a steps x steps (u, v) grid and report the worst gamut excess.

    Returns (ok, worst (u, v), worst excess beyond [0, 1]). Used to vet
    custom planes from config before they are accepted.
    """
    u = np.linspace(0.0, 1.0, steps)
    v = np.linspace(0.0, 1.0, steps)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    enc = _lab_to_encoded_rgb(_plane_lab(plane, uu, vv))
    excess = np.maximum(-enc, enc - 1.0).max(axis=-1)
    worst_flat = int(np.argmax(excess))
    i, j = np.unravel_index(worst_flat, excess.shape)
    worst = float(excess[i, j])
    return worst <= tolerance, (float(u[i]), float(v[j])), worst
