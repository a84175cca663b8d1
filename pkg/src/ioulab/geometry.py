"""Axis-aligned box geometry: overlap, enclosure, and center-scaled boxes.

Boxes live in center form (x, y, w, h) with y growing downward, so ``top``
is the smaller ordinate. Degenerate boxes are rejected at construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

# Scaling ratios outside this interval are legal but unusual enough to flag.
RATIO_RANGE = (0.5, 1.5)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in center form with strictly positive sides."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box fields must be finite, got {self!r}")
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")
        # Side lengths must survive the corner round trip; overlap math
        # divides by corner-derived areas.
        if not (self.left < self.right and self.top < self.bottom):
            raise ValueError(
                f"box sides vanish at the center's float resolution, got {self!r}"
            )

    @property
    def left(self) -> float:
        return self.x - self.w / 2.0

    @property
    def right(self) -> float:
        return self.x + self.w / 2.0

    @property
    def top(self) -> float:
        return self.y - self.h / 2.0

    @property
    def bottom(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class Corners:
    """Corner form of a box; ``left <= right`` and ``top <= bottom``."""

    left: float
    right: float
    top: float
    bottom: float

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top


@dataclass(frozen=True)
class EnclosingBox:
    """Smallest axis-aligned box covering a pair of boxes."""

    corners: Corners
    width: float
    height: float
    area: float
    diagonal_sq: float


def _check_ratio(ratio: float) -> float:
    ratio = float(ratio)
    if not math.isfinite(ratio) or ratio <= 0.0:
        raise ValueError(f"scaling ratio must be a positive finite number, got {ratio}")
    lo, hi = RATIO_RANGE
    if not (lo <= ratio <= hi):
        warnings.warn(
            f"scaling ratio {ratio:g} is outside the typical range [{lo:g}, {hi:g}]",
            stacklevel=3,
        )
    return ratio


def to_corners(box: Box, ratio: float = 1.0) -> Corners:
    """Corner form of ``box`` scaled by ``ratio`` about its own center."""
    if ratio == 1.0:
        return Corners(box.left, box.right, box.top, box.bottom)
    ratio = _check_ratio(ratio)
    hw = (box.w * ratio) / 2.0
    hh = (box.h * ratio) / 2.0
    return Corners(box.x - hw, box.x + hw, box.y - hh, box.y + hh)


def scale_about_center(box: Box, ratio: float) -> Box:
    """A copy of ``box`` with both sides scaled by ``ratio``, center fixed."""
    ratio = _check_ratio(ratio)
    return Box(box.x, box.y, box.w * ratio, box.h * ratio)


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 1 iff the boxes coincide, 0 iff disjoint interiors."""
    iw = max(0.0, min(a.right, b.right) - max(a.left, b.left))
    ih = max(0.0, min(a.bottom, b.bottom) - max(a.top, b.top))
    inter = iw * ih
    # Areas from the same corner subtractions as the intersection keep the
    # quotient <= 1 in floats and exactly 1 on identical boxes.
    area_a = (a.right - a.left) * (a.bottom - a.top)
    area_b = (b.right - b.left) * (b.bottom - b.top)
    return inter / (area_a + area_b - inter)


def enclosing(a: Box, b: Box) -> EnclosingBox:
    """Smallest axis-aligned box covering both inputs."""
    left = min(a.left, b.left)
    right = max(a.right, b.right)
    top = min(a.top, b.top)
    bottom = max(a.bottom, b.bottom)
    width = right - left
    height = bottom - top
    return EnclosingBox(
        corners=Corners(left, right, top, bottom),
        width=width,
        height=height,
        area=width * height,
        diagonal_sq=width * width + height * height,
    )


def inner_iou(a: Box, b: Box, ratio: float) -> float:
    """IoU of the two boxes scaled by ``ratio`` about their own centers.

    With ``ratio == 1`` this degenerates to :func:`iou` bit for bit.
    """
    ratio = _check_ratio(ratio)
    ca = to_corners(a, ratio)
    cb = to_corners(b, ratio)
    iw = max(0.0, min(ca.right, cb.right) - max(ca.left, cb.left))
    ih = max(0.0, min(ca.bottom, cb.bottom) - max(ca.top, cb.top))
    inter = iw * ih
    union = ca.width * ca.height + cb.width * cb.height - inter
    return inter / union
