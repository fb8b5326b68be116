"""Capture-geometry operations: centered square crop and circular-ROI crop.

All arithmetic is integer (half-up rounding where fractions appear), so
results are exact and backend independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidCropError, InvalidRoiError, ValidationError
from .buffer import ImageBuffer


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class CropSpec:
    """Side of the centered square crop as a fraction of min(width, height)."""

    fraction: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.fraction <= 1.0):
            raise ValidationError(f"crop fraction must be in (0, 1], got {self.fraction}")


@dataclass(frozen=True)
class RoiCircle:
    """Clinician-marked lesion center and radius, in image pixel coordinates."""

    center_x: float
    center_y: float
    radius: float

    def validate_for(self, img: ImageBuffer) -> None:
        if self.radius <= 0:
            raise InvalidRoiError(f"roi radius must be > 0, got {self.radius}")
        if not (0 <= self.center_x < img.width and 0 <= self.center_y < img.height):
            raise InvalidRoiError(
                f"roi center ({self.center_x}, {self.center_y}) outside "
                f"{img.width}x{img.height} image"
            )


def center_square_region(width: int, height: int, fraction: float = 1.0):
    """(x, y, side) of the centered square crop; shared with overlay clients."""
    side = math.floor(fraction * min(width, height))
    if side == 0:
        raise InvalidCropError(
            f"crop fraction {fraction} on {width}x{height} image yields empty crop"
        )
    return (width - side) // 2, (height - side) // 2, side


def center_square_crop(img: ImageBuffer, spec: CropSpec = CropSpec()) -> ImageBuffer:
    """Largest (or fraction-scaled) centered square, pixels copied verbatim."""
    x0, y0, side = center_square_region(img.width, img.height, spec.fraction)
    return ImageBuffer(img.array[y0:y0 + side, x0:x0 + side].copy())


def roi_box(img_w: int, img_h: int, roi: RoiCircle, padding: float = 1.0):
    """Square box of side round(2 * radius * padding) centered on the ROI.

    The box is translated (never shrunk) to stay inside the image; the side
    is clamped to min(img_w, img_h) when the padded circle exceeds the image.
    Returns (x0, y0, side).
    """
    side = _round_half_up(2.0 * roi.radius * padding)
    side = min(side, min(img_w, img_h))
    side = max(side, 1)
    x0 = _round_half_up(roi.center_x - side / 2.0)
    y0 = _round_half_up(roi.center_y - side / 2.0)
    x0 = min(max(x0, 0), img_w - side)
    y0 = min(max(y0, 0), img_h - side)
    return x0, y0, side


def roi_crop(img: ImageBuffer, roi: RoiCircle, padding: float = 1.0) -> ImageBuffer:
    """Axis-aligned square crop around a circular region of interest."""
    if padding < 1.0:
        raise ValidationError(f"roi padding must be >= 1, got {padding}")
    roi.validate_for(img)
    x0, y0, side = roi_box(img.width, img.height, roi, padding)
    return ImageBuffer(img.array[y0:y0 + side, x0:x0 + side].copy())
