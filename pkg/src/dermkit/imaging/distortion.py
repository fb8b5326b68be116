"""Synthetic capture-degradation generators.

Four kinds mirror the quality indicators they supervise:

* ``blur``           - Gaussian convolution, magnitude = sigma
* ``sharpness_loss`` - box downscale by the magnitude factor, then
                       nearest-neighbor upscale back (resolution loss)
* ``exposure``       - per-channel gain, clamped; >1 over-, <1 under-exposes
* ``compression``    - per 8x8 block, pixel values quantized into
                       magnitude-wide bins around the block mean, which
                       manufactures blocking artifacts without a codec

Every kind is a deterministic closed-form transform; the ``seed`` argument
of :func:`apply_distortion` is reserved for randomized variants and does not
affect the current kinds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from . import kernels
from .buffer import ImageBuffer

DISTORTION_KINDS = ("blur", "sharpness_loss", "exposure", "compression")


@dataclass(frozen=True)
class DistortionSpec:
    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in DISTORTION_KINDS:
            raise ValidationError(f"unknown distortion kind {self.kind!r}")
        m = self.magnitude
        if self.kind == "blur" and m < 0:
            raise ValidationError("blur sigma must be >= 0")
        if self.kind == "sharpness_loss" and m < 1:
            raise ValidationError("sharpness_loss factor must be >= 1")
        if self.kind == "exposure" and m <= 0:
            raise ValidationError("exposure gain must be > 0")
        if self.kind == "compression" and m < 0:
            raise ValidationError("compression strength must be >= 0")


def gaussian_taps(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian kernel with radius ceil(3 * sigma).

    Weights are built here (math.exp) and handed to either backend so both
    convolve with bit-identical taps.
    """
    radius = int(math.ceil(3.0 * sigma))
    if radius == 0:
        return np.ones(1, dtype=np.float64)
    raw = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-radius, radius + 1)]
    total = sum(raw)
    return np.asarray([v / total for v in raw], dtype=np.float64)


def apply_distortion(img: ImageBuffer, spec: DistortionSpec, seed: int = 0) -> ImageBuffer:
    """Return a distorted copy; identity whenever the magnitude is neutral."""
    kind, m = spec.kind, spec.magnitude

    if kind == "blur":
        if m == 0:
            return ImageBuffer(img.array.copy())
        return ImageBuffer(kernels.gaussian_blur(img.array, gaussian_taps(m)))

    if kind == "sharpness_loss":
        if m == 1:
            return ImageBuffer(img.array.copy())
        h2 = max(1, int(math.floor(img.height / m)))
        w2 = max(1, int(math.floor(img.width / m)))
        return ImageBuffer(kernels.box_down_up(img.array, h2, w2))

    if kind == "exposure":
        if m == 1:
            return ImageBuffer(img.array.copy())
        return ImageBuffer(kernels.exposure_scale(img.array, float(m)))

    if kind == "compression":
        if m == 0:
            return ImageBuffer(img.array.copy())
        return ImageBuffer(kernels.block_quantize(img.array, float(m)))

    raise ValidationError(f"unknown distortion kind {kind!r}")


def default_distortion_grid() -> list:
    """Magnitude grid covering all four kinds, used for synthetic supervision."""
    grid = []
    grid += [DistortionSpec("blur", s) for s in (1.5, 3.0, 5.0)]
    grid += [DistortionSpec("sharpness_loss", f) for f in (2.0, 4.0, 6.0)]
    grid += [DistortionSpec("exposure", g) for g in (0.25, 0.5, 2.0, 3.0)]
    grid += [DistortionSpec("compression", q) for q in (48.0, 80.0, 128.0)]
    return grid
