"""Deterministic no-reference quality features.

Seven scalars computed on the BT.601 luminance plane (weights
0.299/0.587/0.114) feed the trainable quality head:

* laplacian_variance  - variance of the 4-neighbor Laplacian (focus proxy)
* gradient_energy     - mean squared forward-difference gradient magnitude
* high_luminance_fraction - share of pixels with luminance >= 250
* low_luminance_fraction  - share of pixels with luminance <= 5
* luminance_mean, luminance_std
* blockiness          - mean absolute step across 8-pixel block boundaries
                        minus the within-block baseline, floored at 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from . import kernels
from .buffer import ImageBuffer

FEATURE_NAMES = (
    "laplacian_variance",
    "gradient_energy",
    "high_luminance_fraction",
    "low_luminance_fraction",
    "luminance_mean",
    "luminance_std",
    "blockiness",
)

FEATURE_DIM = len(FEATURE_NAMES)


@dataclass(frozen=True)
class QualityFeatures:
    laplacian_variance: float
    gradient_energy: float
    high_luminance_fraction: float
    low_luminance_fraction: float
    luminance_mean: float
    luminance_std: float
    blockiness: float

    def as_vector(self) -> np.ndarray:
        return np.asarray(
            [
                self.laplacian_variance,
                self.gradient_energy,
                self.high_luminance_fraction,
                self.low_luminance_fraction,
                self.luminance_mean,
                self.luminance_std,
                self.blockiness,
            ],
            dtype=np.float64,
        )


def quality_features(img: ImageBuffer) -> QualityFeatures:
    """Feature vector for the quality model; requires min side >= 16."""
    if min(img.width, img.height) < 16:
        raise ValidationError(
            f"image must be at least 16x16 for quality features, got {img.width}x{img.height}"
        )
    lum = kernels.luminance(img.array)
    stats = kernels.feature_stats(lum)
    feats = QualityFeatures(*[float(v) for v in stats])
    for name, value in zip(FEATURE_NAMES, feats.as_vector()):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite quality feature {name}={value}")
    return feats
