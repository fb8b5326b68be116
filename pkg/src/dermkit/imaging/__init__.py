"""Image representation, capture geometry, distortions and quality features."""

from .buffer import ImageBuffer
from .distortion import (
    DISTORTION_KINDS,
    DistortionSpec,
    apply_distortion,
    default_distortion_grid,
    gaussian_taps,
)
from .features import FEATURE_DIM, FEATURE_NAMES, QualityFeatures, quality_features
from .geometry import (
    CropSpec,
    RoiCircle,
    center_square_crop,
    center_square_region,
    roi_box,
    roi_crop,
)
from .kernels import BACKEND as KERNEL_BACKEND

__all__ = [
    "ImageBuffer",
    "CropSpec",
    "RoiCircle",
    "center_square_crop",
    "center_square_region",
    "roi_box",
    "roi_crop",
    "DistortionSpec",
    "DISTORTION_KINDS",
    "apply_distortion",
    "default_distortion_grid",
    "gaussian_taps",
    "QualityFeatures",
    "quality_features",
    "FEATURE_NAMES",
    "FEATURE_DIM",
    "KERNEL_BACKEND",
]
