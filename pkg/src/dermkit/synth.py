"""Seeded synthetic textures for quality-gate supervision and demos.

Textures combine a smooth bilinear color field with fine grain, keeping
mid-range exposure, strong local detail and near-zero blockiness, so each
distortion kind leaves a distinct feature signature.
"""

from __future__ import annotations

import numpy as np

from .imaging import ImageBuffer


def _bilinear_upscale(low: np.ndarray, h: int, w: int) -> np.ndarray:
    lh, lw, _ = low.shape
    ys = np.linspace(0.0, lh - 1.0, h)
    xs = np.linspace(0.0, lw - 1.0, w)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, lh - 1)
    x1 = np.minimum(x0 + 1, lw - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = low[y0][:, x0] * (1.0 - fx) + low[y0][:, x1] * fx
    bottom = low[y1][:, x0] * (1.0 - fx) + low[y1][:, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def texture(size: int = 64, seed: int = 0, tint=(0, 0, 0)) -> ImageBuffer:
    """One clean seeded texture; ``tint`` shifts the mean color per channel."""
    rng = np.random.default_rng(seed)
    low = rng.uniform(60.0, 196.0, (9, 9, 3))
    base = _bilinear_upscale(low, size, size)
    grain = rng.normal(0.0, 18.0, (size, size, 3))
    arr = base + grain + np.asarray(tint, dtype=np.float64)
    return ImageBuffer(np.clip(arr, 20.0, 235.0).astype(np.uint8))


def clean_corpus(count: int, size: int = 64, seed: int = 0) -> list:
    return [texture(size=size, seed=seed + 9973 * i) for i in range(count)]


CLASS_TINTS = (
    (40, -30, -30), (-30, 40, -30), (-30, -30, 40), (35, 35, -35),
    (35, -35, 35), (-35, 35, 35), (0, 0, 0),
)


def labeled_corpus(per_class: int, n_classes: int, size: int = 64, seed: int = 0) -> list:
    """(image, label) pairs with class-specific color tints, one list."""
    if n_classes > len(CLASS_TINTS):
        raise ValueError(f"at most {len(CLASS_TINTS)} tinted classes supported")
    out = []
    for label in range(n_classes):
        for i in range(per_class):
            img = texture(size=size, seed=seed + 131 * label + 7 * i + 1,
                          tint=CLASS_TINTS[label])
            out.append((img, label))
    return out
