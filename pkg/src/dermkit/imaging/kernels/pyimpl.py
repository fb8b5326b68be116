"""Pure numpy implementation of the pixel kernels.

This is the fallback backend; ``_cyimpl`` is the compiled twin. The two are
kept arithmetically in lockstep: every uint8 image output is produced by the
same per-pixel float64 expression evaluated in the same order, so image
results are bit-identical across backends. Scalar reductions (variance,
means) may differ in the last couple of ulps because numpy sums pairwise.
"""

import numpy as np

BACKEND_NAME = "python"


def gaussian_blur(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable Gaussian convolution with edge replication.

    ``taps`` is the normalized 1-D kernel (odd length). Accumulation runs
    tap-by-tap in index order to match the compiled backend exactly.
    """
    h, w, _ = img.shape
    k = taps.shape[0]
    r = k // 2
    planes = img.astype(np.float64)

    padded = np.pad(planes, ((0, 0), (r, r), (0, 0)), mode="edge")
    acc = np.zeros((h, w, 3), dtype=np.float64)
    for i in range(k):
        acc += taps[i] * padded[:, i:i + w, :]

    padded = np.pad(acc, ((r, r), (0, 0), (0, 0)), mode="edge")
    acc = np.zeros((h, w, 3), dtype=np.float64)
    for i in range(k):
        acc += taps[i] * padded[i:i + h, :, :]

    return np.clip(np.floor(acc + 0.5), 0.0, 255.0).astype(np.uint8)


def _axis_bounds(n: int, m: int) -> np.ndarray:
    # m+1 integer boundaries; cell i covers [b[i], b[i+1])
    return (np.arange(m + 1, dtype=np.int64) * n) // m


def box_down_up(img: np.ndarray, h2: int, w2: int) -> np.ndarray:
    """Box-average downscale to (h2, w2), then nearest-neighbor upscale back.

    Box sums are integer-exact, so the result is backend independent.
    """
    h, w, _ = img.shape
    rb = _axis_bounds(h, h2)
    cb = _axis_bounds(w, w2)

    wide = img.astype(np.int64)
    rows = np.add.reduceat(wide, rb[:-1], axis=0)
    cells = np.add.reduceat(rows, cb[:-1], axis=1)
    counts = (rb[1:] - rb[:-1])[:, None] * (cb[1:] - cb[:-1])[None, :]
    means = cells / counts[:, :, None].astype(np.float64)
    small = np.clip(np.floor(means + 0.5), 0.0, 255.0).astype(np.uint8)

    ys = (np.arange(h, dtype=np.int64) * h2) // h
    xs = (np.arange(w, dtype=np.int64) * w2) // w
    return small[ys][:, xs]


def exposure_scale(img: np.ndarray, gain: float) -> np.ndarray:
    scaled = img.astype(np.float64) * gain
    return np.clip(np.floor(scaled + 0.5), 0.0, 255.0).astype(np.uint8)


def block_quantize(img: np.ndarray, strength: float, block: int = 8) -> np.ndarray:
    """Quantize each block channel into ``strength``-wide bins around the block mean."""
    h, w, _ = img.shape
    rb = _axis_bounds_blocks(h, block)
    cb = _axis_bounds_blocks(w, block)

    wide = img.astype(np.int64)
    rows = np.add.reduceat(wide, rb[:-1], axis=0)
    sums = np.add.reduceat(rows, cb[:-1], axis=1)
    counts = (rb[1:] - rb[:-1])[:, None] * (cb[1:] - cb[:-1])[None, :]
    means = sums / counts[:, :, None].astype(np.float64)

    row_ix = np.repeat(np.arange(rb.shape[0] - 1), rb[1:] - rb[:-1])
    col_ix = np.repeat(np.arange(cb.shape[0] - 1), cb[1:] - cb[:-1])
    mean_map = means[row_ix][:, col_ix]

    vals = img.astype(np.float64)
    q = mean_map + np.floor((vals - mean_map) / strength + 0.5) * strength
    return np.clip(np.floor(q + 0.5), 0.0, 255.0).astype(np.uint8)


def _axis_bounds_blocks(n: int, block: int) -> np.ndarray:
    bounds = list(range(0, n, block)) + [n]
    return np.asarray(bounds, dtype=np.int64)


def luminance(img: np.ndarray) -> np.ndarray:
    """BT.601 luminance plane as float64."""
    r = img[:, :, 0].astype(np.float64)
    g = img[:, :, 1].astype(np.float64)
    b = img[:, :, 2].astype(np.float64)
    return 0.299 * r + 0.587 * g + 0.114 * b


def feature_stats(lum: np.ndarray) -> tuple:
    """Seven scalar quality features of a luminance plane.

    Returns (laplacian_variance, gradient_energy, high_luminance_fraction,
    low_luminance_fraction, luminance_mean, luminance_std, blockiness).
    """
    h, w = lum.shape
    n = h * w

    lap = (
        4.0 * lum[1:-1, 1:-1]
        - lum[:-2, 1:-1]
        - lum[2:, 1:-1]
        - lum[1:-1, :-2]
        - lum[1:-1, 2:]
    )
    lap_mean = float(lap.mean())
    lap_var = float(((lap - lap_mean) ** 2).mean())

    gx = lum[:-1, 1:] - lum[:-1, :-1]
    gy = lum[1:, :-1] - lum[:-1, :-1]
    grad_energy = float((gx * gx + gy * gy).mean())

    high_frac = float(np.count_nonzero(lum >= 250.0)) / n
    low_frac = float(np.count_nonzero(lum <= 5.0)) / n

    mean = float(lum.mean())
    std = float(np.sqrt(((lum - mean) ** 2).mean()))

    hdiff = np.abs(lum[:, 1:] - lum[:, :-1])
    vdiff = np.abs(lum[1:, :] - lum[:-1, :])
    xs = np.arange(1, w)
    ys = np.arange(1, h)
    h_edge = (xs % 8) == 0
    v_edge = (ys % 8) == 0
    edge_sum = float(hdiff[:, h_edge].sum()) + float(vdiff[v_edge, :].sum())
    edge_cnt = int(h_edge.sum()) * h + int(v_edge.sum()) * w
    body_sum = float(hdiff[:, ~h_edge].sum()) + float(vdiff[~v_edge, :].sum())
    body_cnt = int((~h_edge).sum()) * h + int((~v_edge).sum()) * w
    blockiness = max(0.0, edge_sum / edge_cnt - body_sum / body_cnt)

    return (lap_var, grad_energy, high_frac, low_frac, mean, std, blockiness)
