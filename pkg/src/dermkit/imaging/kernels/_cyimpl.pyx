# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels; the arithmetic twin of ``pyimpl``.

Per-pixel float64 expressions and tap accumulation order are identical to
the numpy fallback (the extension is built with -ffp-contract=off), so uint8
image outputs match bit for bit. Scalar reductions accumulate sequentially
and may differ from numpy's pairwise sums in the last ulps.
"""

from libc.math cimport floor, sqrt, fabs

import numpy as np

BACKEND_NAME = "compiled"


cdef inline double _clamp255(double v) nogil:
    v = floor(v + 0.5)
    if v < 0.0:
        return 0.0
    if v > 255.0:
        return 255.0
    return v


cdef inline Py_ssize_t _reflect_edge(Py_ssize_t i, Py_ssize_t n) nogil:
    # edge replication, matching np.pad(mode="edge")
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


def gaussian_blur(unsigned char[:, :, ::1] img, double[::1] taps):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t k = taps.shape[0], r = k // 2
    cdef Py_ssize_t y, x, c, i, src
    cdef double acc

    tmp_arr = np.empty((h, w, 3), dtype=np.float64)
    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef double[:, :, ::1] tmp = tmp_arr
    cdef unsigned char[:, :, ::1] out = out_arr

    with nogil:
        for y in range(h):
            for x in range(w):
                for c in range(3):
                    acc = 0.0
                    for i in range(k):
                        src = _reflect_edge(x + i - r, w)
                        acc += taps[i] * <double>img[y, src, c]
                    tmp[y, x, c] = acc
        for y in range(h):
            for x in range(w):
                for c in range(3):
                    acc = 0.0
                    for i in range(k):
                        src = _reflect_edge(y + i - r, h)
                        acc += taps[i] * tmp[src, x, c]
                    out[y, x, c] = <unsigned char>_clamp255(acc)
    return out_arr


def box_down_up(unsigned char[:, :, ::1] img, Py_ssize_t h2, Py_ssize_t w2):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t i, j, c, y, x, y0, y1, x0, x1
    cdef long long total
    cdef double mean

    small_arr = np.empty((h2, w2, 3), dtype=np.uint8)
    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] small = small_arr
    cdef unsigned char[:, :, ::1] out = out_arr

    with nogil:
        for i in range(h2):
            y0 = (i * h) // h2
            y1 = ((i + 1) * h) // h2
            for j in range(w2):
                x0 = (j * w) // w2
                x1 = ((j + 1) * w) // w2
                for c in range(3):
                    total = 0
                    for y in range(y0, y1):
                        for x in range(x0, x1):
                            total += img[y, x, c]
                    mean = <double>total / <double>((y1 - y0) * (x1 - x0))
                    small[i, j, c] = <unsigned char>_clamp255(mean)
        for y in range(h):
            i = (y * h2) // h
            for x in range(w):
                j = (x * w2) // w
                for c in range(3):
                    out[y, x, c] = small[i, j, c]
    return out_arr


def exposure_scale(unsigned char[:, :, ::1] img, double gain):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t y, x, c

    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    with nogil:
        for y in range(h):
            for x in range(w):
                for c in range(3):
                    out[y, x, c] = <unsigned char>_clamp255(<double>img[y, x, c] * gain)
    return out_arr


def block_quantize(unsigned char[:, :, ::1] img, double strength, Py_ssize_t block=8):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t by, bx, y, x, c, y1, x1
    cdef long long total
    cdef double mean, q

    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    with nogil:
        by = 0
        while by < h:
            y1 = by + block
            if y1 > h:
                y1 = h
            bx = 0
            while bx < w:
                x1 = bx + block
                if x1 > w:
                    x1 = w
                for c in range(3):
                    total = 0
                    for y in range(by, y1):
                        for x in range(bx, x1):
                            total += img[y, x, c]
                    mean = <double>total / <double>((y1 - by) * (x1 - bx))
                    for y in range(by, y1):
                        for x in range(bx, x1):
                            q = mean + floor((<double>img[y, x, c] - mean) / strength + 0.5) * strength
                            out[y, x, c] = <unsigned char>_clamp255(q)
                bx += block
            by += block
    return out_arr


def luminance(unsigned char[:, :, ::1] img):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t y, x

    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for y in range(h):
            for x in range(w):
                out[y, x] = 0.299 * <double>img[y, x, 0] + 0.587 * <double>img[y, x, 1] + 0.114 * <double>img[y, x, 2]
    return out_arr


def feature_stats(double[:, ::1] lum):
    cdef Py_ssize_t h = lum.shape[0], w = lum.shape[1]
    cdef Py_ssize_t y, x
    cdef double n = <double>(h * w)
    cdef double d, gx, gy, v
    cdef double lap_sum = 0.0, lap_sq = 0.0, lap_mean
    cdef double grad_sum = 0.0
    cdef double mean_sum = 0.0, var_sum = 0.0, mean
    cdef long long high = 0, low = 0
    cdef double edge_sum = 0.0, body_sum = 0.0
    cdef long long edge_cnt = 0, body_cnt = 0
    cdef double lap_var, grad_energy, std, blockiness

    with nogil:
        for y in range(1, h - 1):
            for x in range(1, w - 1):
                d = 4.0 * lum[y, x] - lum[y - 1, x] - lum[y + 1, x] - lum[y, x - 1] - lum[y, x + 1]
                lap_sum += d
        lap_mean = lap_sum / <double>((h - 2) * (w - 2))
        for y in range(1, h - 1):
            for x in range(1, w - 1):
                d = 4.0 * lum[y, x] - lum[y - 1, x] - lum[y + 1, x] - lum[y, x - 1] - lum[y, x + 1]
                v = d - lap_mean
                lap_sq += v * v
        lap_var = lap_sq / <double>((h - 2) * (w - 2))

        for y in range(h - 1):
            for x in range(w - 1):
                gx = lum[y, x + 1] - lum[y, x]
                gy = lum[y + 1, x] - lum[y, x]
                grad_sum += gx * gx + gy * gy
        grad_energy = grad_sum / <double>((h - 1) * (w - 1))

        for y in range(h):
            for x in range(w):
                if lum[y, x] >= 250.0:
                    high += 1
                if lum[y, x] <= 5.0:
                    low += 1
                mean_sum += lum[y, x]
        mean = mean_sum / n
        for y in range(h):
            for x in range(w):
                v = lum[y, x] - mean
                var_sum += v * v
        std = sqrt(var_sum / n)

        for y in range(h):
            for x in range(1, w):
                d = fabs(lum[y, x] - lum[y, x - 1])
                if x % 8 == 0:
                    edge_sum += d
                    edge_cnt += 1
                else:
                    body_sum += d
                    body_cnt += 1
        for y in range(1, h):
            for x in range(w):
                d = fabs(lum[y, x] - lum[y - 1, x])
                if y % 8 == 0:
                    edge_sum += d
                    edge_cnt += 1
                else:
                    body_sum += d
                    body_cnt += 1
        blockiness = edge_sum / <double>edge_cnt - body_sum / <double>body_cnt
        if blockiness < 0.0:
            blockiness = 0.0

    return (
        lap_var,
        grad_energy,
        <double>high / n,
        <double>low / n,
        mean,
        std,
        blockiness,
    )
