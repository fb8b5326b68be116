"""Independent reference implementations used as test oracles.

Everything here is written from the documented math, naive-loop style, and
stays decoupled from the package internals it checks.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


# --- geometry ---------------------------------------------------------------

def crop_box(width: int, height: int, fraction: float):
    side = math.floor(fraction * min(width, height))
    return (width - side) // 2, (height - side) // 2, side


def roi_box(width: int, height: int, cx: float, cy: float, radius: float,
            padding: float):
    side = math.floor(2.0 * radius * padding + 0.5)
    if side > min(width, height):
        side = min(width, height)
    if side < 1:
        side = 1
    x0 = math.floor(cx - side / 2.0 + 0.5)
    y0 = math.floor(cy - side / 2.0 + 0.5)
    x0 = min(max(x0, 0), width - side)
    y0 = min(max(y0, 0), height - side)
    return x0, y0, side


# --- quality features -------------------------------------------------------

def reference_features(img) -> dict:
    """Naive-loop feature computation on an ImageBuffer."""
    a = img.array
    h, w = img.height, img.width
    lum = [[0.299 * float(a[y, x, 0]) + 0.587 * float(a[y, x, 1])
            + 0.114 * float(a[y, x, 2]) for x in range(w)] for y in range(h)]

    lap_vals = []
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            lap_vals.append(4.0 * lum[y][x] - lum[y - 1][x] - lum[y + 1][x]
                            - lum[y][x - 1] - lum[y][x + 1])
    lap_mean = sum(lap_vals) / len(lap_vals)
    lap_var = sum((v - lap_mean) ** 2 for v in lap_vals) / len(lap_vals)

    grads = []
    for y in range(h - 1):
        for x in range(w - 1):
            gx = lum[y][x + 1] - lum[y][x]
            gy = lum[y + 1][x] - lum[y][x]
            grads.append(gx * gx + gy * gy)
    grad_energy = sum(grads) / len(grads)

    n = h * w
    high = sum(1 for row in lum for v in row if v >= 250.0)
    low = sum(1 for row in lum for v in row if v <= 5.0)
    mean = sum(v for row in lum for v in row) / n
    std = math.sqrt(sum((v - mean) ** 2 for row in lum for v in row) / n)

    edge, body = [], []
    for y in range(h):
        for x in range(1, w):
            d = abs(lum[y][x] - lum[y][x - 1])
            (edge if x % 8 == 0 else body).append(d)
    for y in range(1, h):
        for x in range(w):
            d = abs(lum[y][x] - lum[y - 1][x])
            (edge if y % 8 == 0 else body).append(d)
    blockiness = max(0.0, sum(edge) / len(edge) - sum(body) / len(body))

    return {
        "laplacian_variance": lap_var,
        "gradient_energy": grad_energy,
        "high_luminance_fraction": high / n,
        "low_luminance_fraction": low / n,
        "luminance_mean": mean,
        "luminance_std": std,
        "blockiness": blockiness,
    }


# --- metrics ----------------------------------------------------------------

def reference_metrics(predictions, labels, n_classes: int) -> dict:
    """Exact-fraction confusion-matrix metrics (macro over ground-truth classes)."""
    tp = [0] * n_classes
    fp = [0] * n_classes
    fn = [0] * n_classes
    support = [0] * n_classes
    correct = 0
    for lab, pred in zip(labels, predictions):
        support[lab] += 1
        if lab == pred:
            tp[lab] += 1
            correct += 1
        else:
            fp[pred] += 1
            fn[lab] += 1

    recalls, precisions, f1s = [], [], []
    for c in range(n_classes):
        if support[c] == 0:
            continue
        recall = Fraction(tp[c], tp[c] + fn[c])
        predicted = tp[c] + fp[c]
        precision = Fraction(tp[c], predicted) if predicted else Fraction(0)
        if precision + recall:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = Fraction(0)
        recalls.append(recall)
        precisions.append(precision)
        f1s.append(f1)

    k = len(recalls)
    return {
        "accuracy": Fraction(correct, len(labels)),
        "recall": sum(recalls) / k,
        "precision": sum(precisions) / k,
        "f1": sum(f1s) / k,
    }


# --- majority vote ----------------------------------------------------------

def reference_vote(members) -> int:
    """Exhaustive vote counting with the documented two-stage tie-break."""
    n_c = len(members[0])
    votes = [0] * n_c
    for member in members:
        best = 0
        for c in range(1, n_c):
            if member[c] > member[best]:
                best = c
        votes[best] += 1
    top = max(votes)
    tied = [c for c in range(n_c) if votes[c] == top]
    if len(tied) == 1:
        return tied[0]
    k = len(members)
    means = []
    for c in range(n_c):
        total = members[0][c]
        for member in members[1:]:
            total = total + member[c]
        means.append(total / k)
    winner = tied[0]
    for c in tied[1:]:
        if means[c] > means[winner]:
            winner = c
    return winner


# --- gradients --------------------------------------------------------------

def central_difference_grads(head, x, y, step: float = 1e-4) -> dict:
    """Loss gradient of every head parameter by central finite differences."""
    grads = {}
    for name, param in head.parameters().items():
        grad = np.zeros_like(param)
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            plus = head.loss_on(x, y)
            flat[i] = orig - step
            minus = head.loss_on(x, y)
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * step)
        grads[name] = grad
    return grads


def max_rel_error(analytic: dict, numeric: dict, floor: float = 1e-8) -> float:
    """max |a - n| / max(|a|, |n|); components below the floor count as exact."""
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        scale = np.maximum(np.abs(a), np.abs(n))
        rel = np.where(scale > floor, np.abs(a - n) / np.maximum(scale, floor), 0.0)
        worst = max(worst, float(rel.max()))
    return worst
