#!/usr/bin/env python3
"""Regenerate crop fixtures from the server-side geometry implementation.

The committed fixtures/crop_fixtures.json is the contract the TypeScript
overlay must match within one pixel; rerun this after changing the crop
math (and expect the frontend tests to tell you if the two sides drift).
"""

import json
import os

import numpy as np

from dermkit.imaging import center_square_region

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "crop_fixtures.json")

rng = np.random.default_rng(20240831)
cases = []
while len(cases) < 1000:
    viewport_w = int(rng.integers(160, 1920))
    viewport_h = int(rng.integers(120, 1200))
    image_w = int(rng.integers(16, 4200))
    image_h = int(rng.integers(16, 4200))
    fraction = round(float(rng.uniform(0.1, 1.0)), 4)
    if int(fraction * min(image_w, image_h)) < 1:
        continue
    x, y, side = center_square_region(image_w, image_h, fraction)
    cases.append({
        "viewport_w": viewport_w, "viewport_h": viewport_h,
        "image_w": image_w, "image_h": image_h, "fraction": fraction,
        "crop": {"x": x, "y": y, "side": side},
    })

with open(OUT, "w", encoding="utf-8") as fh:
    json.dump(cases, fh)
print(f"{len(cases)} fixtures -> {os.path.normpath(OUT)}")
