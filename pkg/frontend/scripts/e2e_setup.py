#!/usr/bin/env python3
"""Prepare models, config and sample captures for the frontend e2e test.

Usage: python3 scripts/e2e_setup.py WORKDIR
Writes: models/, storage/, config.json, clean.png, blurred.png
"""

import json
import os
import sys

from dermkit.classify import ClassifierTrainConfig, default_taxonomy, \
    predict as member_predict, train_baseline
from dermkit.ensemble import FusionTrainConfig, train_fusion
from dermkit.imaging import DistortionSpec, apply_distortion, default_distortion_grid
from dermkit.quality import QualityTrainConfig, train_quality_model
from dermkit.synth import clean_corpus, labeled_corpus, texture

workdir = sys.argv[1]
os.makedirs(os.path.join(workdir, "models"), exist_ok=True)
os.makedirs(os.path.join(workdir, "storage"), exist_ok=True)

quality = train_quality_model(clean_corpus(30, size=64, seed=0),
                              default_distortion_grid(),
                              QualityTrainConfig(epochs=150, seed=0))
quality.save(os.path.join(workdir, "models", "quality.model"))

taxonomy = default_taxonomy()
data = labeled_corpus(per_class=2, n_classes=7, size=64, seed=50)
members = []
for name, seed in (("m1", 0), ("m2", 9)):
    clf = train_baseline(data, taxonomy, ClassifierTrainConfig(epochs=60, seed=seed))
    clf.save(os.path.join(workdir, "models", f"{name}.model"))
    members.append(clf)

val = labeled_corpus(per_class=2, n_classes=7, size=64, seed=9100)
fold = [([member_predict(m, img) for m in members], label) for img, label in val]
fusion = train_fusion(fold, FusionTrainConfig(epochs=100, seed=0, hidden_width=16),
                      member_order=("m1", "m2"))
fusion.save(os.path.join(workdir, "models", "fusion.model"))

texture(size=64, seed=3000).save(os.path.join(workdir, "clean.png"))
blurred = apply_distortion(texture(size=64, seed=3100), DistortionSpec("blur", 5.0), 0)
blurred.save(os.path.join(workdir, "blurred.png"))

with open(os.path.join(workdir, "config.json"), "w", encoding="utf-8") as fh:
    json.dump({
        "quality_model_path": os.path.join(workdir, "models", "quality.model"),
        "classifier_paths": [os.path.join(workdir, "models", "m1.model"),
                             os.path.join(workdir, "models", "m2.model")],
        "fusion_model_path": os.path.join(workdir, "models", "fusion.model"),
        "storage_dir": os.path.join(workdir, "storage"),
    }, fh)
print(workdir)
