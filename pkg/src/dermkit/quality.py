"""Trainable no-reference quality gate.

A standardized feature vector (see ``imaging.features``) feeds a small
dense head (optional SiLU hidden layer, dropout 0.2 during training,
sigmoid output) that emits four independent defect scores ordered
[sharpness, blur, exposure, compression]. Supervision is fully synthetic:
clean images carry all-zero labels, each distorted variant carries a 1 on
the indicator matching its distortion kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .imaging import (
    DISTORTION_KINDS,
    DistortionSpec,
    ImageBuffer,
    FEATURE_NAMES,
    apply_distortion,
    quality_features,
)
from .modelfile import read_model, write_model
from .nn import DenseHead, FeatureScaler, fit_minibatch

INDICATORS = ("sharpness", "blur", "exposure", "compression")

# distortion kind -> indicator index it supervises
KIND_TO_INDICATOR = {
    "sharpness_loss": 0,
    "blur": 1,
    "exposure": 2,
    "compression": 3,
}

DROPOUT_RATE = 0.2


@dataclass(frozen=True)
class QualityReport:
    """Four defect scores, per-indicator flags, and the gate verdict."""

    scores: tuple
    flags: tuple
    verdict: str  # "pass" | "recapture"
    reasons: tuple  # flagged indicator names, descending score

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "scores": dict(zip(INDICATORS, self.scores)),
            "flags": dict(zip(INDICATORS, self.flags)),
            "verdict": self.verdict,
            "reasons": list(self.reasons),
        }


@dataclass(frozen=True)
class QualityTrainConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    thresholds: tuple = (0.5, 0.5, 0.5, 0.5)
    hidden_width: int = 16

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValidationError("learning_rate, epochs and batch_size must be positive")
        if len(self.thresholds) != 4 or not all(0.0 < t < 1.0 for t in self.thresholds):
            raise ValidationError("need 4 thresholds in (0, 1)")


@dataclass
class QualityModel:
    scaler: FeatureScaler
    head: DenseHead
    thresholds: tuple
    initial_loss: float = field(default=float("nan"))
    final_loss: float = field(default=float("nan"))

    def scores_for_features(self, feats: np.ndarray) -> np.ndarray:
        x = self.scaler.transform(feats.reshape(1, -1))
        return self.head.predict(x)[0]

    def save(self, path) -> None:
        header = {
            "feature_order": ",".join(FEATURE_NAMES),
            "indicator_order": ",".join(INDICATORS),
            "thresholds": ",".join(f"{t:.17g}" for t in self.thresholds),
            "hidden_width": str(self.head.hidden),
            "dropout": f"{self.head.dropout:.17g}",
            "initial_loss": f"{self.initial_loss:.17g}",
            "final_loss": f"{self.final_loss:.17g}",
        }
        arrays = {"feat_mean": self.scaler.mean, "feat_std": self.scaler.std}
        arrays.update(self.head.parameters())
        write_model(path, "quality", header, arrays)

    @classmethod
    def load(cls, path) -> "QualityModel":
        kind, header, arrays = read_model(path)
        if kind != "quality":
            raise ValidationError(f"{path}: expected quality model, got {kind}")
        hidden = int(header["hidden_width"])
        head = DenseHead(
            len(FEATURE_NAMES), len(INDICATORS),
            hidden=hidden, activation="silu", output="sigmoid",
            dropout=float(header["dropout"]),
        )
        head.w1 = arrays["w1"]
        head.b1 = arrays["b1"]
        if hidden > 0:
            head.w2 = arrays["w2"]
            head.b2 = arrays["b2"]
        model = cls(
            scaler=FeatureScaler(arrays["feat_mean"], arrays["feat_std"]),
            head=head,
            thresholds=tuple(float(t) for t in header["thresholds"].split(",")),
            initial_loss=float(header["initial_loss"]),
            final_loss=float(header["final_loss"]),
        )
        return model


def build_training_set(clean_corpus, distortion_grid, seed: int = 0):
    """Feature matrix and multi-hot labels for synthetic supervision.

    Clean images are all-zero rows; each (image, distortion) pair adds one
    row with a single 1 on the indicator the distortion kind trains.
    """
    feats = []
    labels = []
    for img in clean_corpus:
        feats.append(quality_features(img).as_vector())
        labels.append(np.zeros(4))
    for i, img in enumerate(clean_corpus):
        for j, spec in enumerate(distortion_grid):
            distorted = apply_distortion(img, spec, seed=seed + i * len(distortion_grid) + j)
            feats.append(quality_features(distorted).as_vector())
            row = np.zeros(4)
            row[KIND_TO_INDICATOR[spec.kind]] = 1.0
            labels.append(row)
    return np.asarray(feats), np.asarray(labels)


def train_quality_model(clean_corpus, distortion_grid, cfg: QualityTrainConfig) -> QualityModel:
    """Fit the four-indicator head on a clean corpus plus distorted variants."""
    if not clean_corpus:
        raise ValidationError("clean corpus is empty")
    kinds = {spec.kind for spec in distortion_grid}
    missing = set(DISTORTION_KINDS) - kinds
    if missing:
        raise ValidationError(f"distortion grid missing kinds: {sorted(missing)}")

    feats, labels = build_training_set(clean_corpus, distortion_grid, seed=cfg.seed)
    scaler = FeatureScaler.fit(feats)
    x = scaler.transform(feats)

    rng = np.random.default_rng(cfg.seed)
    head = DenseHead(
        feats.shape[1], 4,
        hidden=cfg.hidden_width, activation="silu", output="sigmoid",
        dropout=DROPOUT_RATE, rng=rng,
    )
    initial, final = fit_minibatch(
        head, x, labels,
        learning_rate=cfg.learning_rate, epochs=cfg.epochs,
        batch_size=cfg.batch_size, rng=rng,
    )
    return QualityModel(scaler=scaler, head=head, thresholds=tuple(cfg.thresholds),
                        initial_loss=initial, final_loss=final)


def gate_scores(scores, thresholds) -> QualityReport:
    """Pure gate: flags where score > threshold; reasons by descending score."""
    scores = tuple(float(s) for s in scores)
    flags = tuple(s > t for s, t in zip(scores, thresholds))
    flagged = [(scores[i], i) for i in range(4) if flags[i]]
    flagged.sort(key=lambda si: (-si[0], si[1]))
    reasons = tuple(INDICATORS[i] for _, i in flagged)
    verdict = "pass" if not reasons else "recapture"
    return QualityReport(scores=scores, flags=flags, verdict=verdict, reasons=reasons)


def assess(model: QualityModel, img: ImageBuffer) -> QualityReport:
    """Inference-mode quality report for one image."""
    feats = quality_features(img).as_vector()
    scores = model.scores_for_features(feats)
    return gate_scores(scores, model.thresholds)


def gate(report: QualityReport) -> QualityReport:
    """Recompute the verdict of a report from its scores and flags."""
    flagged = [(report.scores[i], i) for i in range(4) if report.flags[i]]
    flagged.sort(key=lambda si: (-si[0], si[1]))
    reasons = tuple(INDICATORS[i] for _, i in flagged)
    verdict = "pass" if not reasons else "recapture"
    return QualityReport(scores=report.scores, flags=report.flags,
                         verdict=verdict, reasons=reasons)
