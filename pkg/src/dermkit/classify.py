"""Lesion taxonomy, desk-scale baseline classifier, risk tiers and metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .imaging import ImageBuffer, quality_features, FEATURE_DIM
from .modelfile import read_model, write_model
from .nn import DenseHead, FeatureScaler, fit_minibatch

RISK_TIERS = ("benign", "pre-malignant", "malignant")

PROB_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Taxonomy:
    """Ordered class list with one risk tier per class and name aliases."""

    classes: tuple
    risk_map: dict
    aliases: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("class names must be unique")
        if len(self.classes) < 2:
            raise ValidationError("taxonomy needs at least 2 classes")
        for name in self.classes:
            tier = self.risk_map.get(name)
            if tier not in RISK_TIERS:
                raise ValidationError(f"class {name!r} has invalid risk tier {tier!r}")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def resolve(self, name: str) -> str:
        """Canonical class name, applying aliases; raises on unknown names."""
        canonical = self.aliases.get(name, name)
        if canonical not in self.classes:
            raise ValidationError(f"unknown class {name!r}")
        return canonical

    def index_of(self, name: str) -> int:
        return self.classes.index(self.resolve(name))


def default_taxonomy() -> Taxonomy:
    """Seven-class clinical taxonomy with the default risk tiers."""
    return Taxonomy(
        classes=(
            "melanoma",
            "basal cell carcinoma",
            "squamous cell carcinoma",
            "nevus",
            "actinic keratosis",
            "benign keratosis",
            "solar lentigo",
        ),
        risk_map={
            "melanoma": "malignant",
            "basal cell carcinoma": "malignant",
            "squamous cell carcinoma": "malignant",
            "nevus": "benign",
            "actinic keratosis": "pre-malignant",
            "benign keratosis": "benign",
            "solar lentigo": "benign",
        },
        aliases={"seborrheic keratosis": "benign keratosis"},
    )


def pad_overlap_taxonomy() -> Taxonomy:
    """Six-class restriction shared with PAD-UFES-20 for cross-dataset work."""
    base = default_taxonomy()
    classes = tuple(c for c in base.classes if c != "solar lentigo")
    return Taxonomy(
        classes=classes,
        risk_map={c: base.risk_map[c] for c in classes},
        aliases=dict(base.aliases),
    )


def map_risk(taxonomy: Taxonomy, class_name: str) -> str:
    return taxonomy.risk_map[taxonomy.resolve(class_name)]


def binary_risk(tier: str) -> str:
    """Collapse {malignant, pre-malignant} into the potentially-malignant view."""
    if tier not in RISK_TIERS:
        raise ValidationError(f"unknown risk tier {tier!r}")
    return "benign" if tier == "benign" else "potentially-malignant"


def validate_prob_vector(probs, n_classes: int) -> np.ndarray:
    v = np.asarray(probs, dtype=np.float64)
    if v.shape != (n_classes,):
        raise ValidationError(f"probability vector must have length {n_classes}, got {v.shape}")
    if np.any(v < 0):
        raise ValidationError("probability vector has negative entries")
    if abs(float(v.sum()) - 1.0) > PROB_TOLERANCE:
        raise ValidationError(f"probability vector sums to {v.sum()!r}, not 1")
    return v


# --------------------------------------------------------------------------
# baseline classifier


@dataclass(frozen=True)
class ClassifierTrainConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValidationError("learning_rate, epochs and batch_size must be positive")


def mean_color_grid(img: ImageBuffer, cells: int = 3) -> np.ndarray:
    """Mean RGB per cell of a cells x cells grid, row-major, 3 values per cell."""
    arr = img.array.astype(np.int64)
    h, w, _ = arr.shape
    rb = (np.arange(cells + 1, dtype=np.int64) * h) // cells
    cb = (np.arange(cells + 1, dtype=np.int64) * w) // cells
    rows = np.add.reduceat(arr, rb[:-1], axis=0)
    sums = np.add.reduceat(rows, cb[:-1], axis=1)
    counts = (rb[1:] - rb[:-1])[:, None] * (cb[1:] - cb[:-1])[None, :]
    means = sums / counts[:, :, None].astype(np.float64)
    return means.reshape(-1)


def classifier_features(img: ImageBuffer) -> np.ndarray:
    """Quality features plus the 3x3 mean-color grid (7 + 27 = 34 dims)."""
    return np.concatenate([quality_features(img).as_vector(), mean_color_grid(img)])


BASELINE_FEATURE_DIM = FEATURE_DIM + 27


@dataclass
class BaselineClassifier:
    taxonomy: Taxonomy
    scaler: FeatureScaler
    head: DenseHead
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    def save(self, path) -> None:
        header = {
            "classes": "|".join(self.taxonomy.classes),
            "risk": "|".join(self.taxonomy.risk_map[c] for c in self.taxonomy.classes),
            "aliases": "|".join(f"{a}={c}" for a, c in sorted(self.taxonomy.aliases.items())),
            "initial_loss": f"{self.initial_loss:.17g}",
            "final_loss": f"{self.final_loss:.17g}",
        }
        arrays = {"feat_mean": self.scaler.mean, "feat_std": self.scaler.std}
        arrays.update(self.head.parameters())
        write_model(path, "baseline", header, arrays)

    @classmethod
    def load(cls, path) -> "BaselineClassifier":
        kind, header, arrays = read_model(path)
        if kind != "baseline":
            raise ValidationError(f"{path}: expected baseline model, got {kind}")
        classes = tuple(header["classes"].split("|"))
        tiers = header["risk"].split("|")
        aliases = {}
        if header.get("aliases"):
            aliases = dict(pair.split("=", 1) for pair in header["aliases"].split("|"))
        taxonomy = Taxonomy(classes=classes, risk_map=dict(zip(classes, tiers)),
                            aliases=aliases)
        head = DenseHead(BASELINE_FEATURE_DIM, len(classes), hidden=0, output="softmax")
        head.w1 = arrays["w1"]
        head.b1 = arrays["b1"]
        return cls(taxonomy=taxonomy,
                   scaler=FeatureScaler(arrays["feat_mean"], arrays["feat_std"]),
                   head=head,
                   initial_loss=float(header["initial_loss"]),
                   final_loss=float(header["final_loss"]))


def train_baseline(dataset, taxonomy: Taxonomy,
                   cfg: ClassifierTrainConfig = ClassifierTrainConfig()) -> BaselineClassifier:
    """Fit the pooled-feature softmax head with categorical cross-entropy."""
    if not dataset:
        raise ValidationError("training dataset is empty")
    n_c = taxonomy.n_classes
    labels = np.asarray([label for _, label in dataset])
    if labels.min() < 0 or labels.max() >= n_c:
        raise ValidationError(f"labels must be in [0, {n_c}), got range "
                              f"[{labels.min()}, {labels.max()}]")
    present = set(int(v) for v in labels)
    missing = [taxonomy.classes[i] for i in range(n_c) if i not in present]
    if missing:
        raise ValidationError(f"classes absent from training data: {missing}")

    feats = np.asarray([classifier_features(img) for img, _ in dataset])
    scaler = FeatureScaler.fit(feats)
    x = scaler.transform(feats)

    rng = np.random.default_rng(cfg.seed)
    head = DenseHead(feats.shape[1], n_c, hidden=0, output="softmax", rng=rng)
    initial, final = fit_minibatch(
        head, x, labels,
        learning_rate=cfg.learning_rate, epochs=cfg.epochs,
        batch_size=cfg.batch_size, rng=rng,
    )
    return BaselineClassifier(taxonomy=taxonomy, scaler=scaler, head=head,
                              initial_loss=initial, final_loss=final)


def predict(classifier: BaselineClassifier, img: ImageBuffer) -> np.ndarray:
    """Probability vector over the taxonomy classes."""
    x = classifier.scaler.transform(classifier_features(img).reshape(1, -1))
    probs = classifier.head.predict(x)[0]
    return validate_prob_vector(probs, classifier.taxonomy.n_classes)


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    recall: float
    precision: float
    f1: float
    confusion: tuple  # confusion[label][prediction] counts

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "confusion": [list(row) for row in self.confusion],
        }


def compute_metrics(predictions, labels, n_classes: int) -> MetricsReport:
    """Accuracy plus macro-averaged recall, precision and F1.

    Macro averages run over the classes that appear in the ground truth;
    a class with ground truth that is never predicted contributes
    precision 0 (and hence F1 0 when its recall is 0).
    """
    preds = list(predictions)
    labs = list(labels)
    if len(preds) != len(labs):
        raise ValidationError(f"length mismatch: {len(preds)} predictions, {len(labs)} labels")
    if not preds:
        raise ValidationError("cannot compute metrics on empty input")
    for v in preds + labs:
        if not (0 <= v < n_classes):
            raise ValidationError(f"class index {v} out of range [0, {n_classes})")

    confusion = [[0] * n_classes for _ in range(n_classes)]
    for lab, pred in zip(labs, preds):
        confusion[lab][pred] += 1

    correct = sum(confusion[c][c] for c in range(n_classes))
    accuracy = correct / len(labs)

    recalls, precisions, f1s = [], [], []
    for c in range(n_classes):
        support = sum(confusion[c])
        if support == 0:
            continue
        tp = confusion[c][c]
        predicted = sum(confusion[r][c] for r in range(n_classes))
        recall_c = tp / support
        precision_c = tp / predicted if predicted > 0 else 0.0
        if precision_c + recall_c > 0:
            f1_c = 2.0 * precision_c * recall_c / (precision_c + recall_c)
        else:
            f1_c = 0.0
        recalls.append(recall_c)
        precisions.append(precision_c)
        f1s.append(f1_c)

    return MetricsReport(
        accuracy=accuracy,
        recall=sum(recalls) / len(recalls),
        precision=sum(precisions) / len(precisions),
        f1=sum(f1s) / len(f1s),
        confusion=tuple(tuple(row) for row in confusion),
    )


def load_probability_table(path, n_classes: int) -> dict:
    """Externally produced probability vectors keyed by image_id.

    One CSV row per image: ``image_id,p0,...,p{n-1}``.
    """
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if parts[0] == "image_id":
                continue
            probs = validate_prob_vector([float(p) for p in parts[1:]], n_classes)
            table[parts[0]] = probs
    return table
