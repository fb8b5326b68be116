"""Combine K per-classifier probability vectors.

Two schemes: hard majority voting over per-member argmax votes, and a
small trainable fusion head over the concatenated member outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .modelfile import read_model, write_model
from .nn import DenseHead, fit_minibatch
from .classify import validate_prob_vector


def check_members(members) -> list:
    """Validate an ordered list of K probability vectors with one shared n_c."""
    if len(members) < 1:
        raise ValidationError("ensemble input needs at least one member")
    n_c = np.asarray(members[0]).shape[0]
    return [validate_prob_vector(m, n_c) for m in members]


def majority_vote(members) -> int:
    """Winning class by per-member argmax votes.

    Member-level argmax ties break to the lowest class index; vote ties
    break by the highest mean probability over all members among the tied
    classes, then by the lowest class index.
    """
    vecs = check_members(members)
    n_c = vecs[0].shape[0]
    votes = [0] * n_c
    for v in vecs:
        votes[int(np.argmax(v))] += 1
    top = max(votes)
    tied = [c for c in range(n_c) if votes[c] == top]
    if len(tied) == 1:
        return tied[0]
    means = np.mean(vecs, axis=0)
    best = tied[0]
    for c in tied[1:]:
        if means[c] > means[best]:
            best = c
    return best


@dataclass(frozen=True)
class FusionTrainConfig:
    learning_rate: float = 0.2
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    hidden_width: int = 32
    dropout: float = 0.2

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValidationError("learning_rate, epochs and batch_size must be positive")
        if self.hidden_width <= 0:
            raise ValidationError("hidden_width must be positive")


@dataclass
class FusionModel:
    """Two dense layers (ReLU between, dropout while training) over K*n_c inputs."""

    n_members: int
    n_classes: int
    head: DenseHead
    member_order: tuple = ()
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    def save(self, path) -> None:
        header = {
            "n_members": str(self.n_members),
            "n_classes": str(self.n_classes),
            "hidden_width": str(self.head.hidden),
            "dropout": f"{self.head.dropout:.17g}",
            "member_order": "|".join(self.member_order),
            "initial_loss": f"{self.initial_loss:.17g}",
            "final_loss": f"{self.final_loss:.17g}",
        }
        write_model(path, "fusion", header, self.head.parameters())

    @classmethod
    def load(cls, path) -> "FusionModel":
        kind, header, arrays = read_model(path)
        if kind != "fusion":
            raise ValidationError(f"{path}: expected fusion model, got {kind}")
        k = int(header["n_members"])
        n_c = int(header["n_classes"])
        head = DenseHead(k * n_c, n_c, hidden=int(header["hidden_width"]),
                         activation="relu", output="softmax",
                         dropout=float(header["dropout"]))
        head.w1 = arrays["w1"]
        head.b1 = arrays["b1"]
        head.w2 = arrays["w2"]
        head.b2 = arrays["b2"]
        member_order = tuple(header["member_order"].split("|")) if header.get("member_order") else ()
        return cls(n_members=k, n_classes=n_c, head=head, member_order=member_order,
                   initial_loss=float(header["initial_loss"]),
                   final_loss=float(header["final_loss"]))


def concat_members(members, n_members: int, n_classes: int) -> np.ndarray:
    vecs = check_members(members)
    if len(vecs) != n_members or vecs[0].shape[0] != n_classes:
        raise ValidationError(
            f"expected {n_members} members of {n_classes} classes, "
            f"got {len(vecs)} of {vecs[0].shape[0]}"
        )
    return np.concatenate(vecs)


def fusion_forward(model: FusionModel, members) -> np.ndarray:
    """Inference-mode fused probability vector (dropout disabled)."""
    x = concat_members(members, model.n_members, model.n_classes).reshape(1, -1)
    probs = model.head.predict(x)[0]
    return validate_prob_vector(probs, model.n_classes)


def train_fusion(fold_outputs, cfg: FusionTrainConfig = FusionTrainConfig(),
                 member_order=()) -> FusionModel:
    """Fit the fusion head on (members, label) pairs from held-out folds."""
    if not fold_outputs:
        raise ValidationError("fusion training set is empty")
    first_members, _ = fold_outputs[0]
    k = len(first_members)
    n_c = np.asarray(first_members[0]).shape[0]

    rows = []
    labels = []
    for members, label in fold_outputs:
        rows.append(concat_members(members, k, n_c))
        if not (0 <= label < n_c):
            raise ValidationError(f"label {label} out of range [0, {n_c})")
        labels.append(label)
    x = np.asarray(rows)
    y = np.asarray(labels)

    rng = np.random.default_rng(cfg.seed)
    head = DenseHead(k * n_c, n_c, hidden=cfg.hidden_width, activation="relu",
                     output="softmax", dropout=cfg.dropout, rng=rng)
    initial, final = fit_minibatch(
        head, x, y,
        learning_rate=cfg.learning_rate, epochs=cfg.epochs,
        batch_size=cfg.batch_size, rng=rng,
    )
    return FusionModel(n_members=k, n_classes=n_c, head=head,
                       member_order=tuple(member_order),
                       initial_loss=initial, final_loss=final)
