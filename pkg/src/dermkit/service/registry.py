"""Named model versions backing the service; read-mostly with exclusive swap."""

from __future__ import annotations

import os
import threading

from ..classify import BaselineClassifier
from ..ensemble import FusionModel
from ..errors import ValidationError
from ..quality import QualityModel
from .config import ServiceConfig


class ModelRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self.quality: QualityModel | None = None
        self.quality_version = "none"
        self.members: list = []  # (name, BaselineClassifier), order = ensemble order
        self.fusion: FusionModel | None = None
        self.fusion_version = "none"

    @classmethod
    def from_config(cls, cfg: ServiceConfig) -> "ModelRegistry":
        reg = cls()
        if cfg.quality_model_path:
            model = QualityModel.load(cfg.quality_model_path)
            if cfg.thresholds is not None:
                model.thresholds = tuple(cfg.thresholds)
            reg.set_quality(model, _version_of(cfg.quality_model_path))
        for path in cfg.classifier_paths:
            reg.add_member(_version_of(path), BaselineClassifier.load(path))
        if cfg.fusion_model_path:
            reg.set_fusion(FusionModel.load(cfg.fusion_model_path),
                           _version_of(cfg.fusion_model_path))
        return reg

    def set_quality(self, model: QualityModel, version: str) -> None:
        with self._lock:
            self.quality = model
            self.quality_version = version

    def add_member(self, name: str, classifier: BaselineClassifier) -> None:
        with self._lock:
            if any(n == name for n, _ in self.members):
                raise ValidationError(f"duplicate member classifier {name!r}")
            if self.members:
                first = self.members[0][1]
                if classifier.taxonomy.classes != first.taxonomy.classes:
                    raise ValidationError("member classifiers must share one taxonomy")
            self.members.append((name, classifier))

    def set_fusion(self, model: FusionModel, version: str) -> None:
        with self._lock:
            self.fusion = model
            self.fusion_version = version

    def require_quality(self) -> QualityModel:
        if self.quality is None:
            raise ValidationError("no quality model registered")
        return self.quality

    def require_members(self) -> list:
        if not self.members:
            raise ValidationError("no classifiers registered")
        return list(self.members)

    def version_string(self) -> str:
        members = ",".join(name for name, _ in self.members) or "none"
        return (f"quality={self.quality_version};members={members};"
                f"fusion={self.fusion_version}")


def _version_of(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]
