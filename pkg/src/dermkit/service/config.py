"""Service configuration: JSON file plus DERMKIT_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ..errors import ValidationError

ENV_PREFIX = "DERMKIT_"


@dataclass
class ServiceConfig:
    crop_fraction: float = 1.0
    thresholds: tuple | None = None  # None -> use the quality model's own
    quality_model_path: str | None = None
    classifier_paths: tuple = ()
    fusion_model_path: str | None = None
    storage_dir: str = "dermkit-data"
    roi_padding: float = 1.2
    event_log: str | None = None
    extras: dict = field(default_factory=dict)


_FLOAT_KEYS = ("crop_fraction", "roi_padding")
_PATH_KEYS = ("quality_model_path", "fusion_model_path", "storage_dir", "event_log")


def load_config(path=None, env=None) -> ServiceConfig:
    """Read the optional JSON config file, then apply environment overrides.

    Documented keys: crop_fraction, thresholds (4 floats), quality_model_path,
    classifier_paths (list), fusion_model_path, storage_dir, roi_padding,
    event_log. Environment variables use the DERMKIT_ prefix with upper-case
    key names; list values are comma separated.
    """
    env = os.environ if env is None else env
    cfg = ServiceConfig()

    if path:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        for key, value in data.items():
            if key == "thresholds":
                cfg.thresholds = _parse_thresholds(value)
            elif key == "classifier_paths":
                cfg.classifier_paths = tuple(value)
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key in _PATH_KEYS:
                setattr(cfg, key, value)
            else:
                cfg.extras[key] = value

    for key in _FLOAT_KEYS:
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            setattr(cfg, key, float(raw))
    for key in _PATH_KEYS:
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            setattr(cfg, key, raw)
    raw = env.get(ENV_PREFIX + "THRESHOLDS")
    if raw is not None:
        cfg.thresholds = _parse_thresholds(raw.split(","))
    raw = env.get(ENV_PREFIX + "CLASSIFIER_PATHS")
    if raw is not None:
        cfg.classifier_paths = tuple(p for p in raw.split(",") if p)

    if not (0.0 < cfg.crop_fraction <= 1.0):
        raise ValidationError(f"crop_fraction must be in (0, 1], got {cfg.crop_fraction}")
    return cfg


def _parse_thresholds(values) -> tuple:
    thresholds = tuple(float(v) for v in values)
    if len(thresholds) != 4 or not all(0.0 < t < 1.0 for t in thresholds):
        raise ValidationError(f"need 4 thresholds in (0, 1), got {thresholds}")
    return thresholds
