from .app import QualityRejectedError, create_app, dataset_from_cases
from .config import ENV_PREFIX, ServiceConfig, load_config
from .registry import ModelRegistry

__all__ = [
    "create_app",
    "dataset_from_cases",
    "QualityRejectedError",
    "ServiceConfig",
    "load_config",
    "ENV_PREFIX",
    "ModelRegistry",
]
