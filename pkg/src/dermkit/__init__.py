"""dermkit: lesion-image capture QC, triage classification and curation."""

from .imaging import KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
