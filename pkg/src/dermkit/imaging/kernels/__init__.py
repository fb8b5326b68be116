"""Kernel backend selection.

The compiled extension is preferred when importable; set
``DERMKIT_PURE_PYTHON=1`` to force the numpy fallback. Both backends share
one arithmetic contract (see ``pyimpl``), so the choice only affects speed.
"""

import os

from . import pyimpl

if os.environ.get("DERMKIT_PURE_PYTHON"):
    impl = pyimpl
else:
    try:
        from . import _cyimpl as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pyimpl

BACKEND = impl.BACKEND_NAME

gaussian_blur = impl.gaussian_blur
box_down_up = impl.box_down_up
exposure_scale = impl.exposure_scale
block_quantize = impl.block_quantize
luminance = impl.luminance
feature_stats = impl.feature_stats


def compiled_available() -> bool:
    try:
        from . import _cyimpl  # noqa: F401
    except ImportError:
        return False
    return True
