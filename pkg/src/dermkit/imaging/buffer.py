"""8-bit RGB raster type and its lossless PNG boundary."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ..errors import ValidationError


@dataclass(frozen=True)
class ImageBuffer:
    """Decoded 8-bit RGB image, row-major, shape (height, width, 3).

    The array is treated as immutable; operations return new buffers.
    """

    array: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError(f"expected (H, W, 3) RGB array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValidationError(f"expected uint8 pixels, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError("image must be at least 1x1")
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        object.__setattr__(self, "array", arr)

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def pixels(self) -> bytes:
        """Row-major RGB triples; length = width * height * 3."""
        return self.array.tobytes()

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels: bytes) -> "ImageBuffer":
        if len(pixels) != width * height * 3:
            raise ValidationError(
                f"pixel array length {len(pixels)} != width*height*3 = {width * height * 3}"
            )
        arr = np.frombuffer(bytes(pixels), dtype=np.uint8).reshape(height, width, 3)
        return cls(arr.copy())

    @classmethod
    def constant(cls, width: int, height: int, rgb=(128, 128, 128)) -> "ImageBuffer":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:, :] = np.asarray(rgb, dtype=np.uint8)
        return cls(arr)

    @classmethod
    def decode_image(cls, data: bytes) -> "ImageBuffer":
        """Decode any supported raster format to 8-bit RGB."""
        try:
            with Image.open(io.BytesIO(data)) as im:
                rgb = im.convert("RGB")
                arr = np.asarray(rgb, dtype=np.uint8)
        except Exception as exc:
            raise ValidationError(f"cannot decode image: {exc}") from exc
        return cls(arr.copy())

    def encode_png(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.array, mode="RGB").save(buf, format="PNG", optimize=False)
        return buf.getvalue()

    @classmethod
    def load(cls, path) -> "ImageBuffer":
        with open(path, "rb") as fh:
            return cls.decode_image(fh.read())

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.encode_png())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.array.shape == other.array.shape and bool(
            np.array_equal(self.array, other.array)
        )
