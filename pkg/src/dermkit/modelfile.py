"""Versioned flat-file persistence for the trainable models.

Layout (UTF-8 text)::

    dermkit-model 1
    kind: <quality|baseline|fusion>
    <key>: <value>          # kind-specific header fields, fixed order
    param <name> <d0> [<d1>]
    <d0*d1 decimal values, one per line, row-major>
    ...
    end

Floats are written with 17 significant digits, which round-trips IEEE
float64 exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

MAGIC = "dermkit-model"
FORMAT_VERSION = 1


def write_model(path, kind: str, header: dict, arrays: dict) -> None:
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"kind: {kind}"]
    for key, value in header.items():
        lines.append(f"{key}: {value}")
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=np.float64)
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"param {name} {dims}")
        for v in arr.reshape(-1):
            lines.append(f"{v:.17g}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_model(path):
    """Returns (kind, header dict, arrays dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise ValidationError(f"{path}: not a model file")
    version = int(lines[0].split()[1])
    if version != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported model format version {version}")

    header: dict = {}
    arrays: dict = {}
    kind = None
    i = 1
    while i < len(lines):
        line = lines[i]
        if line == "end":
            break
        if line.startswith("param "):
            parts = line.split()
            name = parts[1]
            shape = tuple(int(d) for d in parts[2:])
            count = int(np.prod(shape)) if shape else 1
            try:
                values = [float(v) for v in lines[i + 1:i + 1 + count]]
            except ValueError:
                raise ValidationError(f"{path}: truncated parameter {name}") from None
            if len(values) != count:
                raise ValidationError(f"{path}: truncated parameter {name}")
            arrays[name] = np.asarray(values, dtype=np.float64).reshape(shape)
            i += 1 + count
            continue
        key, _, value = line.partition(": ")
        if key == "kind":
            kind = value
        else:
            header[key] = value
        i += 1
    if kind is None:
        raise ValidationError(f"{path}: missing kind header")
    return kind, header, arrays
