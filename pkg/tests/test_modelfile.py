import numpy as np
import pytest

from dermkit.errors import ValidationError
from dermkit.modelfile import read_model, write_model


def test_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {
        "w1": rng.normal(0, 1, (7, 16)) * 1e-3,
        "b1": rng.normal(0, 1, 16) * 1e17,
        "tiny": np.array([5e-324, -5e-324, 0.0, 1.0 / 3.0]),
    }
    header = {"feature_order": "a,b,c", "thresholds": "0.5,0.5,0.5,0.5"}
    path = tmp_path / "m.model"
    write_model(path, "quality", header, arrays)

    kind, loaded_header, loaded = read_model(path)
    assert kind == "quality"
    assert loaded_header == header
    for name, arr in arrays.items():
        assert loaded[name].shape == arr.shape
        assert np.array_equal(loaded[name], arr), name


def test_rewrite_is_byte_stable(tmp_path):
    arrays = {"w": np.array([[0.1, 0.2], [0.3, 0.4]])}
    a = tmp_path / "a.model"
    b = tmp_path / "b.model"
    write_model(a, "fusion", {"k": "1"}, arrays)
    _, header, loaded = read_model(a)
    write_model(b, "fusion", header, loaded)
    assert a.read_bytes() == b.read_bytes()


def test_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk"
    path.write_text("something else\n")
    with pytest.raises(ValidationError):
        read_model(path)


def test_rejects_future_version(tmp_path):
    path = tmp_path / "future.model"
    path.write_text("dermkit-model 99\nkind: quality\nend\n")
    with pytest.raises(ValidationError):
        read_model(path)


def test_rejects_truncated_param(tmp_path):
    path = tmp_path / "trunc.model"
    path.write_text("dermkit-model 1\nkind: quality\nparam w 2 2\n1.0\n2.0\nend\n")
    with pytest.raises(ValidationError):
        read_model(path)
