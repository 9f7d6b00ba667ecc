import numpy as np
import pytest

from tsworkbench import matrixio
from tsworkbench.errors import MissingFileError, ShapeMismatchError


def test_round_trip(tmp_path):
    values = np.arange(12, dtype=float).reshape(3, 4)
    matrixio.write_matrix(tmp_path / "m.bin", values)
    back = matrixio.read_matrix(tmp_path / "m.bin")
    assert back.shape == (3, 4)
    np.testing.assert_array_equal(back, values)


def test_header_layout(tmp_path):
    matrixio.write_matrix(tmp_path / "m.bin", np.zeros((2, 5)))
    blob = (tmp_path / "m.bin").read_bytes()
    assert len(blob) == 8 + 2 * 5 * 4
    assert int.from_bytes(blob[0:4], "little") == 2
    assert int.from_bytes(blob[4:8], "little") == 5


def test_truncated_file(tmp_path):
    matrixio.write_matrix(tmp_path / "m.bin", np.zeros((4, 4)))
    blob = (tmp_path / "m.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(blob[:-3])
    with pytest.raises(ShapeMismatchError):
        matrixio.read_matrix(tmp_path / "cut.bin")


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        matrixio.read_matrix(tmp_path / "nope.bin")


def test_in_memory_bytes_match_file(tmp_path):
    values = np.random.default_rng(0).normal(size=(7, 2))
    matrixio.write_matrix(tmp_path / "m.bin", values)
    assert matrixio.matrix_bytes(values) == (tmp_path / "m.bin").read_bytes()


def test_rejects_non_2d():
    with pytest.raises(ShapeMismatchError):
        matrixio.matrix_bytes(np.zeros(3))
