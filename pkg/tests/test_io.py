import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sensorfusion import ValidationError, predict_dataset
from sensorfusion.io import (read_container, read_dataset, read_field, read_pgm, write_container,
                             write_dataset, write_field, write_pgm)

from .conftest import small_scene

f32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


@settings(max_examples=30, deadline=None)
@given(st.lists(arrays(np.float32, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=f32),
                min_size=0, max_size=4))
def test_real_container_roundtrip_is_bitwise(tmp_path_factory, frames):
    path = tmp_path_factory.mktemp("c") / "x.ptyf"
    write_container(path, {"note": "x"}, frames)
    meta, back = read_container(path)
    assert meta["note"] == "x" and meta["dtype"] == "float32"
    assert len(back) == len(frames)
    for a, b in zip(frames, back):
        assert a.tobytes() == b.tobytes()


def test_container_layout(tmp_path):
    path = tmp_path / "x.ptyf"
    write_container(path, {}, [np.array([[1.5, -2.0]], np.float32)])
    raw = path.read_bytes()
    assert raw[:4] == b"PTYF"
    version, length = struct.unpack("<II", raw[4:12])
    assert version == 1
    assert raw[12 + length:] == np.array([1.5, -2.0], "<f4").tobytes()


def test_corrupt_containers_rejected(tmp_path):
    path = tmp_path / "x.ptyf"
    write_container(path, {}, [np.zeros((2, 2), np.float32)])
    raw = path.read_bytes()
    (tmp_path / "short.ptyf").write_bytes(raw[:-4])
    (tmp_path / "magic.ptyf").write_bytes(b"XXXX" + raw[4:])
    for name in ("short.ptyf", "magic.ptyf"):
        with pytest.raises(ValidationError):
            read_container(tmp_path / name)
    with pytest.raises(ValidationError):
        write_container(path, {}, [], dtype="int8")


def test_dataset_roundtrip(tmp_path):
    scene = small_scene()
    data = predict_dataset(scene)
    path = tmp_path / "d.ptyf"
    write_dataset(path, data)
    back = read_dataset(path)
    assert back.sensors == data.sensors and back.scan == data.scan
    assert back.grid == data.grid and back.object_shape == data.object_shape
    for a, b in zip(data.frames, back.frames):
        np.testing.assert_array_equal(a.astype(np.float32), b)
    # writing what was read reproduces the file byte for byte
    again = tmp_path / "e.ptyf"
    write_dataset(again, back)
    assert again.read_bytes() == path.read_bytes()
    with pytest.raises(ValidationError):
        read_field(path)


def test_field_roundtrip(tmp_path):
    scene = small_scene()
    path = tmp_path / "o.ptyf"
    write_field(path, scene.object, label="truth")
    field, meta = read_field(path)
    assert meta["label"] == "truth"
    np.testing.assert_array_equal(field.values, scene.object.values.astype(np.complex64))
    with pytest.raises(ValidationError):
        read_dataset(path)


def test_pgm_mapping(tmp_path):
    img = np.array([[0.0, 0.6, 1.2, 5.0], [-1.0, 0.3, 0.9, 1.2]])
    path = tmp_path / "t.pgm"
    write_pgm(path, img)
    assert path.read_bytes().startswith(b"P5\n4 2\n255\n")
    np.testing.assert_array_equal(read_pgm(path), [[0, 128, 255, 255], [0, 64, 191, 255]])
