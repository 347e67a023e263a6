"""
Binary frame container and image output.

Container layout (all integers little-endian):

=========  =======================================================
bytes      content
=========  =======================================================
4          magic ``b"PTYF"``
4          format version, uint32
4          metadata length ``L``, uint32
L          metadata, UTF-8 JSON
rest       frames, row-major; ``float32`` or interleaved re/im
           ``float32`` pairs for complex containers
=========  =======================================================

Dataset frames are ordered position-major, then sensor.
"""

import json
import struct

import numpy as np

from .errors import ValidationError
from .forward import Dataset, SensorSpec
from .grid import ComplexField, GridSpec
from .scan import ScanPattern

MAGIC = b"PTYF"
VERSION = 1
_DTYPES = {"float32": np.dtype("<f4"), "complex64": np.dtype("<c8")}


def write_container(path, metadata, frames, dtype="float32"):
    """Write 2D frames and a JSON-serializable metadata dict."""
    if dtype not in _DTYPES:
        raise ValidationError(f"unsupported dtype {dtype!r}")
    meta = dict(metadata)
    meta["dtype"] = dtype
    meta["frame_shapes"] = [list(np.shape(f)) for f in frames]
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for f in frames:
            fh.write(np.ascontiguousarray(f, dtype=_DTYPES[dtype]).tobytes())


def read_container(path):
    """Return ``(metadata, frames)``; frames keep the on-disk dtype."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != MAGIC:
        raise ValidationError(f"{path}: not a PTYF container")
    version, length = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported format version {version}")
    try:
        meta = json.loads(data[12:12 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: corrupt metadata ({exc})") from exc
    dtype = _DTYPES.get(meta.get("dtype"))
    if dtype is None:
        raise ValidationError(f"{path}: unknown dtype {meta.get('dtype')!r}")
    shapes = [tuple(s) for s in meta["frame_shapes"]]
    expected = sum(int(np.prod(s)) for s in shapes) * dtype.itemsize
    payload = data[12 + length:]
    if len(payload) != expected:
        raise ValidationError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    frames, offset = [], 0
    for s in shapes:
        count = int(np.prod(s))
        frames.append(np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(s))
        offset += count * dtype.itemsize
    return meta, frames


def write_dataset(path, dataset):
    meta = dataset.geometry()
    meta["kind"] = "dataset"
    meta["noise"] = dataset.noise
    frames = [dataset.frames[k][i] for i in range(dataset.n_positions)
              for k in range(len(dataset.sensors))]
    write_container(path, meta, frames, "float32")


def read_dataset(path):
    meta, frames = read_container(path)
    if meta.get("kind") != "dataset":
        raise ValidationError(f"{path}: not a dataset container")
    sensors = [SensorSpec.from_dict(s) for s in meta["sensors"]]
    scan = ScanPattern.from_dict(meta["scan"])
    n_s = len(sensors)
    if len(frames) != n_s * len(scan):
        raise ValidationError(f"{path}: frame count does not match positions x sensors")
    stacks = [np.stack(frames[k::n_s]) if frames else np.zeros((0,) + s.shape, np.float32)
              for k, s in enumerate(sensors)]
    return Dataset(GridSpec.from_dict(meta["grid"]), meta["object_shape"], meta["origin_px"],
                   scan, sensors, stacks, meta.get("noise"))


def write_field(path, field, **metadata):
    """Store one complex field (object, probe, propagated wave)."""
    meta = dict(metadata)
    meta["kind"] = "field"
    meta["grid"] = field.grid.to_dict()
    write_container(path, meta, [field.values], "complex64")


def read_field(path):
    """Return ``(ComplexField, metadata)``."""
    meta, frames = read_container(path)
    if meta.get("kind") != "field" or len(frames) != 1:
        raise ValidationError(f"{path}: not a single-field container")
    grid = GridSpec.from_dict(meta["grid"])
    return ComplexField(grid, frames[0].astype(np.complex128)), meta


def write_pgm(path, image, vmin=0.0, vmax=1.2):
    """8-bit binary graymap with a linear map of ``[vmin, vmax]`` to 0..255."""
    img = np.asarray(image, dtype=np.float64)
    scaled = np.clip((img - vmin) / (vmax - vmin), 0.0, 1.0)
    data = np.rint(scaled * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValidationError(f"{path}: not a binary graymap")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
