"""
Forward physics model: object and probe to predicted detector intensities.

A scene pairs a complex object with a probe, a scan pattern and a set of
sensor windows. For scan position ``i`` the exit wave is the probe-sized
crop of the object times the probe; each sensor receives that wave
propagated over its distance ``z`` into a window centered at its lateral
offset.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PositionError, ValidationError
from .grid import ComplexField, GridSpec, RealField
from .propagation import PropagationPlan
from .scan import ScanPattern


@dataclass(frozen=True)
class SensorSpec:
    """Rectangular detector window.

    Parameters
    ----------
    name : str
    width, height : int
        Window size in pixels (pitch is the probe-grid pitch).
    x0, y0 : float
        Window-center offset from the optical axis (m).
    z : float
        Object-to-detector distance (m).
    exposure_weight : float, default=1.0
        Relative exposure; predicted intensities scale linearly with it.
    """

    name: str
    width: int
    height: int
    x0: float
    y0: float
    z: float
    exposure_weight: float = 1.0

    def __post_init__(self):
        if not self.name:
            raise ValidationError("sensor name must be non-empty")
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"sensor {self.name}: window must be at least 1x1")
        if not self.z > 0:
            raise ValidationError(f"sensor {self.name}: z must be positive")
        if not self.exposure_weight > 0:
            raise ValidationError(f"sensor {self.name}: exposure_weight must be positive")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        for name in ("x0", "y0", "z", "exposure_weight"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def on_axis(self):
        return self.x0 == 0.0 and self.y0 == 0.0

    @property
    def shape(self):
        return (self.height, self.width)

    def to_dict(self):
        return {"name": self.name, "width": self.width, "height": self.height,
                "x0": self.x0, "y0": self.y0, "z": self.z,
                "exposure_weight": self.exposure_weight}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@lru_cache(maxsize=32)
def sensor_plan(grid, sensor_z, x0, y0, window):
    """Shared propagation plan; kernels depend only on geometry."""
    return PropagationPlan(grid, sensor_z, x0, y0, window=window)


def plan_for(grid, sensor):
    return sensor_plan(grid, sensor.z, sensor.x0, sensor.y0, sensor.shape)


def _check_sensors(sensors):
    names = [s.name for s in sensors]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate sensor names in {names}")


def pixel_positions(scan, grid, origin_px=(0, 0)):
    """Snap scan positions to integer ``(row, col)`` crop offsets."""
    pos = scan.positions
    rows = np.rint(pos[:, 1] / grid.pitch_y).astype(np.int64) + int(origin_px[0])
    cols = np.rint(pos[:, 0] / grid.pitch_x).astype(np.int64) + int(origin_px[1])
    return np.stack([rows, cols], axis=1)


class SceneModel:
    """Object, probe, scan and sensors.

    Parameters
    ----------
    object : ComplexField
        Object transmittance; larger than the probe grid.
    probe : ComplexField
        Illumination on the probe grid.
    scan : ScanPattern
    sensors : sequence of SensorSpec
    origin_px : tuple of int, default=(0, 0)
        Object pixel of the crop corner for a scan position at the region
        origin. Positions are snapped to whole pixels.
    """

    def __init__(self, object, probe, scan, sensors, origin_px=(0, 0)):
        if not isinstance(object, ComplexField) or not isinstance(probe, ComplexField):
            raise ValidationError("object and probe must be ComplexField instances")
        og, pg = object.grid, probe.grid
        if (og.pitch_x, og.pitch_y, og.wavelength) != (pg.pitch_x, pg.pitch_y, pg.wavelength):
            raise ValidationError("object and probe grids must share pitch and wavelength")
        self.object = object
        self.probe = probe
        self.scan = scan
        self.sensors = tuple(sensors)
        _check_sensors(self.sensors)
        self.origin_px = (int(origin_px[0]), int(origin_px[1]))
        self.positions_px = pixel_positions(scan, pg, self.origin_px)
        self.positions_px.setflags(write=False)
        ny, nx = pg.shape
        oy, ox = og.shape
        for i, (r, c) in enumerate(self.positions_px):
            if r < 0 or c < 0 or r + ny > oy or c + nx > ox:
                raise PositionError("probe crop leaves the object support", i)

    @property
    def grid(self):
        return self.probe.grid

    def replace(self, object=None, probe=None, sensors=None):
        return SceneModel(object if object is not None else self.object,
                          probe if probe is not None else self.probe,
                          self.scan, self.sensors if sensors is None else sensors,
                          self.origin_px)

    def crops(self, obj_values, indices=None):
        """Probe-sized object crops for the given scan indices, ``(k, ny, nx)``."""
        ny, nx = self.grid.shape
        pos = self.positions_px if indices is None else self.positions_px[indices]
        return np.stack([obj_values[r:r + ny, c:c + nx] for r, c in pos])


def exit_field(scene, position_index):
    """Exit wave ``O(r - R_i) P(r)`` for one scan position."""
    if not 0 <= position_index < len(scene.positions_px):
        raise ValidationError(f"position index {position_index} out of range")
    r, c = scene.positions_px[position_index]
    ny, nx = scene.grid.shape
    crop = scene.object.values[r:r + ny, c:c + nx]
    return ComplexField(scene.grid, crop * scene.probe.values)


def predict_intensity(scene, position_index, sensor):
    """Exposure-scaled intensity ``w |Psi_det|^2`` in the sensor window."""
    psi = exit_field(scene, position_index)
    det = plan_for(scene.grid, sensor).forward(psi.values)
    return RealField(scene.grid.resized(*sensor.shape),
                     sensor.exposure_weight * np.abs(det) ** 2)


class Dataset:
    """Intensity frames indexed by (position, sensor) with full geometry.

    Parameters
    ----------
    grid : GridSpec
        Probe grid (pitch and wavelength shared by every sensor).
    object_shape : tuple of int
    origin_px : tuple of int
    scan : ScanPattern
    sensors : sequence of SensorSpec
    frames : sequence of ndarray
        One array per sensor with shape ``(n_positions, height, width)``,
        exposure-scaled like :func:`predict_intensity`.
    noise : dict, optional
        Noise-model metadata.
    """

    def __init__(self, grid, object_shape, origin_px, scan, sensors, frames, noise=None):
        self.grid = grid
        self.object_shape = tuple(int(v) for v in object_shape)
        self.origin_px = tuple(int(v) for v in origin_px)
        self.scan = scan
        self.sensors = tuple(sensors)
        _check_sensors(self.sensors)
        self.frames = tuple(np.asarray(f) for f in frames)
        self.noise = dict(noise or {})
        if len(self.frames) != len(self.sensors):
            raise ValidationError("one frame stack per sensor is required")
        for s, f in zip(self.sensors, self.frames):
            if f.shape != (len(scan),) + s.shape:
                raise ValidationError(
                    f"sensor {s.name}: frames shape {f.shape} != {(len(scan),) + s.shape}")

    @property
    def n_positions(self):
        return len(self.scan)

    @property
    def n_frames(self):
        return self.n_positions * len(self.sensors)

    def sensor_index(self, name):
        for k, s in enumerate(self.sensors):
            if s.name == name:
                return k
        raise ValidationError(f"unknown sensor {name!r}; have {[s.name for s in self.sensors]}")

    def select_sensors(self, names):
        idx = [self.sensor_index(n) for n in names]
        return Dataset(self.grid, self.object_shape, self.origin_px, self.scan,
                       [self.sensors[k] for k in idx], [self.frames[k] for k in idx], self.noise)

    def normalized_frames(self, k):
        """Frames of sensor ``k`` divided by its exposure weight."""
        return self.frames[k] / self.sensors[k].exposure_weight

    def geometry(self):
        return {"grid": self.grid.to_dict(), "object_shape": list(self.object_shape),
                "origin_px": list(self.origin_px), "scan": self.scan.to_dict(),
                "sensors": [s.to_dict() for s in self.sensors]}

    def check_scene(self, scene):
        """Raise if ``scene`` disagrees with the recorded geometry."""
        problems = []
        if scene.grid != self.grid:
            problems.append("probe grid")
        if scene.object.grid.shape != self.object_shape:
            problems.append("object shape")
        if scene.origin_px != self.origin_px:
            problems.append("origin")
        if not np.array_equal(scene.positions_px,
                              pixel_positions(self.scan, self.grid, self.origin_px)):
            problems.append("scan positions")
        if tuple(scene.sensors) != self.sensors:
            problems.append("sensors")
        if problems:
            raise ValidationError("dataset and scene disagree on " + ", ".join(problems))


def predict_dataset(scene):
    """Noiseless exposure-scaled frames for every (position, sensor) pair."""
    stacks = []
    for sensor in scene.sensors:
        plan = plan_for(scene.grid, sensor)
        frames = np.empty((len(scene.positions_px),) + sensor.shape)
        for i in range(len(scene.positions_px)):
            try:
                det = plan.forward(exit_field(scene, i).values)
                frames[i] = sensor.exposure_weight * np.abs(det) ** 2
            except (ValidationError, FloatingPointError) as exc:
                raise PositionError(str(exc), i) from exc
        stacks.append(frames)
    return Dataset(scene.grid, scene.object.grid.shape, scene.origin_px, scene.scan,
                   scene.sensors, stacks)
