import sys

import numpy as np
import pytest

from sensorfusion import ComplexField, GridSpec, SceneModel, SensorSpec
from sensorfusion.scan import ScanPattern

PITCH = 3.45e-6
WAVELENGTH = 561e-9


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def small_scene(obj_n=32, probe_n=16, offsets=((0, 0), (8, 5), (14, 16)), seed=0,
                z=2e-3, shift_px=10, probe=None):
    """Random object, random probe, pixel-exact scan and sensors a (on-axis) and b."""
    rng = np.random.default_rng(seed)
    obj_grid = GridSpec.square(obj_n, PITCH, WAVELENGTH)
    grid = GridSpec.square(probe_n, PITCH, WAVELENGTH)
    obj = ComplexField(obj_grid, 1 + 0.3 * random_complex(rng, obj_grid.shape))
    if probe is None:
        probe = ComplexField(grid, random_complex(rng, grid.shape, 0.5))
    pos = np.array([[c * PITCH, r * PITCH] for r, c in offsets], dtype=float)
    region = (obj_n * PITCH, obj_n * PITCH)
    scan = ScanPattern(pos, min_distance=0.0, region=region)
    sensors = (SensorSpec("a", probe_n, probe_n, 0.0, 0.0, z),
               SensorSpec("b", probe_n, probe_n, shift_px * PITCH, 0.0, z, exposure_weight=10.0))
    return SceneModel(obj, probe, scan, sensors)


@pytest.fixture
def scene():
    return small_scene()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
