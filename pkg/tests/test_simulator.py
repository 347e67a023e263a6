import numpy as np
import pytest

from sensorfusion import (ComplexField, GridSpec, LineSet, NoiseSpec, TargetSpec, ValidationError,
                          make_probe, make_resolution_target, predict_dataset, simulate_dataset)
from sensorfusion.simulator import clear_region, ladder_target, line_set_regions

from .conftest import PITCH, WAVELENGTH, small_scene


def test_single_group_geometry():
    grid = GridSpec.square(64, 1e-6, WAVELENGTH)
    # 125 lines/mm: 8 um pitch, 4 px bars
    spec = TargetSpec(line_sets=(LineSet(125.0, "vertical", (0.0, 0.0)),), bar_length_factor=5)
    amp = np.abs(make_resolution_target(grid, spec).values)
    row = amp[32]
    dark = np.nonzero(row == 0)[0]
    assert len(dark) == 12
    assert np.array_equal(dark, np.r_[22:26, 30:34, 38:42])
    col = amp[:, 23]
    assert np.count_nonzero(col == 0) == 20


def test_rotation_transposes_target():
    grid = GridSpec.square(96, 1e-6, WAVELENGTH)
    s = LineSet(100.0, "vertical", (5e-6, -12e-6))
    a = make_resolution_target(grid, TargetSpec((s,), bar_length_factor=4)).values
    b = make_resolution_target(grid, TargetSpec((s.rotated(),), bar_length_factor=4)).values
    np.testing.assert_array_equal(a.T, b)


def test_ladder_is_disjoint_and_renders_all_groups():
    grid = GridSpec.square(319, PITCH, WAVELENGTH)
    spec = ladder_target()
    assert len(spec.line_sets) == 10
    regions = line_set_regions(grid, spec)
    boxes = [(r.x, r.x + r.width, r.y, r.y + r.height) for r in regions]
    for i, a in enumerate(boxes):
        assert 0 <= a[0] and a[1] <= 319 and 0 <= a[2] and a[3] <= 319
        for b in boxes[i + 1:]:
            assert a[1] <= b[0] or b[1] <= a[0] or a[3] <= b[2] or b[3] <= a[2]
    r0, r1, c0, c1 = clear_region(grid, spec)
    amp = np.abs(make_resolution_target(grid, spec).values)
    assert np.all(amp[r0:r1, c0:c1] == 1.0)
    assert r0 > max(b[3] for b in boxes)


def test_target_validation():
    grid = GridSpec.square(32, PITCH, WAVELENGTH)
    with pytest.raises(ValidationError):
        make_resolution_target(grid, TargetSpec((LineSet(200.0, "vertical", (0, 0)),)))
    with pytest.raises(ValidationError):
        LineSet(40.0, "diagonal", (0, 0))
    with pytest.raises(ValidationError):
        TargetSpec(line_transmittance=1.5)


def test_phase_map_applied():
    grid = GridSpec.square(16, PITCH, WAVELENGTH)
    phase = np.full(grid.shape, 0.5)
    obj = make_resolution_target(grid, TargetSpec(phase=phase)).values
    np.testing.assert_allclose(obj, np.exp(0.5j))


def test_probe_shape():
    grid = GridSpec.square(64, 1e-6, WAVELENGTH)
    hard = np.abs(make_probe(grid, 40e-6).values)
    assert hard[32, 32] == 1 and hard[0, 0] == 0
    assert hard.sum() == pytest.approx(np.pi * 20 ** 2, rel=0.05)
    soft = np.abs(make_probe(grid, 40e-6, edge_smoothing=10e-6).values)
    assert 0 < soft[32, 32 + 20] < 1
    assert soft[32, 32] == 1
    with pytest.raises(ValidationError):
        make_probe(grid, 80e-6)


def test_noiseless_simulation_equals_prediction():
    scene = small_scene()
    a = simulate_dataset(scene)
    b = predict_dataset(scene)
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa, fb)


def test_poisson_noise_statistics_and_seed():
    grid = GridSpec.square(16, PITCH, WAVELENGTH)
    scene = small_scene(probe=ComplexField(grid, np.ones(grid.shape)))
    clean = predict_dataset(scene)
    noise = NoiseSpec(photon_scale=1000.0, rng_seed=4)
    a = simulate_dataset(scene, noise)
    b = simulate_dataset(scene, noise)
    np.testing.assert_array_equal(a.frames[0], b.frames[0])
    counts = a.frames[1] * 1000.0
    np.testing.assert_allclose(counts, np.rint(counts), atol=1e-6)
    # mean of the photon counts tracks the clean signal
    ratio = a.frames[1].sum() / clean.frames[1].sum()
    assert ratio == pytest.approx(1.0, rel=0.02)
    c = simulate_dataset(scene, NoiseSpec(photon_scale=1000.0, rng_seed=5))
    assert not np.array_equal(a.frames[0], c.frames[0])


def test_quantization_saturates():
    scene = small_scene()
    data = simulate_dataset(scene, NoiseSpec(photon_scale=100.0, quantization_bits=4))
    assert max(f.max() for f in data.frames) <= 15 / 100.0
