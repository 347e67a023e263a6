import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorfusion import (ComplexField, GridSpec, LineSetRegion, RealField, SensorSpec,
                          ValidationError, detection_na, fringe_visibility,
                          normalize_transmittance, theoretical_resolution)
from sensorfusion.evaluation import format_visibility_table, visibility
from sensorfusion.simulator import (clear_region, ladder_target, line_set_regions,
                                    make_resolution_target)

from .conftest import PITCH, WAVELENGTH


def bars(pitch_px=8, low=0.2, high=1.0, n=64):
    """Three vertical bars of ``low`` on a ``high`` background, region at column 10."""
    img = np.full((n, n), high)
    for b in range(3):
        c = 10 + b * pitch_px
        img[10:50, c:c + pitch_px // 2] = low
    region = LineSetRegion(x=10, y=10, width=2.5 * pitch_px, height=40, orientation="vertical",
                           lines_per_mm=1.0, pitch_px=pitch_px)
    return img, region


def test_visibility_formula():
    assert visibility(1.0, 0.0) == 1.0
    assert visibility(3.0, 1.0) == 0.5
    with pytest.raises(ValidationError):
        visibility(0.0, 0.0)


@settings(max_examples=40)
@given(st.floats(0.0, 0.9), st.floats(1.0, 5.0))
def test_ideal_bars_recover_contrast(low, high):
    img, region = bars(low=low, high=high)
    rep = fringe_visibility(img, region)
    assert rep.resolved
    assert rep.visibility == pytest.approx((high - low) / (high + low))


def test_uniform_image_is_unresolved():
    img, region = bars(low=1.0, high=1.0)
    rep = fringe_visibility(img, region)
    assert not rep.resolved and rep.value_or_zero() == 0.0


def test_horizontal_orientation_uses_rows():
    img, region = bars(low=0.0)
    rot = LineSetRegion(x=region.y, y=region.x, width=region.height, height=region.width,
                        orientation="horizontal", lines_per_mm=1.0, pitch_px=region.pitch_px)
    assert fringe_visibility(img.T, rot).visibility == pytest.approx(1.0)


def test_blurred_bars_lose_contrast():
    img, region = bars(low=0.0)
    kernel = np.ones(7) / 7
    blurred = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), 1, img)
    sharp = fringe_visibility(img, region).visibility
    soft = fringe_visibility(blurred, region)
    assert soft.raw_visibility < sharp


def test_region_outside_image_rejected():
    img, _ = bars()
    region = LineSetRegion(x=60, y=10, width=20, height=10, orientation="vertical",
                           lines_per_mm=1.0, pitch_px=8)
    with pytest.raises(ValidationError):
        fringe_visibility(img, region)


def test_ground_truth_target_scores_high():
    grid = GridSpec.square(319, PITCH, WAVELENGTH)
    spec = ladder_target()
    obj = make_resolution_target(grid, spec)
    t = normalize_transmittance(obj, clear_region(grid, spec))
    for region in line_set_regions(grid, spec):
        rep = fringe_visibility(t, region)
        assert rep.resolved and rep.visibility >= 0.99


def test_normalize_transmittance_kinds_and_idempotence():
    grid = GridSpec.square(8, PITCH, WAVELENGTH)
    obj = ComplexField(grid, np.full((8, 8), 2.0 + 0j))
    clear = (0, 4, 0, 4)
    inten = normalize_transmittance(obj, clear)
    amp = normalize_transmittance(obj, clear, kind="amplitude")
    np.testing.assert_allclose(inten.values, 1.0)
    np.testing.assert_allclose(amp.values, 1.0)
    again = normalize_transmittance(inten, clear)
    np.testing.assert_array_equal(again.values, inten.values)
    with pytest.raises(ValidationError):
        normalize_transmittance(obj, clear, kind="phase")
    with pytest.raises(ValidationError):
        normalize_transmittance(ComplexField(grid, np.zeros((8, 8))), clear)


def test_resolution_and_na():
    assert theoretical_resolution(561e-9, 0.01, 0.015) == pytest.approx(22.44e-6)
    with pytest.raises(ValidationError):
        theoretical_resolution(561e-9, 0.0, 0.0)
    on = SensorSpec("a", 512, 512, 0.0, 0.0, 61e-3)
    off = SensorSpec("b", 512, 512, 2.649e-3, 0.0, 61e-3)
    assert detection_na(on, 3.45e-6) == pytest.approx(np.sin(np.arctan(256 * 3.45e-6 / 61e-3)))
    assert detection_na(off, 3.45e-6) > detection_na(on, 3.45e-6)
    assert detection_na(off, 3.45e-6, axis="y") == pytest.approx(detection_na(on, 3.45e-6))


def test_visibility_table_layout():
    img, region = bars(low=0.0)
    rep = fringe_visibility(img, region)
    flat = fringe_visibility(np.ones_like(img), region)
    table = format_visibility_table({"x": [rep], "y": [flat]})
    assert table.splitlines() == ["lines_per_mm\torientation\tx\ty", "1\tvertical\t1.00\t-"]


def test_realfield_input_accepted():
    img, region = bars()
    grid = GridSpec.square(64, PITCH, WAVELENGTH)
    assert fringe_visibility(RealField(grid, img), region).resolved
