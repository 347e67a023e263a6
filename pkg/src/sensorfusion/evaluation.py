"""
Resolution metrics: fringe visibility of three-bar groups, the coherent
resolution limit, geometric detection NA and transmittance normalization.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import ComplexField, GridSpec, RealField


@dataclass(frozen=True)
class LineSetRegion:
    """Rectangle tightly enclosing one three-bar group.

    Coordinates are continuous object-pixel units: pixel ``j`` spans
    ``[j, j + 1)``. ``x`` and ``y`` give the top-left corner.
    """

    x: float
    y: float
    width: float
    height: float
    orientation: str
    lines_per_mm: float
    pitch_px: float

    def __post_init__(self):
        if self.orientation not in ("vertical", "horizontal"):
            raise ValidationError(f"bad orientation {self.orientation!r}")
        if self.width <= 0 or self.height <= 0 or self.pitch_px <= 0:
            raise ValidationError("region size and pitch must be positive")


@dataclass(frozen=True)
class VisibilityReport:
    """Visibility of one group.

    ``visibility`` is None when the three-minima/two-maxima structure is not
    distinguishable; ``raw_visibility`` always holds the value computed from
    the sampled extrema.
    """

    lines_per_mm: float
    orientation: str
    visibility: object
    raw_visibility: float
    profile: np.ndarray
    i_max: float
    i_min: float

    @property
    def resolved(self):
        return self.visibility is not None

    def value_or_zero(self):
        return 0.0 if self.visibility is None else self.visibility


def visibility(i_max, i_min):
    """``(I_max - I_min) / (I_max + I_min)``."""
    total = i_max + i_min
    if total <= 0:
        raise ValidationError("I_max + I_min must be positive")
    return (i_max - i_min) / total


def _profile(image, region):
    """Average along the bars, keeping only pixels fully inside the region."""
    ny, nx = image.shape
    if region.x < 0 or region.y < 0 or region.x + region.width > nx or region.y + region.height > ny:
        raise ValidationError("line-set region lies outside the image")
    if region.orientation == "vertical":
        rows = slice(int(np.ceil(region.y)), int(np.floor(region.y + region.height)))
        cols = slice(int(np.floor(region.x)), int(np.ceil(region.x + region.width)))
        block = image[rows, cols]
        return block.mean(axis=0), region.x - cols.start
    rows = slice(int(np.floor(region.y)), int(np.ceil(region.y + region.height)))
    cols = slice(int(np.ceil(region.x)), int(np.floor(region.x + region.width)))
    block = image[rows, cols]
    return block.mean(axis=1), region.y - rows.start


def fringe_visibility(transmittance, region, prominence=0.05):
    """Visibility of a three-bar group from its averaged profile.

    The expected bar and gap centers follow from the region origin and the
    group pitch. Each bar minimum is the lowest profile sample within a
    quarter pitch of its expected center, each gap maximum the highest. The
    group counts as resolved when both gap maxima exceed their neighboring
    bar minima by more than ``prominence`` times the profile range.

    Parameters
    ----------
    transmittance : RealField or ndarray
    region : LineSetRegion
    prominence : float, default=0.05

    Returns
    -------
    VisibilityReport
    """
    image = transmittance.values if isinstance(transmittance, RealField) else np.asarray(transmittance)
    profile, start = _profile(np.asarray(image, dtype=np.float64), region)
    if profile.size < 3:
        raise ValidationError("line-set region too small for a profile")
    centers = np.arange(profile.size) + 0.5
    pitch = region.pitch_px

    def extremum(center, reduce):
        dist = np.abs(centers - center)
        sel = dist <= pitch / 4
        if not sel.any():
            sel = dist == dist.min()
        return float(reduce(profile[sel]))

    mins = [extremum(start + b * pitch + pitch / 4, np.min) for b in range(3)]
    maxs = [extremum(start + b * pitch + 3 * pitch / 4, np.max) for b in range(2)]
    i_max, i_min = float(np.mean(maxs)), float(np.mean(mins))
    raw = (i_max - i_min) / (i_max + i_min) if i_max + i_min > 0 else 0.0
    span = float(profile.max() - profile.min())
    threshold = prominence * span
    resolved = span > 0 and all(maxs[i] - max(mins[i], mins[i + 1]) > threshold for i in range(2))
    return VisibilityReport(lines_per_mm=region.lines_per_mm, orientation=region.orientation,
                            visibility=float(np.clip(raw, 0.0, 1.0)) if resolved else None,
                            raw_visibility=float(raw), profile=profile, i_max=i_max, i_min=i_min)


def theoretical_resolution(wavelength, na_illum, na_det):
    """Smallest resolvable period ``wavelength / (na_illum + na_det)``."""
    total = na_illum + na_det
    if not total > 0:
        raise ValidationError("NA sum must be positive")
    return wavelength / total


def detection_na(sensor, pitch, axis=None):
    """Geometric NA of a sensor window from its farthest edge.

    Parameters
    ----------
    sensor : SensorSpec
    pitch : float
        Detector pixel pitch (m).
    axis : {"x", "y"}, optional
        Direction to evaluate; defaults to the direction of the larger
        offset (x for on-axis windows).
    """
    if axis is None:
        axis = "y" if abs(sensor.y0) > abs(sensor.x0) else "x"
    if axis == "x":
        edge = abs(sensor.x0) + sensor.width * pitch / 2
    elif axis == "y":
        edge = abs(sensor.y0) + sensor.height * pitch / 2
    else:
        raise ValidationError(f"axis must be 'x' or 'y', got {axis!r}")
    return float(np.sin(np.arctan(edge / sensor.z)))


def normalize_transmittance(reconstruction, clear_region, kind="intensity"):
    """Transmittance scaled to unit mean over a bar-free region.

    Parameters
    ----------
    reconstruction : ComplexField, RealField or ndarray
        A RealField is taken as an existing transmittance and only
        rescaled, which makes the operation idempotent.
    clear_region : tuple of int
        ``(row0, row1, col0, col1)``.
    kind : {"intensity", "amplitude"}, default="intensity"
        ``|O|**2`` or ``|O|``.

    Returns
    -------
    RealField
    """
    if isinstance(reconstruction, (ComplexField, RealField)):
        grid, values = reconstruction.grid, reconstruction.values
    else:
        values = np.asarray(reconstruction)
        grid = GridSpec(nx=values.shape[1], ny=values.shape[0], pitch_x=1.0, pitch_y=1.0,
                        wavelength=1.0)
    if isinstance(reconstruction, RealField):
        t = values
    elif kind == "intensity":
        t = np.abs(values) ** 2
    elif kind == "amplitude":
        t = np.abs(values)
    else:
        raise ValidationError(f"kind must be 'intensity' or 'amplitude', got {kind!r}")
    r0, r1, c0, c1 = clear_region
    patch = t[r0:r1, c0:c1]
    if patch.size == 0:
        raise ValidationError("clear region is empty")
    mean = patch.mean()
    if not mean > 0:
        raise ValidationError("clear region has zero mean")
    return RealField(grid, t / mean)


def format_visibility_table(columns):
    """Tab-separated table: one row per group, one column per configuration.

    Parameters
    ----------
    columns : dict
        Configuration name to a list of :class:`VisibilityReport`.
    """
    names = list(columns)
    keys = []
    for reports in columns.values():
        for r in reports:
            if (r.lines_per_mm, r.orientation) not in keys:
                keys.append((r.lines_per_mm, r.orientation))
    keys.sort(key=lambda k: (k[1] != "vertical", k[0]))
    lines = ["lines_per_mm\torientation\t" + "\t".join(names)]
    for lpm, orient in keys:
        cells = []
        for name in names:
            match = [r for r in columns[name] if (r.lines_per_mm, r.orientation) == (lpm, orient)]
            cells.append("-" if not match or not match[0].resolved else f"{match[0].visibility:.2f}")
        lines.append(f"{lpm:g}\t{orient}\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"
