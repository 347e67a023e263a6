"""
Synthetic scenes: three-bar resolution targets, aperture probes and noisy
datasets.

Object-plane coordinates are measured from the object-grid center, with
pixel ``j`` centered at ``(j + 0.5 - n/2) * pitch``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .evaluation import LineSetRegion
from .forward import Dataset, predict_dataset
from .grid import ComplexField

DEFAULT_LADDER = (40.0, 48.0, 56.0, 68.0, 80.0)


@dataclass(frozen=True)
class LineSet:
    """One three-bar group.

    Parameters
    ----------
    lines_per_mm : float
    orientation : {"vertical", "horizontal"}
        Direction of the bars; vertical bars encode horizontal frequencies.
    center : tuple of float
        ``(x, y)`` of the group center relative to the object center (m).
    """

    lines_per_mm: float
    orientation: str
    center: tuple

    def __post_init__(self):
        if not self.lines_per_mm > 0:
            raise ValidationError("lines_per_mm must be positive")
        if self.orientation not in ("vertical", "horizontal"):
            raise ValidationError(f"orientation must be vertical or horizontal, got {self.orientation!r}")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    @property
    def pitch(self):
        return 1e-3 / self.lines_per_mm

    def rotated(self):
        """Same group rotated by 90 degrees (transpose of the plane)."""
        other = "horizontal" if self.orientation == "vertical" else "vertical"
        return LineSet(self.lines_per_mm, other, (self.center[1], self.center[0]))


@dataclass(frozen=True)
class TargetSpec:
    """Bar target description.

    Parameters
    ----------
    line_sets : tuple of LineSet
    line_transmittance, background_transmittance : float
        Amplitude transmittance inside and outside the bars.
    bar_length_factor : float, default=10.0
        Bar length in units of the bar width.
    phase : ndarray, optional
        Phase map (radians) multiplied on top of the amplitude pattern; must
        match the object grid.
    """

    line_sets: tuple = ()
    line_transmittance: float = 0.0
    background_transmittance: float = 1.0
    bar_length_factor: float = 10.0
    phase: object = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "line_sets", tuple(self.line_sets))
        for name in ("line_transmittance", "background_transmittance"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if not self.bar_length_factor > 0:
            raise ValidationError("bar_length_factor must be positive")


def ladder_target(ladder=DEFAULT_LADDER, bar_length_factor=10.0, gap=25e-6):
    """Ladder of vertical and horizontal groups arranged in two rows.

    Groups are placed left to right in the order given, vertical groups in
    the upper row and horizontal groups below, with ``gap`` meters of clear
    glass between neighbors. The layout is centered on the object center.
    """
    pitches = [1e-3 / l for l in ladder]
    widths = [max(2.5 * p, bar_length_factor * p / 2) for p in pitches]
    span = sum(widths) + gap * (len(widths) - 1)
    x = -span / 2
    centers = []
    for w in widths:
        centers.append(x + w / 2)
        x += w + gap
    v_row = -(bar_length_factor * max(pitches) / 4 + gap / 2)
    h_row = 1.25 * max(pitches) + gap / 2
    sets = []
    for l, cx in zip(ladder, centers):
        sets.append(LineSet(l, "vertical", (cx, v_row)))
        sets.append(LineSet(l, "horizontal", (cx, h_row)))
    return TargetSpec(line_sets=tuple(sets), bar_length_factor=bar_length_factor)


def _pixel_coords(grid):
    x = (np.arange(grid.nx) + 0.5 - grid.nx / 2) * grid.pitch_x
    y = (np.arange(grid.ny) + 0.5 - grid.ny / 2) * grid.pitch_y
    return x, y


def _bar_boxes(line_set, bar_length_factor):
    """Bar rectangles ``(x_lo, x_hi, y_lo, y_hi)`` in meters."""
    p = line_set.pitch
    bw = p / 2
    length = bar_length_factor * bw
    cx, cy = line_set.center
    across0 = -(2 * p + bw) / 2
    boxes = []
    for b in range(3):
        a_lo = across0 + b * p
        if line_set.orientation == "vertical":
            boxes.append((cx + a_lo, cx + a_lo + bw, cy - length / 2, cy + length / 2))
        else:
            boxes.append((cx - length / 2, cx + length / 2, cy + a_lo, cy + a_lo + bw))
    return boxes


def make_resolution_target(grid, spec):
    """Render the target by pixel-center sampling.

    Returns
    -------
    ComplexField
        Background transmittance outside the bars, line transmittance
        inside, times ``exp(1j * phase)`` if a phase map is given.
    """
    if spec.line_sets:
        finest = min(s.pitch for s in spec.line_sets)
        if finest < 2 * max(grid.pitch_x, grid.pitch_y):
            raise ValidationError(f"finest pitch {finest:.3g} m is below two pixels")
    x, y = _pixel_coords(grid)
    amp = np.full(grid.shape, float(spec.background_transmittance))
    for s in spec.line_sets:
        for x_lo, x_hi, y_lo, y_hi in _bar_boxes(s, spec.bar_length_factor):
            cols = (x >= x_lo) & (x < x_hi)
            rows = (y >= y_lo) & (y < y_hi)
            amp[np.ix_(rows, cols)] = spec.line_transmittance
    values = amp.astype(np.complex128)
    if spec.phase is not None:
        phase = np.asarray(spec.phase, dtype=np.float64)
        if phase.shape != grid.shape:
            raise ValidationError("phase map must match the object grid")
        values = values * np.exp(1j * phase)
    return ComplexField(grid, values)


def line_set_regions(grid, spec):
    """Evaluation regions (object pixel units) covering each rendered group."""
    regions = []
    for s in spec.line_sets:
        boxes = _bar_boxes(s, spec.bar_length_factor)
        x_lo = min(b[0] for b in boxes) / grid.pitch_x + grid.nx / 2
        x_hi = max(b[1] for b in boxes) / grid.pitch_x + grid.nx / 2
        y_lo = min(b[2] for b in boxes) / grid.pitch_y + grid.ny / 2
        y_hi = max(b[3] for b in boxes) / grid.pitch_y + grid.ny / 2
        pitch_px = s.pitch / (grid.pitch_x if s.orientation == "vertical" else grid.pitch_y)
        regions.append(LineSetRegion(x=x_lo, y=y_lo, width=x_hi - x_lo, height=y_hi - y_lo,
                                     orientation=s.orientation, lines_per_mm=s.lines_per_mm,
                                     pitch_px=pitch_px))
    return regions


def clear_region(grid, spec, gap=20e-6, height=40e-6, width=200e-6):
    """Bar-free rectangle just below the target, as ``(row0, row1, col0, col1)``."""
    bottom = 0.0
    for s in spec.line_sets:
        bottom = max(bottom, max(b[3] for b in _bar_boxes(s, spec.bar_length_factor)))
    x, y = _pixel_coords(grid)
    rows = np.nonzero((y >= bottom + gap) & (y < bottom + gap + height))[0]
    cols = np.nonzero(np.abs(x) < width / 2)[0]
    if rows.size == 0 or cols.size == 0:
        raise ValidationError("clear region falls outside the object grid")
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1


def make_probe(grid, diameter, edge_smoothing=0.0):
    """Centered circular top-hat probe with an optional raised-cosine rim.

    Parameters
    ----------
    grid : GridSpec
    diameter : float
        Aperture diameter (m), measured at the half-amplitude radius.
    edge_smoothing : float, default=0
        Width of the raised-cosine transition (m); 0 gives a hard edge.
    """
    if diameter <= 0 or edge_smoothing < 0:
        raise ValidationError("diameter must be positive and edge_smoothing non-negative")
    if diameter + edge_smoothing > min(grid.extent_x, grid.extent_y):
        raise ValidationError("probe does not fit in the grid")
    x, y = _pixel_coords(grid)
    radius = np.hypot(x[None, :], y[:, None])
    half = diameter / 2
    if edge_smoothing == 0:
        amp = (radius <= half).astype(np.float64)
    else:
        t = np.clip((half + edge_smoothing / 2 - radius) / edge_smoothing, 0.0, 1.0)
        amp = 0.5 - 0.5 * np.cos(np.pi * t)
    return ComplexField(grid, amp.astype(np.complex128))


@dataclass(frozen=True)
class NoiseSpec:
    """Camera model: Poisson photon noise plus optional ADC quantization.

    ``photon_scale`` is the expected photon count at unit (exposure-scaled)
    intensity; 0 disables noise entirely.
    """

    photon_scale: float = 0.0
    quantization_bits: object = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.photon_scale < 0:
            raise ValidationError("photon_scale must be non-negative")
        if self.quantization_bits is not None and int(self.quantization_bits) < 1:
            raise ValidationError("quantization_bits must be >= 1")

    def to_dict(self):
        return {"photon_scale": self.photon_scale, "quantization_bits": self.quantization_bits,
                "rng_seed": self.rng_seed}


def simulate_dataset(scene, noise=NoiseSpec()):
    """Noisy measurement of every (position, sensor) frame.

    Frames stay exposure-scaled, so a sensor with a larger exposure weight
    collects proportionally more photons; division by the exposure weight
    happens in the loss. Each frame draws from its own seeded substream.
    """
    clean = predict_dataset(scene)
    if noise.photon_scale == 0:
        frames = clean.frames
    else:
        frames = []
        for k, stack in enumerate(clean.frames):
            noisy = np.empty_like(stack)
            for i, frame in enumerate(stack):
                rng = np.random.default_rng([int(noise.rng_seed), i, k])
                counts = rng.poisson(noise.photon_scale * frame).astype(np.float64)
                if noise.quantization_bits is not None:
                    counts = np.minimum(counts, 2.0 ** int(noise.quantization_bits) - 1)
                noisy[i] = counts / noise.photon_scale
            frames.append(noisy)
    return Dataset(clean.grid, clean.object_shape, clean.origin_px, clean.scan,
                   clean.sensors, frames, noise.to_dict())
