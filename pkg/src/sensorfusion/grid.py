"""
Physical sampling grids and the complex/real field containers shared by
every other module.

Arrays are stored row-major with shape ``(ny, nx)``. Fourier transforms use
the unitary normalization so that Parseval's identity holds with unit
constants in both domains.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import ValidationError


@dataclass(frozen=True)
class GridSpec:
    """Uniform sampling grid in a plane normal to the optical axis.

    Parameters
    ----------
    nx, ny : int
        Pixel counts along x (columns) and y (rows).
    pitch_x, pitch_y : float
        Pixel pitch in meters.
    wavelength : float
        Illumination wavelength in meters.
    """

    nx: int
    ny: int
    pitch_x: float
    pitch_y: float
    wavelength: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValidationError("grid pixel counts must be integers")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        if self.nx < 1 or self.ny < 1:
            raise ValidationError(f"grid needs at least one pixel, got {self.ny}x{self.nx}")
        for name in ("pitch_x", "pitch_y", "wavelength"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def square(cls, n, pitch, wavelength):
        return cls(nx=n, ny=n, pitch_x=pitch, pitch_y=pitch, wavelength=wavelength)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def extent_x(self):
        return self.nx * self.pitch_x

    @property
    def extent_y(self):
        return self.ny * self.pitch_y

    @property
    def fx(self):
        """Frequency samples along x in FFT ordering (cycles/m)."""
        return sfft.fftfreq(self.nx, self.pitch_x)

    @property
    def fy(self):
        return sfft.fftfreq(self.ny, self.pitch_y)

    def resized(self, ny, nx):
        """Same pitch and wavelength, different pixel counts."""
        return GridSpec(nx=nx, ny=ny, pitch_x=self.pitch_x, pitch_y=self.pitch_y,
                        wavelength=self.wavelength)

    def to_dict(self):
        return {"nx": self.nx, "ny": self.ny, "pitch_x": self.pitch_x,
                "pitch_y": self.pitch_y, "wavelength": self.wavelength}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class ComplexField:
    """Complex amplitude sampled on a :class:`GridSpec`.

    The value array is copied on construction and made read-only.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = _frozen(values, np.complex128)
        if values.shape != grid.shape:
            raise ValidationError(f"field shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field contains non-finite values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexField is immutable")

    def __repr__(self):
        return f"ComplexField(shape={self.values.shape}, pitch={self.grid.pitch_x:.3g})"

    @property
    def intensity(self):
        return np.abs(self.values) ** 2


class RealField:
    """Non-negative real quantity (typically intensity) on a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = _frozen(values, np.float64)
        if values.shape != grid.shape:
            raise ValidationError(f"field shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field contains non-finite values")
        if np.any(values < 0):
            raise ValidationError("real field must be non-negative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("RealField is immutable")

    def __repr__(self):
        return f"RealField(shape={self.values.shape})"


def fft2_centered(field):
    """Unitary 2D DFT of a field.

    The output uses the standard FFT ordering of :attr:`GridSpec.fx` and
    :attr:`GridSpec.fy`, so bin ``[0, 0]`` is the DC component.
    """
    return ComplexField(field.grid, sfft.fft2(field.values, norm="ortho"))


def ifft2_centered(spectrum):
    """Inverse of :func:`fft2_centered`."""
    return ComplexField(spectrum.grid, sfft.ifft2(spectrum.values, norm="ortho"))


def total_energy(field):
    """Sum of squared magnitudes of the field samples."""
    return float(np.sum(np.abs(field.values) ** 2))
