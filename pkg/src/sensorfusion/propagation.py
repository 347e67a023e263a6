"""
Free-space propagation between parallel planes.

Three routes are provided:

* :func:`propagate_asm` - the angular spectrum method on the source grid.
* :func:`propagate_shifted_asm` - the off-axis variant, whose destination
  window is centered at a lateral offset ``(x0, y0)``. The transfer function
  carries a linear phase for the shift and a rectangular band cut that keeps
  only the spatial frequencies able to reach the window.
* :func:`propagate_padded_oracle` - brute force: zero-embed the source in a
  large grid, propagate on axis and crop the window. Slow, but free of any
  band-limit approximation; used as ground truth.

:class:`PropagationPlan` caches the band-limited kernel for one
source/window geometry and exposes both the forward map and its adjoint,
which the reconstruction gradient needs.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import ValidationError
from .grid import ComplexField, GridSpec

EVANESCENT_POLICY = "zero-out"


def _kernel(fx, fy, wavelength, z):
    radicand = 1.0 - (wavelength * fx) ** 2 - (wavelength * fy) ** 2
    propagating = radicand >= 0
    phase = 2 * np.pi / wavelength * z * np.sqrt(np.where(propagating, radicand, 0.0))
    return np.where(propagating, np.exp(1j * phase), 0.0)


def transfer_function(grid, z):
    """Angular-spectrum transfer function sampled on ``grid``.

    Parameters
    ----------
    grid : GridSpec
    z : float
        Propagation distance in meters.

    Returns
    -------
    ComplexField
        ``H(fx, fy)`` in FFT ordering. Evanescent bins are exactly zero.
    """
    _check_z(z)
    return ComplexField(grid, _kernel(grid.fx[None, :], grid.fy[:, None], grid.wavelength, z))


def _check_z(z):
    if not np.isfinite(z) or z <= 0:
        raise ValidationError(f"propagation distance must be positive, got {z}")


@dataclass(frozen=True)
class BandLimit:
    """Rectangular pass band in the frequency plane (cycles/m)."""

    u0: float
    v0: float
    u_width: float
    v_width: float
    u_case: str
    v_case: str

    def mask(self, fx, fy):
        """Closed rect: boundary samples are kept."""
        inside_u = np.abs(fx - self.u0) <= self.u_width / 2
        inside_v = np.abs(fy - self.v0) <= self.v_width / 2
        return inside_u & inside_v


def _axis_band(z, offset, half_extent, wavelength):
    # sines are taken as magnitudes; the case decides the sign
    u_max = abs(np.sin(np.arctan((offset + half_extent) / z))) / wavelength
    u_min = abs(np.sin(np.arctan((offset - half_extent) / z))) / wavelength
    if offset >= half_extent:
        return (u_max + u_min) / 2, u_max - u_min, "positive"
    if offset <= -half_extent:
        return -(u_max + u_min) / 2, u_min - u_max, "negative"
    return (u_max - u_min) / 2, u_max + u_min, "central"


def _clamp(center, width, nyquist):
    lo = max(center - width / 2, -nyquist)
    hi = min(center + width / 2, nyquist)
    if hi < lo:
        return center, 0.0
    return (lo + hi) / 2, hi - lo


def band_limit(grid, z, x0, y0, src_halfwidth_x, src_halfwidth_y):
    """Pass band of the off-axis transfer function.

    Parameters
    ----------
    grid : GridSpec
        Supplies the wavelength and the Nyquist limits used for clamping.
    z : float
        Propagation distance (m).
    x0, y0 : float
        Window-center offsets (m).
    src_halfwidth_x, src_halfwidth_y : float
        Geometric half-extents ``S_x``, ``S_y``. :class:`PropagationPlan`
        passes half the sum of the source and window extents.

    Returns
    -------
    BandLimit
    """
    _check_z(z)
    if src_halfwidth_x <= 0 or src_halfwidth_y <= 0:
        raise ValidationError("band-limit half-extents must be positive")
    u0, uw, uc = _axis_band(z, x0, src_halfwidth_x, grid.wavelength)
    v0, vw, vc = _axis_band(z, y0, src_halfwidth_y, grid.wavelength)
    u0, uw = _clamp(u0, uw, 0.5 / grid.pitch_x)
    v0, vw = _clamp(v0, vw, 0.5 / grid.pitch_y)
    return BandLimit(u0=u0, v0=v0, u_width=uw, v_width=vw, u_case=uc, v_case=vc)


class PropagationPlan:
    """Cached off-axis propagator for one source/window geometry.

    The source (``grid``) is zero-embedded in a computational grid whose size
    along each axis is the source size plus the window size, which keeps the
    periodic wrap-around of the DFT out of the window. The window keeps the
    source pitch.

    Parameters
    ----------
    grid : GridSpec
        Source-plane grid.
    z : float
        Propagation distance (m).
    x0, y0 : float, default=0
        Window-center offset (m).
    window : tuple of int, optional
        Window shape ``(ny, nx)``. Defaults to the source shape.
    band_limited : bool, default=True
        Apply the rectangular band cut.
    padded : bool, default=True
        Use the enlarged computational grid. With ``padded=False`` the source
        and window must share a shape and the result is the plain circular
        convolution on the source grid.
    """

    evanescent_policy = EVANESCENT_POLICY

    def __init__(self, grid, z, x0=0.0, y0=0.0, window=None, band_limited=True, padded=True):
        _check_z(z)
        self.grid = grid
        self.z = float(z)
        self.x0 = float(x0)
        self.y0 = float(y0)
        self.window = tuple(int(w) for w in (window or grid.shape))
        if min(self.window) < 1:
            raise ValidationError(f"window shape must be positive, got {self.window}")
        ny, nx = grid.shape
        wy, wx = self.window
        if padded:
            shape = (ny + wy, nx + wx)
        else:
            if self.window != grid.shape:
                raise ValidationError("unpadded propagation requires window shape == source shape")
            shape = grid.shape
        self.compute_grid = grid.resized(*shape)
        self.window_grid = grid.resized(wy, wx)
        self.half_extent_x = (nx + wx) * grid.pitch_x / 2
        self.half_extent_y = (ny + wy) * grid.pitch_y / 2
        if self.z <= max(self.half_extent_x, self.half_extent_y) and (self.x0 or self.y0):
            warnings.warn(
                f"z = {self.z:.4g} m does not exceed the plane half-extents "
                f"({self.half_extent_x:.4g}, {self.half_extent_y:.4g}) m; the rectangular "
                "band cut is only an approximation here",
                RuntimeWarning,
                stacklevel=2,
            )
        fx = self.compute_grid.fx[None, :]
        fy = self.compute_grid.fy[:, None]
        kernel = _kernel(fx, fy, grid.wavelength, self.z)
        if self.x0 or self.y0:
            kernel = kernel * np.exp(2j * np.pi * (self.x0 * fx + self.y0 * fy))
        self.band = None
        if band_limited:
            self.band = band_limit(self.compute_grid, self.z, self.x0, self.y0,
                                   self.half_extent_x, self.half_extent_y)
            kernel = kernel * self.band.mask(fx, fy)
        kernel.setflags(write=False)
        self.kernel = kernel
        my, mx = shape
        self._src = (slice((my - ny) // 2, (my - ny) // 2 + ny),
                     slice((mx - nx) // 2, (mx - nx) // 2 + nx))
        self._win = (slice((my - wy) // 2, (my - wy) // 2 + wy),
                     slice((mx - wx) // 2, (mx - wx) // 2 + wx))

    def _apply(self, values, kernel, into, out_of, out_shape):
        values = np.asarray(values)
        lead = values.shape[:-2]
        buf = np.zeros(lead + self.compute_grid.shape, dtype=np.complex128)
        buf[(...,) + into] = values
        buf = sfft.ifft2(sfft.fft2(buf, norm="ortho", overwrite_x=True) * kernel,
                         norm="ortho", overwrite_x=True)
        return np.ascontiguousarray(buf[(...,) + out_of]).reshape(lead + out_shape)

    def forward(self, values):
        """Propagate source arrays of shape ``(..., ny, nx)`` into the window."""
        if np.shape(values)[-2:] != self.grid.shape:
            raise ValidationError(f"expected trailing shape {self.grid.shape}, got {np.shape(values)}")
        return self._apply(values, self.kernel, self._src, self._win, self.window)

    def adjoint(self, values):
        """Adjoint of :meth:`forward`, mapping window arrays back to the source."""
        if np.shape(values)[-2:] != self.window:
            raise ValidationError(f"expected trailing shape {self.window}, got {np.shape(values)}")
        return self._apply(values, np.conj(self.kernel), self._win, self._src, self.grid.shape)

    def propagate(self, field):
        return ComplexField(self.window_grid, self.forward(field.values))


def propagate_asm(field, z, band=None, pad=False):
    """Angular spectrum propagation over distance ``z``.

    Parameters
    ----------
    field : ComplexField
    z : float
        Distance in meters.
    band : BandLimit, optional
        Extra rectangular frequency cut applied on top of the transfer
        function.
    pad : bool, default=False
        Zero-embed in a grid of twice the linear size and crop the center
        back, removing wrap-around from the circular convolution.

    Returns
    -------
    ComplexField
        Field on the same grid as the input.
    """
    _check_z(z)
    grid = field.grid
    values = field.values
    if pad:
        ny, nx = grid.shape
        work = grid.resized(2 * ny, 2 * nx)
        sy, sx = ny // 2, nx // 2
        buf = np.zeros(work.shape, dtype=np.complex128)
        buf[sy:sy + ny, sx:sx + nx] = values
    else:
        work, buf = grid, values
    fx, fy = work.fx[None, :], work.fy[:, None]
    h = _kernel(fx, fy, grid.wavelength, z)
    if band is not None:
        h = h * band.mask(fx, fy)
    out = sfft.ifft2(sfft.fft2(buf, norm="ortho") * h, norm="ortho")
    if pad:
        out = out[sy:sy + ny, sx:sx + nx]
    return ComplexField(grid, out)


def propagate_shifted_asm(field, z, x0, y0, window=None, pad=True):
    """Off-axis angular spectrum propagation into a window centered at ``(x0, y0)``.

    Parameters
    ----------
    field : ComplexField
    z : float
        Distance in meters.
    x0, y0 : float
        Window-center offsets in meters.
    window : tuple of int, optional
        Window shape; defaults to the source shape.
    pad : bool, default=True
        See :class:`PropagationPlan`.

    Returns
    -------
    ComplexField
        Window field at the source pitch.
    """
    plan = PropagationPlan(field.grid, z, x0, y0, window=window, padded=pad)
    return plan.propagate(field)


def propagate_padded_oracle(field, z, x0, y0, pad_factor, window=None):
    """Brute-force reference for :func:`propagate_shifted_asm`.

    The source is embedded at the center of a grid ``pad_factor`` times
    larger per axis and propagated with the plain transfer function; the
    window is then cropped at the requested offset, which must be a whole
    number of pixels.

    Returns
    -------
    ComplexField
    """
    grid = field.grid
    ny, nx = grid.shape
    wy, wx = window or grid.shape
    ix, iy = x0 / grid.pitch_x, y0 / grid.pitch_y
    if abs(ix - round(ix)) > 1e-6 or abs(iy - round(iy)) > 1e-6:
        raise ValidationError("oracle offsets must be whole pixels")
    ix, iy = int(round(ix)), int(round(iy))
    pad_factor = int(pad_factor)
    if pad_factor < 1:
        raise ValidationError("pad_factor must be >= 1")
    big = grid.resized(pad_factor * ny, pad_factor * nx)
    by, bx = big.shape
    sy, sx = (by - ny) // 2, (bx - nx) // 2
    top = sy + (ny - wy) // 2 + iy
    left = sx + (nx - wx) // 2 + ix
    if top < 0 or left < 0 or top + wy > by or left + wx > bx:
        raise ValidationError(f"window at offset ({x0}, {y0}) leaves the padded grid; increase pad_factor")
    buf = np.zeros(big.shape, dtype=np.complex128)
    buf[sy:sy + ny, sx:sx + nx] = field.values
    out = propagate_asm(ComplexField(big, buf), z).values
    return ComplexField(grid.resized(wy, wx), out[top:top + wy, left:left + wx])
