"""Periodic grid fields and FFT helpers."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


def wavenumbers(n, length):
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


def grid_points(n, length):
    return -0.5 * length + np.arange(n) * (length / n)


def deriv(values, length, order=1):
    """Spectral derivative along the last axis; real input gives real output."""
    if order == 0:
        return np.array(values, copy=True)
    values = np.asarray(values)
    n = values.shape[-1]
    k = wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0  # Nyquist mode has no odd derivative
    out = np.fft.ifft(np.fft.fft(values, axis=-1) * mult, axis=-1)
    return out.real if np.isrealobj(values) else out


def trapezoid(values, length):
    """Trapezoid rule on the periodic grid (a plain sum times the spacing)."""
    values = np.asarray(values)
    return values.sum(axis=-1) * (length / values.shape[-1])


def shift(values, length, s):
    """Trigonometric interpolant evaluated at x + s."""
    values = np.asarray(values)
    k = wavenumbers(values.shape[-1], length)
    out = np.fft.ifft(np.fft.fft(values, axis=-1) * np.exp(1j * k * s), axis=-1)
    return out.real if np.isrealobj(values) else out


def refine(values, factor):
    """Trigonometric interpolant on a grid `factor` times finer (same left endpoint)."""
    values = np.asarray(values)
    n = values.shape[-1]
    m = n * factor
    vh = np.fft.fft(values, axis=-1)
    pad = np.zeros(values.shape[:-1] + (m,), dtype=complex)
    half = n // 2
    pad[..., :half] = vh[..., :half]
    pad[..., m - half + 1:] = vh[..., half + 1:]
    pad[..., half] = 0.5 * vh[..., half]
    pad[..., m - half] = 0.5 * vh[..., half]
    out = np.fft.ifft(pad, axis=-1) * factor
    return out.real if np.isrealobj(values) else out


def dealias_mask(n):
    k = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    return k < (2.0 / 3.0) * (n // 2)


def check_grid(n, length, key="grid"):
    if not isinstance(n, (int, np.integer)) or n < 16 or (n & (n - 1)) != 0:
        raise ValidationError(f"{key}.n", f"must be a power of two >= 16, got {n!r}")
    if not np.isfinite(length) or length <= 0:
        raise ValidationError(f"{key}.length", f"must be positive, got {length!r}")


@dataclass(frozen=True, eq=False)
class GridField:
    """Real periodic field on x_j = -L/2 + j L/n."""

    length: float
    values: np.ndarray

    _dtype = float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=self._dtype)
        if vals.ndim != 1:
            raise ValidationError("field.values", "must be one-dimensional")
        check_grid(vals.shape[0], self.length)
        if not np.all(np.isfinite(vals)):
            raise ValidationError("field.values", "must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def from_function(cls, f, length, n):
        return cls(length, f(grid_points(n, length)))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return grid_points(self.n, self.length)

    def d(self, order=1):
        return deriv(self.values, self.length, order)

    def integral(self):
        return trapezoid(self.values, self.length)

    def with_values(self, values):
        return type(self)(self.length, values)

    def edge_ratio(self):
        """max|u| on the two boundary points relative to max|u|."""
        peak = np.abs(self.values).max()
        if peak == 0:
            return 0.0
        return max(abs(self.values[0]), abs(self.values[-1])) / peak

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


class ComplexField(GridField):
    """Complex periodic field (NLS envelope, coupled amplitudes)."""

    _dtype = complex


def as_values(f):
    return f.values if isinstance(f, GridField) else np.asarray(f)
