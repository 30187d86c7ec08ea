"""Box x torus grids, fields and the discrete Fourier transform.

Coordinates: ``x`` in ``[-Lx/2, Lx/2)`` (periodic box standing in for R) and
``y = (y1, y2)`` in ``[0, 2*pi)^2`` so that y-frequencies are exactly Z^2.
Arrays are indexed ``values[ix, iy1, iy2]``.

Spectral coefficients are normalized as

    u_hat(xi, k) = dx / Ny^2 * sum_{x, y} u(x, y) exp(-i (xi x' + k.y))

with ``x'`` measured from the left edge of the box.  In x this approximates
the continuous Fourier transform, in y it is the periodic coefficient
``(2 pi)^-2 int u exp(-i k.y) dy``.  Parseval then reads

    int |u|^2 dx dy = (2 pi)^2 / Lx * sum |u_hat|^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

_WORKERS = 1


def set_workers(n: int) -> None:
    """Thread count used by every FFT in the package."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def fftn(a, axes=None):
    return sfft.fftn(a, axes=axes, workers=_WORKERS)


def ifftn(a, axes=None):
    return sfft.ifftn(a, axes=axes, workers=_WORKERS)


def fft(a, axis=-1):
    return sfft.fft(a, axis=axis, workers=_WORKERS)


def ifft(a, axis=-1):
    return sfft.ifft(a, axis=axis, workers=_WORKERS)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    Lx: float
    Nx: int
    Ny: int
    dt: float = 1e-3

    def __post_init__(self):
        if not self.Lx > 0:
            raise ValueError(f"GridSpec: Lx must be > 0, got {self.Lx}")
        if not _is_pow2(int(self.Nx)):
            raise ValueError(f"GridSpec: Nx must be a power of two, got {self.Nx}")
        if not _is_pow2(int(self.Ny)):
            raise ValueError(f"GridSpec: Ny must be a power of two, got {self.Ny}")
        if not self.dt > 0:
            raise ValueError(f"GridSpec: dt must be > 0, got {self.dt}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.Nx, self.Ny, self.Ny)

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return 2 * np.pi / self.Ny

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy**2

    @property
    def x(self) -> np.ndarray:
        return -self.Lx / 2 + self.dx * np.arange(self.Nx)

    @property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(self.Ny)

    @property
    def xi(self) -> np.ndarray:
        """x-frequencies in FFT order: (2 pi / Lx) * {-Nx/2, ..., Nx/2 - 1}."""
        return 2 * np.pi / self.Lx * np.fft.fftfreq(self.Nx, 1.0 / self.Nx)

    @property
    def k(self) -> np.ndarray:
        """Integer y-frequencies in FFT order."""
        return np.fft.fftfreq(self.Ny, 1.0 / self.Ny).astype(np.int64)

    def mesh(self):
        return np.meshgrid(self.x, self.y, self.y, indexing="ij")

    def freq_mesh(self):
        """Broadcastable (xi, k1, k2) arrays."""
        xi = self.xi[:, None, None]
        k1 = self.k[None, :, None].astype(float)
        k2 = self.k[None, None, :].astype(float)
        return xi, k1, k2

    def laplacian_symbol(self) -> np.ndarray:
        xi, k1, k2 = self.freq_mesh()
        return xi**2 + k1**2 + k2**2

    def parseval_weight(self) -> float:
        return (2 * np.pi) ** 2 / self.Lx

    def with_dt(self, dt: float) -> "GridSpec":
        return GridSpec(self.Lx, self.Nx, self.Ny, dt)


@dataclass(frozen=True)
class Field3D:
    """Grid function on the box x torus (``spectral`` marks Fourier data)."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    spectral: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"Field3D: values shape {v.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", v.astype(np.complex128, copy=False))

    def check_finite(self) -> "Field3D":
        if not np.isfinite(self.values).all():
            raise FloatingPointError("Field3D contains non-finite entries")
        return self

    def scaled(self, c) -> "Field3D":
        return Field3D(self.grid, c * self.values, self.spectral)

    def __add__(self, other: "Field3D") -> "Field3D":
        return Field3D(self.grid, self.values + other.values, self.spectral)

    def __sub__(self, other: "Field3D") -> "Field3D":
        return Field3D(self.grid, self.values - other.values, self.spectral)


def zeros(grid: GridSpec) -> Field3D:
    return Field3D(grid, np.zeros(grid.shape, dtype=complex))


def from_function(grid: GridSpec, func) -> Field3D:
    x, y1, y2 = grid.mesh()
    return Field3D(grid, np.broadcast_to(func(x, y1, y2), grid.shape).astype(complex))


def _coeff_scale(grid: GridSpec) -> float:
    return grid.dx / grid.Ny**2


def fourier_forward(f: Field3D) -> Field3D:
    if f.spectral:
        raise ValueError("fourier_forward expects a physical-space field")
    return Field3D(f.grid, fftn(f.values) * _coeff_scale(f.grid), spectral=True)


def fourier_inverse(fh: Field3D) -> Field3D:
    if not fh.spectral:
        raise ValueError("fourier_inverse expects spectral coefficients")
    return Field3D(fh.grid, ifftn(fh.values) / _coeff_scale(fh.grid))


def integrate(values: np.ndarray, grid: GridSpec) -> float | complex:
    """Rectangle-rule integral over box x torus (exact for trig polynomials)."""
    return values.sum() * grid.cell_volume


def l2_norm_sq(f: Field3D) -> float:
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume)


def boundary_mass_fraction(f: Field3D, outer: float = 0.1) -> float:
    """Share of the mass carried by the outer ``outer`` fraction of the x-box."""
    g = f.grid
    dens = np.sum(np.abs(f.values) ** 2, axis=(1, 2))
    total = dens.sum()
    if total == 0:
        return 0.0
    edge = np.abs(g.x) >= (0.5 - outer / 2) * g.Lx
    return float(dens[edge].sum() / total)


def spectral_tail_fraction(f: Field3D, fraction: float = 2.0 / 3.0) -> float:
    """Share of the mass above ``fraction`` of Nyquist in any direction."""
    g = f.grid
    fh = fftn(f.values)
    p = np.abs(fh) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    xi, k1, k2 = g.freq_mesh()
    x_ny = np.pi / g.dx
    y_ny = g.Ny / 2
    hi = (
        (np.abs(xi) > fraction * x_ny)
        | (np.abs(k1) > fraction * y_ny)
        | (np.abs(k2) > fraction * y_ny)
    )
    return float(p[np.broadcast_to(hi, g.shape)].sum() / total)
