"""Grid norms, the free propagator and the windowed space-time Z-norm."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field3D, GridSpec, fftn, ifftn
from .projectors import dyadic_levels, eta3_band

Z_EXPONENTS = (4.5, 18.0)


@dataclass(frozen=True)
class NormReport:
    name: str
    value: float
    parameters: tuple = ()
    note: str = ""

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"NormReport {self.name}: negative or NaN value {self.value}")
        object.__setattr__(self, "parameters", tuple(self.parameters))

    def param(self, key):
        return dict(self.parameters)[key]

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "parameters": dict(self.parameters),
            "note": self.note,
        }


def _weighted_sum(fh: np.ndarray, weight: np.ndarray, grid: GridSpec) -> float:
    # coefficients from a raw fftn; rescale to the documented normalization
    c = (grid.dx / grid.Ny**2) ** 2 * grid.parseval_weight()
    return float(np.sum(weight * np.abs(fh) ** 2) * c)


def sobolev_norm(f: Field3D, s1: float, s2: float) -> NormReport:
    """Anisotropic H^{s1,s2}: weights <xi>^{2 s1} <k>^{2 s2} with <z>^2 = 1 + |z|^2."""
    g = f.grid
    xi, k1, k2 = g.freq_mesh()
    w = (1 + xi**2) ** s1 * (1 + k1**2 + k2**2) ** s2
    val = np.sqrt(_weighted_sum(fftn(f.values), w, g))
    return NormReport(
        f"H^({s1},{s2})",
        val,
        (("s1", s1), ("s2", s2)),
        "spectral quadrature; exact Parseval on the grid",
    )


def h1_norm(f: Field3D) -> NormReport:
    """Isotropic H^1 with weight 1 + xi^2 + |k|^2."""
    g = f.grid
    val = np.sqrt(_weighted_sum(fftn(f.values), 1 + g.laplacian_symbol(), g))
    return NormReport("H^1", val, (("s", 1),), "isotropic grid H^1")


def l2_norm(f: Field3D) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_volume))


def propagator_symbol(grid: GridSpec, t: float) -> np.ndarray:
    return np.exp(-1j * t * grid.laplacian_symbol())


def linear_propagate(f: Field3D, t: float) -> Field3D:
    """exp(i t Delta) via its Fourier multiplier exp(-i t (xi^2 + |k|^2))."""
    if t == 0:
        return Field3D(f.grid, f.values.copy())
    return Field3D(f.grid, ifftn(fftn(f.values) * propagator_symbol(f.grid, t)))


def _window_index(t: float) -> int:
    return int(np.floor(t / (2 * np.pi) + 1e-9))


def z_norm(
    snapshots,
    times,
    interval: tuple[float, float] | None = None,
    exponents=Z_EXPONENTS,
) -> NormReport:
    """Discrete Z-norm over uniformly spaced snapshots.

    For each p0 and dyadic N: trapezoid-in-time L^{p0}_{x,y,t} of P_N u over
    every window [2 pi g, 2 pi (g + 1)] meeting the interval, then the
    l^{4 p0/(p0-2)} sum over windows, weighted by N^{p0 (5/p0 - 1/2)} and
    l^{p0}-summed over N.  Contributions of the two exponents are added.
    """
    times = np.asarray(times, dtype=float)
    if len(snapshots) != len(times):
        raise ValueError("z_norm: snapshots and times differ in length")
    if len(times) < 2:
        raise ValueError("z_norm: need at least two snapshots")
    h = times[1] - times[0]
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12):
        raise ValueError("z_norm: snapshots are not uniformly spaced")
    per = 2 * np.pi / h
    if abs(per - round(per)) > 1e-6 or abs(times[0] / h - round(times[0] / h)) > 1e-6:
        raise ValueError("z_norm: snapshot spacing must divide 2 pi with aligned start")
    t0, t1 = interval if interval is not None else (times[0], times[-1])
    grid = snapshots[0].grid
    xi, k1, k2 = grid.freq_mesh()
    spectra = [fftn(s.values) for s in snapshots]
    inside = (times >= t0 - 1e-9 * h) & (times <= t1 + 1e-9 * h)
    win = np.array([_window_index(t) for t in times])
    # a sample on a window edge belongs to both adjacent windows
    on_edge = np.abs(times / (2 * np.pi) - np.round(times / (2 * np.pi))) < 1e-9
    windows = sorted(set(win[inside]) | set((win - 1)[inside & on_edge]))
    total = 0.0
    for p0 in exponents:
        r = 4 * p0 / (p0 - 2)
        acc = 0.0
        for N in dyadic_levels(grid):
            m = eta3_band(xi, k1, k2, N)
            dens = np.array(
                [np.sum(np.abs(ifftn(s * m)) ** p0) * grid.cell_volume for s in spectra]
            )
            pieces = []
            for g in windows:
                sel = inside & ((win == g) | (on_edge & (win == g + 1)))
                idx = np.flatnonzero(sel)
                if len(idx) < 2:
                    continue
                integral = np.trapezoid(dens[idx], times[idx])
                pieces.append(integral ** (1 / p0))
            if not pieces:
                continue
            lr = np.sum(np.array(pieces) ** r) ** (1 / r)
            acc += N ** (p0 * (5 / p0 - 0.5)) * lr**p0
        total += acc ** (1 / p0)
    return NormReport(
        "Z",
        float(total),
        (("p0", tuple(exponents)), ("t0", float(t0)), ("t1", float(t1)), ("dt", float(h))),
        "trapezoid in time over stored snapshots; windows truncated to the interval",
    )
