"""Smooth cutoffs and Littlewood-Paley type Fourier multipliers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field3D, GridSpec, fftn, ifftn


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def eta_cutoff(r, scale: float = 1.0):
    """Smooth radial cutoff: 1 on |r| <= scale, 0 on |r| >= 2 scale.

    The transition is the quotient b(2 - s) / (b(2 - s) + b(s - 1)) with
    b(s) = exp(-1/s) for s > 0, evaluated at s = |r| / scale.
    """
    if scale <= 0:
        raise ValueError("eta_cutoff: scale must be positive")
    s = np.abs(np.asarray(r, dtype=float)) / scale
    a = _bump(2.0 - s)
    b = _bump(s - 1.0)
    out = np.where(s <= 1.0, 1.0, 0.0)
    mid = (s > 1.0) & (s < 2.0)
    out = np.where(mid, a / np.where(mid, a + b, 1.0), out)
    if np.ndim(r) == 0:
        return float(out)
    return out


def eta_le(r, N):
    return eta_cutoff(r, N)


def eta_band(r, N):
    """eta_N: dyadic annulus piece, with the N = 1 piece equal to eta_le(., 1)."""
    if N <= 1:
        return eta_le(r, 1.0)
    return eta_le(r, N) - eta_le(r, N / 2)


def eta_ge(r, N):
    return 1.0 - eta_le(r, N / 2)


def eta3_le(xi, k1, k2, N):
    return eta_le(xi, N) * eta_le(k1, N) * eta_le(k2, N)


def eta3_band(xi, k1, k2, N):
    if N <= 1:
        return eta3_le(xi, k1, k2, 1.0)
    return eta3_le(xi, k1, k2, N) - eta3_le(xi, k1, k2, N / 2)


KINDS = ("iso", "iso_le", "x", "x_le", "x_ge", "y", "y_le", "angular")


@dataclass(frozen=True)
class ProjectorSpec:
    """``kind`` selects the multiplier; ``parameter`` is N, M or delta.

    iso / iso_le   P_N / P_{<=N}        (product cutoff in xi, k1, k2)
    x / x_le / x_ge  P^x_M / P^x_{<=M} / P^x_{>=M}
    y / y_le       P^y_N / P^y_{<=N}
    angular        sum_N P_N P^x_{>=delta N}
    """

    kind: str
    parameter: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown projector kind {self.kind!r}")
        if self.kind == "angular":
            if not 0 < self.parameter <= 1:
                raise ValueError("angular projector needs delta in (0, 1]")
        elif self.kind != "x_le" and not _is_dyadic(self.parameter):
            raise ValueError(f"projector parameter must be dyadic >= 1, got {self.parameter}")
        elif self.kind == "x_le" and not self.parameter > 0:
            raise ValueError("x_le cutoff must be positive")


def _is_dyadic(v) -> bool:
    if v < 1:
        return False
    e = np.log2(v)
    return abs(e - round(e)) < 1e-12


def dyadic_levels(grid: GridSpec) -> list[int]:
    """Dyadic N = 1, 2, 4, ... up to the first N with P_{<=N} = identity on grid."""
    top = max(np.abs(grid.xi).max(), np.abs(grid.k).max())
    levels = [1]
    while levels[-1] < top:
        levels.append(levels[-1] * 2)
    return levels


def multiplier(grid: GridSpec, spec: ProjectorSpec) -> np.ndarray:
    xi, k1, k2 = grid.freq_mesh()
    kind, v = spec.kind, spec.parameter
    if kind == "iso":
        m = eta3_band(xi, k1, k2, v)
    elif kind == "iso_le":
        m = eta3_le(xi, k1, k2, v)
    elif kind == "x":
        m = eta_band(xi, v)
    elif kind == "x_le":
        m = eta_le(xi, v)
    elif kind == "x_ge":
        m = eta_ge(xi, v)
    elif kind == "y":
        m = eta_le(k1, v) * eta_le(k2, v)
        if v > 1:
            m = m - eta_le(k1, v / 2) * eta_le(k2, v / 2)
    elif kind == "y_le":
        m = eta_le(k1, v) * eta_le(k2, v)
    else:  # angular
        m = np.zeros(grid.shape)
        for N in dyadic_levels(grid):
            m = m + eta3_band(xi, k1, k2, N) * eta_ge(xi, v * N)
    return np.broadcast_to(m, grid.shape)


def apply_multiplier(f: Field3D, m: np.ndarray) -> Field3D:
    return Field3D(f.grid, ifftn(fftn(f.values) * m))


def apply_projector(f: Field3D, spec: ProjectorSpec) -> Field3D:
    return apply_multiplier(f, multiplier(f.grid, spec))
