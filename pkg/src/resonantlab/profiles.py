"""Profile rescalings, the V_M reconstruction and the multiscale comparison.

Large-scale data live on a reference box of length ``Lref``; the physical
box for scale ``M`` is ``Lref / M`` with the same number of x-points, so the
map x -> M x sends the physical grid onto the reference grid point for point
and no x-interpolation is needed on the main path.  Other target grids go
through band-limited Fourier interpolation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nls3d
from .lattice import ModeSet
from .resonant.system import (
    StepMonitor,
    VecState,
    _strang,
    boundary_mode_fraction,
    dealias_mask,
    factored_plan,
)
from .spectral.grid import Field3D, GridSpec, boundary_mass_fraction, fft, fftn, ifftn, spectral_tail_fraction
from .spectral.norms import NormReport, h1_norm
from .spectral.projectors import eta_cutoff, eta_le

log = logging.getLogger(__name__)

BOUNDARY_LIMIT = 1e-6
MODE_BOUNDARY_LIMIT = 1e-4
TAIL_LIMIT = 1e-8


# ---------------------------------------------------------------- x-rescaling


def _sample_lines(lines: np.ndarray, Lref: float, M: float, Lx: float, Nx: int) -> np.ndarray:
    """Values of each row f(X) (on the reference box) at X = M x, x on the target x-grid.

    ``f`` is treated as the band-limited interpolant on the reference box
    and as zero outside it.
    """
    nref = lines.shape[-1]
    if np.isclose(Lx * M, Lref, rtol=1e-13) and Nx == nref:
        return lines.copy()
    x = -Lx / 2 + Lx / Nx * np.arange(Nx)
    X = M * x
    inside = (X >= -Lref / 2) & (X < Lref / 2)
    xi = 2 * np.pi / Lref * np.fft.fftfreq(nref, 1.0 / nref)
    coef = fft(lines, axis=-1) / nref
    if nref % 2 == 0:
        # split the Nyquist term so the interpolant is real for real data
        ny = nref // 2
        coef = coef.copy()
        coef[..., ny] *= 0.5
        xi = np.append(xi, -xi[ny])
        coef = np.concatenate([coef, coef[..., ny : ny + 1]], axis=-1)
    phase = np.exp(1j * np.outer(X[inside] + Lref / 2, xi))
    out = np.zeros(lines.shape[:-1] + (Nx,), dtype=complex)
    out[..., inside] = coef @ phase.T
    return out


def _resample_y(values: np.ndarray, ny_out: int) -> np.ndarray:
    """Spectral pad or truncate in (y1, y2); identity when sizes agree."""
    ny_in = values.shape[1]
    if ny_in == ny_out:
        return values
    vh = fftn(values, axes=(1, 2)) / ny_in**2
    k_in = np.fft.fftfreq(ny_in, 1.0 / ny_in).astype(int)
    keep = np.flatnonzero(np.abs(k_in) < min(ny_in, ny_out) // 2)
    out = np.zeros((values.shape[0], ny_out, ny_out), dtype=complex)
    dst = k_in[keep] % ny_out
    out[:, dst[:, None], dst[None, :]] = vh[:, keep[:, None], keep[None, :]]
    return ifftn(out, axes=(1, 2)) * ny_out**2


def x_band_cutoff(psi: Field3D, M: float) -> Field3D:
    """P^x_{<= M^{-1/100}} psi."""
    g = psi.grid
    m = eta_le(g.xi, M ** (-0.01))[:, None, None]
    return Field3D(g, ifftn(fftn(psi.values) * m))


def large_scale_data(psi: Field3D, M: float, grid: GridSpec, cutoff: bool = True) -> Field3D:
    """T^ls_M psi = M^{1/2} (P^x_{<= M^{-1/100}} psi)(M x, y) on ``grid``."""
    if not 0 < M <= 1:
        raise ValueError(f"large-scale parameter M must lie in (0, 1], got {M}")
    ref = psi.grid
    src = x_band_cutoff(psi, M) if cutoff else psi
    if M * grid.Lx < ref.Lx * (1 - 1e-12):
        raise ValueError(
            f"box too small: target Lx={grid.Lx} does not hold the rescaled reference box {ref.Lx / M}"
        )
    if boundary_mass_fraction(src) > BOUNDARY_LIMIT:
        raise ValueError("box too small: profile carries boundary mass above 1e-6 on its reference box")
    v = np.moveaxis(src.values, 0, -1)  # (Ny, Ny, Nx)
    v = np.moveaxis(_sample_lines(v, ref.Lx, M, grid.Lx, grid.Nx), -1, 0)
    v = _resample_y(v, grid.Ny)
    return Field3D(grid, np.sqrt(M) * v)


def euclidean_data(phi, N: float, grid: GridSpec, eta=None) -> Field3D:
    """phi_N(z) = N^{1/2} eta(N^{1/2} z) phi(N z) placed at the origin of R x T^2.

    ``phi(x, y1, y2)`` is a callable on R^3 and ``eta`` a radial cutoff
    (default: 1 on the unit ball, 0 outside radius 2).  The y-coordinates are
    taken as the representatives in [-pi, pi).
    """
    if not N >= 1:
        raise ValueError(f"Euclidean scale N must be >= 1, got {N}")
    if eta is None:
        eta = eta_cutoff
    x, y1, y2 = grid.mesh()
    y1 = (y1 + np.pi) % (2 * np.pi) - np.pi
    y2 = (y2 + np.pi) % (2 * np.pi) - np.pi
    r = np.sqrt(x**2 + y1**2 + y2**2)
    vals = np.sqrt(N) * eta(np.sqrt(N) * r) * phi(N * x, N * y1, N * y2)
    return Field3D(grid, vals)


def homogeneous_h1(f: Field3D) -> float:
    """||grad f||_{L^2} by spectral differentiation."""
    g = f.grid
    fh = fftn(f.values)
    c = (g.dx / g.Ny**2) ** 2 * g.parseval_weight()
    return float(np.sqrt(np.sum(g.laplacian_symbol() * np.abs(fh) ** 2) * c))


# ---------------------------------------------------------------- mode decomposition


def _y_slots(modes: ModeSet, Ny: int):
    """Grid slots of each mode; modes outside [-Ny/2, Ny/2 - 1]^2 have no slot."""
    arr = modes.array
    ok = ((arr >= -Ny // 2) & (arr <= Ny // 2 - 1)).all(axis=1)
    return ok, arr % Ny


def decompose_periodic_fourier(f: Field3D, radius: int) -> VecState:
    """psi_p(x) = (2 pi)^{-2} int psi(x, y) e^{-i p.y} dy for |p|_inf <= radius."""
    g = f.grid
    if radius > g.Ny // 2:
        raise ValueError(f"mode radius {radius} exceeds the y-Nyquist {g.Ny // 2}")
    modes = ModeSet(radius)
    coef = fftn(f.values, axes=(1, 2)) / g.Ny**2
    ok, slot = _y_slots(modes, g.Ny)
    fields = np.zeros((len(modes), g.Nx), dtype=complex)
    fields[ok] = coef[:, slot[ok, 0], slot[ok, 1]].T
    return VecState(modes, g.Lx, g.Nx, fields)


def underline(v: VecState, Ny: int, dt: float = 1e-3) -> Field3D:
    """sum_p e^{i p.y} v_p(x) on the (Lx, Nx, Ny) grid of ``v``."""
    g = GridSpec(v.Lx, v.Nx, Ny, dt)
    ok, slot = _y_slots(v.modes, Ny)
    if not ok.all():
        raise ValueError("ModeSet does not fit in the y-grid")
    coef = np.zeros(g.shape, dtype=complex)
    coef[:, slot[:, 0], slot[:, 1]] = v.fields.T
    return Field3D(g, ifftn(coef, axes=(1, 2)) * Ny**2)


def _assemble(coef_modes: np.ndarray, modes: ModeSet, grid: GridSpec, t: float) -> np.ndarray:
    """sum_q e^{-i t |q|^2} e^{i q.y} c_q(x) for x-sampled coefficient rows."""
    ok, slot = _y_slots(modes, grid.Ny)
    if not ok.all():
        raise ValueError("ModeSet does not fit in the y-grid")
    rot = np.exp(-1j * t * modes.norm_sq)[:, None] * coef_modes
    spec = np.zeros(grid.shape, dtype=complex)
    spec[:, slot[:, 0], slot[:, 1]] = rot.T
    return ifftn(spec, axes=(1, 2)) * grid.Ny**2


def vm_from_state(v: VecState, M: float, t: float, grid: GridSpec) -> Field3D:
    """V_M(t) from the resonant state at tau = M^2 t (no time lookup)."""
    lines = _sample_lines(v.fields, v.Lx, M, grid.Lx, grid.Nx)
    return Field3D(grid, np.sqrt(M) * _assemble(lines, v.modes, grid, t))


def reconstruct_VM(traj, M: float, t: float, grid: GridSpec) -> Field3D:
    """V_M(x, y, t) = sum_q e^{-i t |q|^2} e^{i q.y} M^{1/2} v_q(M x, M^2 t).

    ``traj`` is a resonant Trajectory; tau = M^2 t is interpolated linearly
    between stored snapshots.
    """
    tau = M * M * t
    times = np.asarray(traj.times)
    tol = 1e-9 * max(1.0, abs(times[-1]))
    if tau < times[0] - tol or tau > times[-1] + tol:
        raise ValueError(f"tau={tau} outside the trajectory range [{times[0]}, {times[-1]}]")
    i = int(np.searchsorted(times, tau - tol))
    if i < len(times) and abs(times[i] - tau) <= tol:
        fields = traj.fields[i]
    else:
        i = min(max(i, 1), len(times) - 1)
        w = (tau - times[i - 1]) / (times[i] - times[i - 1])
        fields = (1 - w) * traj.fields[i - 1] + w * traj.fields[i]
    v = VecState(traj.modes, traj.Lx, traj.Nx, fields, tau)
    return vm_from_state(v, M, t, grid)


# ---------------------------------------------------------------- residual


def resonant_forcing(v: VecState, M: float, t: float, grid: GridSpec, plan=None) -> Field3D:
    """sum_q e^{-i t |q|^2} e^{i q.y} M^{5/2} N_q(v)(M x): (i d_t + Delta) V_M."""
    plan = factored_plan(v.modes if plan is None else plan)
    N = plan.evaluate(v.fields)
    lines = _sample_lines(N, v.Lx, M, grid.Lx, grid.Nx)
    return Field3D(grid, M**2.5 * _assemble(lines, v.modes, grid, t))


def nonresonant_forcing(v: VecState, M: float, t: float, grid: GridSpec, plan=None) -> Field3D:
    """|V_M|^4 V_M minus its resonant part at one time: the non-resonant quintic sum."""
    V = vm_from_state(v, M, t, grid).values
    full = np.abs(V) ** 4 * V
    return Field3D(grid, full - resonant_forcing(v, M, t, grid, plan).values)


@dataclass
class _Residual:
    """Running L^1_t H^1 and Duhamel-integral norms of the non-resonant forcing."""

    grid: GridSpec
    l1: float = 0.0
    duhamel_sup: float = 0.0
    _last_t: float | None = None
    _last_norm: float = 0.0
    _last_g: np.ndarray | None = None
    _acc: np.ndarray | None = None

    def add(self, t: float, forcing: Field3D) -> None:
        g = self.grid
        n = h1_norm(forcing).value
        # e^{-i t Delta} forcing, kept in Fourier space
        gh = fftn(forcing.values) * np.exp(1j * t * g.laplacian_symbol())
        if self._last_t is None:
            self._acc = np.zeros_like(gh)
        else:
            h = t - self._last_t
            self.l1 += 0.5 * h * (n + self._last_norm)
            self._acc = self._acc + 0.5 * h * (gh + self._last_g)
            c = (g.dx / g.Ny**2) ** 2 * g.parseval_weight()
            val = np.sqrt(np.sum((1 + g.laplacian_symbol()) * np.abs(self._acc) ** 2) * c)
            self.duhamel_sup = max(self.duhamel_sup, float(val))
        self._last_t, self._last_norm, self._last_g = t, n, gh


# ---------------------------------------------------------------- experiment


def gaussian_y2mode(Lref: float = 96.0, Nx: int = 512, Ny: int = 16, width: float = 6.0,
                    amplitude: float = 1.0, second: float = 0.5) -> Field3D:
    """a exp(-x^2 / (2 w^2)) (1 + b e^{i (y1 + y2)}): y-modes (0,0) and (1,1) only.

    Any two-mode set is closed under resonant interactions, so the radius-2
    resonant truncation of this profile is exact.
    """
    g = GridSpec(Lref, Nx, Ny)
    x, y1, y2 = g.mesh()
    vals = amplitude * np.exp(-(x**2) / (2 * width**2)) * (1 + second * np.exp(1j * (y1 + y2)))
    return Field3D(g, vals)


@dataclass
class MultiscaleRow:
    M: float
    sup_H1_error: float
    residual_L1H1: float
    residual_duhamel: float
    boundary_frac: float
    tail_mass: float
    mode_boundary_frac: float
    valid: bool
    slope_running: float = float("nan")
    rho: int = 1

    def csv_row(self) -> tuple:
        return (
            self.M,
            self.sup_H1_error,
            self.slope_running,
            self.residual_L1H1,
            self.boundary_frac,
            self.tail_mass,
            int(self.valid),
            self.residual_duhamel,
        )


MULTISCALE_COLUMNS = (
    "M",
    "sup_H1_error",
    "slope_running",
    "residual_L1H1",
    "boundary_frac",
    "tail_mass",
    "valid",
    "residual_duhamel",
)


def loglog_slope(Ms, values) -> float:
    """Least-squares slope of log(value) against log(M)."""
    Ms = np.asarray(Ms, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(Ms) < 2 or (values <= 0).any():
        return float("nan")
    return float(np.polyfit(np.log(Ms), np.log(values), 1)[0])


def multiscale_row(
    psi: Field3D,
    M: float,
    T0: float,
    dt: float = 0.02,
    radius: int = 2,
    sample_every: int = 2,
    rho: int = 1,
    residual: bool = True,
) -> MultiscaleRow:
    """Compare U_M (full NLS from T^ls_M psi) with V_M (resonant system) on [0, T0 / M^2].

    Both solvers take the same number of steps: dt for U_M and M^2 dt for
    the resonant system.  Comparison and residual samples are taken every
    ``sample_every`` steps, so every sample is tau-aligned.
    """
    ref = psi.grid
    grid = GridSpec(ref.Lx / M, ref.Nx, ref.Ny, dt)
    n = int(round(T0 / (M * M * dt)))
    if n < 1 or abs(n * M * M * dt - T0) > 1e-9 * T0:
        raise ValueError("T0 must be a multiple of M^2 dt")
    U0 = large_scale_data(psi, M, grid)
    v = decompose_periodic_fourier(x_band_cutoff(psi, M), radius)
    plan = factored_plan(v.modes)
    dtau = M * M * dt
    xi_v, mask_v = v.xi, dealias_mask(v.Nx, v.Lx)
    mon = StepMonitor()
    stepper = nls3d._Stepper(grid, dt, rho)
    res = _Residual(grid)

    err = bfrac = tail = mbf = 0.0
    u = U0.values
    V = v.fields
    k = 0
    while True:
        t = k * dt
        vs = VecState(v.modes, v.Lx, v.Nx, V, k * dtau)
        VM = vm_from_state(vs, M, t, grid)
        UM = Field3D(grid, u)
        err = max(err, h1_norm(UM - VM).value)
        bfrac = max(bfrac, boundary_mass_fraction(UM))
        tail = max(tail, spectral_tail_fraction(UM))
        mbf = max(mbf, boundary_mode_fraction(vs))
        if residual and rho:
            res.add(t, nonresonant_forcing(vs, M, t, grid, plan))
        if k >= n:
            break
        steps = min(sample_every, n - k)
        u = stepper.run(u, steps)
        for _ in range(steps):
            V = _strang(V, plan, xi_v, mask_v, dtau, mon, rho)
        k += steps
        if not (np.isfinite(u).all() and np.isfinite(V).all()):
            log.warning("M=%g: non-finite values at step %d", M, k)
            return MultiscaleRow(M, float("nan"), float("nan"), float("nan"), bfrac, tail, mbf, False, rho=rho)
    tail = max(tail, mon.tail_max)
    valid = bfrac <= BOUNDARY_LIMIT and tail <= TAIL_LIMIT and mbf <= MODE_BOUNDARY_LIMIT
    return MultiscaleRow(M, err, res.l1, res.duhamel_sup, bfrac, tail, mbf, valid, rho=rho)


def multiscale_experiment(psi: Field3D, M_list, T0: float, **kwargs) -> list[MultiscaleRow]:
    """One row per M (largest first) plus running log-log slopes over valid rows."""
    rows = []
    for M in sorted(M_list, reverse=True):
        row = multiscale_row(psi, M, T0, **kwargs)
        rows.append(row)
        good = [r for r in rows if r.valid]
        row.slope_running = loglog_slope([r.M for r in good], [r.sup_H1_error for r in good])
    return rows


def nonresonant_residual(psi: Field3D, M: float, T0: float, dt: float = 0.02,
                         radius: int = 2, sample_every: int = 2) -> NormReport:
    """Duhamel H^1 norm of the non-resonant forcing along V_M on [0, T0 / M^2].

    The value is sup_t ||int_0^t e^{-i s Delta} LHS(s) ds||_{H^1}; the plain
    L^1_t H^1 norm is attached as a parameter.
    """
    ref = psi.grid
    grid = GridSpec(ref.Lx / M, ref.Nx, ref.Ny, dt)
    n = int(round(T0 / (M * M * dt)))
    v = decompose_periodic_fourier(x_band_cutoff(psi, M), radius)
    plan = factored_plan(v.modes)
    dtau = M * M * dt
    xi_v, mask_v = v.xi, dealias_mask(v.Nx, v.Lx)
    res = _Residual(grid)
    V = v.fields
    k = 0
    while True:
        vs = VecState(v.modes, v.Lx, v.Nx, V, k * dtau)
        res.add(k * dt, nonresonant_forcing(vs, M, k * dt, grid, plan))
        if k >= n:
            break
        steps = min(sample_every, n - k)
        for _ in range(steps):
            V = _strang(V, plan, xi_v, mask_v, dtau, None)
        k += steps
    return NormReport(
        "nonresonant_residual",
        res.duhamel_sup,
        (("M", M), ("T0", T0), ("L1H1", res.l1), ("dt", dt)),
        "sup_t of the H^1 norm of the Duhamel integral; trapezoid in time",
    )
