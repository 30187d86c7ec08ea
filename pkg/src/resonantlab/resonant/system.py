"""Truncated quintic resonant system on a box in x.

Each mode p of a ModeSet carries a 1D field u_p(x) on the x-grid of
:class:`~resonantlab.spectral.GridSpec`.  The system is

    (i d_t + d_xx) u_j = sum_{R(j)} u_p1 conj(u_p2) u_p3 conj(u_p4) u_p5

and is Hamiltonian with

    H = 1/2 sum_q int |d_x u_q|^2 + 1/6 sum_{q,n} int |T_{q,n}|^2 .
"""
from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass, field

import numpy as np

from .. import NumericalAbort
from ..lattice import ModeSet, TripleTable, enumerate_triples
from ..spectral.grid import fft, ifft
from ..spectral.norms import NormReport
from .plan import DirectPlan, FactoredPlan

log = logging.getLogger(__name__)

TAIL_WARN = 1e-8
DEALIAS_FRACTION = 1.0 / 3.0
CONSERVED_NAMES = ("E_1", "E_p1", "E_p2", "E_kin", "E_ls", "H")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class VecState:
    """Mode fields ``fields[i, ix]`` ordered as ``modes.array``."""

    modes: ModeSet
    Lx: float
    Nx: int
    fields: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        if not self.Lx > 0:
            raise ValueError("VecState: Lx must be > 0")
        if not _is_pow2(int(self.Nx)):
            raise ValueError(f"VecState: Nx must be a power of two, got {self.Nx}")
        f = np.asarray(self.fields, dtype=np.complex128)
        if f.shape != (len(self.modes), self.Nx):
            raise ValueError(
                f"VecState: fields shape {f.shape}, expected {(len(self.modes), self.Nx)}"
            )
        if not np.isfinite(f).all():
            raise ValueError("VecState: non-finite field entries")
        object.__setattr__(self, "fields", f)

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def x(self) -> np.ndarray:
        return -self.Lx / 2 + self.dx * np.arange(self.Nx)

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi / self.Lx * np.fft.fftfreq(self.Nx, 1.0 / self.Nx)

    def field_of(self, p) -> np.ndarray:
        return self.fields[self.modes.index(p)]

    def replace(self, fields: np.ndarray, time: float | None = None) -> "VecState":
        return VecState(self.modes, self.Lx, self.Nx, fields, self.time if time is None else time)

    def mode_masses(self) -> np.ndarray:
        """||u_p||_{L^2}^2 for every mode."""
        return np.sum(np.abs(self.fields) ** 2, axis=1) * self.dx

    def h1l2_sq(self) -> float:
        return float(np.sum((1 + self.modes.norm_sq) * self.mode_masses()))


def zero_state(modes: ModeSet, Lx: float, Nx: int) -> VecState:
    return VecState(modes, Lx, Nx, np.zeros((len(modes), Nx), dtype=complex))


def boundary_mode_fraction(s: VecState) -> float:
    """h^1 L^2 share carried by the modes with |p|_inf equal to the radius."""
    w = (1 + s.modes.norm_sq) * s.mode_masses()
    total = w.sum()
    if total == 0:
        return 0.0
    edge = np.abs(s.modes.array).max(axis=1) == s.modes.radius
    return float(w[edge].sum() / total)


# ---------------------------------------------------------------- plans

_factored_cache: "weakref.WeakKeyDictionary[TripleTable, FactoredPlan]" = weakref.WeakKeyDictionary()
_direct_cache: dict[int, DirectPlan] = {}
_radius_cache: dict[int, FactoredPlan] = {}


def factored_plan(triples) -> FactoredPlan:
    if isinstance(triples, FactoredPlan):
        return triples
    if isinstance(triples, ModeSet):
        plan = _radius_cache.get(triples.radius)
        if plan is None:
            plan = _radius_cache[triples.radius] = FactoredPlan(triples, enumerate_triples(triples))
        return plan
    plan = _factored_cache.get(triples)
    if plan is None:
        plan = FactoredPlan(triples.modes, triples)
        _factored_cache[triples] = plan
    return plan


def direct_plan(modes: ModeSet, table=None) -> DirectPlan:
    if isinstance(table, DirectPlan):
        if table.modes != modes:
            raise ValueError("resonance table was built over a different ModeSet")
        return table
    if table is not None:
        return DirectPlan(modes, table)
    plan = _direct_cache.get(modes.radius)
    if plan is None:
        plan = _direct_cache[modes.radius] = DirectPlan(modes)
    return plan


def nonlinearity_direct(s: VecState, table=None) -> np.ndarray:
    """N_j(x) by explicit summation over every resonant quintuple."""
    return direct_plan(s.modes, table).evaluate(s.fields)


def nonlinearity_factored(s: VecState, triples=None) -> np.ndarray:
    """N_j(x) through the (q, n) factorization."""
    plan = factored_plan(s.modes if triples is None else triples)
    if plan.modes != s.modes:
        raise ValueError("TripleTable was built over a different ModeSet")
    return plan.evaluate(s.fields)


# ---------------------------------------------------------------- stepping


@dataclass
class StepMonitor:
    """Side channel filled by :func:`step_strang`."""

    tail_max: float = 0.0
    tail_warnings: int = 0
    steps: int = 0


def dealias_mask(Nx: int, Lx: float) -> np.ndarray:
    xi = 2 * np.pi / Lx * np.fft.fftfreq(Nx, 1.0 / Nx)
    nyq = np.pi * Nx / Lx
    return np.abs(xi) <= DEALIAS_FRACTION * nyq


def _linear(U: np.ndarray, xi: np.ndarray, h: float) -> np.ndarray:
    return ifft(fft(U, axis=1) * np.exp(-1j * h * xi**2), axis=1)


def _rk4(plan: FactoredPlan, U: np.ndarray, dt: float) -> np.ndarray:
    # i u_t = N(u)  <=>  u_t = -i N(u)
    k1 = -1j * plan.evaluate(U)
    k2 = -1j * plan.evaluate(U + 0.5 * dt * k1)
    k3 = -1j * plan.evaluate(U + 0.5 * dt * k2)
    k4 = -1j * plan.evaluate(U + dt * k3)
    return U + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _strang(U, plan, xi, mask, dt, monitor, rho=1):
    U = _linear(U, xi, 0.5 * dt)
    if rho:
        U = _rk4(plan, U, dt)
    Uh = fft(U, axis=1)
    power = np.abs(Uh) ** 2
    total = power.sum()
    if total > 0:
        tail = float(power[:, ~mask].sum() / total)
        if monitor is not None:
            monitor.tail_max = max(monitor.tail_max, tail)
            if tail > TAIL_WARN:
                monitor.tail_warnings += 1
        if tail > TAIL_WARN:
            log.warning("resonant step: spectral tail fraction %.2e above %.0e", tail, TAIL_WARN)
    Uh[:, ~mask] = 0.0
    U = ifft(Uh * np.exp(-1j * 0.5 * dt * xi**2), axis=1)
    if monitor is not None:
        monitor.steps += 1
    return U


def step_strang(
    s: VecState,
    dt: float,
    triples=None,
    monitor: StepMonitor | None = None,
    step_index: int = 0,
    rho: int = 1,
) -> VecState:
    """One Strang step: linear half-step, RK4 nonlinear step, dealias, linear half-step.

    ``rho = 0`` drops the nonlinear substep (linear test mode).
    """
    if not dt > 0:
        raise ValueError("step_strang: dt must be > 0")
    plan = factored_plan(s.modes if triples is None else triples)
    U = _strang(s.fields, plan, s.xi, dealias_mask(s.Nx, s.Lx), dt, monitor, rho)
    if not np.isfinite(U).all():
        raise NumericalAbort(f"non-finite field at step {step_index}", step=step_index)
    return s.replace(U, s.time + dt)


# ---------------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class ConservedSet:
    E_1: float
    E_p1: float
    E_p2: float
    E_kin: float
    E_ls: float
    H: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in CONSERVED_NAMES)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(CONSERVED_NAMES, self.as_tuple()))


def conserved_set(s: VecState, triples=None) -> ConservedSet:
    """g-energies, E_ls and the Hamiltonian by grid quadrature.

    E_kin is the g-energy for g(p) = |p|^2.  The quartic part of H reuses the
    factored T_{q,n} tables, summed over every key (q, n).
    """
    plan = factored_plan(s.modes if triples is None else triples)
    m = s.mode_masses()
    p = s.modes.array
    e1 = float(np.sum(m))
    ep1 = float(np.sum(p[:, 0] * m))
    ep2 = float(np.sum(p[:, 1] * m))
    ekin = float(np.sum(s.modes.norm_sq * m))
    Uh = fft(s.fields, axis=1)
    # int |d_x u|^2 dx = dx / Nx * sum |xi u_hat|^2
    grad = float(np.sum(s.xi**2 * np.abs(Uh) ** 2) * s.dx / s.Nx)
    T = plan.triple_sums(s.fields)
    quartic = float(np.sum(np.abs(T) ** 2) * s.dx)
    return ConservedSet(e1, ep1, ep2, ekin, e1 + ekin, 0.5 * grad + quartic / 6.0)


def relative_drift(q0: float, q: float) -> float:
    scale = abs(q0)
    return abs(q - q0) / scale if scale > 0 else abs(q - q0)


@dataclass(frozen=True)
class Trajectory:
    modes: ModeSet
    Lx: float
    Nx: int
    times: np.ndarray
    fields: np.ndarray  # (n_snapshots, n_modes, Nx)
    snapshot_dt: float

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> VecState:
        return VecState(self.modes, self.Lx, self.Nx, self.fields[i], float(self.times[i]))

    @property
    def final(self) -> VecState:
        return self.state(len(self) - 1)


@dataclass
class DriftReport:
    """Conserved quantities at each snapshot and their max relative drift."""

    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    tail_max: float = 0.0
    tail_warnings: int = 0
    boundary_fraction_max: float = 0.0

    def max_drift(self) -> dict[str, float]:
        if not self.rows:
            return {n: 0.0 for n in CONSERVED_NAMES}
        first = self.rows[0]
        return {
            n: max(relative_drift(getattr(first, n), getattr(r, n)) for r in self.rows)
            for n in CONSERVED_NAMES
        }

    def dominant(self) -> tuple[str, float]:
        d = self.max_drift()
        name = max(d, key=d.get)
        return name, d[name]


def step_count(T: float, dt: float) -> int:
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be > 0")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return n


def evolve(
    s0: VecState,
    T: float,
    dt: float,
    snapshot_cadence: int = 1,
    triples=None,
    on_snapshot=None,
    rho: int = 1,
) -> tuple[Trajectory, DriftReport]:
    """Strang-evolve to time ``s0.time + T``; snapshot every ``snapshot_cadence`` steps.

    ``on_snapshot(state, conserved)`` is called at each stored snapshot,
    including the initial one.
    """
    n = step_count(T, dt)
    if snapshot_cadence < 1:
        raise ValueError("snapshot_cadence must be >= 1")
    plan = factored_plan(s0.modes if triples is None else triples)
    mon = StepMonitor()
    report = DriftReport()
    snaps, times = [], []
    xi, mask = s0.xi, dealias_mask(s0.Nx, s0.Lx)

    def record(state):
        cs = conserved_set(state, plan)
        snaps.append(state.fields.copy())
        times.append(state.time)
        report.times.append(state.time)
        report.rows.append(cs)
        report.boundary_fraction_max = max(report.boundary_fraction_max, boundary_mode_fraction(state))
        if on_snapshot is not None:
            on_snapshot(state, cs)

    record(s0)
    U = s0.fields
    for k in range(1, n + 1):
        U = _strang(U, plan, xi, mask, dt, mon, rho)
        if not np.isfinite(U).all():
            raise NumericalAbort(f"non-finite field at step {k}", step=k)
        if k % snapshot_cadence == 0 or k == n:
            record(s0.replace(U, s0.time + k * dt))
    report.tail_max = mon.tail_max
    report.tail_warnings = mon.tail_warnings
    traj = Trajectory(
        s0.modes, s0.Lx, s0.Nx, np.array(times), np.array(snaps), snapshot_cadence * dt
    )
    return traj, report


# ---------------------------------------------------------------- norms and symmetries


def w_norm(traj: Trajectory) -> NormReport:
    """(sum_p (1 + |p|^2) ||u_p||_{L^6_{x,t}}^2)^{1/2}.

    Time quadrature is the trapezoid rule over the snapshots; a single
    snapshot is weighted by the trajectory's snapshot spacing.
    """
    times = np.asarray(traj.times, dtype=float)
    if len(times) > 2 and not np.allclose(np.diff(times), times[1] - times[0], rtol=1e-9):
        raise ValueError("w_norm: snapshots must be uniformly spaced")
    dx = traj.Lx / traj.Nx
    dens = np.sum(np.abs(traj.fields) ** 6, axis=2) * dx  # (snap, mode)
    if len(times) == 1:
        l6 = dens[0] * traj.snapshot_dt
    else:
        l6 = np.trapezoid(dens, times, axis=0)
    val = np.sqrt(np.sum((1 + traj.modes.norm_sq) * l6 ** (1 / 3)))
    return NormReport(
        "W",
        float(val),
        (("snapshots", len(times)), ("radius", traj.modes.radius)),
        "trapezoid in time over stored snapshots",
    )


def gauge(s: VecState, theta: float) -> VecState:
    return s.replace(np.exp(1j * theta) * s.fields)


def conjugate(s: VecState) -> VecState:
    """Time-reversal partner: u_p -> conj(u_p) (the mode set is symmetric)."""
    return s.replace(np.conj(s.fields))


def galilean_boost(s: VecState, xi0: float) -> VecState:
    """u_p -> exp(i (x xi0 - t xi0^2)) u_p(x - 2 xi0 t) with the shift done spectrally."""
    if not np.isclose(xi0 * s.Lx / (2 * np.pi), round(xi0 * s.Lx / (2 * np.pi)), atol=1e-9):
        raise ValueError("boost frequency must lie on the x-frequency grid")
    t = s.time
    shifted = ifft(fft(s.fields, axis=1) * np.exp(-1j * s.xi * 2 * xi0 * t), axis=1)
    phase = np.exp(1j * (s.x * xi0 - t * xi0**2))
    return s.replace(phase * shifted)


# ---------------------------------------------------------------- initial data


def scalar_gaussian(
    modes: ModeSet, Lx: float, Nx: int, amplitude: float = 1.0, width: float = 1.0
) -> VecState:
    """Only u_(0,0) non-zero: amplitude * exp(-x^2 / (2 width^2))."""
    s = zero_state(modes, Lx, Nx)
    f = np.zeros_like(s.fields)
    f[modes.index((0, 0))] = amplitude * np.exp(-(s.x**2) / (2 * width**2))
    return s.replace(f)


def constant_state(modes: ModeSet, Lx: float, Nx: int, c: complex) -> VecState:
    f = np.zeros((len(modes), Nx), dtype=complex)
    f[modes.index((0, 0))] = c
    return VecState(modes, Lx, Nx, f)


def multimode_gaussian(
    modes: ModeSet,
    Lx: float,
    Nx: int,
    seed: int = 0,
    amplitude: float = 1.0,
    width: float = 2.0,
    decay: float = 2.0,
) -> VecState:
    """Gaussian packets in every mode with weights exp(-decay |p|^2).

    Each mode gets a random phase, a random amplitude factor in [0.5, 1.5],
    a centre offset in [-1, 1] and a carrier frequency in [-0.5, 0.5], all
    drawn from ``numpy.random.default_rng(seed)``.
    """
    rng = np.random.default_rng(seed)
    n = len(modes)
    phase = rng.uniform(0, 2 * np.pi, n)
    amp = rng.uniform(0.5, 1.5, n)
    shift = rng.uniform(-1.0, 1.0, n)
    carrier = rng.uniform(-0.5, 0.5, n)
    x = -Lx / 2 + Lx / Nx * np.arange(Nx)
    w = amplitude * amp * np.exp(-decay * modes.norm_sq + 1j * phase)
    f = w[:, None] * np.exp(
        -((x[None, :] - shift[:, None]) ** 2) / (2 * width**2) + 1j * carrier[:, None] * x[None, :]
    )
    return VecState(modes, Lx, Nx, f)
