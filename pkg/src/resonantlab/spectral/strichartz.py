"""Empirical Strichartz ratios and the periodic Weyl-sum kernel.

The windowed norm ``l^q_g L^p_{x,y,t}(R x T^2 x [2 pi g, 2 pi (g+1)])`` of
``exp(i t Delta) P_{<=N} u0`` is evaluated for separable data
``u0 = a(x) b(y)``.  The flow and the projector both factor, so

    ||u(t)||_{L^p_{x,y}}^p = A(t) B(t),   A = int |a(t)|^p dx,  B = int |b(t)|^p dy.

``B`` is 2 pi-periodic (integer |k|^2) and is sampled on a fine uniform grid.
``A`` is the free evolution on the line, computed without any periodic box:
directly on a padded grid for |t| <= 2 pi and through the exact far-field
identity

    exp(i t d_xx) f (x) = (4 pi i t)^{-1/2} e^{i x^2 / 4t} F[e^{i z^2 / 4t} f](x / 2t)

for later windows.  ``A`` is smooth in t, so it is computed on graded nodes
and spline-interpolated onto the grid of ``B``.
"""
from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import Field3D, fft, fftn, ifft, ifftn
from .norms import NormReport
from .projectors import eta_cutoff, eta_le

SEPARABILITY_TOL = 1e-10


def admissible_q(p: float) -> float:
    """q with 2/q + 1/p = 1/2."""
    if not p > 4:
        raise ValueError(f"Strichartz exponent must satisfy p > 4, got {p}")
    return 4 * p / (p - 2)


def split_separable(u0: Field3D):
    """Factor grid data as a(x) * b(y1, y2); raises if the data is not rank one."""
    g = u0.grid
    mat = u0.values.reshape(g.Nx, g.Ny * g.Ny)
    i, j = np.unravel_index(np.argmax(np.abs(mat)), mat.shape)
    pivot = mat[i, j]
    if pivot == 0:
        raise ValueError("strichartz_ratio: zero initial data, ratio undefined")
    a = mat[:, j].copy()
    b = mat[i, :] / pivot
    resid = np.linalg.norm(mat - np.outer(a, b)) / np.linalg.norm(mat)
    if resid > SEPARABILITY_TOL:
        raise ValueError(
            f"strichartz_ratio needs separable data a(x) b(y); rank-one residual {resid:.2e}"
        )
    return a, b.reshape(g.Ny, g.Ny)


def _line_spectrum(a: np.ndarray, dx: float, N: float):
    """Spectrum of P^x_{<=N} a on the input grid, plus the grid frequencies."""
    n = len(a)
    xi = 2 * np.pi / (n * dx) * np.fft.fftfreq(n, 1.0 / n)
    return fft(a) * eta_le(xi, N), xi


def _resample(ah: np.ndarray, dx_in: float, n_out: int, dx_out: float) -> np.ndarray:
    """Band-limited samples of an input trig polynomial on a longer, finer grid.

    ``ah`` is the raw FFT of the input samples.  The function is taken to
    vanish outside the input box and is sampled on a centred grid of ``n_out``
    points with spacing ``dx_out`` (which must divide ``dx_in``).
    """
    n_in = len(ah)
    ratio = dx_in / dx_out
    n_fine = int(round(n_in * ratio))
    if abs(n_fine - n_in * ratio) > 1e-9:
        raise ValueError("output spacing must divide the input spacing")
    pad = np.zeros(n_fine, dtype=complex)
    half = n_in // 2
    pad[:half] = ah[:half]
    pad[-half:] = ah[-half:]
    fine = ifft(pad) * (n_fine / n_in)
    start = n_out // 2 - n_fine // 2
    if start < 0:
        raise ValueError("output grid shorter than input box")
    out = np.zeros(n_out, dtype=complex)
    out[start : start + n_fine] = fine
    return out


class _LineEvolution:
    """|| exp(i t d_xx) P_{<=N} a ||_{L^p(R)}^p as a function of t."""

    def __init__(self, a, dx, N, p, near_horizon):
        self.p = p
        ah, xi = _line_spectrum(a, dx, N)
        band = 2.0 * N
        # dx fine enough for the band and for |.|^p quadrature
        fine = max(1, int(np.ceil(dx / (np.pi / (2.0 * band)))))
        self.dx = dx / fine
        L_in = len(a) * dx
        travel = 2 * band * near_horizon
        n = 1
        while n * self.dx < L_in + 2.2 * travel:
            n *= 2
        self.f = _resample(ah, dx, n, self.dx)
        self.n = n
        self.kx = 2 * np.pi / (n * self.dx) * np.fft.fftfreq(n, 1.0 / n)
        self.fhat = fft(self.f)
        self.x = self.dx * (np.arange(n) - n // 2)
        # compact copy for the far field
        mass = np.abs(self.f) ** 2
        keep = np.flatnonzero(mass > mass.max() * 1e-32)
        lo, hi = keep[0], keep[-1] + 1
        self.z = self.x[lo:hi]
        self.fz = self.f[lo:hi]

    def near(self, t: float) -> float:
        u = ifft(self.fhat * np.exp(-1j * t * self.kx**2))
        return float(np.sum(np.abs(u) ** self.p) * self.dx)

    def far(self, t: float) -> float:
        # ||a(t)||_p^p = |4 pi t|^{-p/2} 2|t| int |F[phi_t](xi)|^p dxi
        phi = self.fz * np.exp(1j * self.z**2 / (4 * t))
        m = 1
        while m < 8 * len(phi):
            m *= 2
        dz = self.dx
        F = np.fft.fft(phi, m) * dz
        dxi = 2 * np.pi / (m * dz)
        integral = np.sum(np.abs(F) ** self.p) * dxi
        return float(abs(4 * np.pi * t) ** (-self.p / 2) * 2 * abs(t) * integral)


def _torus_density(b: np.ndarray, N: float, p: float, n_t: int) -> np.ndarray:
    """B(t) = int_{T^2} |exp(i t Delta_y) P^y_{<=N} b|^p dy at t = 2 pi j / n_t."""
    ny = b.shape[0]
    src = np.fft.fftfreq(ny, 1.0 / ny).astype(int)
    cut = eta_le(src, N)
    bh = fftn(b) / ny**2 * (cut[:, None] * cut[None, :])
    sel = np.flatnonzero(cut > 0)
    kmax = int(np.abs(src[sel]).max())
    # twice the bandwidth keeps the |.|^p quadrature accurate
    m = 8
    while m < 4 * kmax:
        m *= 2
    coef = np.zeros((m, m), dtype=complex)
    dst = src[sel] % m
    coef[np.ix_(dst, dst)] = bh[np.ix_(sel, sel)]
    kk = np.fft.fftfreq(m, 1.0 / m)
    lap = kk[:, None] ** 2 + kk[None, :] ** 2
    dy2 = (2 * np.pi / m) ** 2
    out = np.empty(n_t)
    for i in range(n_t):
        field = ifftn(coef * np.exp(-1j * (2 * np.pi * i / n_t) * lap)) * (m * m)
        out[i] = np.sum(np.abs(field) ** p) * dy2
    return out


def windowed_strichartz_norm(
    u0: Field3D, N: float, p: float, gamma_max: int, samples_per_window: int | None = None
):
    """Return (l^q_g L^p norm, per-window L^p norms) of exp(i t Delta) P_{<=N} u0."""
    q = admissible_q(p)
    a, b = split_separable(u0)
    g = u0.grid
    if samples_per_window is None:
        samples_per_window = int(max(256, 16 * N**2))
    B = _torus_density(b, N, p, samples_per_window)
    line = _LineEvolution(a, g.dx, N, p, near_horizon=2 * np.pi)
    n_t = samples_per_window
    frac = np.arange(n_t + 1) / n_t
    pieces = []
    for gam in range(-gamma_max, gamma_max + 1):
        t_fine = 2 * np.pi * (gam + frac)
        if gam in (-1, 0):
            # graded nodes resolve the fast dispersion near t = 0
            s = np.linspace(0.0, 1.0, 401) ** 3
            nodes = 2 * np.pi * (s if gam == 0 else -s[::-1])
            vals = np.array([line.near(t) for t in nodes])
        else:
            nodes = 2 * np.pi * (gam + np.linspace(0.0, 1.0, 65))
            vals = np.array([line.far(t) for t in nodes])
        A = CubicSpline(nodes, vals)(t_fine)
        Bw = np.append(B, B[0])
        integral = np.trapezoid(A * Bw, t_fine)
        pieces.append(max(integral, 0.0) ** (1 / p))
    pieces = np.array(pieces)
    return float(np.sum(pieces**q) ** (1 / q)), pieces


def strichartz_ratio(
    u0: Field3D, N: float, p: float, gamma_max: int, samples_per_window: int | None = None
) -> NormReport:
    """||exp(i t Delta) P_{<=N} u0||_{l^q L^p} / (N^{3/2 - 5/p} ||u0||_{L^2})."""
    q = admissible_q(p)
    l2 = float(np.sqrt(np.sum(np.abs(u0.values) ** 2) * u0.grid.cell_volume))
    if l2 == 0:
        raise ValueError("strichartz_ratio: zero initial data, ratio undefined")
    num, pieces = windowed_strichartz_norm(u0, N, p, gamma_max, samples_per_window)
    ratio = num / (N ** (1.5 - 5 / p) * l2)
    return NormReport(
        "strichartz_ratio",
        ratio,
        (("N", N), ("p", p), ("q", q), ("gamma_max", gamma_max), ("numerator", num), ("l2", l2)),
        "x-flow on the line (near field + far-field identity); y-flow on T^2",
    )


def weyl_kernel(N: float, t: float, n: int | None = None) -> np.ndarray:
    """K_N(y, t) = sum_k [eta(k1/N) eta(k2/N)]^2 exp(i (y.k + t |k|^2)) on an n x n grid."""
    if N < 1:
        raise ValueError("weyl kernel needs N >= 1")
    if n is None:
        n = 1
        while n < 8 * N:
            n *= 2
    k = np.fft.fftfreq(n, 1.0 / n)
    w = (eta_cutoff(k, N)[:, None] * eta_cutoff(k, N)[None, :]) ** 2
    phase = np.exp(1j * t * (k[:, None] ** 2 + k[None, :] ** 2))
    return ifftn(w * phase) * n * n


def weyl_kernel_sup(N: float, t: float, n: int | None = None) -> float:
    return float(np.abs(weyl_kernel(N, t, n)).max())


def weyl_kernel_direct(N: float, t: float, y) -> complex:
    """Direct summation at a single point y; independent of the FFT path."""
    top = int(np.ceil(2 * N))
    total = 0j
    for k1 in range(-top, top + 1):
        w1 = eta_cutoff(k1, N)
        if w1 == 0:
            continue
        for k2 in range(-top, top + 1):
            w2 = eta_cutoff(k2, N)
            if w2 == 0:
                continue
            total += (w1 * w2) ** 2 * np.exp(1j * (y[0] * k1 + y[1] * k2 + t * (k1 * k1 + k2 * k2)))
    return complex(total)
