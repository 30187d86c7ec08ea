"""Subcommand bodies.  Each takes (config, run) and returns a validity dict."""
from __future__ import annotations

import json

import numpy as np

from .. import NumericalAbort, ValidityError, nls3d, profiles
from ..checkpoint import read_nls, read_resonant, write_nls, write_resonant
from ..lattice import (
    ModeSet,
    enumerate_triples,
    resonance_indices_bruteforce,
    resonance_indices_factored,
    sumlem_sweep,
)
from ..resonant import system as rs
from ..spectral.grid import Field3D, GridSpec
from ..spectral.projectors import eta_cutoff
from ..spectral.strichartz import admissible_q, strichartz_ratio, weyl_kernel, weyl_kernel_direct
from .manifest import CsvSink, Run, rng_for


def cmd_resonances(cfg, run: Run) -> dict:
    p = cfg.params
    modes = ModeSet(p["radius"])
    j = tuple(p["j"])
    if p["method"] == "bruteforce":
        rows = resonance_indices_bruteforce(j, modes)
    else:
        rows = resonance_indices_factored(j, modes, enumerate_triples(modes))
    pts = modes.array[rows].reshape(len(rows), 10)
    cols = [f"p{i}{c}" for i in range(1, 6) for c in "xy"]
    name = p["out"] or f"resonances.{p['format']}"
    if p["format"] == "csv":
        with CsvSink(run, name, cols) as sink:
            for r in pts:
                sink.row(r.tolist())
    else:
        run.path(name).write_text(json.dumps({"j": list(j), "columns": cols, "rows": pts.tolist()}) + "\n")
        run.register(name)
    return {"count": int(len(rows))}


def cmd_sumlem(cfg, run: Run) -> dict:
    p = cfg.params
    stats = sumlem_sweep(ModeSet(p["radius"]))
    with CsvSink(run, p["out"], ("jx", "jy", "statistic")) as sink:
        for j, s in stats:
            sink.row((j.px, j.py, s))
    return {"max_statistic": max(s for _, s in stats)}


def _resonant_init(cfg) -> rs.VecState:
    p = cfg.params
    modes = ModeSet(p["radius"])
    if p["init"] == "file":
        s = read_resonant(p["init_file"])
        if s.modes != modes or s.Nx != p["Nx"] or not np.isclose(s.Lx, p["Lx"]):
            raise ValueError("checkpoint does not match radius / Lx / Nx of the config")
        return s
    if p["init"] == "scalar-gaussian":
        return rs.scalar_gaussian(modes, p["Lx"], p["Nx"], p["amplitude"], p["width"])
    if p["init"] == "constant":
        return rs.constant_state(modes, p["Lx"], p["Nx"], p["c"])
    seed = int(rng_for(cfg.seed, "resonant-init").integers(2**63))
    return rs.multimode_gaussian(
        modes, p["Lx"], p["Nx"], seed=seed, amplitude=p["amplitude"], width=p["width"], decay=p["decay"]
    )


def cmd_simulate_resonant(cfg, run: Run) -> dict:
    p = cfg.params
    s0 = _resonant_init(cfg)
    plan = rs.factored_plan(s0.modes)
    dt = p["dt"]
    n = rs.step_count(p["T"], dt)
    ck = p["checkpoint_every"]

    def ck_name(k):
        return f"state_{k:08d}.bin"

    with CsvSink(run, "conserved.csv", ("time",) + rs.CONSERVED_NAMES) as sink:
        report = rs.DriftReport()
        mon = rs.StepMonitor()
        xi, mask = s0.xi, rs.dealias_mask(s0.Nx, s0.Lx)

        def record(state):
            cs = rs.conserved_set(state, plan)
            report.rows.append(cs)
            report.times.append(state.time)
            report.boundary_fraction_max = max(
                report.boundary_fraction_max, rs.boundary_mode_fraction(state)
            )
            sink.row((state.time,) + cs.as_tuple())

        record(s0)
        U = s0.fields
        for k in range(1, n + 1):
            U = rs._strang(U, plan, xi, mask, dt, mon, p["rho"])
            if not np.isfinite(U).all():
                raise NumericalAbort(f"non-finite field at step {k}", step=k)
            state = s0.replace(U, s0.time + k * dt)
            if k % p["snapshot_every"] == 0 or k == n:
                record(state)
            if (ck and k % ck == 0) or k == n:
                write_resonant(run.path(ck_name(k)), state)
                run.register(ck_name(k))
    drift = report.max_drift()
    validity = {
        "max_relative_drift": drift,
        "dominant_drift": list(report.dominant()),
        "boundary_mode_fraction_max": report.boundary_fraction_max,
        "tail_fraction_max": mon.tail_max,
        "tail_warnings": mon.tail_warnings,
        "boundary_ok": report.boundary_fraction_max <= p["boundary_limit"],
    }
    run.validity = validity
    if not validity["boundary_ok"]:
        raise ValidityError(
            f"boundary-mode fraction {report.boundary_fraction_max:.2e} above {p['boundary_limit']:.0e}"
        )
    return validity


def _gaussian_phi(x, y1, y2):
    return np.exp(-(x**2 + y1**2 + y2**2) / (2 * 0.5**2))


def _nls_init(cfg, grid: GridSpec) -> nls3d.NLSState:
    p = cfg.params
    kind = p["init"]
    if kind == "file":
        f, t = read_nls(p["init_file"])
        if f.grid.shape != grid.shape or not np.isclose(f.grid.Lx, grid.Lx):
            raise ValueError("checkpoint grid does not match the config")
        return nls3d.make_state(grid, f.values, t)
    if kind == "constant":
        return nls3d.constant_data(grid, p["c"])
    if kind == "largescale":
        M = p["M"]
        psi = profiles.gaussian_y2mode(grid.Lx * M, grid.Nx, grid.Ny, amplitude=p["amplitude"])
        return nls3d.make_state(grid, profiles.large_scale_data(psi, M, grid).values)
    if kind == "euclidean":
        return nls3d.make_state(grid, profiles.euclidean_data(_gaussian_phi, p["N"], grid).values)
    return nls3d.gaussian3d(
        grid, p["amplitude"], p["width_x"], p["width_y"], xi0=p["xi0"], k0=tuple(p["k0"])
    )


def cmd_simulate_nls(cfg, run: Run) -> dict:
    p = cfg.params
    grid = GridSpec(p["Lx"], p["Nx"], p["Ny"], p["dt"])
    s0 = _nls_init(cfg, grid)
    ck = p["checkpoint_every"]
    n = int(round(p["T"] / p["dt"]))
    cadence = p["cadence"] if not ck else int(np.gcd(p["cadence"], ck))

    with CsvSink(run, "diagnostics.csv", nls3d.DIAGNOSTIC_COLUMNS) as sink:

        def on_row(state, row):
            k = int(round(state.time / p["dt"]))
            if k % p["cadence"] == 0 or k == n:
                sink.row(row.as_csv_row())
            if (ck and k > 0 and k % ck == 0) or k == n:
                name = f"state_{k:08d}.bin"
                write_nls(run.path(name), state.field, state.time)
                run.register(name)

        result = nls3d.evolve(
            s0, p["T"], p["dt"], cadence, p["rho"], p["R"], p["center"], keep_snapshots=False, on_row=on_row
        )
    drift = result.drift()
    bmax = max(r.boundary_fraction for r in result.rows)
    validity = {
        "max_relative_drift": drift,
        "boundary_fraction_max": bmax,
        "tail_fraction_max": max(r.tail_fraction for r in result.rows),
        "tail_warnings": result.tail_warnings,
        "boundary_ok": bmax <= p["boundary_limit"],
    }
    run.validity = validity
    if not validity["boundary_ok"]:
        raise ValidityError(f"boundary mass fraction {bmax:.2e} above {p['boundary_limit']:.0e}")
    return validity


def cmd_multiscale(cfg, run: Run) -> dict:
    p = cfg.params
    if p["psi"] == "file":
        psi, _ = read_nls(p["psi_file"])
    else:
        psi = profiles.gaussian_y2mode(
            p["Lref"], p["Nx"], p["Ny"], p["width"], p["amplitude"], p["second"]
        )
    rows = []
    with CsvSink(run, "multiscale.csv", profiles.MULTISCALE_COLUMNS) as sink:
        for M in sorted(p["M_list"], reverse=True):
            row = profiles.multiscale_row(
                psi, M, p["T0"], dt=p["dt"], radius=p["radius"], sample_every=p["sample_every"], rho=p["rho"]
            )
            rows.append(row)
            good = [r for r in rows if r.valid]
            row.slope_running = profiles.loglog_slope(
                [r.M for r in good], [r.sup_H1_error for r in good]
            )
            sink.row(row.csv_row())
    good = [r for r in rows if r.valid]
    validity = {
        "rows": len(rows),
        "valid_rows": len(good),
        "slope_error": profiles.loglog_slope([r.M for r in good], [r.sup_H1_error for r in good]),
        "slope_residual": profiles.loglog_slope([r.M for r in good], [r.residual_duhamel for r in good]),
        "all_valid": len(good) == len(rows),
    }
    run.validity = validity
    if not validity["all_valid"]:
        raise ValidityError(f"{len(rows) - len(good)} multiscale rows failed their validity monitors")
    return validity


def strichartz_profile(kind: str, grid: GridSpec, width_x: float, width_y: float) -> Field3D:
    """Separable test data a(x) b(y) centred at x = 0, y = (pi, pi)."""
    x, y1, y2 = grid.x, grid.y, grid.y
    a = np.exp(-(x**2) / (2 * width_x**2))
    if kind == "bump":
        a = eta_cutoff(x, width_x)
        by = np.sqrt(((y1[:, None] - np.pi) ** 2 + (y2[None, :] - np.pi) ** 2))
        b = eta_cutoff(by, width_y)
    elif kind == "planewave":
        b = np.exp(1j * y1)[:, None] * np.ones_like(y2)[None, :]
    else:
        b = np.exp(-((y1[:, None] - np.pi) ** 2 + (y2[None, :] - np.pi) ** 2) / (2 * width_y**2))
    return Field3D(grid, a[:, None, None] * b[None, :, :])


def cmd_strichartz(cfg, run: Run) -> dict:
    p = cfg.params
    grid = GridSpec(p["Lx"], p["Nx"], p["Ny"])
    u0 = strichartz_profile(p["profile"], grid, p["width_x"], p["width_y"])
    ratios = []
    with CsvSink(run, p["out"], ("N", "p", "q", "ratio", "numerator")) as sink:
        for N in p["N_list"]:
            rep = strichartz_ratio(u0, N, p["p"], p["gamma_max"], p["samples_per_window"])
            ratios.append(rep.value)
            sink.row((N, p["p"], admissible_q(p["p"]), rep.value, rep.param("numerator")))
    validity = {"ratio_max": max(ratios), "ratio_min": min(ratios), "variation": max(ratios) / min(ratios)}
    run.validity = validity
    return validity


def cmd_weyl(cfg, run: Run) -> dict:
    p = cfg.params
    N = p["N"]
    with CsvSink(run, p["out"], ("t", "sup_abs", "value_at_0", "direct_at_0")) as sink:
        for i in range(p["t_samples"]):
            t = 2 * np.pi * i / p["t_samples"]
            K = weyl_kernel(N, t)
            direct = weyl_kernel_direct(N, t, (0.0, 0.0))
            sink.row((t, float(np.abs(K).max()), float(abs(K[0, 0])), abs(direct)))
    return {}


COMMANDS = {
    "resonances": cmd_resonances,
    "sumlem-sweep": cmd_sumlem,
    "simulate-resonant": cmd_simulate_resonant,
    "simulate-nls": cmd_simulate_nls,
    "multiscale": cmd_multiscale,
    "strichartz": cmd_strichartz,
    "weyl": cmd_weyl,
}
