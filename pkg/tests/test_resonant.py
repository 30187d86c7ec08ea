import numpy as np
import pytest

from resonantlab import NumericalAbort
from resonantlab.lattice import ModeSet
from resonantlab.resonant import (
    StepMonitor,
    VecState,
    conjugate,
    conserved_set,
    constant_state,
    direct_plan,
    evolve,
    factored_plan,
    galilean_boost,
    gauge,
    multimode_gaussian,
    nonlinearity_direct,
    nonlinearity_factored,
    scalar_gaussian,
    step_count,
    step_strang,
    w_norm,
    zero_state,
)

R1 = ModeSet(1)
R2 = ModeSet(2)


def random_state(modes, seed, Nx=64, Lx=16.0):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(len(modes), Nx)) + 1j * rng.normal(size=(len(modes), Nx))
    return VecState(modes, Lx, Nx, f)


def test_vecstate_validation():
    with pytest.raises(ValueError):
        VecState(R1, 1.0, 12, np.zeros((9, 12)))
    with pytest.raises(ValueError):
        VecState(R1, 1.0, 8, np.zeros((8, 8)))
    with pytest.raises(ValueError):
        VecState(R1, 1.0, 8, np.full((9, 8), np.nan))


def test_zero_state_is_fixed():
    s = zero_state(R1, 8.0, 32)
    assert not nonlinearity_factored(s).any()
    assert not step_strang(s, 0.01).fields.any()


def test_constant_nonlinearity_closed_form():
    c = 0.7 * np.exp(0.3j)
    s = constant_state(R2, 8.0, 32, c)
    N = nonlinearity_factored(s)
    expect = np.zeros_like(N)
    expect[R2.index((0, 0))] = abs(c) ** 4 * c
    np.testing.assert_allclose(N, expect, atol=1e-15)


@pytest.mark.parametrize("modes", [R1, R2])
def test_factored_matches_direct(modes):
    for seed in range(3):
        s = random_state(modes, seed)
        d = nonlinearity_direct(s)
        f = nonlinearity_factored(s)
        assert np.abs(f - d).max() <= 1e-12 * np.abs(d).max()


def test_factored_cheaper_than_direct():
    assert direct_plan(R2).multiply_count >= 5 * factored_plan(R2).multiply_count


def test_nonlinearity_gauge_covariant():
    s = random_state(R1, 7)
    N = nonlinearity_factored(s)
    np.testing.assert_allclose(nonlinearity_factored(gauge(s, 0.9)), np.exp(0.9j) * N, atol=1e-11)


def test_step_commutes_with_gauge():
    s = multimode_gaussian(R1, 32.0, 128, seed=1)
    a = gauge(step_strang(s, 0.01), 1.3)
    b = step_strang(gauge(s, 1.3), 0.01)
    np.testing.assert_allclose(a.fields, b.fields, atol=1e-13)


def test_time_reversal():
    s = multimode_gaussian(R1, 32.0, 1024, seed=2)
    traj, _ = evolve(s, 0.2, 0.002, snapshot_cadence=100)
    back, _ = evolve(conjugate(traj.final).replace(traj.final.fields.conj(), 0.0), 0.2, 0.002, snapshot_cadence=100)
    err = np.abs(back.final.fields.conj() - s.fields).max()
    assert err < 1e-9


def test_constant_phase_rotation():
    c = 0.7
    s = constant_state(R1, 8.0, 32, c)
    traj, rep = evolve(s, 1.0, 1e-2, snapshot_cadence=10)
    u = traj.final.field_of((0, 0))
    np.testing.assert_allclose(u, c * np.exp(-1j * c**4 * 1.0), atol=1e-10)
    assert max(rep.max_drift().values()) <= 1e-10


def test_conservation_short_run():
    s = multimode_gaussian(R1, 32.0, 256, seed=3)
    _, rep = evolve(s, 0.5, 1e-3, snapshot_cadence=50)
    d = rep.max_drift()
    for name in ("E_1", "E_p1", "E_p2", "E_kin", "E_ls"):
        assert d[name] <= 1e-10, name
    assert d["H"] <= 1e-6


def test_self_convergence_second_order():
    s = multimode_gaussian(R1, 32.0, 1024, seed=4)
    T = 0.4
    ref = evolve(s, T, T / 1280, snapshot_cadence=1280)[0].final.fields
    errs = []
    for n in (40, 80):
        u = evolve(s, T, T / n, snapshot_cadence=n)[0].final.fields
        errs.append(np.abs(u - ref).max())
    assert 3.0 <= errs[0] / errs[1] <= 5.0


def test_linear_mode_matches_free_flow():
    s = scalar_gaussian(R1, 32.0, 256, amplitude=2.0)
    u = evolve(s, 0.5, 0.05, snapshot_cadence=10, rho=0)[0].final.fields
    xi = s.xi
    ref = np.fft.ifft(np.fft.fft(s.fields, axis=1) * np.exp(-1j * 0.5 * xi**2), axis=1)
    np.testing.assert_allclose(u, ref, atol=1e-12)


def test_galilean_boost_covariance():
    # resolved grid: the quintic product stays inside the dealiased band
    s = multimode_gaussian(R1, 32.0, 1024, seed=5)
    xi0 = 2 * np.pi * 2 / 32.0
    T = 0.3
    a = evolve(galilean_boost(s, xi0), T, 1e-3, snapshot_cadence=300)[0].final
    b = galilean_boost(evolve(s, T, 1e-3, snapshot_cadence=300)[0].final, xi0)
    assert np.abs(a.fields - b.fields).max() <= 1e-9 * np.abs(b.fields).max()
    with pytest.raises(ValueError):
        galilean_boost(s, 0.1234)


def test_w_norm_constant_closed_form():
    c, Lx = 0.5, 8.0
    traj, _ = evolve(constant_state(R1, Lx, 32, c), 1.0, 0.1, snapshot_cadence=1)
    expect = (c**6 * Lx * 1.0) ** (1 / 6)
    assert w_norm(traj).value == pytest.approx(expect, rel=1e-10)


def test_conserved_set_kinetic_closed_form():
    s = scalar_gaussian(R1, 40.0, 512, amplitude=1.0, width=1.0)
    cs = conserved_set(s)
    # ||u||^2 = sqrt(pi), ||u'||^2 = sqrt(pi)/2, int |u|^6 = sqrt(pi/3)
    assert cs.E_1 == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    assert cs.E_kin == 0.0 and cs.E_p1 == 0.0
    assert cs.H == pytest.approx(0.5 * np.sqrt(np.pi) / 2 + np.sqrt(np.pi / 3) / 6, rel=1e-10)


def test_step_count_checks():
    assert step_count(1.0, 0.001) == 1000
    with pytest.raises(ValueError):
        step_count(1.0, 0.3)
    with pytest.raises(ValueError):
        step_count(-1.0, 0.1)


def test_numerical_abort_on_overflow():
    s = constant_state(R1, 8.0, 16, 1e80)
    with pytest.raises(NumericalAbort):
        step_strang(s, 0.1)


def test_monitor_counts_steps():
    s = multimode_gaussian(R1, 32.0, 64, seed=0)
    mon = StepMonitor()
    step_strang(s, 0.01, monitor=mon)
    assert mon.steps == 1 and mon.tail_max >= 0
