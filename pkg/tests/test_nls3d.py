import numpy as np
import pytest

from resonantlab import NumericalAbort, nls3d
from resonantlab.spectral.grid import GridSpec
from resonantlab.spectral.norms import h1_norm, linear_propagate

G = GridSpec(32.0, 128, 16)


def data(xi0=0.0, amp=0.8):
    return nls3d.gaussian3d(G, amp, 2.0, 0.8, xi0=xi0, k0=(1, 0))


def test_nonlinear_step_exact_for_constant():
    s = nls3d.constant_data(G, 0.7)
    out = nls3d.nonlinear_step(s, 0.5)
    np.testing.assert_allclose(out.values, 0.7 * np.exp(-1j * 0.7**4 * 0.5), atol=1e-15)


def test_constant_data_closed_form():
    c = 0.7 * np.exp(0.2j)
    run = nls3d.evolve(nls3d.constant_data(G, c), 1.0, 0.01, cadence=50)
    np.testing.assert_allclose(run.final.values, c * np.exp(-1j * abs(c) ** 4), atol=1e-10)


def test_mass_exactly_conserved_and_energy_close():
    run = nls3d.evolve(data(), 0.2, 1e-3, cadence=50)
    d = run.drift()
    assert d["mass"] <= 1e-12
    assert d["energy"] <= 1e-5
    assert d["momentum"] <= 1e-6


def test_linear_mode_is_free_flow():
    s = data()
    run = nls3d.evolve(s, 0.3, 0.05, cadence=6, rho=0)
    ref = linear_propagate(s.field, 0.3)
    np.testing.assert_allclose(run.final.values, ref.values, atol=1e-12)


def test_merged_half_steps_equal_separate_steps():
    s = data()
    merged = nls3d._Stepper(G, 0.01, 1).run(s.values, 3)
    single = s
    for _ in range(3):
        single = nls3d.strang_step(single, 0.01)
    np.testing.assert_allclose(merged, single.values, atol=1e-13)


def test_time_reversible():
    s = data(xi0=2 * np.pi / 32 * 2)
    fwd = nls3d.evolve(s, 0.1, 0.01, cadence=10).final
    back = nls3d.evolve(nls3d.conjugate(fwd).replace(np.conj(fwd.values), 0.0), 0.1, 0.01, cadence=10).final
    np.testing.assert_allclose(np.conj(back.values), s.values, atol=1e-12)


def test_second_order_convergence():
    s = data(amp=1.0)
    T = 0.2
    ref = nls3d.evolve(s, T, T / 320, cadence=320).final.values
    errs = [np.abs(nls3d.evolve(s, T, T / n, cadence=n).final.values - ref).max() for n in (10, 20)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_galilean_covariance():
    xi0 = 2 * np.pi / G.Lx * 3
    s = data()
    T = 0.2
    a = nls3d.evolve(nls3d.galilean_boost(s, xi0), T, 1e-2, cadence=20).final
    b = nls3d.galilean_boost(nls3d.evolve(s, T, 1e-2, cadence=20).final, xi0)
    assert h1_norm(a.field - b.field).value <= 1e-10 * h1_norm(b.field).value
    with pytest.raises(ValueError):
        nls3d.galilean_boost(s, 0.5)


def test_momentum_of_modulated_gaussian():
    xi0 = 2 * np.pi / G.Lx * 4
    g = GridSpec(32.0, 128, 32)
    row = nls3d.diagnostics(nls3d.gaussian3d(g, 1.0, 2.0, 0.8, xi0=xi0, k0=(2, -1)))
    assert row.momentum[0] == pytest.approx(xi0 * row.mass, rel=1e-10)
    assert row.momentum[1] == pytest.approx(2 * row.mass, rel=1e-10)
    assert row.momentum[2] == pytest.approx(-row.mass, rel=1e-10)


def test_virial_and_centroid():
    s = nls3d.gaussian3d(G, 1.0, 1.5, 0.8, x0=3.0)
    assert nls3d.mass_centroid(s) == pytest.approx(3.0, abs=1e-8)
    row = nls3d.diagnostics(s, R=4.0, center="centroid")
    assert abs(row.virial) < 1e-12  # real data carries no current
    moving = nls3d.galilean_boost(s, 2 * np.pi / G.Lx)
    assert nls3d.diagnostics(moving, R=4.0, center=3.0).virial != 0.0
    with pytest.raises(ValueError):
        nls3d.diagnostics(s, R=0.0)


def test_periodic_offset():
    x = np.array([-16.0, 0.0, 15.0])
    np.testing.assert_allclose(nls3d.periodic_offset(x, 14.0, 32.0), [2.0, -14.0, 1.0])


def test_evolve_argument_checks():
    with pytest.raises(ValueError):
        nls3d.evolve(data(), 0.25, 0.1)
    with pytest.raises(ValueError):
        nls3d.evolve(data(), 0.2, 0.1, rho=0.5)
    with pytest.raises(ValueError):
        nls3d.make_state(G, np.zeros((2, 2, 2)))


def test_abort_on_non_finite():
    s = nls3d.constant_data(G, 1e80)
    with pytest.raises(NumericalAbort):
        nls3d.strang_step(s, 0.1)


def test_csv_row_layout():
    row = nls3d.diagnostics(data())
    assert len(row.as_csv_row()) == len(nls3d.DIAGNOSTIC_COLUMNS)
