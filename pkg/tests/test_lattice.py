from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonantlab import CapacityError
from resonantlab.lattice import (
    Mode,
    ModeSet,
    circle_lattice_count,
    enumerate_resonances_factored,
    enumerate_triples,
    resonance_indices_bruteforce,
    resonance_indices_factored,
    resonance_table,
    sumlem_statistic,
    sumlem_sweep,
)


def test_modeset_order_and_index():
    ms = ModeSet(2)
    assert len(ms) == 25
    assert list(ms.modes) == sorted(ms.modes)
    for i, p in enumerate(ms.modes):
        assert ms.index(p) == i
    assert ms.index((0, 0)) == 12
    assert (ms.norm_sq == (ms.array**2).sum(1)).all()


def test_modeset_rejects_negative_radius():
    with pytest.raises(ValueError):
        ModeSet(-1)


def test_triple_table_covers_every_triple():
    ms = ModeSet(1)
    tt = enumerate_triples(ms)
    assert tt.triple_count == len(ms) ** 3
    for (q, n), rows in tt.items():
        for p1, p2, p3 in rows:
            assert (p1.px - p2.px + p3.px, p1.py - p2.py + p3.py) == tuple(q)
            assert p1.norm_sq - p2.norm_sq + p3.norm_sq == n


def test_resonance_counts_match_oracle_radius1(oracles):
    ms = ModeSet(1)
    tt = enumerate_triples(ms)
    for key, count in oracles["resonance_counts_r1"].items():
        j = tuple(int(v) for v in key.split(","))
        assert len(resonance_indices_factored(j, ms, tt)) == count
        assert len(resonance_indices_bruteforce(j, ms)) == count


def test_resonance_counts_match_oracle_radius2(oracles):
    ms = ModeSet(2)
    table = resonance_table(ms)
    for key, count in oracles["resonance_counts_r2"].items():
        j = Mode(*(int(v) for v in key.split(",")))
        assert len(table[j]) == count


def test_every_enumerated_tuple_is_resonant():
    ms = ModeSet(1)
    tt = enumerate_triples(ms)
    tuples = enumerate_resonances_factored((1, 0), ms, tt)
    assert tuples and all(t.is_resonant() for t in tuples)


def test_trivial_resonances_present():
    # (j, p, p, q, q) style tuples: p1 = j, p2 = p3, p4 = p5
    ms = ModeSet(1)
    rows = {tuple(r) for r in resonance_indices_bruteforce((0, 0), ms)}
    z = ms.index((0, 0))
    for a in range(len(ms)):
        for b in range(len(ms)):
            assert (z, a, a, b, b) in rows


def test_symmetry_of_counts():
    # rotations and reflections of Z^2 preserve the resonance relations
    ms = ModeSet(2)
    tt = enumerate_triples(ms)
    n = len(resonance_indices_factored((2, 1), ms, tt))
    for j in ((1, 2), (-2, 1), (2, -1), (-1, -2)):
        assert len(resonance_indices_factored(j, ms, tt)) == n


def test_capacity_error_on_budget():
    with pytest.raises(CapacityError):
        resonance_indices_bruteforce((0, 0), ModeSet(2), budget=1000)


def test_j_outside_box_rejected():
    with pytest.raises(ValueError):
        resonance_indices_bruteforce((3, 0), ModeSet(1))


def test_circle_counts_match_oracle(oracles):
    for c in oracles["circles"]:
        center = tuple(Fraction(v) for v in c["center"])
        assert circle_lattice_count(center, Fraction(c["r2"])) == c["count"]


def test_circle_min_norm_excludes_inner_points():
    assert circle_lattice_count((0, 0), 25, min_norm=6) == 0
    assert circle_lattice_count((0, 0), 25, min_norm=5) == 12


@settings(max_examples=100, deadline=None)
@given(
    st.integers(-6, 6), st.integers(-6, 6), st.integers(1, 4), st.integers(0, 60)
)
def test_circle_count_against_scan(a, b, den, r2num):
    center = (Fraction(a, den), Fraction(b, den))
    r2 = Fraction(r2num, den * den)
    scan = sum(
        1
        for x in range(-20, 21)
        for y in range(-20, 21)
        if (x - center[0]) ** 2 + (y - center[1]) ** 2 == r2
    )
    assert circle_lattice_count(center, r2) == scan


def test_sumlem_radius1_matches_oracle(oracles):
    best = max(s for _, s in sumlem_sweep(ModeSet(1)))
    assert best == pytest.approx(oracles["sumlem_max_r1"], rel=1e-12)


def test_sumlem_statistic_positive_and_symmetric():
    ms = ModeSet(2)
    tt = enumerate_triples(ms)
    a = sumlem_statistic((1, 0), ms, tt)
    b = sumlem_statistic((0, -1), ms, tt)
    assert a > 0 and a == pytest.approx(b, rel=1e-14)


def test_factored_equals_bruteforce_sample():
    ms = ModeSet(2)
    tt = enumerate_triples(ms)
    for j in ((0, 0), (1, -2), (2, 2)):
        np.testing.assert_array_equal(
            resonance_indices_factored(j, ms, tt), resonance_indices_bruteforce(j, ms)
        )
