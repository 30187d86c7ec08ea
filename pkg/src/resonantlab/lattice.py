"""Resonant interactions on the integer lattice Z^2.

A quintuple ``(p1, ..., p5)`` is resonant for ``j`` when

    p1 - p2 + p3 - p4 + p5 = j
    |p1|^2 - |p2|^2 + |p3|^2 - |p4|^2 + |p5|^2 = |j|^2

All membership tests use exact integer arithmetic.  Modes are truncated to the
sup-norm box ``|p|_inf <= P``; collections are kept in lexicographic order so
that enumerations are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from . import CapacityError

DEFAULT_BUDGET = 10**8


class Mode(NamedTuple):
    """An integer frequency on Z^2. Tuple ordering is lexicographic."""

    px: int
    py: int

    @property
    def norm_sq(self) -> int:
        return self.px * self.px + self.py * self.py

    def __neg__(self) -> "Mode":
        return Mode(-self.px, -self.py)


class ModeSet:
    """All modes with ``|p|_inf <= radius``, sorted lexicographically."""

    def __init__(self, radius: int):
        radius = int(radius)
        if radius < 0:
            raise ValueError(f"ModeSet radius must be non-negative, got {radius}")
        self.radius = radius
        r = np.arange(-radius, radius + 1)
        px, py = np.meshgrid(r, r, indexing="ij")
        self.array = np.stack([px.ravel(), py.ravel()], axis=1).astype(np.int64)
        self.modes = [Mode(int(a), int(b)) for a, b in self.array]
        self._index = {m: i for i, m in enumerate(self.modes)}
        self.norm_sq = (self.array**2).sum(axis=1)

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[Mode]:
        return iter(self.modes)

    def __contains__(self, p) -> bool:
        return (abs(p[0]) <= self.radius) and (abs(p[1]) <= self.radius)

    def __eq__(self, other) -> bool:
        return isinstance(other, ModeSet) and other.radius == self.radius

    def __hash__(self) -> int:
        return hash(("ModeSet", self.radius))

    def __repr__(self) -> str:
        return f"ModeSet(radius={self.radius})"

    def index(self, p) -> int:
        return self._index[Mode(int(p[0]), int(p[1]))]

    def index_array(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized mode -> position lookup; ``pts`` must lie in the box."""
        side = 2 * self.radius + 1
        return (pts[..., 0] + self.radius) * side + (pts[..., 1] + self.radius)

    def in_box(self, pts: np.ndarray) -> np.ndarray:
        return (np.abs(pts) <= self.radius).all(axis=-1)


@dataclass(frozen=True, order=True)
class ResonantTuple:
    p1: Mode
    p2: Mode
    p3: Mode
    p4: Mode
    p5: Mode
    j: Mode

    def modes(self) -> tuple[Mode, Mode, Mode, Mode, Mode]:
        return (self.p1, self.p2, self.p3, self.p4, self.p5)

    def is_resonant(self) -> bool:
        p1, p2, p3, p4, p5 = self.modes()
        lin = all(
            p1[c] - p2[c] + p3[c] - p4[c] + p5[c] == self.j[c] for c in range(2)
        )
        quad = (
            p1.norm_sq - p2.norm_sq + p3.norm_sq - p4.norm_sq + p5.norm_sq
            == self.j.norm_sq
        )
        return lin and quad


def _check_budget(candidates: int, budget: int, what: str) -> None:
    if candidates > budget:
        raise CapacityError(
            f"{what}: {candidates} candidate checks exceed budget {budget}"
        )


class TripleTable:
    """Triples ``(p1, p2, p3)`` grouped by ``q = p1 - p2 + p3`` and
    ``n = |p1|^2 - |p2|^2 + |p3|^2``.

    Storage is columnar: ``triples`` is a ``(T, 3)`` array of indices into the
    ModeSet, sorted by key and then lexicographically; ``offsets[k]`` delimits
    the triples belonging to ``keys[k]``.
    """

    def __init__(self, modes: ModeSet, keys, key_q, key_n, triples, offsets):
        self.modes = modes
        self.keys = keys
        self.key_q = key_q
        self.key_n = key_n
        self.triples = triples
        self.offsets = offsets
        self._pos = {k: i for i, k in enumerate(keys)}

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key) -> bool:
        return key in self._pos

    def __getitem__(self, key) -> list[tuple[Mode, Mode, Mode]]:
        k = self._pos[key]
        rows = self.triples[self.offsets[k] : self.offsets[k + 1]]
        m = self.modes.modes
        return [(m[a], m[b], m[c]) for a, b, c in rows]

    def items(self):
        for key in self.keys:
            yield key, self[key]

    @property
    def triple_count(self) -> int:
        return int(self.triples.shape[0])

    @property
    def n_range(self) -> tuple[int, int]:
        return int(self.key_n.min()), int(self.key_n.max())


def enumerate_triples(modes: ModeSet, budget: int = DEFAULT_BUDGET) -> TripleTable:
    if len(modes) == 0:
        raise ValueError("enumerate_triples needs a nonempty ModeSet")
    m = len(modes)
    _check_budget(m**3, budget, "enumerate_triples")
    idx = np.indices((m, m, m)).reshape(3, -1).T
    arr, nsq = modes.array, modes.norm_sq
    q = arr[idx[:, 0]] - arr[idx[:, 1]] + arr[idx[:, 2]]
    n = nsq[idx[:, 0]] - nsq[idx[:, 1]] + nsq[idx[:, 2]]
    # mode indices follow lexicographic mode order, so sorting by index columns
    # sorts triples lexicographically within a key
    order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0], n, q[:, 1], q[:, 0]))
    idx, q, n = idx[order], q[order], n[order]
    change = np.ones(len(n), dtype=bool)
    change[1:] = (q[1:] != q[:-1]).any(axis=1) | (n[1:] != n[:-1])
    starts = np.flatnonzero(change)
    offsets = np.append(starts, len(n))
    key_q, key_n = q[starts], n[starts]
    keys = [(Mode(int(a), int(b)), int(c)) for (a, b), c in zip(key_q, key_n)]
    return TripleTable(modes, keys, key_q, key_n, idx, offsets)


def _check_j(j, modes: ModeSet) -> Mode:
    j = Mode(int(j[0]), int(j[1]))
    if j not in modes:
        raise ValueError(f"j={tuple(j)} lies outside {modes!r}")
    return j


def _to_tuples(rows: np.ndarray, j: Mode, modes: ModeSet) -> list[ResonantTuple]:
    m = modes.modes
    return [ResonantTuple(*(m[i] for i in r), j) for r in rows]


def _sort_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def resonance_indices_bruteforce(
    j, modes: ModeSet, budget: int = DEFAULT_BUDGET
) -> np.ndarray:
    """Exhaustive scan of modes^5; returns sorted ``(K, 5)`` index rows."""
    j = _check_j(j, modes)
    m = len(modes)
    _check_budget(m**5, budget, "enumerate_resonances_bruteforce")
    arr, nsq = modes.array, modes.norm_sq
    rest = np.indices((m, m, m, m)).reshape(4, -1).T
    lin_rest = -arr[rest[:, 0]] + arr[rest[:, 1]] - arr[rest[:, 2]] + arr[rest[:, 3]]
    quad_rest = -nsq[rest[:, 0]] + nsq[rest[:, 1]] - nsq[rest[:, 2]] + nsq[rest[:, 3]]
    target_lin = np.array(j)
    found = []
    for i1 in range(m):
        ok = ((arr[i1] + lin_rest) == target_lin).all(axis=1) & (
            nsq[i1] + quad_rest == j.norm_sq
        )
        sel = rest[ok]
        if len(sel):
            found.append(np.column_stack([np.full(len(sel), i1), sel]))
    if not found:
        return np.zeros((0, 5), dtype=np.int64)
    return _sort_rows(np.concatenate(found))


def enumerate_resonances_bruteforce(
    j, modes: ModeSet, budget: int = DEFAULT_BUDGET
) -> list[ResonantTuple]:
    rows = resonance_indices_bruteforce(j, modes, budget)
    return _to_tuples(rows, _check_j(j, modes), modes)


def resonance_indices_factored(
    j, modes: ModeSet, triples: TripleTable, budget: int = DEFAULT_BUDGET
) -> np.ndarray:
    """R(j) via the (q, n) grouping: p5 = j + p4 - q, |p5|^2 = |j|^2 + |p4|^2 - n."""
    j = _check_j(j, modes)
    if triples.modes != modes:
        raise ValueError("TripleTable was built over a different ModeSet")
    m = len(modes)
    _check_budget(len(triples) * m, budget, "enumerate_resonances_factored")
    arr, nsq = modes.array, modes.norm_sq
    p5 = np.array(j)[None, None, :] + arr[None, :, :] - triples.key_q[:, None, :]
    need = j.norm_sq + nsq[None, :] - triples.key_n[:, None]
    inside = modes.in_box(p5)
    p5_norm = (p5**2).sum(axis=-1)
    ok = inside & (p5_norm == need)
    kk, i4 = np.nonzero(ok)
    if len(kk) == 0:
        return np.zeros((0, 5), dtype=np.int64)
    i5 = modes.index_array(p5[kk, i4])
    counts = triples.offsets[kk + 1] - triples.offsets[kk]
    _check_budget(int(counts.sum()), budget, "enumerate_resonances_factored")
    starts = np.repeat(triples.offsets[kk], counts)
    within = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    tri = triples.triples[starts + within]
    rows = np.column_stack([tri, np.repeat(i4, counts), np.repeat(i5, counts)])
    return _sort_rows(rows)


def enumerate_resonances_factored(
    j, modes: ModeSet, triples: TripleTable, budget: int = DEFAULT_BUDGET
) -> list[ResonantTuple]:
    rows = resonance_indices_factored(j, modes, triples, budget)
    return _to_tuples(rows, _check_j(j, modes), modes)


def resonance_table(
    modes: ModeSet, triples: TripleTable | None = None, budget: int = DEFAULT_BUDGET
) -> dict[Mode, np.ndarray]:
    """Per-j resonance index rows for every j in ``modes``, keyed in mode order."""
    if triples is None:
        triples = enumerate_triples(modes, budget)
    return {j: resonance_indices_factored(j, modes, triples, budget) for j in modes}


def _is_square(n: int) -> int | None:
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def _rational_sqrt(x: Fraction) -> Fraction | None:
    a, b = _is_square(x.numerator), _is_square(x.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def circle_lattice_count(center, radius_sq, min_norm: float = 0.0) -> int:
    """Number of p in Z^2 with |p - center|^2 == radius_sq and |p| >= min_norm.

    ``center`` and ``radius_sq`` are converted to Fractions; every comparison
    on the circle is exact.
    """
    cx, cy = Fraction(center[0]), Fraction(center[1])
    r2 = Fraction(radius_sq)
    if r2 < 0:
        raise ValueError("radius_sq must be non-negative")
    a2 = Fraction(min_norm) ** 2 if min_norm > 0 else Fraction(0)
    span = math.isqrt(math.ceil(r2)) + 1
    found = set()
    for x in range(math.floor(cx) - span, math.ceil(cx) + span + 1):
        rem = r2 - (x - cx) ** 2
        if rem < 0:
            continue
        s = _rational_sqrt(rem)
        if s is None:
            continue
        for y in (cy + s, cy - s):
            if y.denominator == 1 and x * x + y.numerator**2 >= a2:
                found.add((x, y.numerator))
    return len(found)


def sumlem_statistic(
    j,
    modes: ModeSet,
    triples: TripleTable | None = None,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """<j>^2 * sum over R(j) of prod_i <p_i>^-2, with <p>^2 = 1 + |p|^2."""
    j = _check_j(j, modes)
    if triples is None:
        triples = enumerate_triples(modes, budget)
    rows = resonance_indices_factored(j, modes, triples, budget)
    w = 1.0 / (1.0 + modes.norm_sq.astype(float))
    terms = np.prod(w[rows], axis=1)
    # rows arrive in canonical order; fsum makes the total order-independent anyway
    return (1.0 + j.norm_sq) * math.fsum(terms.tolist())


def sumlem_sweep(modes: ModeSet, budget: int = DEFAULT_BUDGET) -> list[tuple[Mode, float]]:
    triples = enumerate_triples(modes, budget)
    return [(j, sumlem_statistic(j, modes, triples, budget)) for j in modes]
