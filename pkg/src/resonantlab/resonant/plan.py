"""Contraction plans for the resonant quintic nonlinearity.

The factored plan evaluates

    D_{d,m}  = sum_{p5 - p4 = d, |p5|^2 - |p4|^2 = m} conj(u_p4) u_p5
    T_{q,n}  = sum_{p1 - p2 + p3 = q, |p1|^2 - |p2|^2 + |p3|^2 = n} u_p1 conj(u_p2) u_p3
             = sum_{(d,m), p3 : d + p3 = q, m + |p3|^2 = n} D_{d,m} u_p3
    N_j      = sum_{(q,n)} T_{q,n} D_{j - q, |j|^2 - n}

which touches every resonant quintuple exactly once, grouped.  All index
arrays are sorted, and the kernels accumulate sequentially in that order, so
results are bit-reproducible.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..lattice import ModeSet, TripleTable, enumerate_triples, resonance_table


@njit(cache=True)
def _gather(Ar, Ai, Br, Bi, ia, ib, off, Or, Oi, conj_a):
    """O[k] = sum_{i in segment k} A[ia[i]] * B[ib[i]] on split re/im arrays.

    ``conj_a`` conjugates the A factor.  Segments are accumulated in index
    order, so the result does not depend on threading or memory layout.
    """
    nx = Ar.shape[1]
    sg = -1.0 if conj_a else 1.0
    for k in range(off.shape[0] - 1):
        for x in range(nx):
            Or[k, x] = 0.0
            Oi[k, x] = 0.0
        for i in range(off[k], off[k + 1]):
            a = ia[i]
            b = ib[i]
            for x in range(nx):
                ar = Ar[a, x]
                ai = sg * Ai[a, x]
                br = Br[b, x]
                bi = Bi[b, x]
                Or[k, x] += ar * br - ai * bi
                Oi[k, x] += ar * bi + ai * br


@njit(cache=True)
def _direct(U, rows, out_index, out):
    nx = U.shape[1]
    for r in range(rows.shape[0]):
        j = out_index[r]
        i1 = rows[r, 0]
        i2 = rows[r, 1]
        i3 = rows[r, 2]
        i4 = rows[r, 3]
        i5 = rows[r, 4]
        for x in range(nx):
            out[j, x] += (
                U[i1, x]
                * U[i2, x].conjugate()
                * U[i3, x]
                * U[i4, x].conjugate()
                * U[i5, x]
            )


def _segments(sort_keys: np.ndarray, n_segments: int) -> np.ndarray:
    """Offsets of each segment id (0..n_segments-1) in a sorted key array."""
    return np.searchsorted(sort_keys, np.arange(n_segments + 1)).astype(np.int64)


class FactoredPlan:
    """Precomputed (q, n) factorization of the resonant nonlinearity."""

    def __init__(self, modes: ModeSet, triples: TripleTable | None = None):
        if triples is None:
            triples = enumerate_triples(modes)
        if triples.modes != modes:
            raise ValueError("TripleTable was built over a different ModeSet")
        self.modes = modes
        self.triples = triples
        arr, nsq = modes.array, modes.norm_sq
        nm = len(modes)

        # pair table
        i4, i5 = np.indices((nm, nm)).reshape(2, -1)
        d = arr[i5] - arr[i4]
        m = nsq[i5] - nsq[i4]
        order = np.lexsort((i5, i4, m, d[:, 1], d[:, 0]))
        i4, i5, d, m = i4[order], i5[order], d[order], m[order]
        change = np.ones(len(m), dtype=bool)
        change[1:] = (d[1:] != d[:-1]).any(axis=1) | (m[1:] != m[:-1])
        pair_key = np.cumsum(change) - 1
        self.n_pair_keys = int(pair_key[-1] + 1)
        starts = np.flatnonzero(change)
        pair_keys = {
            (int(d[s, 0]), int(d[s, 1]), int(m[s])): k for k, s in enumerate(starts)
        }
        self.pair_a = i4.astype(np.int64)
        self.pair_b = i5.astype(np.int64)
        self.pair_off = np.append(starts, len(m)).astype(np.int64)

        # triple stage: T_{q,n} = sum D_{d,m} u_p3
        t_keys = {(int(q[0]), int(q[1]), int(n)): i for i, (q, n) in enumerate(zip(triples.key_q, triples.key_n))}
        self.n_t_keys = len(t_keys)
        kd_list, p3_list, kt_list = [], [], []
        for (dx_, dy_, mm), kd in pair_keys.items():
            for i3 in range(nm):
                key = (dx_ + int(arr[i3, 0]), dy_ + int(arr[i3, 1]), mm + int(nsq[i3]))
                kt = t_keys.get(key)
                if kt is not None:
                    kd_list.append(kd)
                    p3_list.append(i3)
                    kt_list.append(kt)
        kd_a, p3_a, kt_a = map(np.array, (kd_list, p3_list, kt_list))
        order = np.lexsort((p3_a, kd_a, kt_a))
        self.t_d = kd_a[order].astype(np.int64)
        self.t_u = p3_a[order].astype(np.int64)
        self.t_off = _segments(kt_a[order], self.n_t_keys)

        # output stage: N_j = sum T_{q,n} D_{j-q, |j|^2-n}
        j_list, ktt, kdd = [], [], []
        for ij in range(nm):
            jx, jy = int(arr[ij, 0]), int(arr[ij, 1])
            for (qx, qy, n), kt in t_keys.items():
                kd = pair_keys.get((jx - qx, jy - qy, int(nsq[ij]) - n))
                if kd is not None:
                    j_list.append(ij)
                    ktt.append(kt)
                    kdd.append(kd)
        j_a, kt_b, kd_b = map(np.array, (j_list, ktt, kdd))
        order = np.lexsort((kd_b, kt_b, j_a))
        self.n_t = kt_b[order].astype(np.int64)
        self.n_d = kd_b[order].astype(np.int64)
        self.n_off = _segments(j_a[order], nm)
        self.evaluations = {"pair": 0, "full": 0}
        self.macs = 0

    @property
    def multiply_count(self) -> int:
        """Complex multiply-accumulates per x-point for one evaluation."""
        return len(self.pair_a) + len(self.t_d) + len(self.n_t)

    def _split(self, U):
        U = np.asarray(U, dtype=np.complex128)
        return np.ascontiguousarray(U.real), np.ascontiguousarray(U.imag)

    def _pair_split(self, Ur, Ui):
        Dr = np.empty((self.n_pair_keys, Ur.shape[1]))
        Di = np.empty_like(Dr)
        _gather(Ur, Ui, Ur, Ui, self.pair_a, self.pair_b, self.pair_off, Dr, Di, True)
        self.evaluations["pair"] += 1
        return Dr, Di

    def _triple_split(self, Ur, Ui, Dr, Di):
        Tr = np.empty((self.n_t_keys, Ur.shape[1]))
        Ti = np.empty_like(Tr)
        _gather(Dr, Di, Ur, Ui, self.t_d, self.t_u, self.t_off, Tr, Ti, False)
        return Tr, Ti

    def pair_table(self, U: np.ndarray) -> np.ndarray:
        Dr, Di = self._pair_split(*self._split(U))
        return Dr + 1j * Di

    def triple_sums(self, U: np.ndarray) -> np.ndarray:
        """T_{q,n}(x) for every key of the TripleTable, in key order."""
        Ur, Ui = self._split(U)
        Tr, Ti = self._triple_split(Ur, Ui, *self._pair_split(Ur, Ui))
        return Tr + 1j * Ti

    def evaluate(self, U: np.ndarray) -> np.ndarray:
        Ur, Ui = self._split(U)
        Dr, Di = self._pair_split(Ur, Ui)
        Tr, Ti = self._triple_split(Ur, Ui, Dr, Di)
        Or = np.empty_like(Ur)
        Oi = np.empty_like(Ui)
        _gather(Tr, Ti, Dr, Di, self.n_t, self.n_d, self.n_off, Or, Oi, False)
        self.evaluations["full"] += 1
        self.macs += self.multiply_count * Ur.shape[1]
        return Or + 1j * Oi


class DirectPlan:
    """Explicit per-j resonance lists; the oracle path for the factored plan."""

    def __init__(self, modes: ModeSet, table: dict | None = None):
        if table is None:
            table = resonance_table(modes)
        if set(table) != set(modes.modes):
            raise ValueError("resonance table does not match the ModeSet")
        self.modes = modes
        rows, idx = [], []
        for j in modes:
            r = table[j]
            rows.append(r)
            idx.append(np.full(len(r), modes.index(j), dtype=np.int64))
        self.rows = np.concatenate(rows).astype(np.int64)
        self.out_index = np.concatenate(idx)
        self.macs = 0

    @property
    def multiply_count(self) -> int:
        return 4 * len(self.rows)

    def evaluate(self, U: np.ndarray) -> np.ndarray:
        U = np.ascontiguousarray(U, dtype=np.complex128)
        out = np.zeros_like(U)
        _direct(U, self.rows, self.out_index, out)
        self.macs += self.multiply_count * U.shape[1]
        return out
