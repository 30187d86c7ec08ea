"""Independent oracles for lattice and kernel values; writes tests/golden/oracles.json.

Uses only the standard library and numpy, never resonantlab.  Run once:
    python3 tests/oracles/make_golden.py
"""
from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "golden" / "oracles.json"


def box(P):
    return [(a, b) for a in range(-P, P + 1) for b in range(-P, P + 1)]


def nsq(p):
    return p[0] * p[0] + p[1] * p[1]


def resonance_counts(P):
    """|R(j)| for every j in the box, by a vectorised scan over all 5-tuples."""
    pts = np.array(box(P))
    n = len(pts)
    sq = (pts**2).sum(1)
    counts = {}
    idx = np.arange(n)
    # p1 - p2 + p3 - p4 + p5 and the same alternating sum of |p|^2
    g = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), -1).reshape(-1, 3)
    s3 = pts[g[:, 0]] - pts[g[:, 1]] + pts[g[:, 2]]
    n3 = sq[g[:, 0]] - sq[g[:, 1]] + sq[g[:, 2]]
    for a in range(n):
        for b in range(n):
            sx = s3 - pts[a] + pts[b]
            sn = n3 - sq[a] + sq[b]
            ok = (np.abs(sx).max(1) <= P) & (sn == (sx**2).sum(1))
            for v in map(tuple, sx[ok]):
                counts[v] = counts.get(v, 0) + 1
    return {f"{j[0]},{j[1]}": counts.get(j, 0) for j in box(P)}


def sumlem_max(P):
    pts = box(P)
    w = {p: 1.0 / (1 + nsq(p)) for p in pts}
    best = 0.0
    for j in pts:
        terms = []
        for p1, p2, p3, p4 in itertools.product(pts, repeat=4):
            p5 = (j[0] - p1[0] + p2[0] - p3[0] + p4[0], j[1] - p1[1] + p2[1] - p3[1] + p4[1])
            if max(abs(p5[0]), abs(p5[1])) > P:
                continue
            if nsq(p1) - nsq(p2) + nsq(p3) - nsq(p4) + nsq(p5) != nsq(j):
                continue
            terms.append(w[p1] * w[p2] * w[p3] * w[p4] * w[p5])
        best = max(best, (1 + nsq(j)) * math.fsum(terms))
    return best


def circle_count(cx, cy, r2, span=12):
    """Brute scan of an integer window for |p - c|^2 == r2 (c given as a/den)."""
    n = 0
    for x in range(-span, span + 1):
        for y in range(-span, span + 1):
            if (x - cx) ** 2 + (y - cy) ** 2 == r2:
                n += 1
    return n


def eta(r, N):
    s = abs(r) / N
    if s <= 1:
        return 1.0
    if s >= 2:
        return 0.0
    a = math.exp(-1 / (2 - s))
    b = math.exp(-1 / (s - 1))
    return a / (a + b)


def weyl(N, t, y):
    tot = 0j
    top = int(2 * N) + 1
    for k1 in range(-top, top + 1):
        for k2 in range(-top, top + 1):
            w = (eta(k1, N) * eta(k2, N)) ** 2
            tot += w * complex(math.cos(y[0] * k1 + y[1] * k2 + t * (k1 * k1 + k2 * k2)),
                               math.sin(y[0] * k1 + y[1] * k2 + t * (k1 * k1 + k2 * k2)))
    return tot


def main():
    from fractions import Fraction as F

    circles = [
        {"center": [0, 0], "r2": 25, "count": circle_count(0, 0, 25)},
        {"center": [0, 0], "r2": 1, "count": circle_count(0, 0, 1)},
        {"center": [0, 0], "r2": 3, "count": circle_count(0, 0, 3)},
        {"center": ["1/2", "1/2"], "r2": "1/2", "count": circle_count(F(1, 2), F(1, 2), F(1, 2))},
        {"center": ["1/2", "0"], "r2": "3/4", "count": circle_count(F(1, 2), 0, F(3, 4))},
        {"center": ["1/2", "1/2"], "r2": "25/2", "count": circle_count(F(1, 2), F(1, 2), F(25, 2))},
    ]
    weyl_vals = {}
    for N, t, y in ((4, math.pi, (0.0, 0.0)), (4, math.pi / 2, (0.0, 0.0)), (4, 0.37, (0.3, 1.1))):
        v = weyl(N, t, y)
        weyl_vals[f"{N}|{t!r}|{y[0]!r},{y[1]!r}"] = [v.real, v.imag]
    data = {
        "resonance_counts_r1": resonance_counts(1),
        "resonance_counts_r2": resonance_counts(2),
        "circles": circles,
        "sumlem_max_r1": sumlem_max(1),
        "weyl": weyl_vals,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print(json.dumps({k: v for k, v in data.items() if k != "resonance_counts_r2"}, indent=1))


if __name__ == "__main__":
    main()
