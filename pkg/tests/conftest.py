"""Shared random-instance generators (seeded, deterministic)."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from affthick.geometry import AxisBox, BoxRegion, GapSystem

DEN = 64  # rational grid for exact instances


def random_box_system(rng: np.random.Generator, n: int, max_gaps: int = 4) -> GapSystem:
    """Hull [-1, 1]^n with up to ``max_gaps`` pairwise separated float box gaps."""
    gaps: list[AxisBox] = []
    target = int(rng.integers(1, max_gaps + 1))
    for _ in range(200):
        if len(gaps) == target:
            break
        half = rng.uniform(0.02, 0.3, size=n)
        centre = rng.uniform(-0.95 + half, 0.95 - half)
        box = AxisBox(tuple(centre - half), tuple(centre + half))
        if all(not box.meets(g) for g in gaps):
            gaps.append(box)
    hull = BoxRegion.of(AxisBox((-1.0,) * n, (1.0,) * n))
    return GapSystem(hull, tuple(BoxRegion.of(g, open=True) for g in gaps))


def grid_box(rng, lo, hi, wmin, wmax) -> AxisBox:
    """Box with corners on the 1/DEN grid inside [lo, hi] (grid units)."""
    a, b = [], []
    for l, h in zip(lo, hi):
        w = int(rng.integers(wmin, min(wmax, h - l) + 1))
        s = int(rng.integers(l, h - w + 1))
        a.append(Fraction(s, DEN))
        b.append(Fraction(s + w, DEN))
    return AxisBox(tuple(a), tuple(b))


def _grid_units(box: AxisBox):
    return [int(v * DEN) for v in box.lo], [int(v * DEN) for v in box.hi]


def linked_pair(rng: np.random.Generator, n: int = 2) -> tuple[GapSystem, GapSystem]:
    """Two exact systems built so that their gap pairs are linked or disjoint.

    Hulls are random sub-boxes of [-1, 1]^n.  Each sys1 gap is small and kept
    away from its hull's boundary; with probability 1/2 it gets a partner gap
    in sys2 shifted by less than its width along one axis (a linked pair).
    Remaining sys2 gaps are placed at random.  Callers still filter with
    bg_linked, since random placements may nest.
    """
    h1 = grid_box(rng, [-DEN] * n, [DEN] * n, int(1.25 * DEN), 2 * DEN)
    h2 = grid_box(rng, [-DEN] * n, [DEN] * n, int(1.25 * DEN), 2 * DEN)

    def place(hull, existing, k):
        lo, hi = _grid_units(hull)
        out = []
        for _ in range(k):
            for _ in range(30):
                b = grid_box(rng, [x + 10 for x in lo], [x - 10 for x in hi], 2, 6)
                if all(not b.meets(o) for o in existing + out):
                    out.append(b)
                    break
        return out

    g1 = place(h1, [], int(rng.integers(1, 4)))
    g2: list[AxisBox] = []
    lo2, hi2 = _grid_units(h2)
    for b in g1:
        if rng.random() < 0.5:
            j = int(rng.integers(n))
            lo, hi = _grid_units(b)
            w = hi[j] - lo[j]
            shift = int(rng.integers(1, w)) * (1 if rng.random() < 0.5 else -1)
            lo[j] += shift
            hi[j] += shift
            if all(lo2[k] + 10 <= lo[k] and hi[k] <= hi2[k] - 10 for k in range(n)):
                cand = AxisBox(tuple(Fraction(v, DEN) for v in lo), tuple(Fraction(v, DEN) for v in hi))
                if all(not cand.meets(o) for o in g2):
                    g2.append(cand)
    g2 += place(h2, g2, int(rng.integers(0, 3)))
    if not g2:
        g2 = place(h2, [], 1)

    def system(hull, gaps):
        return GapSystem(BoxRegion.of(hull), tuple(BoxRegion.of(g, open=True) for g in gaps))

    return system(h1, g1), system(h2, g2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
