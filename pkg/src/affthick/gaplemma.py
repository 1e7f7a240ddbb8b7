"""Exact topological predicates for pairs of gap systems.

All predicates run on a *strata grid*: the sorted rational coordinates of
every box on axis j split the line into points and open intervals,

    index 0 = (-inf, x_0), 2i+1 = {x_i}, 2i+2 = (x_i, x_{i+1}), 2K = (x_{K-1}, inf),

and every box-union region (open or closed) is an exact union of product
cells.  A region is a boolean mask over those cells; closure is a per-axis
dilation from intervals onto their endpoint cells, so interiors, boundaries
and containments are decided without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import AxisBox, BoxRegion, DiagonalContraction, GapSystem
from .thickness import affine_thickness

CERTIFIED_NONEMPTY = "certified_nonempty"
INCONCLUSIVE = "inconclusive"


def _exact(v) -> Fraction:
    if isinstance(v, float) and not math.isfinite(v):
        raise ValueError("exact predicates need bounded regions")
    return Fraction(v)


def exact_system(sys: GapSystem) -> GapSystem:
    """Copy of ``sys`` with every coordinate converted to Fraction (exactly, floats included)."""

    def box(b: AxisBox) -> AxisBox:
        return AxisBox(tuple(_exact(v) for v in b.lo), tuple(_exact(v) for v in b.hi))

    def region(r: BoxRegion) -> BoxRegion:
        return BoxRegion(tuple(box(b) for b in r.boxes), open=r.open)

    return GapSystem(region(sys.hull), tuple(region(g) for g in sys.gaps), box(sys.ambient))


def float_system(sys: GapSystem) -> GapSystem:
    def box(b: AxisBox) -> AxisBox:
        return AxisBox(tuple(float(v) for v in b.lo), tuple(float(v) for v in b.hi))

    def region(r: BoxRegion) -> BoxRegion:
        return BoxRegion(tuple(box(b) for b in r.boxes), open=r.open)

    return GapSystem(region(sys.hull), tuple(region(g) for g in sys.gaps), box(sys.ambient))


# ---------------------------------------------------------------------------
# strata grid


class StrataGrid:
    def __init__(self, coords: Sequence[Sequence[Fraction]]):
        self.coords = [sorted(set(_exact(v) for v in axis)) for axis in coords]
        self.index = [{v: i for i, v in enumerate(axis)} for axis in self.coords]
        self.shape = tuple(2 * len(axis) + 1 for axis in self.coords)

    @classmethod
    def for_systems(cls, *systems: GapSystem) -> StrataGrid:
        n = systems[0].n
        coords: list[set] = [set() for _ in range(n)]
        for s in systems:
            if s.n != n:
                raise ValueError("dimension mismatch")
            for region in (s.hull, *s.gaps):
                for b in region.boxes:
                    for j in range(n):
                        coords[j].update((_exact(b.lo[j]), _exact(b.hi[j])))
        return cls(coords)

    @property
    def n(self) -> int:
        return len(self.coords)

    def empty(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=bool)

    def box_slices(self, b: AxisBox, closed: bool) -> tuple[slice, ...]:
        out = []
        for j in range(self.n):
            a = 2 * self.index[j][_exact(b.lo[j])] + 1
            z = 2 * self.index[j][_exact(b.hi[j])] + 1
            out.append(slice(a, z + 1) if closed else slice(a + 1, z))
        return tuple(out)

    def closed_union(self, region: BoxRegion) -> np.ndarray:
        m = self.empty()
        for b in region.boxes:
            m[self.box_slices(b, closed=True)] = True
        return m

    def region_mask(self, region: BoxRegion) -> np.ndarray:
        """Mask of the region: closed union, or its interior when ``region.open``."""
        m = self.closed_union(region)
        return interior(m) if region.open else m

    def representative(self, cell: Sequence[int]) -> tuple[Fraction, ...]:
        """A rational point inside the given cell."""
        pt = []
        for j, k in enumerate(cell):
            xs = self.coords[j]
            if k % 2 == 1:
                pt.append(xs[k // 2])
            elif k == 0:
                pt.append(xs[0] - 1)
            elif k == 2 * len(xs):
                pt.append(xs[-1] + 1)
            else:
                pt.append((xs[k // 2 - 1] + xs[k // 2]) / 2)
        return tuple(pt)


def closure(mask: np.ndarray, offset: Sequence[int] | None = None) -> np.ndarray:
    """Topological closure of a cell union.

    ``offset`` gives the global index of ``mask[0, ..., 0]`` when working on
    a cropped window, so that point strata (odd global index) are located.
    """
    out = mask.copy()
    offset = offset or (0,) * mask.ndim
    for axis, off in enumerate(offset):
        size = out.shape[axis]
        if size < 2:
            continue
        start = 1 - off % 2  # first local index of a point stratum
        pts = np.arange(start, size, 2)
        moved = np.moveaxis(out, axis, 0)
        acc = moved[pts].copy()
        left, right = pts - 1, pts + 1
        ok = left >= 0
        acc[ok] |= moved[left[ok]]
        ok = right < size
        acc[ok] |= moved[right[ok]]
        moved[pts] = acc
    return out


def interior(mask: np.ndarray, offset: Sequence[int] | None = None) -> np.ndarray:
    return ~closure(~mask, offset)


def boundary_of_open(mask: np.ndarray, offset=None) -> np.ndarray:
    return closure(mask, offset) & ~mask


# ---------------------------------------------------------------------------
# prepared pair


@dataclass
class _Gap:
    mask: np.ndarray  # open gap
    window: tuple[slice, ...]  # indices covering its closure plus a margin

    def crop(self, window):
        return self.mask[window]


def _window(grid: StrataGrid, region: BoxRegion) -> tuple[slice, ...]:
    bb = region.bounding_box()
    sl = grid.box_slices(bb, closed=True)
    return tuple(slice(max(0, s.start - 1), min(n, s.stop + 1)) for s, n in zip(sl, grid.shape))


def _union_window(a, b):
    return tuple(slice(min(x.start, y.start), max(x.stop, y.stop)) for x, y in zip(a, b))


def _windows_meet(a, b) -> bool:
    return all(x.start < y.stop and y.start < x.stop for x, y in zip(a, b))


class PreparedPair:
    """Masks for two systems on a shared strata grid."""

    def __init__(self, sys1: GapSystem, sys2: GapSystem):
        self.sys = (exact_system(sys1), exact_system(sys2))
        self.grid = StrataGrid.for_systems(*self.sys)
        g = self.grid
        self.hull = tuple(g.region_mask(s.hull) for s in self.sys)
        self.E = tuple(~h for h in self.hull)
        self.gaps = tuple(
            [_Gap(g.region_mask(BoxRegion(r.boxes, open=True)), _window(g, r)) for r in s.gaps] for s in self.sys
        )

    def compact(self, k: int, keep: Sequence[int] | None = None) -> np.ndarray:
        m = self.hull[k].copy()
        gaps = self.gaps[k] if keep is None else [self.gaps[k][i] for i in keep]
        for gap in gaps:
            m &= ~gap.mask
        return m


def _offset(window) -> tuple[int, ...]:
    return tuple(s.start for s in window)


def _linked_masks(u: np.ndarray, v: np.ndarray, off) -> bool:
    if np.array_equal(u, v):
        return False  # identical gaps: treated as neither linked nor disjoint
    if not (u & v).any():
        return False
    return bool((boundary_of_open(u, off) & ~v).any()) and bool((boundary_of_open(v, off) & ~u).any())


def _candidate_pairs(pp: "PreparedPair", idx1=None, idx2=None) -> list[tuple[int, int]]:
    """Gap pairs whose windows meet; all other pairs have disjoint closures."""
    idx1 = np.arange(len(pp.gaps[0])) if idx1 is None else np.asarray(idx1, dtype=int)
    idx2 = np.arange(len(pp.gaps[1])) if idx2 is None else np.asarray(idx2, dtype=int)
    if not len(idx1) or not len(idx2):
        return []

    def bounds(gaps, idx):
        lo = np.array([[s.start for s in gaps[i].window] for i in idx])
        hi = np.array([[s.stop for s in gaps[i].window] for i in idx])
        return lo, hi

    lo1, hi1 = bounds(pp.gaps[0], idx1)
    lo2, hi2 = bounds(pp.gaps[1], idx2)
    meet = np.all((lo1[:, None, :] < hi2[None, :, :]) & (lo2[None, :, :] < hi1[:, None, :]), axis=2)
    return [(int(idx1[a]), int(idx2[b])) for a, b in np.argwhere(meet)]


def _pair_crop(a: _Gap, b: _Gap):
    w = _union_window(a.window, b.window)
    return a.crop(w), b.crop(w), _offset(w)


# ---------------------------------------------------------------------------
# predicates on single regions


def _bounded_open(region: BoxRegion) -> None:
    for b in region.boxes:
        if not all(math.isfinite(float(v)) for v in b.lo + b.hi):
            raise ValueError("linked() needs bounded regions")


def linked(U: BoxRegion, V: BoxRegion) -> bool:
    """U and V overlap while each has boundary points outside the other.

    Both arguments are read as open regions (interior of the union of their
    closed boxes).  Identical regions are reported as not linked.
    """
    _bounded_open(U)
    _bounded_open(V)
    U = BoxRegion(tuple(U.boxes), open=True)
    V = BoxRegion(tuple(V.boxes), open=True)
    hull = BoxRegion.of(U.bounding_box())
    grid = StrataGrid.for_systems(GapSystem(hull, (U, V)))
    return _linked_masks(grid.region_mask(U), grid.region_mask(V), None)


# ---------------------------------------------------------------------------
# pair predicates


@dataclass(frozen=True)
class BGLinkedResult:
    ok: bool
    witness: tuple[int, int] | None = None  # (gap of sys1, gap of sys2)

    def __bool__(self) -> bool:
        return self.ok


def _bg_linked(pp: PreparedPair, keep1=None, keep2=None) -> BGLinkedResult:
    for i, j in _candidate_pairs(pp, keep1, keep2):
        u, v, off = _pair_crop(pp.gaps[0][i], pp.gaps[1][j])
        if (u & v).any() and not _linked_masks(u, v, off):
            return BGLinkedResult(False, (i, j))
    return BGLinkedResult(True)


def bg_linked(sys1: GapSystem, sys2: GapSystem) -> BGLinkedResult:
    """Every pair of bounded gaps (one from each system) is linked or disjoint."""
    return _bg_linked(PreparedPair(sys1, sys2))


def _closure_inside(inner: _Gap, outer_mask: np.ndarray) -> bool:
    """cl(inner) is contained in ``outer_mask`` (a full-grid mask)."""
    w = inner.window
    return not (closure(inner.crop(w), _offset(w)) & ~outer_mask[w]).any()


def _closure_inside_some(gap: _Gap, others: Sequence[_Gap]) -> int | None:
    for k, other in enumerate(others):
        if _windows_meet(gap.window, other.window) and _closure_inside(gap, other.mask):
            return k
    return None


@dataclass(frozen=True)
class Refinement:
    sys1: GapSystem
    sys2: GapSystem
    removed1: tuple[int, ...]
    removed2: tuple[int, ...]
    kept1: tuple[int, ...]
    kept2: tuple[int, ...]


def _remove_contained(pp: PreparedPair) -> tuple[list[int], list[int]]:
    g1, g2 = pp.gaps
    kept1 = [i for i, gap in enumerate(g1) if _closure_inside_some(gap, g2) is None]
    refined1 = [g1[i] for i in kept1]
    kept2 = [j for j, gap in enumerate(g2) if _closure_inside_some(gap, refined1) is None]
    return kept1, kept2


def remove_contained_gaps(sys1: GapSystem, sys2: GapSystem) -> Refinement:
    """Fill gaps whose closure lies in a bounded gap of the other system.

    sys1 is pruned against sys2 first; sys2 is then pruned against the
    already-pruned sys1, so a sys2 gap whose container was just filled stays.
    """
    pp = PreparedPair(sys1, sys2)
    kept1, kept2 = _remove_contained(pp)
    return _refinement(sys1, sys2, kept1, kept2)


def _refinement(sys1, sys2, kept1, kept2) -> Refinement:
    return Refinement(
        sys1.with_gaps(sys1.gaps[i] for i in kept1),
        sys2.with_gaps(sys2.gaps[j] for j in kept2),
        tuple(i for i in range(len(sys1.gaps)) if i not in set(kept1)),
        tuple(j for j in range(len(sys2.gaps)) if j not in set(kept2)),
        tuple(kept1),
        tuple(kept2),
    )


@dataclass(frozen=True)
class SufficientCondition:
    bullet1: bool
    bullet1_witness: tuple[int, int] | None  # (gap of sys1, gap of sys2) meeting bullet 1
    bullet2: bool
    bullet2_witness: tuple[int, int, str] | None  # failing pair and direction

    @property
    def holds(self) -> bool:
        return self.bullet1 and self.bullet2

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "bullet1": self.bullet1,
            "bullet1_witness": list(self.bullet1_witness) if self.bullet1_witness else None,
            "bullet2": self.bullet2,
            "bullet2_witness": list(self.bullet2_witness) if self.bullet2_witness else None,
        }


def _anchor_candidates(pp: PreparedPair, k: int) -> list[int]:
    """Gaps of system k whose closure is in no gap of the other system (E included)
    and whose boundary is not inside the other system's E."""
    other = 1 - k
    out = []
    for i, gap in enumerate(pp.gaps[k]):
        w = gap.window
        off = _offset(w)
        cl = closure(gap.crop(w), off)
        if not (cl & ~pp.E[other][w]).any():
            continue  # closure inside E of the other system
        if _closure_inside_some(gap, pp.gaps[other]) is not None:
            continue
        bd = cl & ~gap.crop(w)
        if not (bd & ~pp.E[other][w]).any():
            continue
        out.append(i)
    return out


def _boundary_implies_containment(pp: PreparedPair) -> tuple[int, int, str] | None:
    for i, j in _candidate_pairs(pp):
        u, v, off = _pair_crop(pp.gaps[0][i], pp.gaps[1][j])
        if not (boundary_of_open(u, off) & ~v).any() and (u & ~v).any():
            return (i, j, "boundary of sys1 gap inside sys2 gap")
        if not (boundary_of_open(v, off) & ~u).any() and (v & ~u).any():
            return (i, j, "boundary of sys2 gap inside sys1 gap")
    return None


def _sufficient(pp: PreparedPair) -> SufficientCondition:
    c1 = _anchor_candidates(pp, 0)
    c2 = _anchor_candidates(pp, 1)
    w1 = (c1[0], c2[0]) if c1 and c2 else None
    bad = _boundary_implies_containment(pp)
    return SufficientCondition(w1 is not None, w1, bad is None, bad)


def strongly_refinable_sufficient(sys1: GapSystem, sys2: GapSystem) -> SufficientCondition:
    """Checkable sufficient condition for the pair to be strongly refinable."""
    return _sufficient(PreparedPair(sys1, sys2))


# ---------------------------------------------------------------------------
# exact intersection and verdict


@dataclass(frozen=True)
class ExactIntersection:
    nonempty: bool
    witness: tuple[Fraction, ...] | None
    cells: int


def _intersection(pp: PreparedPair, keep1=None, keep2=None) -> ExactIntersection:
    m = pp.compact(0, keep1) & pp.compact(1, keep2)
    cells = np.argwhere(m)
    if not len(cells):
        return ExactIntersection(False, None, 0)
    return ExactIntersection(True, pp.grid.representative(tuple(int(v) for v in cells[0])), int(len(cells)))


def exact_intersection(sys1: GapSystem, sys2: GapSystem) -> ExactIntersection:
    """(hull1 minus gaps1) intersected with (hull2 minus gaps2), decided exactly."""
    return _intersection(PreparedPair(sys1, sys2))


def same_intersection(before: tuple[GapSystem, GapSystem], after: tuple[GapSystem, GapSystem]) -> bool:
    """Exact set equality of C1 n C2 for two pairs of systems."""
    grid = StrataGrid.for_systems(*before, *after)

    def compact(s: GapSystem) -> np.ndarray:
        m = grid.region_mask(exact_system(s).hull)
        for g in exact_system(s).gaps:
            m &= ~grid.region_mask(BoxRegion(g.boxes, open=True))
        return m

    a = compact(before[0]) & compact(before[1])
    b = compact(after[0]) & compact(after[1])
    return bool(np.array_equal(a, b))


@dataclass(frozen=True)
class GapLemmaVerdict:
    bg_linked: bool
    bg_witness: tuple[int, int] | None
    refinement_removed: tuple[tuple[int, ...], tuple[int, ...]]
    refined_bg_linked: bool
    sufficient: SufficientCondition
    tau1: float
    tau2: float
    thickness_sum: float
    verdict: str
    notes: tuple[str, ...] = field(default=())

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED_NONEMPTY

    def to_dict(self) -> dict:
        def ext(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "verdict": self.verdict,
            "bg_linked": self.bg_linked,
            "bg_witness": list(self.bg_witness) if self.bg_witness else None,
            "refinement_removed": {"sys1": list(self.refinement_removed[0]), "sys2": list(self.refinement_removed[1])},
            "refined_bg_linked": self.refined_bg_linked,
            "sufficient_condition": self.sufficient.to_dict(),
            "tau1": ext(self.tau1),
            "tau2": ext(self.tau2),
            "thickness_sum": ext(self.thickness_sum),
            "notes": list(self.notes),
        }


def _within_unit_ball(sys: GapSystem) -> bool:
    return all(-1 <= _exact(v) <= 1 for b in sys.hull.boxes for v in b.lo + b.hi)


def gap_lemma_verdict(sys1: GapSystem, sys2: GapSystem, A: DiagonalContraction) -> GapLemmaVerdict:
    """One-sided verdict: certified_nonempty or inconclusive, never 'empty'."""
    pp = PreparedPair(sys1, sys2)
    bg = _bg_linked(pp)
    kept1, kept2 = _remove_contained(pp)
    refined_bg = _bg_linked(pp, kept1, kept2)
    suff = _sufficient(pp)
    # thickness uses the floating pipeline on the (exactly converted) coordinates
    tau1 = affine_thickness(float_system(pp.sys[0]), A).tau
    tau2 = affine_thickness(float_system(pp.sys[1]), A).tau
    total = tau1 + tau2 if not (math.isinf(tau1) and math.isinf(tau2) and tau1 != tau2) else -math.inf
    notes = []
    ok = suff.holds and total > 0
    if not all(_within_unit_ball(s) for s in pp.sys):
        notes.append("a hull leaves [-1, 1]^n; no certificate issued")
        ok = False
    for k in (0, 1):
        if not pp.compact(k).any():
            notes.append(f"set {k + 1} is empty; no certificate issued")
            ok = False
    removed = (
        tuple(i for i in range(len(sys1.gaps)) if i not in set(kept1)),
        tuple(j for j in range(len(sys2.gaps)) if j not in set(kept2)),
    )
    return GapLemmaVerdict(
        bg.ok, bg.witness, removed, refined_bg.ok, suff, tau1, tau2, total,
        CERTIFIED_NONEMPTY if ok else INCONCLUSIVE, tuple(notes),
    )


__all__ = [
    "CERTIFIED_NONEMPTY",
    "INCONCLUSIVE",
    "StrataGrid",
    "closure",
    "interior",
    "boundary_of_open",
    "linked",
    "bg_linked",
    "BGLinkedResult",
    "remove_contained_gaps",
    "Refinement",
    "strongly_refinable_sufficient",
    "SufficientCondition",
    "exact_intersection",
    "ExactIntersection",
    "same_intersection",
    "gap_lemma_verdict",
    "GapLemmaVerdict",
    "exact_system",
    "float_system",
]
