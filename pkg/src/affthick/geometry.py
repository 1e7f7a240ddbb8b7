"""Square-metric geometry over axis-aligned boxes.

Boxes are the balls of the d_inf metric, so sizes with respect to a diagonal
contraction reduce to per-axis logarithms of half-widths, and the question
"does some translate of A^{1/t}(B[0,1]) meet both U and W" reduces to
per-axis gap comparisons.

Coordinates may be floats or :class:`fractions.Fraction`; all predicates here
only compare and subtract, so they are exact for rationals.  Quantities that
need logarithms (sizes, bridging thresholds) are returned as floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

INF = math.inf

#: absolute tolerance used when comparing thresholds and per-axis gaps
TOL = 1e-12


@dataclass(frozen=True)
class DiagonalContraction:
    """The diagonal matrix A = diag(beta_11, ..., beta_nn)."""

    betas: tuple[float, ...]

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        object.__setattr__(self, "betas", betas)
        if not betas:
            raise ValueError("need at least one axis")
        for b in betas:
            if not (0.0 < b < 1.0):
                raise ValueError(f"contraction ratio {b!r} not in (0, 1)")

    @classmethod
    def homothetic(cls, beta: float, n: int) -> DiagonalContraction:
        return cls((beta,) * n)

    @property
    def n(self) -> int:
        return len(self.betas)

    @property
    def beta_max(self) -> float:
        return max(self.betas)

    @property
    def beta_min(self) -> float:
        return min(self.betas)

    @property
    def log_betas(self) -> tuple[float, ...]:
        return tuple(math.log(b) for b in self.betas)

    @property
    def log_det(self) -> float:
        return sum(self.log_betas)

    def power(self, q: float) -> tuple[float, ...]:
        """Diagonal of A^q for real q."""
        return tuple(b**q for b in self.betas)


@dataclass(frozen=True)
class AxisBox:
    """Closed (or, in context, open) box prod_j [lo_j, hi_j].

    Infinite coordinates are allowed so that half-space slabs can stand in
    for the exterior of a frame.
    """

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = tuple(self.lo), tuple(self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be non-empty and of equal length")
        for a, b in zip(lo, hi):
            if not a < b:
                raise ValueError(f"degenerate box side [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def centered(cls, center: Sequence, half_widths: Sequence) -> AxisBox:
        return cls(
            tuple(c - h for c, h in zip(center, half_widths)),
            tuple(c + h for c, h in zip(center, half_widths)),
        )

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def half_widths(self) -> tuple:
        return tuple((b - a) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def center(self) -> tuple:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def is_bounded(self) -> bool:
        return all(math.isfinite(v) for v in self.lo + self.hi)

    def volume(self):
        v = 1
        for a, b in zip(self.lo, self.hi):
            v *= b - a
        return v

    def translate(self, z: Sequence) -> AxisBox:
        return AxisBox(
            tuple(a + s for a, s in zip(self.lo, z)),
            tuple(b + s for b, s in zip(self.hi, z)),
        )

    def contains_box(self, other: AxisBox) -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains_point(self, x: Sequence) -> bool:
        """Closed-box membership."""
        return all(a <= v <= b for a, b, v in zip(self.lo, self.hi, x))

    def meets(self, other: AxisBox) -> bool:
        """Closed boxes intersect (touching counts)."""
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def overlaps(self, other: AxisBox) -> bool:
        """Interiors intersect."""
        return all(a < d and c < b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersection(self, other: AxisBox) -> AxisBox | None:
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, d) for b, d in zip(self.hi, other.hi))
        if all(a < b for a, b in zip(lo, hi)):
            return AxisBox(lo, hi)
        return None


@dataclass(frozen=True)
class BoxRegion:
    """Finite union of boxes with pairwise disjoint interiors.

    ``open=True`` means the region is the interior of the union of the closed
    boxes (the convention used for gaps).
    """

    boxes: tuple[AxisBox, ...]
    open: bool = False

    def __post_init__(self):
        boxes = tuple(self.boxes)
        if not boxes:
            raise ValueError("empty region")
        n = boxes[0].n
        if any(b.n != n for b in boxes):
            raise ValueError("mixed dimensions in region")
        object.__setattr__(self, "boxes", boxes)

    @classmethod
    def of(cls, *boxes: AxisBox, open: bool = False) -> BoxRegion:
        return cls(tuple(boxes), open=open)

    @property
    def n(self) -> int:
        return self.boxes[0].n

    def bounding_box(self) -> AxisBox:
        lo = tuple(min(b.lo[j] for b in self.boxes) for j in range(self.n))
        hi = tuple(max(b.hi[j] for b in self.boxes) for j in range(self.n))
        return AxisBox(lo, hi)

    def volume(self):
        return sum(b.volume() for b in self.boxes)

    def translate(self, z: Sequence) -> BoxRegion:
        return BoxRegion(tuple(b.translate(z) for b in self.boxes), open=self.open)

    def is_connected(self) -> bool:
        return _connected(self.boxes, face_contact=True)


@dataclass(frozen=True)
class GapSystem:
    """Compact set C = hull minus the union of the (open) gaps."""

    hull: BoxRegion
    gaps: tuple[BoxRegion, ...] = ()
    ambient: AxisBox | None = None

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(self.gaps))
        if self.ambient is None:
            n = self.hull.n
            object.__setattr__(self, "ambient", AxisBox((-1.0,) * n, (1.0,) * n))

    @property
    def n(self) -> int:
        return self.hull.n

    def translate(self, z: Sequence) -> GapSystem:
        return GapSystem(
            self.hull.translate(z),
            tuple(g.translate(z) for g in self.gaps),
            self.ambient.translate(z),
        )

    def with_gaps(self, gaps: Iterable[BoxRegion]) -> GapSystem:
        return GapSystem(self.hull, tuple(gaps), self.ambient)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    issues: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self) -> bool:
        return self.ok


def _face_contact(a: AxisBox, b: AxisBox) -> bool:
    """Closed boxes share an (n-1)-dimensional patch or overlap."""
    touching = 0
    for lo1, hi1, lo2, hi2 in zip(a.lo, a.hi, b.lo, b.hi):
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if lo > hi:
            return False
        if lo == hi:
            touching += 1
    return touching <= 1


def _connected(boxes: Sequence[AxisBox], face_contact: bool) -> bool:
    boxes = list(boxes)
    if len(boxes) <= 1:
        return True
    adjacent = _face_contact if face_contact else AxisBox.meets
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(len(boxes)):
            if j not in seen and adjacent(boxes[i], boxes[j]):
                seen.add(j)
                stack.append(j)
    return len(seen) == len(boxes)


def _region_within(inner: BoxRegion, outer: BoxRegion) -> bool:
    pieces = list(inner.boxes)
    for b in outer.boxes:
        pieces = [p for q in pieces for p in subtract_box(q, b)]
        if not pieces:
            return True
    return not pieces


def _overlapping_gap_pairs(gaps: Sequence[BoxRegion], limit: int = 20) -> list[tuple[int, int]]:
    lo, hi, owner = component_arrays(gaps)
    found: set[tuple[int, int]] = set()
    chunk = max(1, 2_000_000 // max(1, len(owner)))
    for s in range(0, len(owner), chunk):
        a_lo, a_hi = lo[s:s + chunk, None, :], hi[s:s + chunk, None, :]
        hit = np.all((a_lo < hi[None]) & (lo[None] < a_hi), axis=2)
        hit &= owner[s:s + chunk, None] < owner[None, :]
        for i, j in zip(*np.nonzero(hit)):
            found.add((int(owner[s + i]), int(owner[j])))
            if len(found) >= limit:
                return sorted(found)
    return sorted(found)


def component_arrays(regions: Sequence[BoxRegion]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten regions into (lo, hi, owner) float arrays, one row per box."""
    lo, hi, owner = [], [], []
    for k, g in enumerate(regions):
        for b in g.boxes:
            lo.append([float(v) for v in b.lo])
            hi.append([float(v) for v in b.hi])
            owner.append(k)
    n = regions[0].n if regions else 1
    return (
        np.asarray(lo, dtype=float).reshape(-1, n),
        np.asarray(hi, dtype=float).reshape(-1, n),
        np.asarray(owner, dtype=int),
    )


def validate_gap_system(sys: GapSystem) -> ValidationReport:
    """Check the gap-structure assumptions on a box-union system."""
    report = ValidationReport()
    n = sys.n
    for g in sys.gaps:
        if g.n != n:
            report.issues.append("dimension mismatch between hull and gap")
            return report
    for i, a in enumerate(sys.hull.boxes):
        for b in sys.hull.boxes[i + 1:]:
            if a.overlaps(b):
                report.issues.append("hull boxes overlap")
    for k, g in enumerate(sys.gaps):
        for i, a in enumerate(g.boxes):
            for b in g.boxes[i + 1:]:
                if a.overlaps(b):
                    report.issues.append(f"gap {k}: boxes overlap")
        if not g.is_connected():
            report.issues.append(f"gap {k} is disconnected")
        if not _region_within(g, sys.hull):
            report.issues.append(f"gap {k} not contained in hull")
    for k, l in _overlapping_gap_pairs(sys.gaps):
        report.issues.append(f"gaps {k} and {l} intersect")
    # gaps are open and inside the hull, so the hull's boundary always
    # survives in C: C is never empty for a structurally valid system.
    if n == 1:
        report.flags.append("n = 1: E is the union of two unbounded components")
    else:
        frame = _frame_for(sys.hull)
        pieces = _finite_complement(sys.hull, frame)
        if not _connected(pieces, face_contact=True):
            report.issues.append("complement of hull is not connected")
    return report


# ---------------------------------------------------------------------------
# sizes and bridging


def _log_ratio(x: float, base_log: float) -> float:
    return math.log(x) / base_log


def inverse_size(F: BoxRegion | AxisBox, A: DiagonalContraction) -> float:
    """1/S_A(F) = min_j log_{beta_jj}(h_j); 0 when S_A is infinite."""
    box = F.bounding_box() if isinstance(F, BoxRegion) else F
    if box.n != A.n:
        raise ValueError("dimension mismatch")
    h = [float(v) for v in box.half_widths]
    if any(v >= 1.0 for v in h):
        return 0.0
    return min(_log_ratio(v, lb) for v, lb in zip(h, A.log_betas))


def size_wrt(F: BoxRegion | AxisBox, A: DiagonalContraction) -> float:
    """Size S_A(F): smallest t with F inside a translate of A^{1/t}(B[0,1]).

    Returns ``inf`` when some half-width is at least 1.
    """
    inv = inverse_size(F, A)
    return INF if inv <= 0.0 else 1.0 / inv


def axis_gaps(U: AxisBox, W: AxisBox) -> tuple:
    return tuple(
        max(0, a - d, c - b) for a, b, c, d in zip(U.lo, U.hi, W.lo, W.hi)
    )


def inverse_bridge(U: AxisBox, W: AxisBox, A: DiagonalContraction) -> float:
    """1/t* for :func:`bridge_threshold`; ``inf`` for touching boxes, 0 for unbridgeable."""
    inv = INF
    for g, lb in zip(axis_gaps(U, W), A.log_betas):
        g = float(g)
        if g <= TOL:
            continue
        if g >= 2.0:
            return 0.0
        inv = min(inv, _log_ratio(g / 2.0, lb))
    return inv


def bridge_threshold(U: AxisBox, W: AxisBox, A: DiagonalContraction) -> float:
    """Smallest t such that a translate of A^{1/t}(B[0,1]) meets both boxes."""
    inv = inverse_bridge(U, W, A)
    if inv == INF:
        return 0.0
    if inv <= 0.0:
        return INF
    return 1.0 / inv


# ---------------------------------------------------------------------------
# complement


def subtract_box(a: AxisBox, b: AxisBox) -> list[AxisBox]:
    """Closure of a minus b as boxes with disjoint interiors."""
    if not a.overlaps(b):
        return [a]
    out = []
    lo, hi = list(a.lo), list(a.hi)
    for j in range(a.n):
        if lo[j] < b.lo[j]:
            piece_hi = list(hi)
            piece_hi[j] = b.lo[j]
            out.append(AxisBox(tuple(lo), tuple(piece_hi)))
            lo[j] = b.lo[j]
        if b.hi[j] < hi[j]:
            piece_lo = list(lo)
            piece_lo[j] = b.hi[j]
            out.append(AxisBox(tuple(piece_lo), tuple(hi)))
            hi[j] = b.hi[j]
    return out


def subtract_region(pieces: Iterable[AxisBox], region: BoxRegion | Iterable[AxisBox]) -> list[AxisBox]:
    boxes = region.boxes if isinstance(region, BoxRegion) else tuple(region)
    pieces = list(pieces)
    for b in boxes:
        pieces = [p for q in pieces for p in subtract_box(q, b)]
    return pieces


def _frame_for(hull: BoxRegion) -> AxisBox:
    bb = hull.bounding_box()
    c, h = bb.center, bb.half_widths
    return AxisBox.centered(c, tuple(2 * v for v in h))


def _finite_complement(hull: BoxRegion, frame: AxisBox) -> list[AxisBox]:
    return subtract_region([frame], hull)


def exterior_slabs(frame: AxisBox) -> list[AxisBox]:
    """The 2n closed half-spaces covering the outside of ``frame``."""
    n = frame.n
    slabs = []
    for j in range(n):
        lo = [-INF] * n
        hi = [INF] * n
        hi[j] = frame.lo[j]
        slabs.append(AxisBox(tuple(lo), tuple(hi)))
        lo = [-INF] * n
        hi = [INF] * n
        lo[j] = frame.hi[j]
        slabs.append(AxisBox(tuple(lo), tuple(hi)))
    return slabs


def region_complement(hull: BoxRegion, frame: AxisBox | None = None) -> BoxRegion:
    """Closure of R^n minus ``hull``: finite pieces inside ``frame`` then 2n slabs.

    The default frame is the hull's bounding box inflated by a factor 2.
    """
    if frame is None:
        frame = _frame_for(hull)
    if not all(frame.contains_box(b) for b in hull.boxes):
        raise ValueError("hull escapes frame")
    pieces = _finite_complement(hull, frame)
    return BoxRegion(tuple(pieces) + tuple(exterior_slabs(frame)), open=False)


def finite_part(region: BoxRegion) -> list[AxisBox]:
    return [b for b in region.boxes if b.is_bounded]


# ---------------------------------------------------------------------------
# brute-force oracles


def _bisect_threshold(feasible, tol: float, t_cap: float = 2.0**40) -> float:
    """Infimum of t > 0 with feasible(t), for feasibility monotone increasing in t.

    Past ``t_cap`` the ratio beta^{1/t} differs from 1 by about
    |ln beta| * 1e-12, so the search reports ``inf`` rather than chase a
    rounding artefact.
    """
    hi = 1.0
    while not feasible(hi):
        hi *= 2.0
        if hi > t_cap:
            return INF
    lo = 0.0
    for _ in range(400):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def brute_force_size(F: BoxRegion | AxisBox, A: DiagonalContraction, t_tolerance: float = 1e-9) -> float:
    """Size by bisection on t with an exact per-axis containment test."""
    if t_tolerance <= 0:
        raise ValueError("tolerance must be positive")
    boxes = F.boxes if isinstance(F, BoxRegion) else (F,)

    def feasible(t: float) -> bool:
        for j, beta in enumerate(A.betas):
            w = beta ** (1.0 / t)
            # admissible centres z_j for each box, intersected
            z_lo = max(float(b.hi[j]) - w for b in boxes)
            z_hi = min(float(b.lo[j]) + w for b in boxes)
            if z_lo > z_hi:
                return False
        return True

    return _bisect_threshold(feasible, t_tolerance)


def brute_force_bridge(
    pairs: Iterable[tuple[AxisBox, AxisBox]], A: DiagonalContraction, t_tolerance: float = 1e-9
) -> float:
    """Smallest t such that one translate of A^{1/t}(B[0,1]) meets both boxes of some pair.

    Bisection on t; at each t the admissible centres meeting a box form an
    interval per axis, and the pair is bridged iff those intervals intersect
    on every axis.
    """
    pairs = list(pairs)
    if not pairs:
        return INF

    def feasible(t: float) -> bool:
        w = [b ** (1.0 / t) for b in A.betas]
        for U, W in pairs:
            ok = True
            for j in range(A.n):
                lo = max(float(U.lo[j]), float(W.lo[j])) - w[j]
                hi = min(float(U.hi[j]), float(W.hi[j])) + w[j]
                if lo > hi + TOL:
                    ok = False
                    break
            if ok:
                return True
        return False

    if feasible(1e-300):
        return 0.0
    return _bisect_threshold(feasible, t_tolerance)
