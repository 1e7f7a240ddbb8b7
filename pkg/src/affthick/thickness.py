"""Gap distance, affine thickness and Falconer-Yavicoli thickness.

Everything is computed on inverse quantities (1/S_A, 1/GD_A) because those
are the natural outputs of the per-axis logarithms and make the extended-real
cases explicit: 1/GD_A = inf means the gap touches earlier structure
(GD_A = 0), 1/GD_A = 0 means no translate below the unit box can bridge it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    INF,
    TOL,
    BoxRegion,
    DiagonalContraction,
    GapSystem,
    component_arrays,
    inverse_bridge,
    inverse_size,
    region_complement,
    subtract_region,
    validate_gap_system,
)

FINITE = "finite"
PLUS_INFINITY = "plus_infinity"
MINUS_INFINITY = "minus_infinity"


class InvalidGapSystem(ValueError):
    pass


@dataclass(frozen=True)
class GapRecord:
    index: int  # position in the input gap list
    size: float
    gap_distance: float
    inv_size: float
    inv_gap_distance: float

    @property
    def deficiency(self) -> float:
        """S_A^{-1} - GD_A^{-1} with x - inf = -inf."""
        if self.inv_gap_distance == INF:
            return -INF
        return self.inv_size - self.inv_gap_distance


@dataclass(frozen=True)
class ThicknessReport:
    gap_order: tuple[int, ...]
    per_gap: tuple[GapRecord, ...]
    tau: float
    tag: str
    interior_nonempty: bool = True
    notes: tuple[str, ...] = field(default=())

    @property
    def is_finite(self) -> bool:
        return self.tag == FINITE

    def to_dict(self) -> dict:
        return {
            "tau": _jsonable(self.tau),
            "tag": self.tag,
            "gap_order": list(self.gap_order),
            "per_gap": [
                {
                    "index": g.index,
                    "size": _jsonable(g.size),
                    "gap_distance": _jsonable(g.gap_distance),
                    "deficiency": _jsonable(g.deficiency),
                }
                for g in self.per_gap
            ],
        }


def _jsonable(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _inv_to_value(inv: float) -> float:
    if inv == INF:
        return 0.0
    if inv <= 0.0:
        return INF
    return 1.0 / inv


# ---------------------------------------------------------------------------


def sort_gaps(sys: GapSystem, A: DiagonalContraction) -> tuple[GapSystem, tuple[int, ...], list[float]]:
    """Order gaps by non-increasing S_A, ties by ascending input index."""
    inv = [inverse_size(g, A) for g in sys.gaps]
    order = tuple(sorted(range(len(inv)), key=lambda k: (inv[k], k)))
    return sys.with_gaps(sys.gaps[k] for k in order), order, [inv[k] for k in order]


def _e_pieces(sys: GapSystem) -> BoxRegion:
    return region_complement(sys.hull)


def _inverse_bridge_many(
    u_lo: np.ndarray, u_hi: np.ndarray, t_lo: np.ndarray, t_hi: np.ndarray, log_betas: np.ndarray
) -> np.ndarray:
    """1/threshold between one box and each target box (vectorised inverse_bridge)."""
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.maximum(0.0, np.maximum(u_lo - t_hi, t_lo - u_hi))
        per_axis = np.where(g > TOL, np.log(g / 2.0) / log_betas, INF)
        inv = per_axis.min(axis=1)
        unbridgeable = np.any(g >= 2.0, axis=1)
    return np.where(unbridgeable, 0.0, inv)


def _inverse_distance_sorted(sys: GapSystem, A: DiagonalContraction) -> list[float]:
    """1/GD_A(m) for every rank m of an already-sorted system."""
    lb = np.asarray(A.log_betas)
    e = _e_pieces(sys).boxes
    e_lo = np.array([[float(v) for v in b.lo] for b in e])
    e_hi = np.array([[float(v) for v in b.hi] for b in e])
    lo, hi, owner = component_arrays(sys.gaps)
    out = []
    for m in range(len(sys.gaps)):
        earlier = owner < m
        t_lo = np.concatenate([e_lo, lo[earlier]])
        t_hi = np.concatenate([e_hi, hi[earlier]])
        best = 0.0
        for c in np.nonzero(owner == m)[0]:
            inv = _inverse_bridge_many(lo[c], hi[c], t_lo, t_hi, lb)
            best = max(best, float(inv.max()))
        out.append(best)
    return out


def _check_sorted(sys: GapSystem, A: DiagonalContraction) -> list[float]:
    inv = [inverse_size(g, A) for g in sys.gaps]
    if any(b < a for a, b in zip(inv, inv[1:])):
        raise ValueError("gaps are not sorted by non-increasing size")
    return inv


def gap_distance(m: int, sys: GapSystem, A: DiagonalContraction) -> float:
    """GD_A(m, C) for the m-th gap (1-based) of a size-sorted system."""
    if not 1 <= m <= len(sys.gaps):
        raise IndexError(f"gap rank {m} out of range 1..{len(sys.gaps)}")
    _check_sorted(sys, A)
    truncated = sys.with_gaps(sys.gaps[:m])
    return _inv_to_value(_inverse_distance_sorted(truncated, A)[m - 1])


def has_interior(sys: GapSystem) -> bool:
    hull_vol = float(sys.hull.volume())
    pieces = list(sys.hull.boxes)
    for g in sys.gaps:
        pieces = subtract_region(pieces, g)
    return float(sum(p.volume() for p in pieces)) > 1e-15 * hull_vol


def _require_valid(sys: GapSystem) -> None:
    report = validate_gap_system(sys)
    if not report.ok:
        raise InvalidGapSystem("; ".join(report.issues))


def affine_thickness(sys: GapSystem, A: DiagonalContraction, validate: bool = True) -> ThicknessReport:
    """tau_A(C) = min_k S_A(G_k)^{-1} - GD_A(k, C)^{-1}, with the +-inf cases."""
    if validate:
        _require_valid(sys)
    if sys.n != A.n:
        raise ValueError("dimension mismatch between system and matrix")
    if not sys.gaps:
        interior = has_interior(sys)
        return ThicknessReport((), (), INF if interior else -INF,
                               PLUS_INFINITY if interior else MINUS_INFINITY, interior)
    ordered, order, inv_sizes = sort_gaps(sys, A)
    inv_gd = _inverse_distance_sorted(ordered, A)
    records = tuple(
        GapRecord(k, _inv_to_value(s), _inv_to_value(d), s, d)
        for k, s, d in zip(order, inv_sizes, inv_gd)
    )
    tau = min(r.deficiency for r in records)
    tag = MINUS_INFINITY if tau == -INF else FINITE
    return ThicknessReport(order, records, tau, tag)


# ---------------------------------------------------------------------------
# Falconer-Yavicoli thickness (square metric)


def _diameter(g: BoxRegion) -> float:
    bb = g.bounding_box()
    return max(float(b - a) for a, b in zip(bb.lo, bb.hi))


def fy_thickness(sys: GapSystem, validate: bool = True) -> float:
    """tau(C) = inf_k d(G_k, E u earlier gaps) / diam(G_k), gaps by non-increasing diameter."""
    if validate:
        _require_valid(sys)
    if not sys.gaps:
        return INF if has_interior(sys) else 0.0
    diam = [_diameter(g) for g in sys.gaps]
    order = sorted(range(len(diam)), key=lambda k: (-diam[k], k))
    ordered = [sys.gaps[k] for k in order]
    e = [b for b in _e_pieces(sys).boxes]
    e_lo = np.array([[float(v) for v in b.lo] for b in e])
    e_hi = np.array([[float(v) for v in b.hi] for b in e])
    lo, hi, owner = component_arrays(ordered)
    tau = INF
    for m, k in enumerate(order):
        earlier = owner < m
        t_lo = np.concatenate([e_lo, lo[earlier]])
        t_hi = np.concatenate([e_hi, hi[earlier]])
        d = INF
        for c in np.nonzero(owner == m)[0]:
            g = np.maximum(0.0, np.maximum(lo[c] - t_hi, t_lo - hi[c]))
            d = min(d, float(g.max(axis=1).min()))
        tau = min(tau, d / diam[k])
    return tau


@dataclass(frozen=True)
class RelationCheck:
    beta: float
    fy_tau: float
    affine_tau: float
    log_beta_fy: float
    discrepancy: float


def fy_affine_relation(sys: GapSystem, beta: float) -> RelationCheck:
    """Compare log_beta(tau(C)) with -tau_A(C) for A = beta * I."""
    tau = fy_thickness(sys)
    if not (0.0 < tau < INF):
        raise ValueError(f"relation needs 0 < tau(C) < inf, got {tau}")
    A = DiagonalContraction.homothetic(beta, sys.n)
    tau_a = affine_thickness(sys, A).tau
    lhs = math.log(tau) / math.log(beta)
    return RelationCheck(beta, tau, tau_a, lhs, abs(lhs + tau_a))


def e_only_inverse_distance(gap: BoxRegion, sys: GapSystem, A: DiagonalContraction) -> float:
    """1/threshold between one gap and E alone (used to cross-check rank 1)."""
    best = 0.0
    for piece in _e_pieces(sys).boxes:
        for b in gap.boxes:
            best = max(best, inverse_bridge(b, piece, A))
    return best


__all__ = [
    "FINITE",
    "PLUS_INFINITY",
    "MINUS_INFINITY",
    "InvalidGapSystem",
    "GapRecord",
    "ThicknessReport",
    "RelationCheck",
    "sort_gaps",
    "gap_distance",
    "affine_thickness",
    "fy_thickness",
    "fy_affine_relation",
    "has_interior",
    "e_only_inverse_distance",
]
