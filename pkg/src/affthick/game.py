"""The (alpha, A, c, rho2, rho1) matrix potential game.

Player I nests boxes U_m = A^m(B[0, r]) + b_m; Player II answers each turn
with budget-limited deletions (q, y), each deleting the closed box
A^q(B[0, r]) + y.  The thick-set strategy deletes the unique gap that U_m
meets once m exceeds that gap's inverse gap distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .geometry import TOL, AxisBox, DiagonalContraction, GapSystem, component_arrays, subtract_region
from .thickness import ThicknessReport


class IllegalMove(ValueError):
    pass


@dataclass(frozen=True)
class GameParams:
    A: DiagonalContraction
    alpha: float
    c: float = 0.0
    rho2: float = 1.0
    rho1: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive and finite")
        if not 0.0 <= self.c < 1.0:
            raise ValueError("c must lie in [0, 1)")
        if not self.rho1 >= self.rho2 > 0:
            raise ValueError("need rho1 >= rho2 > 0")


@dataclass(frozen=True)
class Deletion:
    q: float
    y: tuple[float, ...]
    turn: int


@dataclass(frozen=True)
class GameState:
    params: GameParams
    turn: int = 0
    r: float | None = None
    centers: tuple[tuple[float, ...], ...] = ()
    ledger: tuple[Deletion, ...] = ()
    budget_used: tuple[float, ...] = ()  # per answered turn: sum prod beta^{qc}, or prod beta^q if c = 0
    answered: int = 0  # turns Player II has responded to

    @property
    def A(self) -> DiagonalContraction:
        return self.params.A

    def current_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.turn == 0:
            raise IllegalMove("game not started")
        return player_box(self.A, self.r, self.turn, self.centers[-1])


# Boxes are kept as (lo, hi) float arrays: late-turn boxes are far narrower
# than the float spacing at their centre and may collapse to a point.


def _centered(center, half) -> tuple[np.ndarray, np.ndarray]:
    c, h = np.asarray(center, dtype=float), np.asarray(half, dtype=float)
    return c - h, c + h


def player_box(A: DiagonalContraction, r: float, m: int, b: Sequence[float]):
    return _centered(b, [r * w for w in A.power(m)])


def deletion_box(A: DiagonalContraction, r: float, d: Deletion):
    return _centered(d.y, [r * w for w in A.power(d.q)])


# ---------------------------------------------------------------------------
# moves


def nesting_bounds(A: DiagonalContraction, r: float, m: int) -> tuple[float, ...]:
    """Largest per-axis centre shift keeping U_m inside U_{m-1}."""
    return tuple(r * (b ** (m - 1) - b**m) for b in A.betas)


def player1_move(state: GameState, b: Sequence[float], r: float | None = None) -> GameState:
    p = state.params
    b = tuple(float(v) for v in b)
    if len(b) != p.A.n:
        raise IllegalMove("centre has wrong dimension")
    if state.turn > state.answered:
        raise IllegalMove("Player II has not answered the previous turn")
    if state.turn == 0:
        if r is None:
            raise IllegalMove("first move must choose a radius")
        if not p.rho2 <= r <= p.rho1:
            raise IllegalMove(f"radius {r} outside [{p.rho2}, {p.rho1}]")
        return replace(state, turn=1, r=float(r), centers=(b,))
    if r is not None and r != state.r:
        raise IllegalMove("radius is fixed after the first turn")
    m = state.turn + 1
    prev = state.centers[-1]
    for shift, bound in zip((abs(x - y) for x, y in zip(b, prev)), nesting_bounds(p.A, state.r, m)):
        if shift > bound + TOL:
            raise IllegalMove(f"U_{m} not nested in U_{m - 1}")
    return replace(state, turn=m, centers=state.centers + (b,))


def turn_budget(params: GameParams, m: int) -> float:
    """Right-hand side of the turn-m budget: (alpha prod beta^m)^c, or alpha prod beta^m for c = 0."""
    log_rhs = math.log(params.alpha) + m * params.A.log_det
    return math.exp(log_rhs * (params.c if params.c > 0 else 1.0))


def deletion_cost(params: GameParams, q: float) -> float:
    e = params.c if params.c > 0 else 1.0
    return math.exp(q * params.A.log_det * e)


def is_legal_response(params: GameParams, m: int, deletions: Sequence[tuple[float, Sequence[float]]]) -> bool:
    try:
        _check_response(params, m, deletions)
    except IllegalMove:
        return False
    return True


def _check_response(params: GameParams, m: int, deletions) -> float:
    if not deletions:
        return 0.0
    for q, _ in deletions:
        if not q >= 1.0:
            raise IllegalMove(f"q = {q} < 1")
    if params.c == 0 and len(deletions) > 1:
        raise IllegalMove("c = 0 allows a single deletion per turn")
    used = sum(deletion_cost(params, q) for q, _ in deletions)
    rhs = turn_budget(params, m)
    if used > rhs * (1 + 1e-12) + 1e-15:
        raise IllegalMove(f"budget exceeded: {used:.6g} > {rhs:.6g}")
    return used


def player2_move(state: GameState, deletions: Sequence[tuple[float, Sequence[float]]]) -> GameState:
    """Answer the current turn; an empty list is a skip."""
    if state.turn == 0:
        raise IllegalMove("game not started")
    if state.answered >= state.turn:
        raise IllegalMove("turn already answered")
    m = state.turn
    used = _check_response(state.params, m, deletions)
    new = tuple(Deletion(float(q), tuple(float(v) for v in y), m) for q, y in deletions)
    return replace(
        state,
        ledger=state.ledger + new,
        budget_used=state.budget_used + (used,),
        answered=m,
    )


# ---------------------------------------------------------------------------
# outcome


def outcome(state: GameState) -> tuple[tuple[float, ...], float]:
    """Centre of the last box and the radius bounding the true outcome's distance from it."""
    if state.turn == 0:
        raise IllegalMove("game not started")
    return state.centers[-1], state.r * state.A.beta_max**state.turn


def in_deleted(point: Sequence[float], state: GameState) -> bool:
    x = np.asarray(point, dtype=float)
    for d in state.ledger:
        lo, hi = deletion_box(state.A, state.r, d)
        if np.all((lo <= x) & (x <= hi)):
            return True
    return False


# ---------------------------------------------------------------------------
# thick-set strategy


@dataclass
class ThickStrategy:
    """Player II strategy for a system with finite affine thickness.

    Gaps are visited in size order; on turn m the first not-yet-deleted gap
    that U_m meets with m > 1/GD_A is covered by A^{1/S_A}(B[0,1]) + centre.
    """

    sys: GapSystem
    report: ThicknessReport
    _lo: np.ndarray = field(init=False, repr=False)
    _hi: np.ndarray = field(init=False, repr=False)
    _owner: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.report.is_finite:
            raise ValueError("thick strategy needs finite affine thickness")
        ordered = [self.sys.gaps[k] for k in self.report.gap_order]
        self._lo, self._hi, self._owner = component_arrays(ordered)
        self._inv_gd = np.array([g.inv_gap_distance for g in self.report.per_gap])
        self._inv_size = [g.inv_size for g in self.report.per_gap]
        self._centers = [tuple(float(v) for v in g.bounding_box().center) for g in ordered]

    def deleted_ranks(self, state: GameState) -> set[int]:
        done = set()
        by_center = {c: k for k, c in enumerate(self._centers)}
        for d in state.ledger:
            k = by_center.get(d.y)
            if k is not None:
                done.add(k)
        return done

    def __call__(self, state: GameState) -> list[tuple[float, tuple[float, ...]]]:
        if state.r != 1.0:
            raise IllegalMove("thick strategy is defined for r = 1")
        m = state.turn
        u_lo, u_hi = state.current_box()
        # closed U_m against open gap components
        hits = np.all((u_lo < self._hi) & (self._lo < u_hi), axis=1)
        ranks = sorted(set(self._owner[hits].tolist()))
        done = self.deleted_ranks(state)
        for k in ranks:
            if k in done or not m > self._inv_gd[k]:
                continue
            move = [(self._inv_size[k], self._centers[k])]
            if is_legal_response(state.params, m, move):
                return move
        return []


def thick_strategy(state: GameState, sys: GapSystem, report: ThicknessReport):
    return ThickStrategy(sys, report)(state)


def thick_params(A: DiagonalContraction, report: ThicknessReport) -> GameParams:
    """(alpha_tau, A, 0, 1, 1) with alpha_tau = prod beta_jj^{tau_A - 1}."""
    if not report.is_finite:
        raise ValueError("affine thickness must be finite")
    return GameParams(A, math.exp((report.tau - 1.0) * A.log_det), 0.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# Player I policies

Policy = Callable[[GameState, np.random.Generator], tuple[float, ...]]


def _first_centre(state: GameState, rng: np.random.Generator, sys: GapSystem) -> tuple[float, ...]:
    amb = sys.ambient
    return tuple(float(rng.uniform(float(a), float(b))) for a, b in zip(amb.lo, amb.hi))


def constant_policy(center: Sequence[float]):
    center = tuple(float(v) for v in center)

    def policy(state, rng, sys):
        return center

    policy.name = "constant"
    return policy


def random_policy():
    def policy(state, rng, sys):
        if state.turn == 0:
            return _first_centre(state, rng, sys)
        bounds = np.asarray(nesting_bounds(state.A, state.r, state.turn + 1))
        step = rng.uniform(-1.0, 1.0, size=bounds.shape) * bounds
        return tuple(float(v) for v in np.asarray(state.centers[-1]) + step)

    policy.name = "random"
    return policy


def gap_seeker_policy(target: Sequence[float] | None = None):
    """Steer toward ``target`` (default: a random point inside a random gap).

    The first centre is drawn near the target; later centres move toward it
    by the largest shift the nesting rule allows on each axis.
    """
    fixed = None if target is None else np.asarray(target, dtype=float)

    def policy(state, rng, sys):
        if state.turn == 0:
            if fixed is None:
                g = sys.gaps[int(rng.integers(len(sys.gaps)))]
                box = g.boxes[int(rng.integers(len(g.boxes)))]
                pt = [float(rng.uniform(float(a), float(b))) for a, b in zip(box.lo, box.hi)]
                policy.target = np.asarray(pt)
            else:
                policy.target = fixed
            # start within half the total travel r * beta_j still available
            half = 0.5 * np.asarray(state.A.betas)
            return tuple(float(v) for v in policy.target + rng.uniform(-1.0, 1.0, size=half.shape) * half)
        bounds = np.asarray(nesting_bounds(state.A, state.r, state.turn + 1))
        prev = np.asarray(state.centers[-1])
        step = np.clip(policy.target - prev, -bounds, bounds)
        return tuple(float(v) for v in prev + step)

    policy.name = "gap-seeker"
    policy.target = fixed
    return policy


POLICIES = {"random": random_policy, "gap-seeker": gap_seeker_policy}


# ---------------------------------------------------------------------------
# playouts


@dataclass(frozen=True)
class PlayoutRecord:
    seed: int
    horizon: int
    policy: str
    outcome: tuple[float, ...]
    radius: float
    in_deleted: bool
    distance_to_CE: float
    fault: str | None
    budget_violations: int
    nesting_violations: int
    deletions: tuple[Deletion, ...] = ()

    @property
    def wins(self) -> bool:
        """Winning contract: outcome deleted, or within the horizon radius of C u E."""
        return self.fault is None and (self.in_deleted or self.distance_to_CE <= self.radius)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "horizon": self.horizon,
            "policy": self.policy,
            "outcome": list(self.outcome),
            "radius": self.radius,
            "in_deleted": self.in_deleted,
            "distance_to_CE": self.distance_to_CE,
            "fault": self.fault,
            "budget_violations": self.budget_violations,
            "nesting_violations": self.nesting_violations,
            "deletions": [{"q": d.q, "y": list(d.y), "turn": d.turn} for d in self.deletions],
        }


def distance_to_c_union_e(point: Sequence[float], sys: GapSystem) -> float:
    """d_inf from a point to C u E = R^n minus the open gaps."""
    x = np.asarray(point, dtype=float)
    for g in sys.gaps:
        bb = g.bounding_box()
        if not np.all((np.asarray(bb.lo, float) < x) & (x < np.asarray(bb.hi, float))):
            continue
        # distance to the part of a frame around the gap that the gap misses;
        # positive exactly when x lies in the open gap
        frame = AxisBox.centered(bb.center, [h * 2 for h in bb.half_widths])
        rest = subtract_region([frame], g)
        lo = np.array([[float(v) for v in b.lo] for b in rest])
        hi = np.array([[float(v) for v in b.hi] for b in rest])
        d = float(np.maximum(0.0, np.maximum(lo - x, x - hi)).max(axis=1).min())
        if d > 0:
            return d
    return 0.0


def audit(state: GameState) -> tuple[int, int]:
    """Independent re-check of nesting and budgets; returns (budget, nesting) violation counts."""
    p = state.params
    nest = 0
    for m in range(2, state.turn + 1):
        o_lo, o_hi = player_box(p.A, state.r, m - 1, state.centers[m - 2])
        i_lo, i_hi = player_box(p.A, state.r, m, state.centers[m - 1])
        if not (np.all(o_lo - TOL <= i_lo) and np.all(i_hi <= o_hi + TOL)):
            nest += 1
    budget = 0
    for m in range(1, state.turn + 1):
        ds = [d for d in state.ledger if d.turn == m]
        if not ds:
            continue
        if p.c == 0:
            if len(ds) > 1:
                budget += 1
                continue
            lhs = sum(d.q for d in ds) * p.A.log_det
            rhs = math.log(p.alpha) + m * p.A.log_det
            if lhs > rhs + 1e-12 * max(1.0, abs(rhs)):
                budget += 1
        else:
            lhs = sum(math.prod(b ** (d.q * p.c) for b in p.A.betas) for d in ds)
            if lhs > (p.alpha * math.prod(b**m for b in p.A.betas)) ** p.c + 1e-15:
                budget += 1
    return budget, nest


def run_playout(
    sys: GapSystem,
    report: ThicknessReport,
    A: DiagonalContraction,
    policy,
    horizon: int,
    seed: int,
    params: GameParams | None = None,
    player2=None,
) -> PlayoutRecord:
    """One seeded game of ``horizon`` turns against the thick-set strategy."""
    rng = np.random.default_rng(seed)
    params = params or thick_params(A, report)
    strategy = player2 if player2 is not None else ThickStrategy(sys, report)
    state = GameState(params)
    fault = None
    for m in range(1, horizon + 1):
        b = policy(state, rng, sys)
        try:
            state = player1_move(state, b, 1.0 if m == 1 else None)
        except IllegalMove as exc:
            fault = f"policy: {exc}"
            break
        try:
            state = player2_move(state, strategy(state))
        except IllegalMove as exc:
            fault = f"player II: {exc}"
            break
    if state.turn == 0:
        return PlayoutRecord(seed, horizon, getattr(policy, "name", "custom"), (), math.nan,
                             False, math.nan, fault or "no moves", 0, 0)
    x, radius = outcome(state)
    budget, nest = audit(state)
    return PlayoutRecord(
        seed=seed,
        horizon=horizon,
        policy=getattr(policy, "name", "custom"),
        outcome=x,
        radius=radius,
        in_deleted=in_deleted(x, state),
        distance_to_CE=distance_to_c_union_e(x, sys),
        fault=fault,
        budget_violations=budget,
        nesting_violations=nest,
        deletions=state.ledger,
    )
