"""Inequality certificates for the pattern and intersection theorems.

The pattern system for (c, delta, M) with alpha = prod beta_jj^{tau_A - 1} is

    slack1 = delta^2 (1 - P^{1-c}) - M alpha^c                 >= 0
    slack2 = 3^{-n} prod_j (1 - 5 beta_jj^k) - 8^n (1 + 2^{2n+1}) delta > 0

with P = prod beta_jj and k = floor(delta / (M^{1/c} alpha)).  For the large
carpets alpha is around 1e-16 and k is astronomically large, so everything is
evaluated in log-space; a term beta^k with k |ln beta| > 745 is taken as 0.

Validity is monotone (antitone) in M at fixed (t, c, delta): slack1 falls
linearly and k falls, so the largest certified M is found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .carpets import carpet_betas, min_log_term

#: exp(-745) underflows to 0.0 in double precision
UNDERFLOW_EXPONENT = 745.0
M_CAP = 2**60
K1_CONVENTION = (
    "K_1 taken as the K_M formula with floor(delta / alpha) (M = 1), "
    "since no separate definition of K_1 is available"
)

REASON_OK = "ok"
REASON_FLOOR_ZERO = "floor_zero"
REASON_SLACK1 = "slack1_negative"
REASON_SLACK2 = "slack2_nonpositive"


def _pattern_constant(n: int) -> float:
    return 8.0**n * (1 + 2 ** (2 * n + 1))


def delta_cap(n: int) -> float:
    """Supremum of delta for which slack2 can be positive (all factors -> 1)."""
    return 3.0**-n / _pattern_constant(n)


def _slacks(log_betas: np.ndarray, log_alpha, c, delta, log_m):
    """Vectorised slack evaluation; returns (slack1, slack2, floor_zero).

    ``log_betas`` has shape (..., n) broadcastable against the other
    arguments with a trailing axis appended.
    """
    log_betas = np.asarray(log_betas, dtype=float)
    n = log_betas.shape[-1]
    log_alpha = np.asarray(log_alpha, dtype=float)
    c = np.asarray(c, dtype=float)
    delta = np.asarray(delta, dtype=float)
    log_m = np.asarray(log_m, dtype=float)
    log_p = log_betas.sum(axis=-1)

    slack1 = delta**2 * -np.expm1((1.0 - c) * log_p) - np.exp(log_m + c * log_alpha)

    log_k = np.log(delta) - log_m / c - log_alpha
    with np.errstate(over="ignore"):
        k = np.floor(np.exp(np.minimum(log_k, 700.0)))
    floor_zero = k < 1.0
    exponent = k[..., None] * log_betas  # k ln beta <= 0
    power = np.where(exponent < -UNDERFLOW_EXPONENT, 0.0, np.exp(np.maximum(exponent, -UNDERFLOW_EXPONENT)))
    terms = 1.0 - 5.0 * power
    slack2 = 3.0**-n * terms.prod(axis=-1) - _pattern_constant(n) * delta
    return slack1, slack2, floor_zero


def _k_constant(slack2, delta):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(slack2 > 0, 2.0 / delta * np.abs(np.log(np.where(slack2 > 0, slack2, 1.0))), np.inf)


def k_m_constant(n: int, betas: Sequence[float], alpha: float, c: float, delta: float, M: int) -> float:
    """K_M = 2 delta^{-1} |log(slack2)|, or inf when slack2 <= 0."""
    lb = np.log(np.asarray(betas, dtype=float))
    _, s2, _ = _slacks(lb, math.log(alpha), c, delta, math.log(M))
    return float(_k_constant(s2, delta))


def k_from_argument(argument: float, delta: float) -> float:
    """K_M from an explicit value of the logarithm's argument."""
    return float(_k_constant(np.asarray(argument), delta))


def lambda_range(diam_f: float, beta_max: float) -> tuple[float, float]:
    """Admissible scalings (0, (1 - beta_max)/diam(F)) as an open interval."""
    if not diam_f > 0:
        raise ValueError("diameter must be positive")
    return (0.0, (1.0 - beta_max) / diam_f)


# ---------------------------------------------------------------------------
# pattern certificates


@dataclass(frozen=True)
class PatternCertificate:
    n: int
    betas: tuple[float, ...]
    alpha: float
    c: float
    delta: float
    M: int
    slack1: float
    slack2: float
    K_M: float
    dim_bound: float
    dim_condition_met: bool
    lambda_max_per_diam: float
    reason: str
    t: float | None = None
    r: tuple | None = None

    @property
    def valid(self) -> bool:
        return self.reason == REASON_OK

    def to_dict(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        d["r"] = list(self.r) if self.r is not None else None
        d["betas"] = list(self.betas)
        for key in ("K_M", "dim_bound", "slack2"):
            if math.isinf(d[key]):
                d[key] = "inf" if d[key] > 0 else "-inf"
        return d


def _check_hypotheses(betas: Sequence[float], c: float, delta: float) -> None:
    for b in betas:
        if not 0.0 < b < 0.2:
            raise ValueError(f"beta {b!r} outside (0, 1/5)")
    if not 0.0 < c < 1.0:
        raise ValueError(f"c = {c!r} outside (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta = {delta!r} outside (0, 1)")


def _reason(slack1: float, slack2: float, floor_zero: bool) -> str:
    if floor_zero:
        return REASON_FLOOR_ZERO
    if slack1 < 0:
        return REASON_SLACK1
    if not slack2 > 0:
        return REASON_SLACK2
    return REASON_OK


def check_pattern(
    n: int,
    betas: Sequence[float],
    alpha: float,
    c: float,
    delta: float,
    M: int,
    *,
    log_alpha: float | None = None,
    t: float | None = None,
    r: Sequence | None = None,
) -> PatternCertificate:
    """Evaluate both pattern conditions, K_M and the dimension bound."""
    betas = tuple(float(b) for b in betas)
    if len(betas) != n:
        raise ValueError("betas must have n entries")
    _check_hypotheses(betas, c, delta)
    if M < 1 or int(M) != M:
        raise ValueError("M must be a positive integer")
    if not alpha > 0 and log_alpha is None:
        raise ValueError("alpha must be positive")
    la = math.log(alpha) if log_alpha is None else log_alpha
    lb = np.log(np.asarray(betas))
    s1, s2, fz = _slacks(lb, la, c, delta, math.log(M))
    s1, s2, fz = float(s1), float(s2), bool(fz)
    if fz:
        # every factor is 1 - 5 beta^0 = -4; flag it instead of trusting the sign of (-4)^n
        s2 = -math.inf
    k = float(_k_constant(np.asarray(s2), delta))
    beta_max = max(betas)
    log_bmax = abs(math.log(beta_max))
    alpha_v = math.exp(la)
    dim_bound = n - k * alpha_v / log_bmax if math.isfinite(k) else -math.inf
    inv_k = math.inf if k == 0 else 1.0 / k
    budget = -math.expm1((1 - c) * float(lb.sum()))
    dim_ok = M * math.exp(c * la) <= min(delta**2, inv_k * n * log_bmax) * budget
    return PatternCertificate(
        n=n,
        betas=betas,
        alpha=alpha_v,
        c=c,
        delta=delta,
        M=int(M),
        slack1=s1,
        slack2=s2,
        K_M=k,
        dim_bound=dim_bound,
        dim_condition_met=bool(dim_ok),
        lambda_max_per_diam=1.0 - beta_max,
        reason=_reason(s1, s2, fz),
        t=t,
        r=tuple(r) if r is not None else None,
    )


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class SearchGrid:
    """Grid sizes and log-ranges of the three search coordinates.

    Each coordinate is searched through the logarithm of its distance to the
    boundary where the optimum sits: t - t_min, 1 - c and 1 - delta/delta_cap.
    """

    points: int = 64
    rounds: int = 2
    log10_t_gap: tuple[float, float] = (-13.0, 0.0)
    log10_c_gap: tuple[float, float] = (-6.0, -1e-6)
    log10_delta_gap: tuple[float, float] = (-9.0, -1e-6)
    zoom_steps: float = 2.0


@dataclass
class SearchResult:
    r: tuple
    certificate: PatternCertificate | None
    trace: list[dict] = field(default_factory=list)
    t_min: float = math.nan

    @property
    def found(self) -> bool:
        return self.certificate is not None

    def to_dict(self) -> dict:
        return {
            "r": [int(v) if float(v).is_integer() else v for v in self.r],
            "found": self.found,
            "t_min": self.t_min,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "trace": self.trace,
        }


def _max_m(log_betas, log_alpha, c, delta) -> np.ndarray:
    """Largest M in [0, M_CAP] passing both conditions, elementwise (0 = none)."""
    shape = np.broadcast(log_alpha, c, delta).shape
    lo = np.zeros(shape, dtype=np.int64)
    hi = np.full(shape, M_CAP + 1, dtype=np.int64)

    def ok(m):
        s1, s2, fz = _slacks(log_betas, log_alpha, c, delta, np.log(m.astype(float)))
        return (s1 >= 0) & (s2 > 0) & ~fz

    one = np.ones(shape, dtype=np.int64)
    alive = ok(one)
    lo[alive] = 1
    hi[~alive] = 1
    while True:
        active = hi - lo > 1
        if not active.any():
            break
        mid = lo + (hi - lo) // 2
        good = ok(np.where(active, mid, 1))
        lo = np.where(active & good, mid, lo)
        hi = np.where(active & ~good, mid, hi)
    return lo


def carpet_t_min(r: Sequence[float]) -> float:
    """Smallest t with every beta_jj = r_j^{-t} below 1/5 (exclusive bound)."""
    return max(math.log(5.0) / math.log(v) for v in r)


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(lo, hi, points)


def search_pattern_certificate(r: Sequence[float], grid: SearchGrid | None = None) -> SearchResult:
    """Largest-M pattern certificate for the r-carpet over a (t, c, delta) grid.

    Coarse grid over the three log-gap coordinates, then ``grid.rounds``
    refinements centred on the incumbent with the span shrunk to
    ``zoom_steps`` grid steps either side.  Ties in M go to the
    lexicographically smallest (t, c, delta).  Deterministic.
    """
    grid = grid or SearchGrid()
    r = tuple(r)
    n = len(r)
    log_r = np.log(np.asarray(r, dtype=float))
    m_term = min_log_term(r)
    t_min = carpet_t_min(r)
    cap = delta_cap(n)
    result = SearchResult(r, None, [], t_min)
    if t_min >= 1.0:
        result.trace.append({"round": 0, "note": "no t in (0, 1) gives beta < 1/5"})
        return result

    ranges = [grid.log10_t_gap, grid.log10_c_gap, grid.log10_delta_gap]
    t_span = 1.0 - t_min
    best = None  # (M, t, c, delta)
    for rnd in range(grid.rounds + 1):
        axes = [_grid(a, b, grid.points) for a, b in ranges]
        u, v, w = np.meshgrid(*axes, indexing="ij")
        t = t_min + t_span * 10.0**u
        c = 1.0 - 10.0**v
        delta = cap * (1.0 - 10.0**w)
        keep = (t < 1.0) & (t > t_min) & (c > 0) & (c < 1) & (delta > 0)
        log_betas = -t[..., None] * log_r
        log_alpha = (t - m_term) * log_r.sum()
        m = _max_m(log_betas, log_alpha, c, delta)
        m = np.where(keep, m, 0)
        top = int(m.max())
        entry = {
            "round": rnd,
            "candidates": int(keep.sum()),
            "valid": int((m > 0).sum()),
            "best_M": top,
            "log10_ranges": [list(map(float, rg)) for rg in ranges],
        }
        if top > 0:
            idx = np.argwhere(m == top)
            cands = sorted((float(t[tuple(i)]), float(c[tuple(i)]), float(delta[tuple(i)]), tuple(i)) for i in idx)
            tt, cc, dd, i = cands[0]
            if best is None or top > best[0]:
                best = (top, tt, cc, dd)
            entry["incumbent"] = {"t": best[1], "c": best[2], "delta": best[3], "M": best[0]}
            # zoom on the incumbent index in log-gap coordinates
            new_ranges = []
            for axis, (a, b), j, upper in zip(axes, ranges, i, (0.0, -1e-12, -1e-12)):
                step = (b - a) / (grid.points - 1)
                centre = float(axis[j])
                new_ranges.append((centre - grid.zoom_steps * step, min(centre + grid.zoom_steps * step, upper)))
            ranges = new_ranges
        result.trace.append(entry)
        if best is None:
            break

    if best is not None:
        top, tt, cc, dd = best
        betas = carpet_betas(r, tt)
        la = (tt - m_term) * float(log_r.sum())
        cert = check_pattern(n, betas, math.exp(la), cc, dd, top, log_alpha=la, t=tt, r=r)
        if not cert.valid:  # pragma: no cover - vectorised and scalar paths share _slacks
            raise AssertionError("search produced a certificate that does not re-check")
        result.certificate = cert
    return result


# ---------------------------------------------------------------------------
# intersections


@dataclass(frozen=True)
class IntersectionCertificate:
    n: int
    betas: tuple[float, ...]
    alphas: tuple[float, ...]
    c: float
    delta: float
    alpha_combined: float
    slack1: float
    slack2: float
    K_1: float
    dim_bound: float
    reason: str
    conventions: tuple[str, ...] = (K1_CONVENTION,)

    @property
    def valid(self) -> bool:
        return self.reason == REASON_OK

    def to_dict(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        d["betas"] = list(self.betas)
        d["alphas"] = list(self.alphas)
        d["conventions"] = list(self.conventions)
        for key in ("K_1", "dim_bound", "slack2"):
            if math.isinf(d[key]):
                d[key] = "inf" if d[key] > 0 else "-inf"
        return d


def combine_alphas(alphas: Sequence[float], c: float) -> float:
    """alpha with alpha^c = sum_i alpha_i^c."""
    if not alphas:
        raise ValueError("need at least one alpha")
    if any(not a > 0 for a in alphas):
        raise ValueError("alphas must be positive")
    logs = np.log(np.asarray(alphas, dtype=float)) * c
    top = logs.max()
    log_sum = top + math.log(float(np.exp(logs - top).sum()))
    return math.exp(log_sum / c)


def check_intersection(
    n: int, betas: Sequence[float], alphas: Sequence[float], c: float, delta: float
) -> IntersectionCertificate:
    betas = tuple(float(b) for b in betas)
    if len(betas) != n:
        raise ValueError("betas must have n entries")
    _check_hypotheses(betas, c, delta)
    alpha = combine_alphas(alphas, c)
    lb = np.log(np.asarray(betas))
    s1, s2, fz = _slacks(lb, math.log(alpha), c, delta, 0.0)
    s1, s2, fz = float(s1), float(s2), bool(fz)
    budget = -math.expm1((1 - c) * float(lb.sum()))
    if fz:
        s2 = -math.inf
    reason = _reason(s1, s2, fz)
    # condition 1 also demands delta^2 (1 - P^{1-c}) < 1 and alpha in (0, 1)
    if reason == REASON_OK and not (delta**2 * budget < 1 and alpha < 1):
        reason = REASON_SLACK1
    k1 = float(_k_constant(np.asarray(s2), delta))
    log_bmax = abs(math.log(max(betas)))
    dim = max(n - k1 * alpha / log_bmax, 0.0) if math.isfinite(k1) else 0.0
    return IntersectionCertificate(n, betas, tuple(float(a) for a in alphas), c, delta, alpha, s1, s2, k1, dim, reason)


def search_intersection_certificate(
    betas: Sequence[float], alphas: Sequence[float], points: int = 128
) -> IntersectionCertificate | None:
    """Valid (c, delta) on a log-gap grid with the largest dimension bound, or None."""
    n = len(betas)
    lb = np.log(np.asarray(betas, dtype=float))
    log_a = np.log(np.asarray(alphas, dtype=float))
    v, w = np.meshgrid(np.linspace(-6.0, -1e-6, points), np.linspace(-9.0, -1e-6, points), indexing="ij")
    c = 1.0 - 10.0**v
    delta = delta_cap(n) * (1.0 - 10.0**w)
    scaled = c[..., None] * log_a
    top = scaled.max(axis=-1)
    log_alpha = (top + np.log(np.exp(scaled - top[..., None]).sum(axis=-1))) / c
    s1, s2, fz = _slacks(lb, log_alpha, c, delta, np.zeros_like(c))
    budget = -np.expm1((1 - c) * lb.sum())
    ok = (s1 >= 0) & (s2 > 0) & ~fz & (log_alpha < 0) & (delta**2 * budget < 1)
    if not ok.any():
        return None
    k1 = _k_constant(np.where(ok, s2, -1.0), delta)
    with np.errstate(over="ignore", invalid="ignore"):
        dim = np.where(ok, n - k1 * np.exp(np.minimum(log_alpha, 0.0)) / abs(lb.max()), -np.inf)
    i = np.unravel_index(int(np.argmax(dim)), dim.shape)
    cert = check_intersection(n, betas, alphas, float(c[i]), float(delta[i]))
    if not cert.valid:  # pragma: no cover
        raise AssertionError("grid optimum does not re-check")
    return cert


def search_carpet_intersection(r: Sequence[float], copies: int = 2, points: int = 48):
    """Intersection certificate for ``copies`` carpets sharing A = A_r^t."""
    t_min = carpet_t_min(r)
    if t_min >= 1.0:
        return None
    m_term = min_log_term(r)
    for u in np.linspace(-13.0, 0.0, points):
        t = t_min + (1.0 - t_min) * 10.0**u
        if not t_min < t < 1.0:
            continue
        betas = carpet_betas(r, t)
        if not all(b < 0.2 for b in betas):
            continue
        alpha = math.exp((t - m_term) * sum(math.log(v) for v in r))
        cert = search_intersection_certificate(betas, [alpha] * copies, points=points)
        if cert is not None:
            return t, cert
    return None


# ---------------------------------------------------------------------------
# the two-set counterexample


@dataclass(frozen=True)
class CounterexampleInstance:
    n: int
    betas: tuple[float, ...]
    r: float
    s: float
    t: float
    tau1: float
    tau2: float

    @property
    def sum(self) -> float:
        return self.tau1 + self.tau2

    @property
    def positive(self) -> bool:
        return self.sum > 0

    @property
    def disjoint(self) -> bool:
        """C1 and C2 share no point.

        C2's annulus B[x,s] \\ int B[x,t] sits in the punctured gap
        int B[x,r] \\ {x} of C1 (s < r, t > 0) and C2's singleton -x is the
        centre of C1's gap int B[-x,r].
        """
        return self.s < self.r and self.t > 0 and self.r > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(betas=list(self.betas), sum=self.sum, positive=self.positive, disjoint=self.disjoint)
        return d


def _log_base(x: float, base: float) -> float:
    return math.log(x) / math.log(base)


def counterexample(n: int, betas: Sequence[float], r: float, s: float, t: float) -> CounterexampleInstance:
    """Closed-form affine thicknesses of the two-set counterexample."""
    if n < 2:
        raise ValueError("the construction needs n >= 2")
    betas = tuple(float(b) for b in betas)
    if len(betas) != n or not all(0 < b < 1 for b in betas):
        raise ValueError("need n contraction ratios in (0, 1)")
    if not 0 < t < s < r < 0.25:
        raise ValueError("need 0 < t < s < r < 1/4")
    bmin, bmax = min(betas), max(betas)
    tau1 = _log_base(r, bmin) - _log_base(0.125 - r / 2, bmax)
    tau2 = _log_base(t, bmin) - _log_base((s - t) / 2, bmax)
    return CounterexampleInstance(n, betas, r, s, t, tau1, tau2)


def auto_counterexample(n: int, betas: Sequence[float]) -> CounterexampleInstance:
    """Shrink r, then t (with s = r/2), until tau1 + tau2 > 0."""
    r = 0.2
    for _ in range(60):
        s = r / 2
        t = s / 2
        while t > 1e-300:
            inst = counterexample(n, betas, r, s, t)
            if inst.positive:
                return inst
            t /= 10
        r /= 2
    raise RuntimeError("no admissible triple found")  # pragma: no cover
