"""Self-affine Sierpinski carpets on [-1, 1]^n.

Each of the prod(r) cells of side 2/r_j per axis is kept except the middle
one, recursively.  The level-k gaps are the removed middle cells of the
surviving level-(k-1) cells, i.e. translates of A_r^k(int B[0,1]) with
half-width r_j^{-k} on axis j.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .geometry import AxisBox, BoxRegion, DiagonalContraction, GapSystem

DEFAULT_MAX_CELLS = 10**6


class CarpetTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class CarpetSpec:
    r: tuple[int, ...]
    t: float = 1.0
    depth: int = 1

    def __post_init__(self):
        r = tuple(int(v) for v in self.r)
        object.__setattr__(self, "r", r)
        if not r:
            raise ValueError("empty subdivision vector")
        for v in r:
            if v < 3 or v % 2 == 0:
                raise ValueError(f"subdivision counts must be odd and >= 3, got {v}")
        # t = 1 (A = A_r itself) is admitted alongside (0, 1)
        if not 0.0 < self.t <= 1.0:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def betas(self) -> tuple[float, ...]:
        return carpet_betas(self.r, self.t)

    @property
    def matrix(self) -> DiagonalContraction:
        return DiagonalContraction(self.betas)

    def survivors(self, level: int) -> int:
        return (math.prod(self.r) - 1) ** level


def carpet_betas(r: Sequence[float], t: float) -> tuple[float, ...]:
    """beta_jj = r_j^{-t}, computed as exp(-t ln r_j)."""
    return tuple(math.exp(-t * math.log(v)) for v in r)


def min_log_term(r: Sequence[float]) -> float:
    """min_i log_{r_i}((r_i - 1) / 2)."""
    return min(math.log((v - 1) / 2) / math.log(v) for v in r)


def gap_count(spec: CarpetSpec) -> int:
    return sum(spec.survivors(k - 1) for k in range(1, spec.depth + 1))


def generate(spec: CarpetSpec, max_cells: int = DEFAULT_MAX_CELLS, exact: bool = False) -> GapSystem:
    """Gap system of the depth-``spec.depth`` prefractal.

    With ``exact=True`` coordinates are :class:`Fraction` (used by the
    gap-lemma predicates); otherwise floats.
    """
    if spec.survivors(spec.depth - 1) > max_cells:
        raise CarpetTooLarge(
            f"{spec.survivors(spec.depth - 1)} surviving cells exceed the guard of {max_cells}"
        )
    n = spec.n
    one = Fraction(1) if exact else 1.0
    mids = [v // 2 for v in spec.r]
    digits = [d for d in itertools.product(*(range(v) for v in spec.r)) if list(d) != mids]
    hull = BoxRegion.of(AxisBox((-one,) * n, (one,) * n))
    gaps = []
    # cells are tracked by integer lower-corner index in units of 2 / r_j^level
    cells: list[tuple[int, ...]] = [(0,) * n]
    for level in range(1, spec.depth + 1):
        scale = [Fraction(1, v ** (level - 1)) if exact else 1.0 / v ** (level - 1) for v in spec.r]
        half = [Fraction(1, v**level) if exact else 1.0 / v**level for v in spec.r]
        for cell in cells:
            center = [-one + (2 * i + 1) * s for i, s in zip(cell, scale)]
            gaps.append(BoxRegion.of(AxisBox.centered(center, half), open=True))
        if level < spec.depth:
            cells = [
                tuple(i * v + d for i, v, d in zip(cell, spec.r, digit))
                for cell in cells
                for digit in digits
            ]
    return GapSystem(hull, tuple(gaps), AxisBox((-one,) * n, (one,) * n))


def closed_form_thickness(spec_or_r, t: float | None = None) -> float:
    """tau_A(C_r) = t^{-1} min_i log_{r_i}((r_i - 1)/2) for A = A_r^t."""
    r, t = _unpack(spec_or_r, t)
    return min_log_term(r) / t


@dataclass(frozen=True)
class CarpetAlpha:
    alpha: float
    log_alpha: float
    applicable: bool  # every beta_jj < 1/5

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "log_alpha": self.log_alpha, "pattern_theorem_applicable": self.applicable}


def alpha_carpet(spec_or_r, t: float | None = None) -> CarpetAlpha:
    """alpha(r, t) = prod_j r_j^{t - min_i log_{r_i}((r_i-1)/2)}."""
    r, t = _unpack(spec_or_r, t)
    m = min_log_term(r)
    log_alpha = sum(math.log(v) * (t - m) for v in r)
    betas = carpet_betas(r, t)
    return CarpetAlpha(math.exp(log_alpha), log_alpha, all(b < 0.2 for b in betas))


def _unpack(spec_or_r, t):
    if isinstance(spec_or_r, CarpetSpec):
        return spec_or_r.r, spec_or_r.t
    if t is None:
        raise TypeError("t is required when passing a raw subdivision vector")
    return tuple(spec_or_r), float(t)
