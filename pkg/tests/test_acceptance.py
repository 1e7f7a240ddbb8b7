"""Acceptance criteria 1-7.

Each test prints one ``PASS``/``FAIL`` line, bypassing output capture,
before asserting.
Run ``python3 tests/test_acceptance.py`` for the seven lines alone.
"""

from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from affthick.carpets import CarpetSpec, closed_form_thickness, generate  # noqa: E402
from affthick.certificates import auto_counterexample, counterexample, search_pattern_certificate  # noqa: E402
from affthick.game import gap_seeker_policy, random_policy, run_playout  # noqa: E402
from affthick.gaplemma import (  # noqa: E402
    CERTIFIED_NONEMPTY,
    bg_linked,
    exact_intersection,
    float_system,
    gap_lemma_verdict,
    remove_contained_gaps,
    same_intersection,
)
from affthick.geometry import (  # noqa: E402
    INF,
    AxisBox,
    BoxRegion,
    DiagonalContraction,
    GapSystem,
    brute_force_bridge,
    brute_force_size,
    region_complement,
    size_wrt,
)
from affthick.thickness import affine_thickness, fy_affine_relation, fy_thickness, gap_distance, sort_gaps  # noqa: E402

from conftest import linked_pair, random_box_system  # noqa: E402
from oracles import carpet_parameters, pattern_slacks  # noqa: E402


def status_line(number: int, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"


# ---------------------------------------------------------------------------
# 1. pattern sizes for four carpets

REFERENCE_M = {
    (2**22, 2**23): 37,
    (2**20, 2**21 + 2**20): 3,
    (2**30, 2**20): 463,
    (2**30, 2**28): 223241,
}


def criterion_1():
    start = time.perf_counter()
    found, problems = [], []
    for r, m_ref in REFERENCE_M.items():
        res = search_pattern_certificate(r)
        if not res.found:
            problems.append(f"{r}: none")
            continue
        cert = res.certificate
        # re-verify independently at 60 digits
        betas, alpha = carpet_parameters(r, cert.t)
        s1, s2, _ = pattern_slacks(betas, alpha, cert.c, cert.delta, cert.M)
        if not (cert.valid and s1 >= 0 and s2 > 0 and cert.M >= m_ref):
            problems.append(f"{r}: M={cert.M} s1={float(s1):.3g} s2={float(s2):.3g}")
        found.append(cert.M)
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed <= 300
    detail = f"M = {found} vs required {list(REFERENCE_M.values())} in {elapsed:.0f}s"
    return ok, detail + ("; " + "; ".join(problems) if problems else "")


# ---------------------------------------------------------------------------
# 2. closed form vs generated pipeline


def criterion_2():
    worst, cases = 0.0, 0
    for r in [(5, 5), (5, 7), (7, 9), (3, 5)]:
        for t in (0.3, 0.7, 1 - 1e-9):
            spec = CarpetSpec(r, t, 3)
            rep = affine_thickness(generate(spec), spec.matrix, validate=False)
            worst = max(worst, abs(rep.tau - closed_form_thickness(spec)))
            cases += 1
    return worst <= 1e-9, f"{cases} cases, max |pipeline - closed form| = {worst:.2e}"


# ---------------------------------------------------------------------------
# 3. closed-form sizes and gap distances vs bisection oracles


def _close(a: float, b: float, tol: float = 1e-6) -> bool:
    if a == INF or b == INF:
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a))


def criterion_3():
    rng = np.random.default_rng(2024)
    checked, bad = 0, []
    for i in range(50):
        n = int(rng.integers(1, 4))
        betas = tuple(float(b) for b in rng.uniform(0.05, 0.95, size=n))
        A = DiagonalContraction(betas)
        sys_ = random_box_system(rng, n, max_gaps=4)
        ordered, _, _ = sort_gaps(sys_, A)
        E = region_complement(ordered.hull).boxes
        for m, g in enumerate(ordered.gaps, start=1):
            s = size_wrt(g, A)
            s_bf = brute_force_size(g, A, 1e-10)
            targets = list(E) + [b for h in ordered.gaps[: m - 1] for b in h.boxes]
            gd = gap_distance(m, ordered, A)
            gd_bf = brute_force_bridge([(b, w) for b in g.boxes for w in targets], A, 1e-10)
            checked += 1
            if not (_close(s, s_bf) and _close(gd, gd_bf)):
                bad.append((i, m, s, s_bf, gd, gd_bf))
    return not bad, f"{checked} gaps over 50 systems, mismatches: {bad[:3] or 0}"


# ---------------------------------------------------------------------------
# 4. the two-set counterexample


def _counterexample_c1(r: float) -> GapSystem:
    """C1 without its puncture point: two squares around +-x, gap around -x."""
    x = 0.75
    hull = BoxRegion((AxisBox((x - 0.25, -0.25), (x + 0.25, 0.25)), AxisBox((-x - 0.25, -0.25), (-x + 0.25, 0.25))))
    gap = BoxRegion.of(AxisBox((-x - r, -r), (-x + r, r)), open=True)
    return GapSystem(hull, (gap,))


def _counterexample_c2(s: float, t: float) -> GapSystem:
    """The annulus part of C2 around x."""
    x = 0.75
    hull = BoxRegion.of(AxisBox((x - s, -s), (x + s, s)))
    gap = BoxRegion.of(AxisBox((x - t, -t), (x + t, t)), open=True)
    return GapSystem(hull, (gap,))


def criterion_4():
    notes, ok = [], True
    inst = counterexample(2, (0.2, 0.2), 0.01, 0.005, 1e-6)
    vals_ok = abs(inst.tau1 - 1.543959) <= 1e-5 and abs(inst.tau2 - 4.861238) <= 1e-5 and inst.sum > 0
    ok &= vals_ok
    notes.append(f"tau1={inst.tau1:.7f} tau2={inst.tau2:.7f}")

    rng = np.random.default_rng(7)
    autos = [auto_counterexample(2, tuple(rng.uniform(0.01, 0.99, size=2))) for _ in range(10)]
    ok &= all(a.positive and a.disjoint for a in autos)
    notes.append(f"auto {sum(a.positive for a in autos)}/10")

    worst = 0.0
    for betas in [(0.2, 0.2), (0.1, 0.3), (0.7, 0.05)] + [tuple(rng.uniform(0.05, 0.95, size=2)) for _ in range(5)]:
        A = DiagonalContraction(betas)
        lo, hi = min(betas), max(betas)
        r, s, t = 0.01, 0.005, 1e-6
        rec1 = affine_thickness(_counterexample_c1(r), A).per_gap[0]
        rec2 = affine_thickness(_counterexample_c2(s, t), A).per_gap[0]
        diffs = [
            rec1.inv_size - math.log(r) / math.log(lo),
            rec1.inv_gap_distance - math.log(1 / 8 - r / 2) / math.log(hi),
            rec2.inv_size - math.log(t) / math.log(lo),
            rec2.inv_gap_distance - math.log((s - t) / 2) / math.log(hi),
        ]
        worst = max(worst, *map(abs, diffs))
    ok &= worst <= 1e-9
    notes.append(f"pipeline vs closed-form sub-quantities max diff {worst:.1e}")
    return ok, "; ".join(notes)


# ---------------------------------------------------------------------------
# 5. relation between the two thickness notions


def criterion_5():
    rng = np.random.default_rng(5)
    worst, used, attempts = 0.0, 0, 0
    while used < 30 and attempts < 1000:
        attempts += 1
        n = int(rng.integers(1, 4))
        sys_ = random_box_system(rng, n, max_gaps=5)
        if not 0 < fy_thickness(sys_) < INF:
            continue
        beta = float(rng.uniform(0.05, 0.95))
        worst = max(worst, fy_affine_relation(sys_, beta).discrepancy)
        used += 1
    return used == 30 and worst <= 1e-9, f"{used} systems, max |log_beta tau + tau_A| = {worst:.2e}"


# ---------------------------------------------------------------------------
# 6. game winning contract


def criterion_6():
    spec = CarpetSpec((5, 5), 1.0, 3)
    sys_ = generate(spec)
    A = spec.matrix
    rep = affine_thickness(sys_, A, validate=False)
    start = time.perf_counter()
    total = wins = budget = nesting = faults = 0
    for name, make in (("random", random_policy), ("gap-seeker", gap_seeker_policy)):
        for seed in range(500):
            rec = run_playout(sys_, rep, A, make(), 30, seed)
            total += 1
            wins += rec.wins
            budget += rec.budget_violations
            nesting += rec.nesting_violations
            faults += rec.fault is not None
    elapsed = time.perf_counter() - start
    ok = wins == total and budget == nesting == faults == 0 and elapsed < 60
    return ok, (
        f"{wins}/{total} playouts satisfy the contract, budget violations {budget}, "
        f"nesting violations {nesting}, faults {faults}, {elapsed:.1f}s"
    )


# ---------------------------------------------------------------------------
# 7. gap-lemma soundness


def _tau(sys_, A):
    return affine_thickness(float_system(sys_), A, validate=False).tau


def criterion_7():
    rng = np.random.default_rng(77)
    certified = attempts = 0
    bad = []
    while certified < 200 and attempts < 20000:
        attempts += 1
        s1, s2 = linked_pair(rng)
        if not bg_linked(s1, s2).ok:
            continue
        A = DiagonalContraction(tuple(float(b) for b in rng.uniform(0.05, 0.6, size=2)))
        v = gap_lemma_verdict(s1, s2, A)
        if v.verdict != CERTIFIED_NONEMPTY:
            continue
        certified += 1
        ref = remove_contained_gaps(s1, s2)
        if not exact_intersection(s1, s2).nonempty:
            bad.append((attempts, "empty"))
        if not same_intersection((s1, s2), (ref.sys1, ref.sys2)):
            bad.append((attempts, "intersection changed"))
        if _tau(ref.sys1, A) < _tau(s1, A) or _tau(ref.sys2, A) < _tau(s2, A):
            bad.append((attempts, "thickness decreased"))
    ok = certified == 200 and not bad
    return ok, f"{certified} certified instances from {attempts} draws, failures: {bad[:3] or 0}"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6, 7: criterion_7}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + status_line(number, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in CRITERIA.items():
        ok, detail = fn()
        print(status_line(k, ok, detail), flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
