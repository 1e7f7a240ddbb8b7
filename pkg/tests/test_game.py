import math

import numpy as np
import pytest

from affthick.carpets import CarpetSpec, generate
from affthick.game import (
    Deletion,
    GameParams,
    GameState,
    IllegalMove,
    ThickStrategy,
    audit,
    constant_policy,
    distance_to_c_union_e,
    gap_seeker_policy,
    in_deleted,
    is_legal_response,
    outcome,
    player1_move,
    player2_move,
    random_policy,
    run_playout,
    thick_params,
)
from affthick.geometry import AxisBox, BoxRegion, DiagonalContraction, GapSystem
from affthick.thickness import affine_thickness

A02 = DiagonalContraction((0.2, 0.2))


def started(params, b=(0.0, 0.0), r=1.0):
    return player1_move(GameState(params), b, r)


def single_gap_system():
    g = BoxRegion.of(AxisBox((-0.1, -0.1), (0.1, 0.1)), open=True)
    return GapSystem(BoxRegion.of(AxisBox((-1.0, -1.0), (1.0, 1.0))), (g,))


class TestParams:
    @pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=math.inf), dict(c=1.0), dict(c=-0.1),
                                    dict(rho1=0.5, rho2=1.0), dict(rho2=0.0)])
    def test_rejects(self, kw):
        base = dict(alpha=1.0, c=0.0, rho2=1.0, rho1=1.0)
        base.update(kw)
        with pytest.raises(ValueError):
            GameParams(A02, **base)


class TestPlayer1:
    def test_radius_range(self):
        p = GameParams(A02, 1.0, 0.0, 0.5, 2.0)
        with pytest.raises(IllegalMove):
            player1_move(GameState(p), (0, 0), 3.0)
        with pytest.raises(IllegalMove):
            player1_move(GameState(p), (0, 0))
        assert player1_move(GameState(p), (0, 0), 0.5).r == 0.5

    def test_nesting_boundary(self):
        p = GameParams(A02, 1.0)
        s = player2_move(started(p), [])
        assert player1_move(s, (0.16, 0.0)).turn == 2
        with pytest.raises(IllegalMove):
            player1_move(s, (0.161, 0.0))

    def test_concentric_always_legal(self):
        s = started(GameParams(A02, 1.0))
        for _ in range(40):
            s = player1_move(player2_move(s, []), (0.0, 0.0))
        assert audit(s) == (0, 0)

    def test_must_wait_for_player2(self):
        s = started(GameParams(A02, 1.0))
        with pytest.raises(IllegalMove):
            player1_move(s, (0.0, 0.0))


class TestPlayer2:
    def test_exact_boundary_budget(self):
        p = GameParams(A02, 0.04)
        s = started(p)
        assert is_legal_response(p, 1, [(2.0, (0, 0))])
        assert not is_legal_response(p, 1, [(1.9, (0, 0))])
        assert len(player2_move(s, [(2.0, (0.0, 0.0))]).ledger) == 1

    def test_single_tuple_and_q_at_least_one(self):
        p = GameParams(A02, 100.0)
        assert not is_legal_response(p, 1, [(3.0, (0, 0)), (3.0, (1, 1))])
        assert not is_legal_response(p, 1, [(0.9, (0, 0))])

    def test_c_positive_sum(self):
        p = GameParams(A02, 0.04, c=0.5)
        # each tuple costs prod beta^{qc} = 0.04^{q/2}; budget (0.04 * 0.04)^{1/2} = 0.04
        assert is_legal_response(p, 1, [(2.0, (0, 0))])
        assert is_legal_response(p, 1, [(4.0, (0, 0))] * 25)
        assert not is_legal_response(p, 1, [(4.0, (0, 0))] * 26)

    def test_skip_always_legal(self):
        s = started(GameParams(A02, 1e-30))
        assert player2_move(s, []).answered == 1

    def test_double_answer(self):
        s = player2_move(started(GameParams(A02, 1.0)), [])
        with pytest.raises(IllegalMove):
            player2_move(s, [])

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            alpha = float(10 ** rng.uniform(-3, 1))
            m = int(rng.integers(1, 6))
            q = float(rng.uniform(1, 8))
            if is_legal_response(GameParams(A02, alpha), m, [(q, (0, 0))]):
                assert is_legal_response(GameParams(A02, alpha * float(rng.uniform(1, 5))), m, [(q, (0, 0))])


class TestOutcome:
    def test_radius(self):
        s = started(GameParams(A02, 1.0), (0.3, -0.2))
        assert outcome(s) == ((0.3, -0.2), pytest.approx(0.2))
        for _ in range(19):
            s = player1_move(player2_move(s, []), (0.3, -0.2))
        assert outcome(s)[1] == pytest.approx(0.2**20, rel=1e-12)
        assert outcome(s)[1] == pytest.approx(1.048576e-14, rel=1e-6)

    def test_not_started(self):
        with pytest.raises(IllegalMove):
            outcome(GameState(GameParams(A02, 1.0)))

    def test_in_deleted_closed(self):
        s = started(GameParams(A02, 1.0))
        assert not in_deleted((0, 0), s)
        s = player2_move(s, [(1.0, (0.5, 0.5))])
        assert in_deleted((0.5, 0.5), s)
        assert in_deleted((0.7, 0.5), s)  # on the face x = 0.5 + 0.2
        assert not in_deleted((0.7000001, 0.5), s)


class TestThickStrategy:
    def test_first_turn_deletion(self):
        sys_ = single_gap_system()
        rep = affine_thickness(sys_, A02)
        params = thick_params(A02, rep)
        assert params.alpha == pytest.approx(0.2 ** (2 * (rep.tau - 1)), rel=1e-12)
        strat = ThickStrategy(sys_, rep)
        s = player1_move(GameState(params), (0.0, 0.0), 1.0)
        move = strat(s)
        assert len(move) == 1
        q, z = move[0]
        assert q == pytest.approx(math.log(0.1) / math.log(0.2), abs=1e-12)
        assert z == (0.0, 0.0)
        s = player2_move(s, move)
        s = player1_move(s, (0.0, 0.0))
        assert strat(s) == []  # already deleted

    def test_skip_when_disjoint(self):
        sys_ = single_gap_system()
        rep = affine_thickness(sys_, A02)
        strat = ThickStrategy(sys_, rep)
        s = player1_move(GameState(thick_params(A02, rep)), (0.8, 0.8), 1.0)
        s = player1_move(player2_move(s, strat(s)), (0.8, 0.8))
        assert strat(s) == []

    def test_requires_unit_radius(self):
        sys_ = single_gap_system()
        rep = affine_thickness(sys_, A02)
        p = GameParams(A02, thick_params(A02, rep).alpha, 0.0, 0.5, 1.0)
        s = player1_move(GameState(p), (0.0, 0.0), 0.5)
        with pytest.raises(IllegalMove):
            ThickStrategy(sys_, rep)(s)

    def test_infinite_thickness_rejected(self):
        sys_ = GapSystem(BoxRegion.of(AxisBox((-1.0, -1.0), (1.0, 1.0))))
        with pytest.raises(ValueError):
            ThickStrategy(sys_, affine_thickness(sys_, A02))


@pytest.fixture(scope="module")
def carpet():
    spec = CarpetSpec((5, 5), 1.0, 2)
    sys_ = generate(spec)
    rep = affine_thickness(sys_, spec.matrix)
    return sys_, spec.matrix, rep


class TestPlayouts:
    def test_deterministic(self, carpet):
        sys_, A, rep = carpet
        a = run_playout(sys_, rep, A, random_policy(), 15, 42)
        b = run_playout(sys_, rep, A, random_policy(), 15, 42)
        assert a.to_dict() == b.to_dict()

    def test_constant_policy_outcome(self, carpet):
        sys_, A, rep = carpet
        rec = run_playout(sys_, rep, A, constant_policy((0.0, 0.0)), 10, 0)
        assert rec.outcome == (0.0, 0.0)
        assert rec.in_deleted and rec.wins

    def test_gap_seeker_lands_in_deleted_region(self, carpet):
        sys_, A, rep = carpet
        target = sys_.gaps[5].boxes[0].center
        rec = run_playout(sys_, rep, A, gap_seeker_policy(target), 20, 1)
        assert rec.in_deleted and rec.fault is None

    def test_always_skip_never_faults(self, carpet):
        sys_, A, rep = carpet
        rec = run_playout(sys_, rep, A, random_policy(), 20, 5, player2=lambda s: [])
        assert rec.fault is None and rec.budget_violations == 0 and rec.nesting_violations == 0

    def test_distance_to_c_union_e(self, carpet):
        sys_, _, _ = carpet
        assert distance_to_c_union_e((0.0, 0.0), sys_) == pytest.approx(0.2)
        assert distance_to_c_union_e((0.9, 0.9), sys_) == 0.0

    def test_policy_fault_recorded(self, carpet):
        sys_, A, rep = carpet

        def jumpy(state, rng, s):
            return (0.0, 0.0) if state.turn == 0 else (0.9, 0.9)

        rec = run_playout(sys_, rep, A, jumpy, 5, 0)
        assert rec.fault is not None and rec.fault.startswith("policy")

    def test_record_fields(self, carpet):
        sys_, A, rep = carpet
        d = run_playout(sys_, rep, A, random_policy(), 5, 9).to_dict()
        for key in ("seed", "horizon", "outcome", "radius", "in_deleted", "distance_to_CE", "fault"):
            assert key in d

    def test_audit_catches_tampering(self):
        p = GameParams(A02, 0.04)
        s = started(p)
        s = player2_move(s, [(2.0, (0.0, 0.0))])
        forged = s.__class__(**{**s.__dict__, "ledger": s.ledger + (Deletion(1.0, (0.0, 0.0), 1),)})
        assert audit(forged)[0] == 1
