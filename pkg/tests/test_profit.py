import pytest

from dsrobust import (
    AttackAction,
    AttackerParams,
    MdpState,
    ForkStatus,
    ParameterError,
    build_profit_mdp,
    solve_profit,
)

from oracles import lp_ratio

I, R = ForkStatus.IRRELEVANT, ForkStatus.RELEVANT


class TestRewards:
    def test_override_with_bonus(self):
        m = build_profit_mdp(6, AttackerParams(0.3), 2.0, max_len=12)
        rows = m.transitions(MdpState(7, 6, I), AttackAction.OVERRIDE)
        assert all(pair == (9.0, 7.0) for _, _, pair in rows)

    def test_override_without_reversed_accepted_block(self):
        m = build_profit_mdp(6, AttackerParams(0.3), 2.0, max_len=12)
        rows = m.transitions(MdpState(3, 2, I), AttackAction.OVERRIDE)
        assert all(pair == (3.0, 3.0) for _, _, pair in rows)

    def test_match_success_reward(self):
        m = build_profit_mdp(2, AttackerParams(0.3, 0.5), 2.0, max_len=12)
        rows = m.transitions(MdpState(3, 3, R), AttackAction.MATCH)
        success = [pair for s, p, pair in rows if (s.a, s.h) == (0, 1)]
        assert success == [(5.0, 3.0)]

    def test_per_reversed_block_variant(self):
        m = build_profit_mdp(
            6, AttackerParams(0.3), 2.0, max_len=14, reward_per_reversed_block=True
        )
        rows = m.transitions(MdpState(8, 7, I), AttackAction.OVERRIDE)
        # two reversed accepted blocks at h=7, k=6
        assert all(pair == (8.0 + 2.0 * 2, 8.0) for _, _, pair in rows)

    def test_adopt_and_wait_neutral(self):
        m = build_profit_mdp(2, AttackerParams(0.3), 1.0, max_len=8)
        assert all(
            pair == (0.0, 4.0) for _, _, pair in m.transitions(MdpState(1, 4, I), AttackAction.ADOPT)
        )
        assert all(
            pair == (0.0, 0.0) for _, _, pair in m.transitions(MdpState(1, 4, I), AttackAction.WAIT)
        )

    def test_negative_reward_rejected(self):
        with pytest.raises(ParameterError):
            build_profit_mdp(2, AttackerParams(0.3), -1.0, max_len=8)

    def test_row_stochastic(self):
        build_profit_mdp(3, AttackerParams(0.35, 0.6), 2.0, max_len=9).validate()


class TestSolve:
    def test_zero_bonus_is_plain_chain_revenue(self):
        # with no double-spend bonus the model does not depend on k at all
        p = AttackerParams(0.3, 0.5)
        r6 = solve_profit(build_profit_mdp(6, p, 0.0, max_len=20), tol=1e-7)
        r1 = solve_profit(build_profit_mdp(1, p, 0.0, max_len=20), tol=1e-7)
        assert r6.value == pytest.approx(r1.value, abs=1e-9)

    def test_zero_bonus_matches_lp(self):
        m = build_profit_mdp(3, AttackerParams(0.35, 0.5), 0.0, max_len=12)
        assert solve_profit(m, tol=1e-8).value == pytest.approx(lp_ratio(m), abs=1e-6)

    def test_small_poorly_connected_miner_cannot_profit_alone(self):
        m = build_profit_mdp(2, AttackerParams(0.1, 0.0), 0.0, max_len=30)
        value = solve_profit(m, tol=1e-7).value
        assert value <= 0.1 + 1e-6
        # honest mining is representable, so revenue never drops below it
        assert value >= 0.1 - 1e-6

    def test_zero_hash_rate_earns_nothing(self):
        m = build_profit_mdp(2, AttackerParams(0.0, 1.0), 5.0, max_len=8)
        assert solve_profit(m, tol=1e-7).value == pytest.approx(0.0, abs=1e-6)

    def test_monotone_in_bonus(self):
        p = AttackerParams(0.3, 0.5)
        values = [
            solve_profit(build_profit_mdp(4, p, R, max_len=16), tol=1e-7).value
            for R in (0.0, 1.0, 2.0, 4.0)
        ]
        assert all(x <= y + 1e-6 for x, y in zip(values, values[1:]))

    def test_monotone_in_gamma(self):
        values = [
            solve_profit(build_profit_mdp(3, AttackerParams(0.3, g), 2.0, max_len=12), tol=1e-7).value
            for g in (0.0, 0.5, 1.0)
        ]
        assert all(x <= y + 1e-6 for x, y in zip(values, values[1:]))

    def test_well_connected_attacker_beats_honest_baseline(self):
        m = build_profit_mdp(3, AttackerParams(0.2, 1.0), 2.0, max_len=20)
        assert solve_profit(m, tol=1e-6).value > 0.2

    def test_lp_agreement_with_bonus(self):
        m = build_profit_mdp(2, AttackerParams(0.3, 0.5), 2.0, max_len=10)
        assert solve_profit(m, tol=1e-8).value == pytest.approx(lp_ratio(m), abs=1e-6)
