import numpy as np
import pytest

from dsrobust import (
    AttackAction,
    AttackerParams,
    ConfigurationError,
    MdpState,
    NumericalError,
    ParameterError,
    ForkStatus,
    build_attack_mdp,
    extract_policy_table,
    mark_reachability,
    scalarized_action_values,
    solve_ratio,
)

from oracles import enumerate_policies_ratio, evaluate_policy_ratio, lp_ratio

I, R, A = ForkStatus.IRRELEVANT, ForkStatus.RELEVANT, ForkStatus.ACTIVE


def small_model(k=1, alpha=0.3, gamma=0.0, max_len=6, **kw):
    return build_attack_mdp(k, AttackerParams(alpha, gamma), max_len, **kw)


class TestBuild:
    def test_state_count(self):
        m = small_model(max_len=6)
        assert m.num_states == 7 * 7 * 3
        assert len(m.states) == m.num_states

    def test_row_stochastic(self):
        small_model(k=2, alpha=0.26, gamma=0.5, max_len=8).validate(tol=1e-12)

    def test_override_reward_above_threshold(self):
        # k=2: overriding a 2-block honest chain reverses one accepted block
        m = small_model(k=2, alpha=0.26)
        rows = m.transitions(MdpState(3, 2, I), AttackAction.OVERRIDE)
        assert all(pair == (1.0, 2.0) for _, _, pair in rows)
        nxt = {(s.a, s.h, s.fork) for s, _, _ in rows}
        assert nxt == {(1, 0, I), (0, 1, R)}

    def test_override_reward_at_boundary_case(self):
        # h = k-1: nothing was accepted yet, reward collapses to (0, h+1)
        m = small_model(k=2, alpha=0.26)
        rows = m.transitions(MdpState(2, 1, I), AttackAction.OVERRIDE)
        assert all(pair == (0.0, 2.0) for _, _, pair in rows)

    def test_match_row_probability_identity(self):
        m = small_model(k=2, alpha=0.3, gamma=0.4)
        rows = m.transitions(MdpState(3, 2, R), AttackAction.MATCH)
        assert sum(p for _, p, _ in rows) == pytest.approx(1.0, abs=1e-15)
        probs = sorted(p for _, p, _ in rows)
        assert probs == pytest.approx(sorted([0.3, 0.4 * 0.7, 0.6 * 0.7]))

    def test_feasibility_rules(self):
        m = small_model(max_len=6)
        assert AttackAction.OVERRIDE not in m.feasible_actions(MdpState(2, 2, I))
        assert AttackAction.OVERRIDE in m.feasible_actions(MdpState(3, 2, I))
        assert AttackAction.MATCH not in m.feasible_actions(MdpState(3, 2, I))
        assert AttackAction.MATCH in m.feasible_actions(MdpState(3, 2, R))
        assert AttackAction.MATCH not in m.feasible_actions(MdpState(1, 2, R))

    def test_truncation_boundary_forces_reset(self):
        m = small_model(max_len=6)
        assert m.feasible_actions(MdpState(6, 3, I)) == [AttackAction.ADOPT, AttackAction.OVERRIDE]
        assert m.feasible_actions(MdpState(3, 6, I)) == [AttackAction.ADOPT]

    def test_infeasible_action_raises(self):
        m = small_model()
        with pytest.raises(ParameterError):
            m.transitions(MdpState(1, 2, I), AttackAction.OVERRIDE)

    def test_max_len_too_small(self):
        with pytest.raises(ConfigurationError):
            build_attack_mdp(5, AttackerParams(0.3), max_len=6)

    def test_bad_normalization(self):
        with pytest.raises(ParameterError):
            build_attack_mdp(1, AttackerParams(0.3), 6, "bogus")


class TestSolve:
    @pytest.mark.parametrize(
        "k,alpha,gamma,max_len",
        [(1, 0.3, 0.0, 6), (2, 0.26, 0.5, 8), (1, 0.45, 1.0, 7), (3, 0.2, 0.3, 9)],
    )
    def test_matches_lp_oracle(self, k, alpha, gamma, max_len):
        m = build_attack_mdp(k, AttackerParams(alpha, gamma), max_len)
        assert solve_ratio(m, tol=1e-8).value == pytest.approx(lp_ratio(m), abs=1e-6)

    def test_matches_lp_oracle_honest_normalization(self):
        m = build_attack_mdp(2, AttackerParams(0.3, 0.5), 8, "honest_accepted")
        assert solve_ratio(m, tol=1e-8).value == pytest.approx(lp_ratio(m), abs=1e-6)

    def test_matches_exhaustive_enumeration(self):
        # 82863 distinct deterministic stationary policies at this truncation
        m = build_attack_mdp(1, AttackerParams(0.3, 0.5), max_len=3)
        best, count = enumerate_policies_ratio(m)
        assert count == 82863
        assert best == pytest.approx(0.211674010, abs=1e-8)
        assert solve_ratio(m, tol=1e-9).value == pytest.approx(best, abs=1e-7)

    def test_value_in_unit_interval(self):
        r = solve_ratio(small_model(), tol=1e-6)
        assert 0.0 <= r.value <= 1.0
        assert r.residual < 1e-6

    def test_policy_actions_feasible(self):
        m = small_model(k=2, alpha=0.35, gamma=0.5, max_len=7)
        r = solve_ratio(m, tol=1e-6)
        for s in m.states:
            assert r.policy[s] in m.feasible_actions(s)

    def test_monotone_in_alpha(self):
        values = [
            solve_ratio(small_model(alpha=a, max_len=8), tol=1e-7).value
            for a in (0.1, 0.2, 0.3, 0.4)
        ]
        assert all(x <= y + 1e-6 for x, y in zip(values, values[1:]))

    def test_monotone_in_confirmations(self):
        values = [
            solve_ratio(small_model(k=k, alpha=0.35, max_len=10), tol=1e-7).value
            for k in (1, 2, 3)
        ]
        assert all(x >= y - 1e-6 for x, y in zip(values, values[1:]))

    def test_monotone_in_gamma(self):
        values = [
            solve_ratio(small_model(k=1, alpha=0.3, gamma=g, max_len=8), tol=1e-7).value
            for g in (0.0, 0.5, 1.0)
        ]
        assert all(x <= y + 1e-6 for x, y in zip(values, values[1:]))

    def test_sweep_cap_raises(self):
        with pytest.raises(NumericalError):
            solve_ratio(small_model(alpha=0.45, max_len=10), tol=1e-9, max_sweeps=3)

    def test_policy_value_matches_solver_value(self):
        m = small_model(k=1, alpha=0.35, gamma=0.2, max_len=6)
        r = solve_ratio(m, tol=1e-8)
        assert evaluate_policy_ratio(m, r.policy) == pytest.approx(r.value, abs=1e-6)


@pytest.fixture(scope="module")
def solved():
    m = build_attack_mdp(
        2, AttackerParams(0.26, 0.0), max_len=20, normalization="honest_accepted"
    )
    return solve_ratio(m, tol=1e-7)


class TestPolicyExtraction:
    def test_signature_override_cell(self, solved):
        table = extract_policy_table(solved, 4, 4)
        assert table.collapsed_cell(3, 2) == "o"

    def test_adopt_when_hopeless(self, solved):
        table = extract_policy_table(solved, 4, 4)
        assert table.collapsed_cell(0, 1) == "a"

    def test_unreachable_marked(self, solved):
        table = extract_policy_table(solved, 4, 4)
        assert table.collapsed_cell(0, 2) == "*"

    def test_initial_states_reachable(self, solved):
        reachable = mark_reachability(solved.model, solved.policy)
        assert MdpState(1, 0, I) in reachable
        assert MdpState(0, 1, I) in reachable

    def test_reachable_respects_fork_invariant(self, solved):
        for s in mark_reachability(solved.model, solved.policy):
            if s.fork == A:
                assert s.a >= s.h

    def test_gamma_zero_wait_match_tie_prefers_wait(self, solved):
        # with no tie-winning power the match action is value-equivalent to
        # waiting; the emitted table must show the wait
        q = scalarized_action_values(solved, MdpState(3, 3, R))
        assert q[AttackAction.MATCH] == pytest.approx(q[AttackAction.WAIT], abs=1e-7)
        assert solved.policy[MdpState(3, 3, R)] == AttackAction.WAIT

    def test_action_values_cover_feasible_set(self, solved):
        q = scalarized_action_values(solved, MdpState(3, 2, R))
        assert set(q) == set(solved.model.feasible_actions(MdpState(3, 2, R)))

    def test_grid_bounds_checked(self, solved):
        with pytest.raises(ParameterError):
            extract_policy_table(solved, 21, 5)

    def test_markdown_and_csv_render(self, solved):
        table = extract_policy_table(solved, 3, 3)
        md = table.to_markdown()
        csv = table.to_csv(triple=True)
        assert md.splitlines()[0].startswith("| a\\h |")
        assert csv.splitlines()[0] == "a/h,0,1,2,3"
        assert len(csv.splitlines()) == 5
