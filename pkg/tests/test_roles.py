import math
import random

import pytest

from coopdyn.errors import ValidationError
from coopdyn.roles import (
    FairnessStats,
    RotationLedger,
    SwitchPolicy,
    default_streak_midpoint,
    delayed_credit,
    deterministic_assign,
    fairness_report,
    sigmoid_switch_probability,
    stochastic_assign,
)


def run_deterministic(n_agents, k, rounds, window=None):
    ledger = RotationLedger(n_agents, window=window)
    picks = []
    for _ in range(rounds):
        assignment = deterministic_assign(ledger, k)
        picks.append(sorted(assignment.sacrificers))
    return ledger, picks


# ---------------------------------------------------------------------------
# deterministic rotation
# ---------------------------------------------------------------------------


def test_three_agents_take_turns():
    _, picks = run_deterministic(3, 1, 3)
    assert picks == [[0], [1], [2]]


def test_rotation_cycles_after_warmup():
    n = 5
    _, picks = run_deterministic(n, 1, 4 * n)
    flat = [p[0] for p in picks]
    for start in range(n, len(flat) - n + 1):
        window = flat[start : start + n]
        assert sorted(window) == list(range(n))


def test_window_blocks_recent_sacrificers():
    n, window = 4, 2
    ledger = RotationLedger(n, window=window)
    history = []
    for _ in range(12):
        assignment = deterministic_assign(ledger, 1)
        chosen = next(iter(assignment.sacrificers))
        recent = {a for picks in history[-window:] for a in picks}
        eligible_others = set(range(n)) - recent - {chosen}
        assert chosen not in recent or not eligible_others
        history.append([chosen])


def test_two_mover_cohorts_share_evenly():
    ledger, picks = run_deterministic(5, 2, 10)
    counts = {i: 0 for i in range(5)}
    for pick in picks:
        assert len(pick) == 2
        for agent in pick:
            counts[agent] += 1
    assert all(count == 4 for count in counts.values())


def test_assign_validates_cohort_size():
    ledger = RotationLedger(3)
    with pytest.raises(ValidationError):
        deterministic_assign(ledger, 0)
    with pytest.raises(ValidationError):
        deterministic_assign(ledger, 3)


def test_assignment_counts_match_recomputation():
    ledger, picks = run_deterministic(6, 2, 15)
    for record in ledger.records:
        expected = sum(1 for pick in picks if record.agent_id in pick)
        assert record.times_sacrifice == expected
        assert record.times_primary == 15 - expected


# ---------------------------------------------------------------------------
# sigmoid switching
# ---------------------------------------------------------------------------


def test_sigmoid_midpoint_and_tail():
    policy = SwitchPolicy(mode="stochastic_sigmoid", streak_midpoint=6, streak_scale=1.0)
    assert sigmoid_switch_probability(6, policy) == pytest.approx(0.5)
    tiny = SwitchPolicy(mode="stochastic_sigmoid", streak_midpoint=50, streak_scale=0.25)
    assert sigmoid_switch_probability(0, tiny) < 1e-12


def test_default_streak_midpoint_is_a_binomial_coefficient():
    assert default_streak_midpoint(4, 2) == math.comb(3, 2) == 3
    assert default_streak_midpoint(9, 3) == math.comb(8, 3)


def test_sigmoid_is_monotone_and_bounded():
    policy = SwitchPolicy(mode="stochastic_sigmoid", streak_midpoint=5, streak_scale=0.8)
    previous = -1.0
    for streak in range(0, 11):
        prob = sigmoid_switch_probability(streak, policy)
        assert 0.0 < prob < 1.0
        assert prob >= previous
        previous = prob


def test_sigmoid_requires_stochastic_mode():
    policy = SwitchPolicy(mode="deterministic_window", window=2)
    with pytest.raises(ValidationError):
        sigmoid_switch_probability(3, policy)


# ---------------------------------------------------------------------------
# stochastic assignment
# ---------------------------------------------------------------------------


def make_stochastic_ledger(n_agents, selected, streaks=None):
    ledger = RotationLedger(n_agents)
    ledger.initialize_roles(selected)
    if streaks:
        for agent_id, streak in streaks.items():
            ledger.records[agent_id].streak = streak
    return ledger


def test_low_streaks_keep_roles_with_high_probability():
    policy = SwitchPolicy(
        mode="stochastic_sigmoid", streak_midpoint=40, streak_scale=1.0
    )
    ledger = make_stochastic_ledger(6, {0, 1})
    rng = random.Random(3)
    # streaks stay far below the midpoint of 40, so flips are ~impossible
    for _ in range(15):
        assignment = stochastic_assign(ledger, policy, rng)
    assert sorted(assignment.sacrificers) == [0, 1]


def test_past_midpoint_with_tiny_scale_switches_immediately():
    policy = SwitchPolicy(
        mode="stochastic_sigmoid", streak_midpoint=3, streak_scale=1e-9
    )
    ledger = make_stochastic_ledger(4, {0}, streaks={0: 5, 1: 5, 2: 5, 3: 5})
    assignment = stochastic_assign(ledger, policy, random.Random(1))
    # every role flips: agent 0 leaves the sacrifice role, the others enter
    assert sorted(assignment.sacrificers) == [1, 2, 3]


def test_switch_rate_at_midpoint_is_one_half():
    policy = SwitchPolicy(
        mode="stochastic_sigmoid", streak_midpoint=4, streak_scale=1.0
    )
    switches = 0
    trials = 10_000
    for trial in range(trials):
        ledger = make_stochastic_ledger(1, {0}, streaks={0: 4})
        assignment = stochastic_assign(ledger, policy, random.Random(trial))
        switches += 0 not in assignment.sacrificers
    rate = switches / trials
    assert abs(rate - 0.5) < 3 * 0.005  # 3 sigma for p=1/2, n=10k


def test_stochastic_assignment_is_deterministic_given_seed():
    policy = SwitchPolicy(mode="stochastic_sigmoid", streak_midpoint=2, streak_scale=0.7)

    def trajectory(seed):
        ledger = make_stochastic_ledger(5, {0, 1})
        rng = random.Random(seed)
        return [
            tuple(sorted(stochastic_assign(ledger, policy, rng).sacrificers))
            for _ in range(20)
        ]

    assert trajectory(11) == trajectory(11)
    assert trajectory(11) != trajectory(12)


def test_streaks_reset_on_switch_and_grow_otherwise():
    policy = SwitchPolicy(
        mode="stochastic_sigmoid", streak_midpoint=3, streak_scale=1e-9
    )
    ledger = make_stochastic_ledger(2, {0}, streaks={0: 5, 1: 0})
    stochastic_assign(ledger, policy, random.Random(2))
    # agent 0 was past the midpoint and flipped: streak resets
    assert ledger.records[0].streak == 0
    # agent 1 was far below and stayed: streak advances
    assert ledger.records[1].streak == 1


# ---------------------------------------------------------------------------
# delayed credit
# ---------------------------------------------------------------------------


def credit_rounds(picks, n_agents):
    ledger = RotationLedger(n_agents)
    return [ledger.record_round(set(pick)) for pick in picks]


def test_single_sacrificer_gets_whole_outcome():
    assignments = credit_rounds([[2]], 4)
    credits = delayed_credit(assignments, 10.0)
    assert credits == {2: 10.0}


def test_zero_outcome_credits_nothing():
    assignments = credit_rounds([[0], [1]], 3)
    credits = delayed_credit(assignments, 0.0)
    assert set(credits) == {0, 1}
    assert all(value == 0.0 for value in credits.values())


def test_equal_split_among_three_waiters():
    assignments = credit_rounds([[0, 1, 2]], 5)
    credits = delayed_credit(assignments, 9.0)
    assert credits == {0: 3.0, 1: 3.0, 2: 3.0}


def test_full_outcome_each_rule():
    assignments = credit_rounds([[0, 1, 2]], 5)
    credits = delayed_credit(assignments, 9.0, rule="full_outcome_each")
    assert credits == {0: 9.0, 1: 9.0, 2: 9.0}


def test_credit_conservation_under_equal_split():
    assignments = credit_rounds([[0], [1], [0]], 4)
    credits = delayed_credit(assignments, 7.5)
    assert sum(credits.values()) == pytest.approx(7.5)


def test_delayed_credit_requires_rounds():
    with pytest.raises(ValidationError):
        delayed_credit([], 5.0)


# ---------------------------------------------------------------------------
# fairness reporting
# ---------------------------------------------------------------------------


def test_gap_closes_after_full_cycles():
    ledger, _ = run_deterministic(4, 1, 12)
    stats = fairness_report(ledger)
    assert isinstance(stats, FairnessStats)
    assert stats.primary_gap == 0
    assert stats.sacrifice_gap == 0


def test_single_round_gap_is_one():
    ledger, _ = run_deterministic(3, 1, 1)
    stats = fairness_report(ledger)
    assert stats.primary_gap == 1


def test_fairness_requires_at_least_one_round():
    with pytest.raises(ValidationError):
        fairness_report(RotationLedger(3))


def test_credited_spread_is_reported():
    ledger = RotationLedger(3)
    assignments = [deterministic_assign(ledger, 1) for _ in range(3)]
    credits = delayed_credit(assignments[:1], 6.0)
    ledger.apply_credits(credits)
    stats = fairness_report(ledger)
    assert stats.credited_spread == pytest.approx(6.0)
