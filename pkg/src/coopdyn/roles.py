"""Role rotation with fairness bookkeeping.

A round-based scheduler hands the scarce role (the dungeon sacrificer, the
intersection mover cohort) to k agents per round. Deterministic mode picks
the least-served eligible agents, where eligible means not having held the
role within a sliding memory window; stochastic mode lets every agent flip
roles independently with a sigmoid probability of its streak length.
Group outcomes produced by the sacrificing side are credited back to it
when the episode ends (delayed credit).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ValidationError

SACRIFICE = "sacrifice"
PRIMARY = "primary"

CREDIT_RULES = ("equal_split", "full_outcome_each")


@dataclass
class AgentRecord:
    """Per-agent rotation memory.

    `window` holds flags for the most recent rounds, True where the agent
    held the rotated role. `streak` counts consecutive earlier rounds spent
    in the current role and resets to 0 whenever the role changes.
    """

    agent_id: int
    window: deque = field(repr=False)
    streak: int = 0
    times_primary: int = 0
    times_sacrifice: int = 0
    credited_reward: float = 0.0
    last_selected_round: int | None = None
    role: str | None = None


@dataclass(frozen=True)
class RoleAssignment:
    round_index: int
    sacrificers: frozenset[int]
    primaries: frozenset[int]


class RotationLedger:
    """Single-writer rotation state for one environment instance.

    `rotated_role` names the role the scheduler's selected set receives:
    "sacrifice" for dungeon-style selection of who gives itself up,
    "primary" for intersection-style selection of who gets to move.
    """

    def __init__(self, n_agents: int, window: int | None = None,
                 rotated_role: str = SACRIFICE):
        if not isinstance(n_agents, int) or n_agents < 1:
            raise ValidationError("n_agents must be a positive integer")
        if window is None:
            window = max(1, n_agents - 1)
        if not isinstance(window, int) or window < 1:
            raise ValidationError("window must be a positive integer")
        if rotated_role not in (SACRIFICE, PRIMARY):
            raise ValidationError(
                f"rotated_role must be {SACRIFICE!r} or {PRIMARY!r}"
            )
        self.n_agents = n_agents
        self.window_length = window
        self.rotated_role = rotated_role
        self.records = [
            AgentRecord(agent_id=i, window=deque(maxlen=window))
            for i in range(n_agents)
        ]
        self.rounds_completed = 0

    def initialize_roles(self, selected: Iterable[int]) -> None:
        """Seed current roles without consuming a round (stochastic mode
        needs a starting assignment to flip from)."""
        selected = self._checked_ids(selected)
        other = PRIMARY if self.rotated_role == SACRIFICE else SACRIFICE
        for record in self.records:
            record.role = self.rotated_role if record.agent_id in selected else other
            record.streak = 0

    def record_round(self, selected: Iterable[int]) -> RoleAssignment:
        """Commit one round's selection and update all per-agent memory."""
        selected = self._checked_ids(selected)
        other = PRIMARY if self.rotated_role == SACRIFICE else SACRIFICE
        for record in self.records:
            now_selected = record.agent_id in selected
            role_now = self.rotated_role if now_selected else other
            record.streak = record.streak + 1 if record.role == role_now else 0
            record.role = role_now
            record.window.append(now_selected)
            if role_now == SACRIFICE:
                record.times_sacrifice += 1
            else:
                record.times_primary += 1
            if now_selected:
                record.last_selected_round = self.rounds_completed
        self.rounds_completed += 1
        if self.rotated_role == SACRIFICE:
            sacrificers = selected
        else:
            sacrificers = frozenset(range(self.n_agents)) - selected
        return RoleAssignment(
            round_index=self.rounds_completed - 1,
            sacrificers=frozenset(sacrificers),
            primaries=frozenset(range(self.n_agents)) - frozenset(sacrificers),
        )

    def apply_credits(self, credits: dict[int, float]) -> None:
        for agent_id, amount in credits.items():
            self.records[agent_id].credited_reward += amount

    def round_snapshot(self) -> tuple[tuple[int, str, int, int], ...]:
        """(agent_id, role, streak, times_sacrifice) per agent, for logs."""
        return tuple(
            (rec.agent_id, rec.role or "", rec.streak, rec.times_sacrifice)
            for rec in self.records
        )

    def _checked_ids(self, ids: Iterable[int]) -> frozenset[int]:
        ids = frozenset(ids)
        if not all(0 <= i < self.n_agents for i in ids):
            raise ValidationError("agent ids out of range")
        return ids


def rotation_priority(record: AgentRecord, rotated_role: str):
    """Sort key for who serves next: fewest times served, then longest
    since last serving, then lowest id."""
    served = (
        record.times_sacrifice if rotated_role == SACRIFICE else record.times_primary
    )
    last = record.last_selected_round
    return (served, -1 if last is None else last, record.agent_id)


def deterministic_assign(ledger: RotationLedger, k: int) -> RoleAssignment:
    """Hand the rotated role to the k least-served eligible agents.

    Eligible agents have not held the role within their memory window;
    ties break by fewest times served, then longest since last serving,
    then lowest id. If fewer than k agents are eligible the same ordering
    is applied to everyone rather than deadlocking.
    """
    if not isinstance(k, int) or not 1 <= k < ledger.n_agents:
        raise ValidationError(
            f"cohort size must satisfy 1 <= k < n_agents, got {k!r}"
        )
    eligible = [rec for rec in ledger.records if not any(rec.window)]
    pool = eligible if len(eligible) >= k else ledger.records
    chosen = sorted(pool, key=lambda rec: rotation_priority(rec, ledger.rotated_role))[:k]
    return ledger.record_round({rec.agent_id for rec in chosen})


@dataclass(frozen=True)
class SwitchPolicy:
    """How roles rotate: a deterministic memory window, or stochastic
    sigmoid switching with midpoint `streak_midpoint` (conventionally the
    binomial count of possible mover cohorts excluding oneself) and scale
    `streak_scale`."""

    mode: str
    window: int = 1
    streak_midpoint: float = 1.0
    streak_scale: float = 1.0

    def __post_init__(self):
        if self.mode not in ("deterministic_window", "stochastic_sigmoid"):
            raise ValidationError(
                "mode must be 'deterministic_window' or 'stochastic_sigmoid'"
            )
        if not isinstance(self.window, int) or self.window < 1:
            raise ValidationError("window must be a positive integer")
        if self.streak_midpoint < 1:
            raise ValidationError("streak_midpoint must be >= 1")
        if not self.streak_scale > 0:
            raise ValidationError("streak_scale must be positive")


def default_streak_midpoint(n_agents: int, cohort: int) -> int:
    """Number of possible cohorts among the other agents: C(n-1, cohort)."""
    if not 0 < cohort < n_agents:
        raise ValidationError("cohort must satisfy 0 < cohort < n_agents")
    return math.comb(n_agents - 1, cohort)


def sigmoid_switch_probability(streak: int, policy: SwitchPolicy) -> float:
    """Probability of abandoning the current role after `streak` rounds."""
    if policy.mode != "stochastic_sigmoid":
        raise ValidationError("switch probability requires stochastic_sigmoid mode")
    if streak < 0:
        raise ValidationError("streak must be nonnegative")
    x = (streak - policy.streak_midpoint) / policy.streak_scale
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def stochastic_selection(ledger: RotationLedger, policy: SwitchPolicy, rng) -> set[int]:
    """Draw the next rotated-role holders without recording the round:
    every agent independently flips roles with its streak-keyed sigmoid
    probability. The result may have any size."""
    if policy.mode != "stochastic_sigmoid":
        raise ValidationError("stochastic selection requires stochastic_sigmoid mode")
    if any(record.role is None for record in ledger.records):
        raise ValidationError("roles are uninitialized; call initialize_roles first")
    selected = set()
    for record in ledger.records:
        flip = rng.random() < sigmoid_switch_probability(record.streak, policy)
        holds_rotated = record.role == ledger.rotated_role
        if holds_rotated != flip:
            selected.add(record.agent_id)
    return selected


def stochastic_assign(ledger: RotationLedger, policy: SwitchPolicy, rng) -> RoleAssignment:
    """Commit one stochastically drawn round."""
    return ledger.record_round(stochastic_selection(ledger, policy, rng))


def delayed_credit(
    assignments: Sequence[RoleAssignment],
    group_outcome: float,
    rule: str = "equal_split",
) -> dict[int, float]:
    """Credit the episode's group outcome to its sacrifice-role agents.

    equal_split divides the outcome evenly among the beneficiaries;
    full_outcome_each hands every beneficiary the whole outcome.
    """
    if not assignments:
        raise ValidationError("episode has no role assignments to credit")
    if rule not in CREDIT_RULES:
        raise ValidationError(f"unknown credit rule {rule!r}; choose from {CREDIT_RULES}")
    beneficiaries = sorted({a for asg in assignments for a in asg.sacrificers})
    if not beneficiaries:
        return {}
    share = group_outcome if rule == "full_outcome_each" else group_outcome / len(beneficiaries)
    return {agent: share for agent in beneficiaries}


@dataclass(frozen=True)
class AgentFairness:
    agent_id: int
    times_primary: int
    times_sacrifice: int
    credited_reward: float


@dataclass(frozen=True)
class FairnessStats:
    per_agent: tuple[AgentFairness, ...]
    primary_gap: int
    sacrifice_gap: int
    credited_spread: float


def fairness_report(ledger: RotationLedger) -> FairnessStats:
    """Count gaps and credited-reward dispersion across all agents."""
    if ledger.rounds_completed < 1:
        raise ValidationError("fairness report needs at least one completed round")
    rows = tuple(
        AgentFairness(
            agent_id=rec.agent_id,
            times_primary=rec.times_primary,
            times_sacrifice=rec.times_sacrifice,
            credited_reward=rec.credited_reward,
        )
        for rec in ledger.records
    )
    primary = [row.times_primary for row in rows]
    sacrifice = [row.times_sacrifice for row in rows]
    credited = [row.credited_reward for row in rows]
    return FairnessStats(
        per_agent=rows,
        primary_gap=max(primary) - min(primary),
        sacrifice_gap=max(sacrifice) - min(sacrifice),
        credited_spread=max(credited) - min(credited),
    )
