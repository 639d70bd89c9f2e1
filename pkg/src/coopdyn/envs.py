"""Round-based environments binding rotation scheduling to concrete payoffs.

Two abstract settings: a dungeon where one agent per round sacrifices
itself so the others escape, and a threshold intersection where up to
`threshold` movers pass per round. Both log per-round roles and rewards,
keep a rotation ledger, and credit group outcomes back to the sacrificing
side when the episode ends.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ValidationError
from .mfg import MOVE, WAIT, MfgParams, initial_distribution_array, per_agent_reward
from .roles import (
    PRIMARY,
    SACRIFICE,
    FairnessStats,
    RoleAssignment,
    RotationLedger,
    SwitchPolicy,
    delayed_credit,
    deterministic_assign,
    fairness_report,
    rotation_priority,
    stochastic_selection,
)


def _default_switch(n_agents: int) -> SwitchPolicy:
    return SwitchPolicy(mode="deterministic_window", window=max(1, n_agents - 1))


# ---------------------------------------------------------------------------
# dungeon
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DungeonConfig:
    """One sacrificer per round enables n_agents - 1 escapes."""

    n_agents: int = 3
    rounds: int = 6
    success_reward: float = 1.0
    sacrifice_cost: float = 1.0
    switch: SwitchPolicy | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_agents, int) or self.n_agents < 2:
            raise ValidationError("dungeon needs at least two agents")
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValidationError("rounds must be a positive integer")


@dataclass(frozen=True)
class DungeonRound:
    round_index: int
    sacrificer: int
    success: bool
    rewards: tuple[float, ...]
    agent_states: tuple[tuple[int, str, int, int], ...] = ()


@dataclass(frozen=True)
class DungeonResult:
    rounds: tuple[DungeonRound, ...]
    ledger: RotationLedger
    fairness: FairnessStats
    credits: dict[int, float]


def run_dungeon(config: DungeonConfig) -> DungeonResult:
    """Play the dungeon for the configured rounds.

    Deterministic mode rotates the sacrifice via the memory window;
    stochastic mode draws volunteers by streak-keyed sigmoid flips, then
    resolves to exactly one sacrificer with the deterministic priority so
    a round can never fail for lack of a volunteer.
    """
    switch = config.switch or _default_switch(config.n_agents)
    ledger = RotationLedger(
        config.n_agents,
        window=switch.window if switch.mode == "deterministic_window" else None,
        rotated_role=SACRIFICE,
    )
    rng = random.Random(config.seed)
    stochastic = switch.mode == "stochastic_sigmoid"
    if stochastic:
        ledger.initialize_roles({0})
    rows = []
    assignments: list[RoleAssignment] = []
    for round_index in range(config.rounds):
        if stochastic:
            volunteers = stochastic_selection(ledger, switch, rng)
            pool = [ledger.records[a] for a in sorted(volunteers)] or ledger.records
            chosen = min(pool, key=lambda rec: rotation_priority(rec, SACRIFICE))
            assignment = ledger.record_round({chosen.agent_id})
        else:
            assignment = deterministic_assign(ledger, 1)
        sacrificer = next(iter(assignment.sacrificers))
        rewards = [config.success_reward] * config.n_agents
        rewards[sacrificer] = -config.sacrifice_cost
        rows.append(
            DungeonRound(
                round_index=round_index,
                sacrificer=sacrificer,
                success=True,
                rewards=tuple(rewards),
                agent_states=ledger.round_snapshot(),
            )
        )
        assignments.append(assignment)
    escapes_value = config.success_reward * (config.n_agents - 1)
    credits: dict[int, float] = {}
    for assignment in assignments:
        for agent, amount in delayed_credit([assignment], escapes_value).items():
            credits[agent] = credits.get(agent, 0.0) + amount
    ledger.apply_credits(credits)
    return DungeonResult(
        rounds=tuple(rows),
        ledger=ledger,
        fairness=fairness_report(ledger),
        credits=credits,
    )


# ---------------------------------------------------------------------------
# intersection
# ---------------------------------------------------------------------------

ASSIGNMENT_MODES = ("static", "rotation", "stochastic", "policy")


@dataclass(frozen=True)
class IntersectionConfig:
    """Per round, a mover set forms; if its size stays within the threshold
    all movers pass, otherwise nobody does. Rewards are evaluated at the
    realized mover count."""

    n_agents: int
    threshold: int
    rounds: int
    cohort: int | None = None
    assignment: str = "rotation"
    params: MfgParams | None = None
    switch: SwitchPolicy | None = None
    static_movers: tuple[int, ...] | None = None
    credit_waiters: bool = True
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_agents, int) or self.n_agents < 2:
            raise ValidationError("intersection needs at least two agents")
        if not isinstance(self.threshold, int) or not 0 < self.threshold < self.n_agents:
            raise ValidationError("threshold must satisfy 0 < threshold < n_agents")
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValidationError("rounds must be a positive integer")
        if self.assignment not in ASSIGNMENT_MODES:
            raise ValidationError(
                f"assignment must be one of {ASSIGNMENT_MODES}, got {self.assignment!r}"
            )
        if self.cohort is None:
            object.__setattr__(self, "cohort", self.threshold)
        if not 1 <= self.cohort < self.n_agents:
            raise ValidationError("cohort must satisfy 1 <= cohort < n_agents")
        if self.params is not None:
            if self.params.n_agents != self.n_agents:
                raise ValidationError("params.n_agents must match the environment")
            if self.params.threshold != self.threshold:
                raise ValidationError("params.threshold must match the environment")
        if self.static_movers is not None:
            ids = set(self.static_movers)
            if not all(0 <= i < self.n_agents for i in ids):
                raise ValidationError("static_movers ids out of range")


@dataclass(frozen=True)
class IntersectionRound:
    round_index: int
    movers: frozenset[int]
    n_moved: int
    passed: bool
    rewards: tuple[float, ...]
    agent_states: tuple[tuple[int, str, int, int], ...] = ()


@dataclass(frozen=True)
class IntersectionResult:
    rounds: tuple[IntersectionRound, ...]
    ledger: RotationLedger
    fairness: FairnessStats
    credits: dict[int, float]


def _sample_categorical(rng: random.Random, probs) -> int:
    u = rng.random()
    acc = 0.0
    for idx, p in enumerate(probs):
        acc += p
        if u < acc:
            return idx
    return len(probs) - 1


def intersection_episode(config: IntersectionConfig, policy=None) -> IntersectionResult:
    """Run one intersection episode under the configured mover source.

    static keeps one mover set forever (the stagnation case); rotation and
    stochastic rotate it through the ledger; policy samples each agent's
    action from a solved policy table given the previous realized count.
    When rounds pass, the movers' combined haul is credited to that
    round's waiters in equal shares at episode end.
    """
    params = config.params or MfgParams(
        n_agents=config.n_agents, threshold=config.threshold
    )
    ledger = RotationLedger(config.n_agents, rotated_role=PRIMARY)
    rng = random.Random(config.seed)
    switch = config.switch
    if config.assignment == "stochastic":
        if switch is None or switch.mode != "stochastic_sigmoid":
            raise ValidationError("stochastic assignment needs a stochastic_sigmoid switch")
        ledger.initialize_roles(set(range(config.cohort)))
    if config.assignment == "policy":
        if policy is None:
            raise ValidationError("policy assignment needs a policy table")
        horizon = policy.shape[0]
        state = _sample_categorical(rng, initial_distribution_array(params))
    statics = (
        frozenset(config.static_movers)
        if config.static_movers is not None
        else frozenset(range(config.cohort))
    )
    rows = []
    assignments: list[RoleAssignment] = []
    for round_index in range(config.rounds):
        if config.assignment == "static":
            assignment = ledger.record_round(statics)
        elif config.assignment == "rotation":
            assignment = deterministic_assign(ledger, config.cohort)
        elif config.assignment == "stochastic":
            assignment = ledger.record_round(stochastic_selection(ledger, switch, rng))
        else:
            t = min(round_index, horizon - 1)
            movers = {
                agent
                for agent in range(config.n_agents)
                if rng.random() < policy[t, state, MOVE]
            }
            assignment = ledger.record_round(movers)
        movers = assignment.primaries
        n_moved = len(movers)
        passed = n_moved <= config.threshold
        rewards = tuple(
            per_agent_reward(MOVE if agent in movers else WAIT, n_moved, params)
            for agent in range(config.n_agents)
        )
        if config.assignment == "policy":
            state = n_moved
        rows.append(
            IntersectionRound(
                round_index=round_index,
                movers=movers,
                n_moved=n_moved,
                passed=passed,
                rewards=rewards,
                agent_states=ledger.round_snapshot(),
            )
        )
        assignments.append(assignment)
    credits: dict[int, float] = {}
    if config.credit_waiters:
        for row, assignment in zip(rows, assignments):
            if not row.passed or not assignment.sacrificers:
                continue
            haul = sum(row.rewards[agent] for agent in row.movers)
            for agent, amount in delayed_credit([assignment], haul).items():
                credits[agent] = credits.get(agent, 0.0) + amount
    ledger.apply_credits(credits)
    return IntersectionResult(
        rounds=tuple(rows),
        ledger=ledger,
        fairness=fairness_report(ledger),
        credits=credits,
    )
