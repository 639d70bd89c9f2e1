"""Two-player iterated prisoner's dilemma.

Covers payoff-regime classification, the classic memory-one strategies, a
turn-taking Alternator that trades the temptation payoff back and forth,
and the discount-factor analysis deciding when sticking to the alternating
agreement beats grabbing the temptation payoff and eating punishment
forever after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Sequence

from .errors import ValidationError


class ActionPD(IntEnum):
    """Binary action; Cooperate sorts before Defect."""

    COOPERATE = 0
    DEFECT = 1

    @property
    def letter(self) -> str:
        return "C" if self is ActionPD.COOPERATE else "D"


COOPERATE = ActionPD.COOPERATE
DEFECT = ActionPD.DEFECT


class Regime(Enum):
    CLASSIC = "classic"
    ALTERNATION_FAVORING = "alternation_favoring"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class PayoffMatrix:
    """Symmetric 2x2 payoffs: temptation, reward, punishment, sucker.

    Construction requires the strict ordering T > R > P > S.
    """

    temptation: float
    reward: float
    punishment: float
    sucker: float

    def __post_init__(self):
        checks = (
            ("temptation > reward", self.temptation, self.reward),
            ("reward > punishment", self.reward, self.punishment),
            ("punishment > sucker", self.punishment, self.sucker),
        )
        for label, hi, lo in checks:
            if not hi > lo:
                raise ValidationError(
                    f"payoff ordering violated: {label} fails ({hi!r} <= {lo!r})"
                )

    def regime(self) -> Regime:
        """Classify by the sign of 2R - (T + S)."""
        gap = 2.0 * self.reward - (self.temptation + self.sucker)
        if gap > 0.0:
            return Regime.CLASSIC
        if gap < 0.0:
            return Regime.ALTERNATION_FAVORING
        return Regime.BOUNDARY

    def payoffs(self, mine: ActionPD, theirs: ActionPD) -> tuple[float, float]:
        """Payoff pair (mine, theirs) for one round."""
        if mine is COOPERATE:
            if theirs is COOPERATE:
                return self.reward, self.reward
            return self.sucker, self.temptation
        if theirs is COOPERATE:
            return self.temptation, self.sucker
        return self.punishment, self.punishment


def classify(payoff: PayoffMatrix) -> Regime:
    return payoff.regime()


def _check_discount(delta: float) -> None:
    if not 0.0 <= delta < 1.0:
        raise ValidationError(f"discount factor must lie in [0, 1), got {delta!r}")


def stick_payoff(temptation: float, sucker: float, delta: float) -> float:
    """Discounted value of the alternating stream T, S*d, T*d^2, S*d^3, ...

    Closed form (T + S*d)/(1 - d^2).
    """
    _check_discount(delta)
    return (temptation + sucker * delta) / (1.0 - delta * delta)


def deviate_payoff(temptation: float, punishment: float, delta: float) -> float:
    """Discounted value of T once, then the punishment payoff forever."""
    _check_discount(delta)
    return temptation + punishment * delta / (1.0 - delta)


@dataclass(frozen=True)
class CriticalDiscount:
    """Break-even discount between sticking and deviating.

    `solved` is found by bisecting the sign of stick - deviate, so it is
    independent of any algebraic rearrangement (it lands on
    (P - S)/(T - P)); None means no discount below 1 makes sticking pay.
    `quoted` is the commonly quoted closed form (P - S)/(T - R), reported
    alongside for comparison.
    """

    solved: float | None
    quoted: float
    note: str = ""


_BISECT_LO = 1e-9
_BISECT_HI = 1.0 - 1e-9
_BISECT_TOL = 1e-10


def discount_threshold(
    temptation: float, reward: float, punishment: float, sucker: float
) -> CriticalDiscount:
    """Locate the stick/deviate break-even discount for raw payoff values.

    Accepts degenerate orderings (e.g. punishment == sucker) that the
    PayoffMatrix constructor rejects.
    """
    quoted = (punishment - sucker) / (temptation - reward)

    def gap(delta: float) -> float:
        return stick_payoff(temptation, sucker, delta) - deviate_payoff(
            temptation, punishment, delta
        )

    if gap(_BISECT_HI) <= 0.0:
        return CriticalDiscount(
            None, quoted, "sticking never beats deviating for any discount below 1"
        )
    if gap(_BISECT_LO) >= 0.0:
        return CriticalDiscount(
            0.0, quoted, "sticking beats deviating for every positive discount"
        )
    lo, hi = _BISECT_LO, _BISECT_HI
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return CriticalDiscount(0.5 * (lo + hi), quoted)


def critical_discount(payoff: PayoffMatrix) -> CriticalDiscount:
    return discount_threshold(
        payoff.temptation, payoff.reward, payoff.punishment, payoff.sucker
    )


class Strategy:
    """Deterministic decision rule over the two visible action histories."""

    kind = "strategy"

    def bind(self, position: int) -> "Strategy":
        """Resolve per-match defaults; position 0 moves first in seat order."""
        return self

    def act(
        self, own: Sequence[ActionPD], opponent: Sequence[ActionPD]
    ) -> ActionPD:
        raise NotImplementedError


class AllCooperate(Strategy):
    kind = "all_c"

    def act(self, own, opponent):
        return COOPERATE


class AllDefect(Strategy):
    kind = "all_d"

    def act(self, own, opponent):
        return DEFECT


class TitForTat(Strategy):
    kind = "tit_for_tat"

    def act(self, own, opponent):
        return opponent[-1] if opponent else COOPERATE


class GrimTrigger(Strategy):
    kind = "grim_trigger"

    def act(self, own, opponent):
        return DEFECT if DEFECT in opponent else COOPERATE


class WinStayLoseShift(Strategy):
    kind = "win_stay_lose_shift"

    def act(self, own, opponent):
        if not own:
            return COOPERATE
        # Outcomes paying T or R are exactly those where the opponent
        # cooperated, so stay iff the opponent's last action was Cooperate.
        if opponent[-1] is COOPERATE:
            return own[-1]
        return COOPERATE if own[-1] is DEFECT else DEFECT


class Alternator(Strategy):
    """Turn-taking agreement: the pair alternates (D,C)/(C,D) so exactly one
    side collects the temptation payoff each round.

    parity "first" defects on round 0, "second" cooperates first; None
    resolves from seat order when the match starts. A partner that repeats
    its own previous action has broken the agreement and is answered with
    `punishment_length` rounds of defection (None = forever); afterwards
    play resumes on the original round-parity schedule. Repeats observed
    while a punishment is already running do not extend it.
    """

    kind = "alternator"

    def __init__(self, parity: str | None = None, punishment_length: int | None = None):
        if parity not in (None, "first", "second"):
            raise ValidationError(f"parity must be 'first' or 'second', got {parity!r}")
        if punishment_length is not None and punishment_length < 1:
            raise ValidationError("punishment_length must be >= 1 round or None")
        self.parity = parity
        self.punishment_length = punishment_length

    def bind(self, position: int) -> "Alternator":
        if self.parity is not None:
            return self
        return Alternator("first" if position == 0 else "second", self.punishment_length)

    def _pattern(self, round_index: int) -> ActionPD:
        defect_now = (round_index % 2 == 0) == (self.parity == "first")
        return DEFECT if defect_now else COOPERATE

    def act(self, own, opponent):
        if self.parity is None:
            raise ValidationError("alternator parity unresolved; set it or call bind()")
        punish_until: float = 0.0
        for t in range(1, len(opponent)):
            if t >= punish_until and opponent[t] == opponent[t - 1]:
                if self.punishment_length is None:
                    punish_until = math.inf
                else:
                    punish_until = t + 1 + self.punishment_length
        this_round = len(own)
        if this_round < punish_until:
            return DEFECT
        return self._pattern(this_round)


@dataclass(frozen=True)
class MatchConfig:
    horizon: int
    discount: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValidationError(f"horizon must be a positive integer, got {self.horizon!r}")
        _check_discount(self.discount)
        if not isinstance(self.seed, int):
            raise ValidationError("seed must be an integer")


@dataclass(frozen=True)
class MatchResult:
    trajectory: tuple[tuple[ActionPD, ActionPD], ...]
    discounted_payoffs: tuple[float, float]
    total_payoffs: tuple[float, float]
    group_payoff_per_round: float


def play_match(
    first: Strategy, second: Strategy, payoff: PayoffMatrix, config: MatchConfig
) -> MatchResult:
    """Run one match of `config.horizon` rounds.

    Both strategies see the full histories each round. group payoff is the
    mean per-agent per-round raw payoff, the natural scale for comparing a
    turn-taking pair against mutual cooperation's R.
    """
    player_x = first.bind(0)
    player_y = second.bind(1)
    hist_x: list[ActionPD] = []
    hist_y: list[ActionPD] = []
    rounds: list[tuple[ActionPD, ActionPD]] = []
    disc_x = disc_y = 0.0
    tot_x = tot_y = 0.0
    weight = 1.0
    for _ in range(config.horizon):
        ax = player_x.act(hist_x, hist_y)
        ay = player_y.act(hist_y, hist_x)
        vx, vy = payoff.payoffs(ax, ay)
        rounds.append((ax, ay))
        hist_x.append(ax)
        hist_y.append(ay)
        disc_x += weight * vx
        disc_y += weight * vy
        tot_x += vx
        tot_y += vy
        weight *= config.discount
    group = (tot_x + tot_y) / (2.0 * config.horizon)
    return MatchResult(tuple(rounds), (disc_x, disc_y), (tot_x, tot_y), group)


@dataclass(frozen=True)
class StrategyScore:
    label: str
    mean_discounted: float
    mean_group: float


@dataclass(frozen=True)
class ScoreTable:
    scores: tuple[StrategyScore, ...]


def tournament(
    strategies: Sequence[Strategy], payoff: PayoffMatrix, config: MatchConfig
) -> ScoreTable:
    """Round-robin over all ordered pairs, mirror matches included.

    Each strategy accumulates one discounted-payoff sample per seat it
    occupies (2n samples for n entrants); mean_group averages the group
    payoff of those same matches.
    """
    if len(strategies) < 2:
        raise ValidationError("tournament needs at least two strategies")
    n = len(strategies)
    labels = [f"{s.kind}#{idx}" for idx, s in enumerate(strategies)]
    disc_sum = [0.0] * n
    group_sum = [0.0] * n
    for i in range(n):
        for j in range(n):
            result = play_match(strategies[i], strategies[j], payoff, config)
            disc_sum[i] += result.discounted_payoffs[0]
            disc_sum[j] += result.discounted_payoffs[1]
            group_sum[i] += result.group_payoff_per_round
            group_sum[j] += result.group_payoff_per_round
    samples = 2 * n
    rows = tuple(
        StrategyScore(labels[i], disc_sum[i] / samples, group_sum[i] / samples)
        for i in range(n)
    )
    return ScoreTable(rows)


STRATEGY_KINDS = {
    "all_c": AllCooperate,
    "all_d": AllDefect,
    "tit_for_tat": TitForTat,
    "grim_trigger": GrimTrigger,
    "win_stay_lose_shift": WinStayLoseShift,
    "alternator": Alternator,
}


def make_strategy(kind: str, **kwargs) -> Strategy:
    """Build a strategy from its config name; only the alternator takes options."""
    if kind not in STRATEGY_KINDS:
        known = ", ".join(sorted(STRATEGY_KINDS))
        raise ValidationError(f"unknown strategy kind {kind!r} (known: {known})")
    cls = STRATEGY_KINDS[kind]
    if kwargs and cls is not Alternator:
        raise ValidationError(f"strategy {kind!r} takes no options")
    return cls(**kwargs)
