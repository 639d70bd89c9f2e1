"""Discrete-time mean-field game for a threshold intersection.

The shared state j in {0..N} is how many agents moved last round. Each
agent picks wait (0) or move (1); the other N-1 agents are modelled as
moving i.i.d. with the population policy's move probability at the current
state, so the next count is own action + Binomial(N-1, p). The module
provides the reward/utility evaluation, the exact binomial transition
closure, forward distribution flow, backward action-value recursion with a
hard max, Boltzmann policy extraction, a damped fixed-point equilibrium
solver, a best-response exploitability certificate, and a finite-population
Monte Carlo consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalIntegrityError, ValidationError

WAIT = 0
MOVE = 1

# distributions produced here must stay normalized to this drift bound
_DRIFT_TOL = 1e-12
# inputs are allowed a looser slack: callers may have accumulated rounding
_INPUT_TOL = 1e-9


@dataclass(frozen=True)
class RewardTable:
    """Per-round rewards for the four (action, congestion) cases.

    Moving through a clear intersection pays best, waiting while it is
    clear is still decent, waiting in congestion pays little, moving into
    congestion pays least.
    """

    move_clear: float = 1.0
    wait_clear: float = 0.6
    wait_congested: float = 0.2
    move_congested: float = 0.0

    def __post_init__(self):
        ok = (
            self.move_clear > self.wait_clear >= self.wait_congested
            > self.move_congested
        )
        if not ok:
            raise ValidationError(
                "reward table must satisfy move_clear > wait_clear >= "
                "wait_congested > move_congested"
            )


@dataclass(frozen=True)
class MfgParams:
    """Model parameters.

    n_agents is the population size N used both by the binomial closure and
    the finite-population simulator; threshold is the congestion cutoff
    (state j <= threshold counts as clear). reward_mode picks between the
    four-case table and the logistic formula with `smoothing` width and
    `reward_offset` added on top. consistency_weight penalizes |j -
    threshold| inside the utility and preference_baseline shifts it.
    initial_distribution is the state law at t=0 (default: point mass at 0,
    nobody moved before the first round).
    """

    n_agents: int
    threshold: int
    discount: float = 0.9
    smoothing: float = 1.0
    reward_offset: float = 0.0
    consistency_weight: float = 0.0
    preference_baseline: float = 0.0
    temperature: float = 1.0
    horizon: int = 30
    reward_mode: str = "table"
    reward_table: RewardTable = RewardTable()
    initial_distribution: tuple[float, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.n_agents, int) or self.n_agents < 2:
            raise ValidationError("n_agents must be an integer >= 2")
        if not isinstance(self.threshold, int) or not 0 < self.threshold < self.n_agents:
            raise ValidationError("threshold must satisfy 0 < threshold < n_agents")
        if not 0.0 <= self.discount < 1.0:
            raise ValidationError("discount must lie in [0, 1)")
        if not self.smoothing > 0.0:
            raise ValidationError("smoothing must be positive")
        if not self.temperature > 0.0:
            raise ValidationError("temperature must be positive")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValidationError("horizon must be a positive integer")
        if self.consistency_weight < 0.0:
            raise ValidationError("consistency_weight must be nonnegative")
        if self.reward_mode not in ("table", "formula"):
            raise ValidationError("reward_mode must be 'table' or 'formula'")
        if self.initial_distribution is not None:
            dist = np.asarray(self.initial_distribution, dtype=float)
            if dist.shape != (self.n_agents + 1,):
                raise ValidationError(
                    "initial_distribution must have n_agents + 1 entries"
                )
            _check_distribution(dist, "initial_distribution")


def default_params() -> MfgParams:
    """The canonical demo instance used throughout the docs and tests."""
    return MfgParams(n_agents=20, threshold=8, discount=0.9, temperature=0.2, horizon=30)


def initial_distribution_array(params: MfgParams) -> np.ndarray:
    if params.initial_distribution is None:
        dist = np.zeros(params.n_agents + 1)
        dist[0] = 1.0
        return dist
    dist = np.asarray(params.initial_distribution, dtype=float)
    return dist / dist.sum()


def _check_distribution(dist: np.ndarray, label: str) -> None:
    if np.any(dist < -_INPUT_TOL):
        raise ValidationError(f"{label} has negative entries")
    if abs(float(dist.sum()) - 1.0) > _INPUT_TOL:
        raise ValidationError(f"{label} is not normalized (sum={dist.sum()!r})")


def _check_policy_slice(policy: np.ndarray, n_agents: int) -> None:
    if policy.shape != (n_agents + 1, 2):
        raise ValidationError(
            f"policy slice must have shape ({n_agents + 1}, 2), got {policy.shape}"
        )
    rows = policy.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > _INPUT_TOL or np.any(policy < -_INPUT_TOL):
        raise ValidationError("policy rows must be probability pairs")


def _check_policy(policy: np.ndarray, params: MfgParams) -> np.ndarray:
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (params.horizon, params.n_agents + 1, 2):
        raise ValidationError(
            "policy must have shape (horizon, n_agents + 1, 2); got "
            f"{policy.shape} for horizon {params.horizon}, N {params.n_agents}"
        )
    return policy


# ---------------------------------------------------------------------------
# rewards and utilities
# ---------------------------------------------------------------------------


def _logistic(x):
    """1 / (1 + exp(x)), overflow-safe, elementwise."""
    x = np.asarray(x, dtype=float)
    shrink = np.exp(-np.abs(x))
    out = np.where(x >= 0.0, shrink / (1.0 + shrink), 1.0 / (1.0 + shrink))
    return out if out.ndim else float(out)


def _check_action_state(action: int, count: int, params: MfgParams) -> None:
    if action not in (WAIT, MOVE):
        raise ValidationError(f"action must be {WAIT} (wait) or {MOVE} (move)")
    if not 0 <= count <= params.n_agents:
        raise ValidationError(
            f"state count must lie in [0, {params.n_agents}], got {count!r}"
        )


def per_agent_reward(action: int, count: int, params: MfgParams) -> float:
    """Reward for one agent given its action and the current mover count."""
    _check_action_state(action, count, params)
    if params.reward_mode == "table":
        table = params.reward_table
        clear = count <= params.threshold
        if action == MOVE:
            return table.move_clear if clear else table.move_congested
        return table.wait_clear if clear else table.wait_congested
    exponent = (1 - 2 * action) * (params.threshold - count) / params.smoothing
    return _logistic(exponent) + params.reward_offset


def group_reward(distribution, action: int, params: MfgParams) -> float:
    """Expectation of the logistic reward term over the mean field, plus
    the constant offset."""
    if action not in (WAIT, MOVE):
        raise ValidationError(f"action must be {WAIT} (wait) or {MOVE} (move)")
    dist = np.asarray(distribution, dtype=float)
    if dist.shape != (params.n_agents + 1,):
        raise ValidationError("distribution length must be n_agents + 1")
    _check_distribution(dist, "distribution")
    counts = np.arange(params.n_agents + 1, dtype=float)
    terms = _logistic((1 - 2 * action) * (params.threshold - counts) / params.smoothing)
    return float(dist @ terms) + params.reward_offset


def utility(action: int, count: int, params: MfgParams) -> float:
    """Per-agent reward minus the consistency penalty, plus the baseline."""
    base = per_agent_reward(action, count, params)
    penalty = params.consistency_weight * abs(count - params.threshold)
    return base - penalty + params.preference_baseline


def utility_table(params: MfgParams) -> np.ndarray:
    """Utilities as an (n_agents + 1, 2) array indexed by (state, action)."""
    out = np.empty((params.n_agents + 1, 2))
    for j in range(params.n_agents + 1):
        out[j, WAIT] = utility(WAIT, j, params)
        out[j, MOVE] = utility(MOVE, j, params)
    return out


# ---------------------------------------------------------------------------
# binomial transition closure
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _log_binomial_coefficients(n: int) -> np.ndarray:
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, n + 1)))))
    out = log_fact[n] - log_fact - log_fact[::-1]
    out.setflags(write=False)
    return out


def _binomial_pmf(n: int, prob: float) -> np.ndarray:
    if prob <= 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if prob >= 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    k = np.arange(n + 1, dtype=float)
    log_pmf = (
        _log_binomial_coefficients(n)
        + k * math.log(prob)
        + (n - k) * math.log1p(-prob)
    )
    pmf = np.exp(log_pmf)
    return pmf / pmf.sum()


def _binomial_pmf_rows(n: int, probs: np.ndarray) -> np.ndarray:
    """Row r holds the Binomial(n, probs[r]) pmf; rows are renormalized.

    Duplicate probabilities (common under near-constant policies) are
    computed once and scattered back.
    """
    probs = np.asarray(probs, dtype=float)
    unique, inverse = np.unique(probs, return_inverse=True)
    rows = np.empty((unique.size, n + 1))
    interior = (unique > 0.0) & (unique < 1.0)
    if np.any(interior):
        p = unique[interior][:, None]
        k = np.arange(n + 1, dtype=float)[None, :]
        log_pmf = _log_binomial_coefficients(n)[None, :] + k * np.log(p) + (
            n - k
        ) * np.log1p(-p)
        pmf = np.exp(log_pmf)
        rows[interior] = pmf / pmf.sum(axis=1, keepdims=True)
    rows[unique <= 0.0] = 0.0
    rows[unique <= 0.0, 0] = 1.0
    rows[unique >= 1.0] = 0.0
    rows[unique >= 1.0, n] = 1.0
    return rows[inverse]


def transition_distribution(action: int, move_probability: float, n_agents: int) -> np.ndarray:
    """Law of the next count: own action plus Binomial(n_agents - 1, p).

    The kernel depends on the current state only through the population's
    move probability there, which the caller passes directly.
    """
    if action not in (WAIT, MOVE):
        raise ValidationError(f"action must be {WAIT} (wait) or {MOVE} (move)")
    if not 0.0 <= move_probability <= 1.0:
        raise ValidationError("move_probability must lie in [0, 1]")
    if not isinstance(n_agents, int) or n_agents < 2:
        raise ValidationError("n_agents must be an integer >= 2")
    out = np.zeros(n_agents + 1)
    pmf = _binomial_pmf(n_agents - 1, move_probability)
    out[action : action + n_agents] = pmf
    return out


def evolve_distribution(distribution, policy_slice, params: MfgParams) -> np.ndarray:
    """One forward step of the mean-field distribution under a policy slice."""
    dist = np.asarray(distribution, dtype=float)
    policy_slice = np.asarray(policy_slice, dtype=float)
    if dist.shape != (params.n_agents + 1,):
        raise ValidationError("distribution length must be n_agents + 1")
    _check_distribution(dist, "distribution")
    _check_policy_slice(policy_slice, params.n_agents)
    n = params.n_agents
    kernels = _binomial_pmf_rows(n - 1, policy_slice[:, MOVE])
    out = np.zeros(n + 1)
    out[:n] += (dist * policy_slice[:, WAIT]) @ kernels
    out[1:] += (dist * policy_slice[:, MOVE]) @ kernels
    drift = abs(float(out.sum()) - 1.0)
    if drift > _DRIFT_TOL:
        raise NumericalIntegrityError(
            f"distribution drifted by {drift:.3e} in one evolution step"
        )
    return out / out.sum()


def forward_flow(policy, params: MfgParams) -> np.ndarray:
    """Distribution at every t in {0..horizon} under the given policy."""
    policy = _check_policy(policy, params)
    flow = np.empty((params.horizon + 1, params.n_agents + 1))
    flow[0] = initial_distribution_array(params)
    for t in range(params.horizon):
        flow[t + 1] = evolve_distribution(flow[t], policy[t], params)
    return flow


# ---------------------------------------------------------------------------
# policies and values
# ---------------------------------------------------------------------------


def softmax_policy(values, temperature: float) -> np.ndarray:
    """Boltzmann probabilities over the last axis, max-subtracted for
    stability; temperature 1 reproduces the plain exponential weighting."""
    if not temperature > 0.0:
        raise ValidationError("temperature must be positive")
    q = np.asarray(values, dtype=float)
    if not np.isfinite(q).all():
        raise NumericalIntegrityError("softmax input contains non-finite values")
    z = (q - q.max(axis=-1, keepdims=True)) / temperature
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def uniform_policy(params: MfgParams) -> np.ndarray:
    return np.full((params.horizon, params.n_agents + 1, 2), 0.5)


@dataclass(frozen=True)
class ActionValueTable:
    """q[t, j, a] with a zero terminal layer at t = horizon and v = max_a q.

    Ties in the max resolve to wait by convention (argmax order).
    """

    q: np.ndarray
    v: np.ndarray


def bellman_backward(policy, params: MfgParams) -> ActionValueTable:
    """Backward action-value recursion against the policy-induced kernels.

    q[t, j, a] = U(a, j) + discount * E[v[t+1, j']] where j' = a +
    Binomial(N-1, policy move probability at (t, j)) and v = max over
    actions. A single exact pass; rerunning on identical inputs is
    bit-identical.
    """
    policy = _check_policy(policy, params)
    n, horizon = params.n_agents, params.horizon
    utilities = utility_table(params)
    q = np.zeros((horizon + 1, n + 1, 2))
    v = np.zeros((horizon + 1, n + 1))
    for t in reversed(range(horizon)):
        kernels = _binomial_pmf_rows(n - 1, policy[t][:, MOVE])
        q[t, :, WAIT] = utilities[:, WAIT] + params.discount * (kernels @ v[t + 1, :n])
        q[t, :, MOVE] = utilities[:, MOVE] + params.discount * (kernels @ v[t + 1, 1:])
        v[t] = np.maximum(q[t, :, WAIT], q[t, :, MOVE])
    return ActionValueTable(q=q, v=v)


def _policy_values(policy: np.ndarray, params: MfgParams) -> np.ndarray:
    """Value of following the mixed policy itself, per (t, j)."""
    n, horizon = params.n_agents, params.horizon
    utilities = utility_table(params)
    v = np.zeros((horizon + 1, n + 1))
    for t in reversed(range(horizon)):
        kernels = _binomial_pmf_rows(n - 1, policy[t][:, MOVE])
        q_wait = utilities[:, WAIT] + params.discount * (kernels @ v[t + 1, :n])
        q_move = utilities[:, MOVE] + params.discount * (kernels @ v[t + 1, 1:])
        v[t] = policy[t][:, WAIT] * q_wait + policy[t][:, MOVE] * q_move
    return v


def best_response_gap(policy, params: MfgParams, initial=None) -> float:
    """How much a single greedy deviator gains over the mixed policy.

    Both values are computed against the kernels the policy induces; the
    gap is averaged over the initial state distribution. Nonnegative up to
    rounding for any policy.
    """
    policy = _check_policy(policy, params)
    if initial is None:
        initial = initial_distribution_array(params)
    initial = np.asarray(initial, dtype=float)
    greedy = bellman_backward(policy, params).v[0]
    mixed = _policy_values(policy, params)[0]
    return float(initial @ (greedy - mixed))


# ---------------------------------------------------------------------------
# equilibrium solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumResult:
    """Solver output: the damped fixed-point policy, the distribution flow
    and greedy values consistent with it, per-iteration max-norm residuals,
    the best-response gap certificate, and the convergence flag.
    Non-convergence is reported here, never raised."""

    policy: np.ndarray
    flow: np.ndarray
    values: ActionValueTable
    iterations: int
    residual_history: tuple[tuple[float, float], ...]
    exploitability: float
    converged: bool


def exploitability(result: EquilibriumResult, params: MfgParams) -> float:
    """Best-response gap of an equilibrium result, weighted by its own
    initial distribution."""
    return best_response_gap(result.policy, params, result.flow[0])


def solve_equilibrium(
    params: MfgParams,
    tol: float = 1e-8,
    max_iter: int = 500,
    damping: float = 0.5,
) -> EquilibriumResult:
    """Damped fixed-point iteration for the equilibrium policy.

    Starting from the uniform policy, each sweep recomputes action values
    against the current policy's kernels, extracts the Boltzmann target,
    and moves the policy a `damping` fraction toward it. The policy
    residual is the max-norm gap between policy and target; the
    distribution residual is the max-norm change of the forward flow
    between sweeps. Convergence requires both below tol. tol=0 disables
    the stopping test and runs exactly max_iter sweeps.
    """
    if tol < 0.0:
        raise ValidationError("tol must be nonnegative")
    if not 0.0 < damping <= 1.0:
        raise ValidationError("damping must lie in (0, 1]")
    if not isinstance(max_iter, int) or max_iter < 1:
        raise ValidationError("max_iter must be a positive integer")

    policy = uniform_policy(params)
    flow_prev = forward_flow(policy, params)
    history: list[tuple[float, float]] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        table = bellman_backward(policy, params)
        target = softmax_policy(table.q[: params.horizon], params.temperature)
        policy_residual = float(np.max(np.abs(target - policy)))
        policy = (1.0 - damping) * policy + damping * target
        flow = forward_flow(policy, params)
        dist_residual = float(np.max(np.abs(flow - flow_prev)))
        flow_prev = flow
        if not (np.isfinite(policy).all() and np.isfinite(flow).all()):
            raise NumericalIntegrityError("solver produced non-finite values")
        history.append((policy_residual, dist_residual))
        if tol > 0.0 and policy_residual < tol and dist_residual < tol:
            converged = True
            break

    values = bellman_backward(policy, params)
    gap = best_response_gap(policy, params, flow_prev[0])
    return EquilibriumResult(
        policy=policy,
        flow=flow_prev,
        values=values,
        iterations=iterations,
        residual_history=tuple(history),
        exploitability=gap,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# finite-population Monte Carlo check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalStats:
    """Finite-population simulation summary.

    state_frequencies[t, j] is the fraction of episodes whose state at t
    was j; deviation is sup_t |empirical mean count - mean-field mean
    count| / N; agent_rewards holds each agent's per-episode mean total
    reward (undiscounted).
    """

    state_frequencies: np.ndarray
    mean_states: np.ndarray
    mf_mean_states: np.ndarray
    deviation: float
    agent_rewards: np.ndarray
    episodes: int


def simulate_population(
    params: MfgParams, policy, episodes: int, seed: int
) -> EmpiricalStats:
    """Simulate N discrete agents sampling actions from the policy.

    Episode e uses a generator derived from (seed, e), so episodes are
    reproducible individually and the run is deterministic as a whole.
    """
    policy = _check_policy(policy, params)
    if not isinstance(episodes, int) or episodes < 1:
        raise ValidationError("episodes must be a positive integer")
    if not isinstance(seed, int) or seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    n, horizon = params.n_agents, params.horizon
    initial = initial_distribution_array(params)
    move_reward = np.array(
        [per_agent_reward(MOVE, j, params) for j in range(n + 1)]
    )
    wait_reward = np.array(
        [per_agent_reward(WAIT, j, params) for j in range(n + 1)]
    )
    frequencies = np.zeros((horizon + 1, n + 1))
    agent_totals = np.zeros(n)
    for episode in range(episodes):
        rng = np.random.default_rng((seed, episode))
        state = int(rng.choice(n + 1, p=initial))
        frequencies[0, state] += 1.0
        for t in range(horizon):
            moves = rng.random(n) < policy[t, state, MOVE]
            agent_totals += np.where(moves, move_reward[state], wait_reward[state])
            state = int(moves.sum())
            frequencies[t + 1, state] += 1.0
    frequencies /= episodes
    counts = np.arange(n + 1, dtype=float)
    mean_states = frequencies @ counts
    flow = forward_flow(policy, params)
    mf_mean_states = flow @ counts
    deviation = float(np.max(np.abs(mean_states - mf_mean_states)) / n)
    return EmpiricalStats(
        state_frequencies=frequencies,
        mean_states=mean_states,
        mf_mean_states=mf_mean_states,
        deviation=deviation,
        agent_rewards=agent_totals / episodes,
        episodes=episodes,
    )
