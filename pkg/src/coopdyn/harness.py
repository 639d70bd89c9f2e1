"""Config-driven experiment runner.

Loads a JSON config, validates it strictly (unknown keys are rejected),
executes one of the seven experiment kinds, and writes deterministic
artifacts into the output directory: the experiment CSVs, a manifest.json
holding the fully resolved config, and a human-readable report.md.
Re-running a manifest reproduces the CSVs byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .envs import DungeonConfig, IntersectionConfig, intersection_episode, run_dungeon
from .errors import ConfigError, ValidationError
from .ipd import (
    MatchConfig,
    PayoffMatrix,
    critical_discount,
    deviate_payoff,
    make_strategy,
    play_match,
    stick_payoff,
    tournament,
)
from .mfg import (
    MfgParams,
    RewardTable,
    simulate_population,
    solve_equilibrium,
    uniform_policy,
)
from .roles import SwitchPolicy, default_streak_midpoint

EXPERIMENT_KINDS = (
    "ipd_match",
    "ipd_tournament",
    "delta_scan",
    "mfg_solve",
    "mfg_simulate",
    "roles_run",
    "dungeon",
)


# ---------------------------------------------------------------------------
# formatting and file helpers
# ---------------------------------------------------------------------------


def format_value(value) -> str:
    """CSV cell formatting: floats at 12 significant digits, '.' decimal
    point; bools as 1/0; everything else via str."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# strict config readers
# ---------------------------------------------------------------------------


class _Section:
    """Typed accessor over one config dict level; tracks unknown keys."""

    def __init__(self, raw: dict, path: str, problems: list[str]):
        if not isinstance(raw, dict):
            problems.append(f"{path}: expected an object")
            raw = {}
        self.raw = raw
        self.path = path
        self.problems = problems
        self.seen: set[str] = set()

    def _fetch(self, key, default, required):
        self.seen.add(key)
        if key in self.raw:
            return self.raw[key]
        if required:
            self.problems.append(f"{self.path}: missing required key '{key}'")
        return default

    def integer(self, key, default=None, required=False, minimum=None):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        if isinstance(value, bool) or not isinstance(value, int):
            self.problems.append(f"{self.path}.{key}: expected an integer")
            return default
        if minimum is not None and value < minimum:
            self.problems.append(f"{self.path}.{key}: must be >= {minimum}")
        return value

    def number(self, key, default=None, required=False):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.problems.append(f"{self.path}.{key}: expected a number")
            return default
        return float(value)

    def string(self, key, default=None, required=False, choices=None):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        if not isinstance(value, str):
            self.problems.append(f"{self.path}.{key}: expected a string")
            return default
        if choices is not None and value not in choices:
            self.problems.append(
                f"{self.path}.{key}: must be one of {sorted(choices)}, got '{value}'"
            )
        return value

    def boolean(self, key, default=None):
        value = self._fetch(key, default, False)
        if value is None:
            return default
        if not isinstance(value, bool):
            self.problems.append(f"{self.path}.{key}: expected true/false")
            return default
        return value

    def array(self, key, default=None, required=False):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        if not isinstance(value, list):
            self.problems.append(f"{self.path}.{key}: expected an array")
            return default
        return value

    def section(self, key, required=False):
        value = self._fetch(key, None, required)
        if value is None:
            return None
        return _Section(value, f"{self.path}.{key}", self.problems)

    def finish(self):
        unknown = sorted(set(self.raw) - self.seen)
        if unknown:
            self.problems.append(
                f"{self.path}: unknown keys: {', '.join(unknown)}"
            )


def _read_payoff(section: _Section | None, problems) -> PayoffMatrix | None:
    if section is None:
        return None
    values = (
        section.number("temptation", required=True),
        section.number("reward", required=True),
        section.number("punishment", required=True),
        section.number("sucker", required=True),
    )
    section.finish()
    if any(v is None for v in values):
        return None
    try:
        return PayoffMatrix(*values)
    except ValidationError as exc:
        problems.append(f"{section.path}: {exc}")
        return None


def _read_players(top: _Section, problems, exact=None, minimum=2):
    blocks = top.array("players", required=True)
    if blocks is None:
        return None, []
    if exact is not None and len(blocks) != exact:
        problems.append(f"{top.path}.players: expected exactly {exact} entries")
        return None, []
    if exact is None and len(blocks) < minimum:
        problems.append(f"{top.path}.players: expected at least {minimum} entries")
        return None, []
    players = []
    resolved = []
    for idx, block in enumerate(blocks):
        sec = _Section(block, f"{top.path}.players[{idx}]", problems)
        kind = sec.string("kind", required=True)
        opts = {}
        entry = {"kind": kind}
        if kind == "alternator":
            parity = sec.string("parity", default=None, choices={"first", "second"})
            punishment = sec.integer("punishment_length", default=None, minimum=1)
            opts = {"parity": parity, "punishment_length": punishment}
            entry.update(opts)
        sec.finish()
        if kind is None:
            continue
        try:
            players.append(make_strategy(kind, **opts))
            resolved.append(entry)
        except ValidationError as exc:
            problems.append(f"{sec.path}: {exc}")
    if len(resolved) != len(blocks):
        return None, []
    return players, resolved


def _read_mfg_params(
    section: _Section | None,
    problems,
    path="params",
    n_agents=None,
    threshold=None,
) -> tuple[MfgParams | None, dict]:
    """Build MfgParams from a config block; n_agents/threshold may be
    supplied by the caller (roles_run inherits them from the environment)."""
    raw = {}
    if section is not None:
        if n_agents is None:
            n_agents = section.integer("n_agents", required=True, minimum=2)
        else:
            stated = section.integer("n_agents", default=n_agents, minimum=2)
            if stated != n_agents:
                problems.append(f"{section.path}.n_agents: must match the environment")
        if threshold is None:
            threshold = section.integer("threshold", required=True, minimum=1)
        else:
            stated = section.integer("threshold", default=threshold, minimum=1)
            if stated != threshold:
                problems.append(f"{section.path}.threshold: must match the environment")
        raw = dict(
            discount=section.number("discount", default=0.9),
            smoothing=section.number("smoothing", default=1.0),
            reward_offset=section.number("reward_offset", default=0.0),
            consistency_weight=section.number("consistency_weight", default=0.0),
            preference_baseline=section.number("preference_baseline", default=0.0),
            temperature=section.number("temperature", default=1.0),
            horizon=section.integer("horizon", default=30, minimum=1),
            reward_mode=section.string(
                "reward_mode", default="table", choices={"table", "formula"}
            ),
        )
        table_sec = section.section("reward_table")
        if table_sec is not None:
            table = RewardTable(
                move_clear=table_sec.number("move_clear", default=1.0),
                wait_clear=table_sec.number("wait_clear", default=0.6),
                wait_congested=table_sec.number("wait_congested", default=0.2),
                move_congested=table_sec.number("move_congested", default=0.0),
            )
            table_sec.finish()
        else:
            table = RewardTable()
        initial = section.array("initial_distribution", default=None)
        section.finish()
        raw["reward_table"] = table
        raw["initial_distribution"] = tuple(initial) if initial is not None else None
    else:
        raw = dict(reward_table=RewardTable(), initial_distribution=None)
    if problems or n_agents is None or threshold is None:
        return None, {}
    try:
        params = MfgParams(n_agents=n_agents, threshold=threshold, **raw)
    except ValidationError as exc:
        problems.append(f"{path}: {exc}")
        return None, {}
    resolved = asdict(params)
    resolved["initial_distribution"] = (
        list(params.initial_distribution)
        if params.initial_distribution is not None
        else None
    )
    return params, resolved


def _read_solver(section: _Section | None) -> dict:
    if section is None:
        return {"tol": 1e-8, "max_iter": 500, "damping": 0.5}
    out = {
        "tol": section.number("tol", default=1e-8),
        "max_iter": section.integer("max_iter", default=500, minimum=1),
        "damping": section.number("damping", default=0.5),
    }
    section.finish()
    return out


def _read_switch(section: _Section | None, n_agents, cohort, assignment):
    """Resolve the switch policy block with assignment-aware defaults."""
    if section is None:
        if assignment == "stochastic":
            return SwitchPolicy(
                mode="stochastic_sigmoid",
                streak_midpoint=default_streak_midpoint(n_agents, cohort),
            )
        return SwitchPolicy(
            mode="deterministic_window", window=max(1, n_agents - 1)
        )
    mode_default = (
        "stochastic_sigmoid" if assignment == "stochastic" else "deterministic_window"
    )
    mode = section.string(
        "mode",
        default=mode_default,
        choices={"deterministic_window", "stochastic_sigmoid"},
    )
    window = section.integer("window", default=max(1, n_agents - 1), minimum=1)
    midpoint = section.number(
        "streak_midpoint", default=float(default_streak_midpoint(n_agents, cohort))
    )
    scale = section.number("streak_scale", default=1.0)
    section.finish()
    return SwitchPolicy(
        mode=mode, window=window, streak_midpoint=midpoint, streak_scale=scale
    )


def _finish_validation(problems: list[str]) -> None:
    if problems:
        raise ConfigError(problems)


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------


def _run_ipd_match(top: _Section, seed: int, out: Path, problems):
    payoff = _read_payoff(top.section("payoff", required=True), problems)
    horizon = top.integer("horizon", required=True, minimum=1)
    discount = top.number("discount", default=0.0)
    players, resolved_players = _read_players(top, problems, exact=2)
    top.finish()
    _finish_validation(problems)
    config = MatchConfig(horizon=horizon, discount=discount, seed=seed)
    result = play_match(players[0], players[1], payoff, config)
    rows = []
    for t, (ax, ay) in enumerate(result.trajectory):
        px, py = payoff.payoffs(ax, ay)
        rows.append((t, ax.letter, ay.letter, px, py))
    write_csv(out / "trajectory.csv", ["round", "action_x", "action_y", "payoff_x", "payoff_y"], rows)
    resolved = {
        "experiment": "ipd_match",
        "seed": seed,
        "payoff": asdict(payoff),
        "horizon": horizon,
        "discount": discount,
        "players": resolved_players,
    }
    summary = {
        "regime": payoff.regime().value,
        "total_payoffs": list(result.total_payoffs),
        "discounted_payoffs": list(result.discounted_payoffs),
        "group_payoff_per_round": result.group_payoff_per_round,
    }
    return resolved, summary, ["trajectory.csv"]


def _run_ipd_tournament(top: _Section, seed: int, out: Path, problems):
    payoff = _read_payoff(top.section("payoff", required=True), problems)
    horizon = top.integer("horizon", required=True, minimum=1)
    discount = top.number("discount", default=0.0)
    players, resolved_players = _read_players(top, problems, minimum=2)
    top.finish()
    _finish_validation(problems)
    config = MatchConfig(horizon=horizon, discount=discount, seed=seed)
    table = tournament(players, payoff, config)
    rows = [(row.label, row.mean_discounted, row.mean_group) for row in table.scores]
    write_csv(out / "scores.csv", ["label", "mean_discounted", "mean_group"], rows)
    resolved = {
        "experiment": "ipd_tournament",
        "seed": seed,
        "payoff": asdict(payoff),
        "horizon": horizon,
        "discount": discount,
        "players": resolved_players,
    }
    best = max(table.scores, key=lambda r: r.mean_discounted)
    summary = {
        "regime": payoff.regime().value,
        "entrants": len(players),
        "best_label": best.label,
        "best_mean_discounted": best.mean_discounted,
    }
    return resolved, summary, ["scores.csv"]


def _run_delta_scan(top: _Section, seed: int, out: Path, problems):
    payoff = _read_payoff(top.section("payoff", required=True), problems)
    grid_sec = top.section("grid", required=True)
    grid: list[float] = []
    if grid_sec is not None:
        values = grid_sec.array("values", default=None)
        if values is not None:
            grid_sec.finish()
            grid = [float(v) for v in values]
        else:
            start = grid_sec.number("start", default=0.01)
            stop = grid_sec.number("stop", default=0.99)
            step = grid_sec.number("step", default=0.01)
            grid_sec.finish()
            if step is None or step <= 0:
                problems.append(f"{grid_sec.path}.step: must be positive")
            else:
                count = int(round((stop - start) / step)) + 1
                grid = [start + k * step for k in range(max(count, 0))]
    for value in grid:
        if not 0.0 <= value < 1.0:
            problems.append(f"{top.path}.grid: every point must lie in [0, 1)")
            break
    top.finish()
    _finish_validation(problems)
    threshold = critical_discount(payoff)
    rows = []
    for delta in grid:
        stick = stick_payoff(payoff.temptation, payoff.sucker, delta)
        deviate = deviate_payoff(payoff.temptation, payoff.punishment, delta)
        difference = stick - deviate
        sign = (difference > 0) - (difference < 0)
        above_solved = threshold.solved is not None and delta > threshold.solved
        above_quoted = delta > threshold.quoted
        rows.append((delta, stick, deviate, sign, above_solved, above_quoted))
    write_csv(
        out / "scan.csv",
        ["delta", "stick", "deviate", "sign", "above_solved", "above_quoted"],
        rows,
    )
    resolved = {
        "experiment": "delta_scan",
        "seed": seed,
        "payoff": asdict(payoff),
        "grid": {"values": grid},
    }
    summary = {
        "solved_threshold": threshold.solved,
        "quoted_threshold": threshold.quoted,
        "threshold_note": threshold.note,
        "points": len(grid),
        "points_favoring_stick": sum(1 for r in rows if r[3] > 0),
    }
    return resolved, summary, ["scan.csv"]


def _solve_outputs(result, params, out: Path):
    horizon, n = params.horizon, params.n_agents
    policy_rows = [
        (t, j, result.policy[t, j, 0], result.policy[t, j, 1])
        for t in range(horizon)
        for j in range(n + 1)
    ]
    write_csv(out / "policy.csv", ["t", "j", "pi_wait", "pi_move"], policy_rows)
    flow_rows = [
        (t, j, result.flow[t, j]) for t in range(horizon + 1) for j in range(n + 1)
    ]
    write_csv(out / "flow.csv", ["t", "j", "prob"], flow_rows)
    value_rows = [
        (t, j, result.values.q[t, j, 0], result.values.q[t, j, 1])
        for t in range(horizon + 1)
        for j in range(n + 1)
    ]
    write_csv(out / "values.csv", ["t", "j", "q_wait", "q_move"], value_rows)
    diag_rows = [
        (k + 1, res[0], res[1]) for k, res in enumerate(result.residual_history)
    ]
    write_csv(out / "diag.csv", ["iter", "policy_residual", "dist_residual"], diag_rows)
    return ["policy.csv", "flow.csv", "values.csv", "diag.csv"]


def _run_mfg_solve(top: _Section, seed: int, out: Path, problems):
    params, resolved_params = _read_mfg_params(top.section("params", required=True), problems)
    solver = _read_solver(top.section("solver"))
    top.finish()
    _finish_validation(problems)
    result = solve_equilibrium(params, **solver)
    files = _solve_outputs(result, params, out)
    counts = np.arange(params.n_agents + 1, dtype=float)
    final_mean = float(result.flow[-1] @ counts)
    last = result.residual_history[-1]
    resolved = {
        "experiment": "mfg_solve",
        "seed": seed,
        "params": resolved_params,
        "solver": solver,
    }
    summary = {
        "converged": result.converged,
        "iterations": result.iterations,
        "final_policy_residual": last[0],
        "final_dist_residual": last[1],
        "exploitability": result.exploitability,
        "mean_count_final_t": final_mean,
    }
    return resolved, summary, files


def _run_mfg_simulate(top: _Section, seed: int, out: Path, problems):
    params, resolved_params = _read_mfg_params(top.section("params", required=True), problems)
    episodes = top.integer("episodes", required=True, minimum=1)
    policy_kind = top.string(
        "policy", default="equilibrium", choices={"equilibrium", "uniform"}
    )
    solver = _read_solver(top.section("solver"))
    top.finish()
    _finish_validation(problems)
    solve_summary = None
    if policy_kind == "equilibrium":
        result = solve_equilibrium(params, **solver)
        policy = result.policy
        solve_summary = {"converged": result.converged, "iterations": result.iterations}
    else:
        policy = uniform_policy(params)
    stats = simulate_population(params, policy, episodes=episodes, seed=seed)
    rows = [
        (
            t,
            stats.mean_states[t],
            stats.mf_mean_states[t],
            abs(stats.mean_states[t] - stats.mf_mean_states[t]) / params.n_agents,
        )
        for t in range(params.horizon + 1)
    ]
    write_csv(
        out / "sim.csv",
        ["t", "empirical_mean_count", "mean_field_mean_count", "scaled_gap"],
        rows,
    )
    resolved = {
        "experiment": "mfg_simulate",
        "seed": seed,
        "params": resolved_params,
        "episodes": episodes,
        "policy": policy_kind,
        "solver": solver,
    }
    summary = {
        "episodes": episodes,
        "deviation": stats.deviation,
        "policy": policy_kind,
        "solve": solve_summary,
    }
    return resolved, summary, ["sim.csv"]


def _roles_csv_rows(rounds, credits, n_agents):
    """Rows of round,agent_id,role,streak,cumulative_sacrifices,
    credited_reward. Credit lands on the final round (delayed)."""
    rows = []
    last_round = len(rounds) - 1
    for r, record in enumerate(rounds):
        for agent_id, role, streak, cum_sac in record.agent_states:
            credited = credits.get(agent_id, 0.0) if r == last_round else 0.0
            rows.append((r, agent_id, role, streak, cum_sac, credited))
    return rows


def _run_roles(top: _Section, seed: int, out: Path, problems):
    n_agents = top.integer("n_agents", required=True, minimum=2)
    threshold = top.integer("threshold", required=True, minimum=1)
    rounds = top.integer("rounds", required=True, minimum=1)
    cohort = top.integer("cohort", default=None, minimum=1)
    assignment = top.string(
        "assignment",
        default="rotation",
        choices={"static", "rotation", "stochastic", "policy"},
    )
    credit_waiters = top.boolean("credit_waiters", default=True)
    statics = top.array("static_movers", default=None)
    switch_sec = top.section("switch")
    mfg_sec = top.section("mfg")
    solver = _read_solver(top.section("solver"))
    top.finish()
    if n_agents is None or threshold is None:
        _finish_validation(problems)
    effective_cohort = cohort if cohort is not None else threshold
    switch = None
    if not problems:
        try:
            switch = _read_switch(switch_sec, n_agents, effective_cohort, assignment)
        except ValidationError as exc:
            problems.append(f"config.switch: {exc}")
    params, resolved_params = _read_mfg_params(
        mfg_sec, problems, path="config.mfg", n_agents=n_agents, threshold=threshold
    )
    _finish_validation(problems)
    policy = None
    solve_summary = None
    if assignment == "policy":
        result = solve_equilibrium(params, **solver)
        policy = result.policy
        solve_summary = {"converged": result.converged, "iterations": result.iterations}
    try:
        config = IntersectionConfig(
            n_agents=n_agents,
            threshold=threshold,
            rounds=rounds,
            cohort=effective_cohort,
            assignment=assignment,
            params=params,
            switch=switch,
            static_movers=tuple(statics) if statics is not None else None,
            credit_waiters=credit_waiters,
            seed=seed,
        )
    except ValidationError as exc:
        raise ConfigError([f"config: {exc}"]) from exc
    episode = intersection_episode(config, policy=policy)
    write_csv(
        out / "roles.csv",
        ["round", "agent_id", "role", "streak", "cumulative_sacrifices", "credited_reward"],
        _roles_csv_rows(episode.rounds, episode.credits, n_agents),
    )
    write_csv(
        out / "rounds.csv",
        ["round", "n_moved", "passed"],
        [(row.round_index, row.n_moved, row.passed) for row in episode.rounds],
    )
    resolved = {
        "experiment": "roles_run",
        "seed": seed,
        "n_agents": n_agents,
        "threshold": threshold,
        "rounds": rounds,
        "cohort": effective_cohort,
        "assignment": assignment,
        "credit_waiters": credit_waiters,
        "static_movers": list(statics) if statics is not None else None,
        "switch": asdict(switch),
        "mfg": resolved_params,
        "solver": solver,
    }
    mover_counts = [rec.times_primary for rec in episode.ledger.records]
    summary = {
        "rounds": rounds,
        "passed_rounds": sum(1 for row in episode.rounds if row.passed),
        "mover_count_gap": max(mover_counts) - min(mover_counts),
        "sacrifice_gap": episode.fairness.sacrifice_gap,
        "credited_spread": episode.fairness.credited_spread,
        "solve": solve_summary,
    }
    return resolved, summary, ["roles.csv", "rounds.csv"]


def _run_dungeon(top: _Section, seed: int, out: Path, problems):
    n_agents = top.integer("n_agents", default=3, minimum=2)
    rounds = top.integer("rounds", required=True, minimum=1)
    success_reward = top.number("success_reward", default=1.0)
    sacrifice_cost = top.number("sacrifice_cost", default=1.0)
    switch_sec = top.section("switch")
    top.finish()
    switch = None
    if not problems:
        try:
            switch = _read_switch(switch_sec, n_agents, 1, "rotation")
        except ValidationError as exc:
            problems.append(f"config.switch: {exc}")
    _finish_validation(problems)
    config = DungeonConfig(
        n_agents=n_agents,
        rounds=rounds,
        success_reward=success_reward,
        sacrifice_cost=sacrifice_cost,
        switch=switch,
        seed=seed,
    )
    result = run_dungeon(config)
    write_csv(
        out / "roles.csv",
        ["round", "agent_id", "role", "streak", "cumulative_sacrifices", "credited_reward"],
        _roles_csv_rows(result.rounds, result.credits, n_agents),
    )
    write_csv(
        out / "rounds.csv",
        ["round", "sacrificer", "success"],
        [(row.round_index, row.sacrificer, row.success) for row in result.rounds],
    )
    resolved = {
        "experiment": "dungeon",
        "seed": seed,
        "n_agents": n_agents,
        "rounds": rounds,
        "success_reward": success_reward,
        "sacrifice_cost": sacrifice_cost,
        "switch": asdict(switch),
    }
    sac_counts = {
        rec.agent_id: rec.times_sacrifice for rec in result.ledger.records
    }
    summary = {
        "rounds": rounds,
        "sacrifice_counts": sac_counts,
        "sacrifice_gap": result.fairness.sacrifice_gap,
        "credited_spread": result.fairness.credited_spread,
    }
    return resolved, summary, ["roles.csv", "rounds.csv"]


_RUNNERS = {
    "ipd_match": _run_ipd_match,
    "ipd_tournament": _run_ipd_tournament,
    "delta_scan": _run_delta_scan,
    "mfg_solve": _run_mfg_solve,
    "mfg_simulate": _run_mfg_simulate,
    "roles_run": _run_roles,
    "dungeon": _run_dungeon,
}


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    csv_files: tuple[str, ...]
    manifest_path: Path
    report_path: Path
    summary: dict


def run(config: dict, out_dir=None) -> RunArtifacts:
    """Validate and execute one experiment config; write all artifacts."""
    if not isinstance(config, dict):
        raise ConfigError(["config: expected a JSON object"])
    problems: list[str] = []
    top = _Section(dict(config), "config", problems)
    kind = top.string("experiment", required=True, choices=set(EXPERIMENT_KINDS))
    seed = top.integer("seed", default=0, minimum=0)
    configured_out = top.string("out_dir", default=None)
    if kind not in _RUNNERS or seed is None:
        top.finish()
        _finish_validation(problems)  # guaranteed to raise: kind/seed invalid
    out = Path(out_dir) if out_dir is not None else Path(
        configured_out or f"runs/{kind}"
    )
    out.mkdir(parents=True, exist_ok=True)
    resolved, summary, files = _RUNNERS[kind](top, seed, out, problems)
    manifest = {
        "config": resolved,
        "version": __version__,
        "outputs": sorted(files),
        "summary": summary,
    }
    manifest_path = out / "manifest.json"
    _write_json(manifest_path, manifest)
    report_path = out / "report.md"
    report_path.write_text(render_report(manifest), encoding="utf-8")
    return RunArtifacts(
        out_dir=out,
        csv_files=tuple(sorted(files)),
        manifest_path=manifest_path,
        report_path=report_path,
        summary=summary,
    )


def load_config(path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return raw


def run_from_manifest(manifest_path, out_dir=None) -> RunArtifacts:
    """Re-execute the fully resolved config stored in a manifest."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if "config" not in manifest:
        raise ConfigError([f"{manifest_path}: not a run manifest (no 'config' key)"])
    return run(manifest["config"], out_dir=out_dir)


def regenerate_report(run_dir) -> Path:
    """Rebuild report.md from the manifest in an existing run directory."""
    run_dir = Path(run_dir)
    manifest_path = run_dir if run_dir.name == "manifest.json" else run_dir / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError([f"{manifest_path}: manifest not found"])
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    report_path = manifest_path.parent / "report.md"
    report_path.write_text(render_report(manifest), encoding="utf-8")
    return report_path


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_report(manifest: dict) -> str:
    config = manifest["config"]
    summary = manifest["summary"]
    kind = config["experiment"]
    lines = [
        f"# {kind} report",
        "",
        f"- version: {manifest['version']}",
        f"- seed: {config.get('seed', 0)}",
        f"- outputs: {', '.join(manifest['outputs'])}",
        "",
    ]
    if kind in ("ipd_match", "ipd_tournament", "delta_scan"):
        payoff = config["payoff"]
        lines += [
            "## payoff matrix",
            "",
            "| temptation | reward | punishment | sucker |",
            "|---|---|---|---|",
            "| {temptation} | {reward} | {punishment} | {sucker} |".format(
                **{k: _fmt(v) for k, v in payoff.items()}
            ),
            "",
        ]
    lines += ["## summary", "", "| quantity | value |", "|---|---|"]
    for key in sorted(summary):
        lines.append(f"| {key} | {_fmt(summary[key])} |")
    lines.append("")
    if kind == "delta_scan":
        lines += [
            "The solved threshold comes from bisecting the sign of stick - "
            "deviate; the quoted threshold is the commonly quoted closed form "
            "(P - S)/(T - R). They are reported side by side because they "
            "disagree whenever T - R differs from T - P.",
            "",
        ]
    return "\n".join(lines)
