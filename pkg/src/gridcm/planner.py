"""Day-ahead planning: full-day rollouts per preference setting, plan
files with metrics and profiles, normalized alpha-sweep comparison tables,
and the open-loop sensitivity analysis on perturbed wind scenarios.

Metric conventions: a 5-minute step is 1/12 hour, so MW quantities
integrate to MWh with a factor 1/12.  Remaining congestion sums each
line's MW excess over its limit; redispatch sums |actual - planned| over
dispatchable generators (the slack's balancing deviation included);
curtailment sums withheld renewable output.  Switching counts busbar
endpoint moves actually executed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import Action, NoOp
from .agent import decide
from .chronics import Chronic, PerturbationScenario, forecast, perturb
from .config import EngineConfig
from .engine import GridState, initial_state, step
from .grid import Grid, line_endpoint_distance

STEP_HOURS = 1.0 / 12.0


@dataclass(frozen=True)
class PlanStep:
    step: int
    action: Action
    max_rho: float


@dataclass(frozen=True)
class PlanMetrics:
    remaining_congestion_mwh: float
    switching_operations: int
    redispatch_mwh: float
    curtailment_mwh: float
    survived: bool


@dataclass(frozen=True)
class OperationalPlan:
    scenario_id: str
    alpha: float
    steps: tuple[PlanStep, ...]
    metrics: PlanMetrics
    profiles: dict[str, tuple[float, ...]]
    truncated_at: int | None = None

    @property
    def step_count(self) -> int:
        return len(self.steps)


def rollout_day(
    grid: Grid,
    chronic: Chronic,
    config: EngineConfig,
    agent: bool = True,
) -> OperationalPlan:
    """Roll one day: the agent decides each step (or NoOp throughout for
    the baseline), the engine realizes the chronic.  Deterministic."""
    states = [initial_state(grid, chronic.row(0), config)]
    steps = [PlanStep(0, NoOp(), states[0].max_rho if not states[0].diverged else float("inf"))]
    truncated_at = None

    for t in range(1, chronic.step_count):
        state = states[-1]
        if state.blackout:
            truncated_at = t - 1
            break
        if agent:
            horizon = min(config.observer_horizon, chronic.step_count - t)
            rows = forecast(chronic, t, max(horizon, 1)) if t < chronic.step_count else []
            decision = decide(grid, state, rows, config)
            action = decision.action
        else:
            action = NoOp()
        nxt = step(grid, state, action, chronic.row(t), config)
        states.append(nxt)
        steps.append(PlanStep(t, action, nxt.max_rho if not nxt.diverged else float("inf")))
    else:
        if states[-1].blackout:
            truncated_at = chronic.step_count - 1

    metrics = compute_metrics(states, grid)
    profiles = _profiles(states, grid)
    return OperationalPlan(
        scenario_id=chronic.scenario_id,
        alpha=config.alpha if agent else -1.0,
        steps=tuple(steps),
        metrics=metrics,
        profiles=profiles,
        truncated_at=truncated_at,
    )


def compute_metrics(states: list[GridState], grid: Grid) -> PlanMetrics:
    congestion = 0.0
    switching = 0
    redispatch = 0.0
    curtailment = 0.0
    survived = True
    for s in states:
        if s.blackout or s.diverged:
            survived = False
            continue
        sol = s.solution
        for i, lid in enumerate(sol.line_ids):
            if sol.in_service[i]:
                limit = grid.line_by_id[lid].thermal_limit
                congestion += max(0.0, abs(float(sol.flows[i])) - limit) * STEP_HOURS
        switching += s.endpoints_switched
        for gid in grid.dispatchable_ids:
            dev = abs(s.dispatch[gid] - s.planned_dispatch[gid])
            if dev > 1e-9:  # keep float dust out of the exact-zero endpoints
                redispatch += dev * STEP_HOURS
        for rid in grid.renewable_ids:
            cut = s.planned_dispatch[rid] - s.dispatch[rid]
            if cut > 1e-9:
                curtailment += cut * STEP_HOURS
    return PlanMetrics(
        remaining_congestion_mwh=congestion,
        switching_operations=switching,
        redispatch_mwh=redispatch,
        curtailment_mwh=curtailment,
        survived=survived,
    )


def _profiles(states: list[GridState], grid: Grid) -> dict[str, tuple[float, ...]]:
    max_rho, cum_rd, topo_dist = [], [], []
    running = 0.0
    for s in states:
        if s.diverged:
            max_rho.append(float("inf"))
        else:
            max_rho.append(s.max_rho)
        for gid in grid.dispatchable_ids:
            running += abs(s.dispatch[gid] - s.planned_dispatch[gid]) * STEP_HOURS
        cum_rd.append(running)
        topo_dist.append(float(line_endpoint_distance(
            s.topology, grid.reference_topology
        )))
    return {
        "max_rho": tuple(max_rho),
        "cum_redispatch_mwh": tuple(cum_rd),
        "topology_distance": tuple(topo_dist),
    }


# -- alpha comparison ---------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    remaining_congestion_pct: float
    switching_pct: float
    redispatch_pct: float
    raw_congestion_mwh: float
    raw_switching: float
    raw_redispatch_mwh: float
    raw_curtailment_mwh: float
    survived_days: int
    total_days: int


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    congested_days: int
    filtered_out_days: int


def compare_alphas(
    grid: Grid,
    chronics: list[Chronic],
    alphas: list[float],
    config: EngineConfig,
    noop_plans: dict[str, OperationalPlan] | None = None,
    plans_out: dict[tuple[str, float], OperationalPlan] | None = None,
) -> ComparisonTable:
    """Run the agent at each alpha over the congested days and normalize
    per the established convention: congestion against the do-nothing
    baseline, switching against the topology-only run, redispatch against
    the redispatching-only run.  Congestion-free days are filtered first.
    """
    if not chronics:
        raise ValueError("compare_alphas needs at least one chronic")

    noop_plans = noop_plans if noop_plans is not None else {}
    congested: list[Chronic] = []
    filtered = 0
    for chronic in chronics:
        plan = noop_plans.get(chronic.scenario_id)
        if plan is None:
            plan = rollout_day(grid, chronic, config, agent=False)
            noop_plans[chronic.scenario_id] = plan
        overloaded = any(r > 1.0 for r in plan.profiles["max_rho"])
        if overloaded:
            congested.append(chronic)
        else:
            filtered += 1
    if not congested:
        raise ValueError("no congested days in the chronic set")

    def averaged(plans: list[OperationalPlan]):
        steps = sum(p.step_count for p in plans)
        return (
            sum(p.metrics.remaining_congestion_mwh for p in plans) / steps,
            sum(p.metrics.switching_operations for p in plans) / steps,
            sum(p.metrics.redispatch_mwh for p in plans) / steps,
            sum(p.metrics.curtailment_mwh for p in plans) / steps,
            sum(1 for p in plans if p.metrics.survived),
        )

    noop_set = [noop_plans[c.scenario_id] for c in congested]
    per_alpha: dict[float, list[OperationalPlan]] = {}
    for alpha in alphas:
        cfg = config.with_overrides(alpha=alpha)
        runs = []
        for chronic in congested:
            plan = rollout_day(grid, chronic, cfg)
            runs.append(plan)
            if plans_out is not None:
                plans_out[(chronic.scenario_id, alpha)] = plan
        per_alpha[alpha] = runs

    noop_avg = averaged(noop_set)
    norm_cong = noop_avg[0]
    norm_switch = averaged(per_alpha[1.0])[1] if 1.0 in per_alpha else max(
        (averaged(p)[1] for p in per_alpha.values()), default=0.0
    )
    norm_rd = averaged(per_alpha[0.0])[2] if 0.0 in per_alpha else max(
        (averaged(p)[2] for p in per_alpha.values()), default=0.0
    )

    def pct(value: float, denom: float) -> float:
        return 100.0 * value / denom if denom > 0 else 0.0

    rows = [ComparisonRow(
        label="noop",
        remaining_congestion_pct=pct(noop_avg[0], norm_cong),
        switching_pct=0.0,
        redispatch_pct=0.0,
        raw_congestion_mwh=noop_avg[0],
        raw_switching=noop_avg[1],
        raw_redispatch_mwh=noop_avg[2],
        raw_curtailment_mwh=noop_avg[3],
        survived_days=noop_avg[4],
        total_days=len(congested),
    )]
    for alpha in alphas:
        avg = averaged(per_alpha[alpha])
        rows.append(ComparisonRow(
            label=f"{alpha:g}",
            remaining_congestion_pct=pct(avg[0], norm_cong),
            switching_pct=pct(avg[1], norm_switch),
            redispatch_pct=pct(avg[2], norm_rd),
            raw_congestion_mwh=avg[0],
            raw_switching=avg[1],
            raw_redispatch_mwh=avg[2],
            raw_curtailment_mwh=avg[3],
            survived_days=avg[4],
            total_days=len(congested),
        ))
    return ComparisonTable(
        rows=tuple(rows), congested_days=len(congested), filtered_out_days=filtered
    )


# -- sensitivity analysis ------------------------------------------------------


@dataclass(frozen=True)
class SensitivityRecord:
    scenario_id: str
    perturbation: str
    episode_start: int
    episode_end: int  # inclusive
    delta_max_rho_pct_points: float | None  # None when a replay diverged
    diverged: bool


@dataclass(frozen=True)
class SensitivitySummary:
    perturbation: str
    episodes: int
    diverged: int
    fraction_improved: float
    quartiles: tuple[float, float, float, float, float]  # min, q1, med, q3, max


def replay_plan(
    grid: Grid,
    plan: OperationalPlan,
    chronic: Chronic,
    config: EngineConfig,
) -> list[GridState]:
    """Open-loop replay: the plan's recorded actions re-applied verbatim at
    their step indices on (possibly different) chronics."""
    actions = {s.step: s.action for s in plan.steps}
    states = [initial_state(grid, chronic.row(0), config)]
    for t in range(1, chronic.step_count):
        if states[-1].blackout:
            break
        states.append(step(grid, states[-1], actions.get(t, NoOp()), chronic.row(t), config))
    return states


def _episodes(noop_states: list[GridState]) -> list[tuple[int, int]]:
    """Maximal runs of consecutive overloaded steps in the do-nothing
    trajectory; a diverged tail counts as overloaded."""
    episodes = []
    start = None
    for t, s in enumerate(noop_states):
        over = s.diverged or s.max_rho > 1.0
        if over and start is None:
            start = t
        elif not over and start is not None:
            episodes.append((start, t - 1))
            start = None
    if start is not None:
        episodes.append((start, len(noop_states) - 1))
    return episodes


def sensitivity_run(
    grid: Grid,
    chronics: list[Chronic],
    plans: list[OperationalPlan],
    scenarios: list[PerturbationScenario | None],
    config: EngineConfig,
) -> tuple[list[SensitivityRecord], list[SensitivitySummary]]:
    """Evaluate topology-only plans open-loop on perturbed chronics against
    the do-nothing policy, per congestion episode.  ``None`` in scenarios
    means the unperturbed original."""
    by_id = {c.scenario_id: c for c in chronics}
    records: list[SensitivityRecord] = []

    for plan in plans:
        if plan.alpha != 1.0:
            raise ValueError(
                f"sensitivity needs topology-only plans; {plan.scenario_id} "
                f"has alpha {plan.alpha}"
            )
        chronic = by_id.get(plan.scenario_id)
        if chronic is None:
            raise ValueError(f"no chronic for plan scenario '{plan.scenario_id}'")
        for scenario in scenarios:
            if scenario is None:
                kind, modified = "original", chronic
            else:
                kind, modified = scenario.kind, perturb(chronic, scenario, grid)
            plan_states = replay_plan(grid, plan, modified, config)
            noop_states = replay_plan(
                grid, OperationalPlan(plan.scenario_id, 1.0, (), plan.metrics, {}),
                modified, config,
            )
            for a, b in _episodes(noop_states):
                noop_window = noop_states[a:b + 1]
                plan_window = plan_states[a:b + 1]
                dead = (
                    len(plan_window) < (b - a + 1)
                    or any(s.diverged for s in plan_window)
                    or any(s.diverged for s in noop_window)
                )
                if dead:
                    records.append(SensitivityRecord(
                        plan.scenario_id, kind, a, b, None, True
                    ))
                    continue
                delta = 100.0 * (
                    max(s.max_rho for s in plan_window)
                    - max(s.max_rho for s in noop_window)
                )
                records.append(SensitivityRecord(
                    plan.scenario_id, kind, a, b, delta, False
                ))

    summaries = []
    for scenario in scenarios:
        kind = "original" if scenario is None else scenario.kind
        deltas = [
            r.delta_max_rho_pct_points for r in records
            if r.perturbation == kind and not r.diverged
        ]
        diverged = sum(1 for r in records if r.perturbation == kind and r.diverged)
        if deltas:
            arr = np.array(deltas)
            quartiles = tuple(
                float(q) for q in np.percentile(arr, [0, 25, 50, 75, 100])
            )
            improved = float(np.mean(arr < 0.0))
        else:
            quartiles = (0.0, 0.0, 0.0, 0.0, 0.0)
            improved = 0.0
        summaries.append(SensitivitySummary(
            perturbation=kind,
            episodes=len(deltas) + diverged,
            diverged=diverged,
            fraction_improved=improved,
            quartiles=quartiles,
        ))
    return records, summaries
