"""The decision pipeline: observe, skip safe states (with automatic
recovery and redispatch reset), and under stress pick between topology,
redispatch or a combined action by the operator's preference weight.

The preference alpha scores the two pure remedies by their simulated
loading relief: s_topo = alpha * (baseline - topo), s_redisp =
(1 - alpha) * (baseline - redisp), higher wins, exact ties go to
redispatch (reversible, no breaker wear).  The endpoints are hard gates:
alpha=0 never switches anything, alpha=1 never moves a generator — this
is what makes the endpoint rows of an alpha sweep exact.
"""

from __future__ import annotations

from dataclasses import dataclass

from .actions import Action, Composite, NoOp, Redispatch
from .config import EngineConfig
from .engine import ChronicRow, GridState, simulate
from .grid import Grid, topology_distance
from .redispatch import (
    OptimizedComposite,
    RedispatchError,
    curtailment_fallback,
    optimize_for_topology,
    optimize_redispatch,
    redispatch_reset_step,
)
from .topology_search import SearchResult, recovery_step, search


@dataclass(frozen=True)
class GridStatus:
    level: str  # "Safe" | "Alert" | "Critical"
    max_rho: float
    triggers: tuple[tuple[str, float, int], ...]  # (line id, rho, forecast step)

    @property
    def safe(self) -> bool:
        return self.level == "Safe"


@dataclass(frozen=True)
class Decision:
    action: Action
    status: GridStatus
    kind: str  # noop | reset | recovery | redispatch | topology | composite
    insufficient: bool = False


def observe(
    grid: Grid,
    state: GridState,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
) -> GridStatus:
    """Classify the state: Critical on a realized overload, an unexpected
    outage this step, or a projected blackout; Alert when the do-nothing
    forecast crosses the alert threshold; Safe otherwise."""
    sol = state.solution
    triggers: list[tuple[str, float, int]] = []
    worst = state.max_rho if not state.diverged else float("inf")

    if state.diverged:
        return GridStatus("Critical", worst, ())
    realized_over = [
        (lid, float(sol.rho[i]), 0)
        for i, lid in enumerate(sol.line_ids)
        if sol.in_service[i] and sol.rho[i] > 1.0
    ]
    if realized_over or state.auto_disconnected:
        return GridStatus("Critical", worst, tuple(realized_over))

    cursor = state
    horizon = min(config.observer_horizon, len(forecast_rows))
    for k in range(horizon):
        cursor = simulate(grid, cursor, NoOp(), forecast_rows[k], config)
        if cursor.diverged:
            return GridStatus("Critical", float("inf"), tuple(triggers))
        worst = max(worst, cursor.max_rho)
        for i, lid in enumerate(cursor.solution.line_ids):
            if cursor.solution.in_service[i] and cursor.solution.rho[i] >= config.alert_threshold:
                triggers.append((lid, float(cursor.solution.rho[i]), k + 1))

    level = "Alert" if triggers else "Safe"
    return GridStatus(level, worst, tuple(triggers))


def alpha_select(
    topo: tuple[Action, float] | None,
    redisp: tuple[Action, float] | None,
    baseline_rho: float,
    alpha: float,
) -> tuple[str, Action]:
    """Pick between the simulated pure remedies.  A missing side forfeits;
    at the endpoints the mandated side is the only one considered."""
    if alpha <= 0.0:
        if redisp is None:
            return "noop", NoOp(reason="no redispatch available")
        return "redispatch", redisp[0]
    if alpha >= 1.0:
        if topo is None:
            return "noop", NoOp(reason="no topology candidate available")
        return "topology", topo[0]
    if topo is None and redisp is None:
        return "noop", NoOp(reason="no remedy available")
    if topo is None:
        return "redispatch", redisp[0]
    if redisp is None:
        return "topology", topo[0]
    s_topo = alpha * (baseline_rho - topo[1])
    s_redisp = (1.0 - alpha) * (baseline_rho - redisp[1])
    if s_topo > s_redisp:
        return "topology", topo[0]
    return "redispatch", redisp[0]


def combined_fallback(
    grid: Grid,
    state: GridState,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
    search_result: SearchResult | None = None,
    redisp_action: Redispatch | None = None,
) -> tuple[Action, bool]:
    """Top-5 topology candidates, each with its own optimized redispatch;
    the composite with the lowest simulated loading wins (ties: fewer
    switched endpoints, then less redispatch, then canonical id).

    Returns (action, insufficient)."""
    result = search_result if search_result is not None else search(
        grid, state, forecast_rows, config
    )
    best: tuple | None = None
    for cand in result.candidates[:5]:
        try:
            comp: OptimizedComposite = optimize_for_topology(
                grid, state, cand.action, forecast_rows[0], config
            )
        except RedispatchError:
            continue
        key = (
            comp.predicted_max_rho,
            comp.endpoints_switched,
            comp.redispatch_total_mw,
            cand.canonical_id,
        )
        if best is None or key < best[0]:
            best = (key, comp)
    if best is None:
        fallback = redisp_action if redisp_action is not None else Redispatch(
            insufficient=True
        )
        return Redispatch(
            deltas=dict(fallback.deltas),
            curtail_caps=dict(fallback.curtail_caps),
            insufficient=True,
        ), True
    comp = best[1]
    return comp.action, comp.predicted_max_rho > 1.0


def decide(
    grid: Grid,
    state: GridState,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
) -> Decision:
    """One decision step: skip (or clean up) safe states, remediate
    stressed ones under the alpha preference."""
    status = observe(grid, state, forecast_rows, config)

    if status.safe:
        # the slack's deviation is an outcome of balancing, not something a
        # reset can act on: only non-slack deviations (and caps) trigger it
        deviated = any(
            abs(v) > 1e-6
            for g, v in state.deviation(grid).items()
            if g != grid.slack_generator
        )
        rows = forecast_rows if forecast_rows else [_hold_row(grid, state)]
        if config.reset_enabled and (deviated or state.curtail_caps):
            action = redispatch_reset_step(grid, state, rows, config)
            return Decision(action, status, "reset" if not isinstance(action, NoOp) else "noop")
        if config.recovery_enabled and topology_distance(
            state.topology, grid.reference_topology
        ) > 0:
            action = recovery_step(grid, state, rows, config)
            return Decision(
                action, status, "recovery" if not isinstance(action, NoOp) else "noop"
            )
        return Decision(NoOp(), status, "noop")

    rows = forecast_rows if forecast_rows else [_hold_row(grid, state)]

    # pure topology side (skipped entirely at alpha=0); valued by its
    # worst-case loading over the search horizon
    result = None
    topo_side: tuple[Action, float] | None = None
    if config.alpha > 0.0:
        result = search(grid, state, rows, config)
        if result.best is not None:
            topo_side = (result.best.action, result.best.objective)

    # pure redispatch side (skipped entirely at alpha=1); since deviations
    # persist, the LP sizes against the worst do-nothing state over the
    # horizon — the step its deltas actually have to survive
    redisp_side: tuple[Action, float] | None = None
    redisp_insufficient = False
    if config.alpha < 1.0:
        target = state
        cursor = state
        for r in range(max(1, min(config.search_depth, len(rows)))):
            cursor = simulate(grid, cursor, NoOp(), rows[r], config)
            if cursor.diverged:
                break
            if cursor.max_rho > target.max_rho:
                target = cursor
        opt = optimize_redispatch(grid, target, config)
        if opt.insufficient:
            opt = curtailment_fallback(grid, target, config)
        redisp_insufficient = opt.insufficient
        redisp_side = (opt.action, _horizon_worst(grid, state, opt.action, rows, config))

    if result is not None:
        baseline = max(result.noop_max_rho)
    else:
        baseline = _horizon_worst(grid, state, NoOp(), rows, config)

    kind, action = alpha_select(topo_side, redisp_side, baseline, config.alpha)
    if kind == "noop":
        return Decision(action, status, "noop", insufficient=baseline > 1.0)

    selected_rho = topo_side[1] if kind == "topology" else redisp_side[1]
    relief = baseline - selected_rho

    if baseline <= 1.0 + 1e-9 and (
        relief < config.relief_deadband or selected_rho >= config.alert_threshold
    ):
        # nothing is overloaded over the horizon; acting is only worth it
        # when it actually clears the alert band, not for marginal gains
        return Decision(NoOp(reason="relief below deadband"), status, "noop")
    if relief <= 1e-9 and not 0.0 < config.alpha < 1.0:
        # an overload is in play but the mandated pure remedy cannot improve
        # on doing nothing (and the endpoints forbid combining)
        return Decision(
            NoOp(reason="no improving remedy"), status, "noop",
            insufficient=baseline > 1.0,
        )

    if selected_rho > 1.0 and 0.0 < config.alpha < 1.0:
        ra = redisp_side[0] if redisp_side else None
        action2, insufficient = combined_fallback(
            grid, state, rows, config,
            search_result=result,
            redisp_action=ra if isinstance(ra, Redispatch) else None,
        )
        comp_rho = _horizon_worst(grid, state, action2, rows, config)
        if comp_rho >= baseline - 1e-9 and relief <= 1e-9:
            return Decision(
                NoOp(reason="no improving remedy"), status, "noop", insufficient=True
            )
        if comp_rho <= selected_rho:
            kind = "composite" if isinstance(action2, Composite) else "redispatch"
            return Decision(action2, status, kind, insufficient=insufficient)

    insufficient = (
        redisp_insufficient if kind == "redispatch" else selected_rho > 1.0
    )
    return Decision(action, status, kind, insufficient=insufficient)


def _horizon_worst(
    grid: Grid,
    state: GridState,
    action: Action,
    rows: list[ChronicRow],
    config: EngineConfig,
) -> float:
    """Worst loading when applying the action now and nothing afterwards,
    over the same horizon the search uses."""
    horizon = max(1, min(config.search_depth, len(rows)))
    cursor = state
    worst = 0.0
    for r in range(horizon):
        cursor = simulate(grid, cursor, action if r == 0 else NoOp(), rows[r], config)
        if cursor.diverged:
            return float("inf")
        worst = max(worst, cursor.max_rho)
    return worst


def _hold_row(grid: Grid, state: GridState) -> ChronicRow:
    """Persist the current slice when no forecast is available (end of day)."""
    return ChronicRow(
        loads=dict(state.loads),
        renewables={r: state.planned_dispatch[r] for r in grid.renewable_ids},
        plan={g: state.planned_dispatch[g] for g in grid.dispatchable_ids},
    )
