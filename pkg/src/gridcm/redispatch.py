"""PTDF-based linear-programming redispatch and curtailment.

Two-phase scheme: phase 1 finds the smallest reachable worst-case line
loading; phase 2 finds the cheapest deltas (total |MW| moved, including
the slack's implied compensation) that reach it — but never chases
loadings below 1.0, so an uncongested or just-relieved grid is left alone.
Curtailment enters only through the fallback, penalty-weighted so wind is
cut as a last resort.

The slack generator is never an optimization variable: it is the balancing
device.  Its implied delta (minus the sum of everyone else's, plus any
curtailed energy) is constrained to its ramp and limits and reported in
the returned action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .actions import Composite, LineAction, NoOp, Redispatch, SubstationAction
from .config import EngineConfig
from .engine import ChronicRow, GridState, simulate
from .grid import Grid
from .powerflow import PowerFlowError, Ptdf, ptdf

_PHASE_TOL = 1e-6
_TIE_EPS = 1e-7


class RedispatchError(Exception):
    pass


@dataclass(frozen=True)
class OptimizedRedispatch:
    """A redispatch (or redispatch+curtailment) action with its objective
    report: predicted worst loading and total adjustment."""

    action: Redispatch
    predicted_max_rho: float
    total_abs_mw: float
    curtailment_mw: float = 0.0
    phase1_max_rho: float = 0.0  # the unconstrained reachable minimum loading

    @property
    def insufficient(self) -> bool:
        return self.action.insufficient


@dataclass(frozen=True)
class OptimizedComposite:
    action: Composite
    predicted_max_rho: float
    redispatch_total_mw: float
    endpoints_switched: int


def _free_generators(grid: Grid, state: GridState):
    """Non-slack dispatchables with their delta bounds (ramp and limits
    around the current operating point), in id order for determinism."""
    gens = []
    for gid in sorted(grid.dispatchable_ids):
        if gid == grid.slack_generator:
            continue
        gen = grid.generator_by_id[gid]
        p = state.dispatch[gid]
        lo = max(-gen.ramp, gen.p_min - p)
        hi = min(gen.ramp, gen.p_max - p)
        gens.append((gid, min(lo, 0.0), max(hi, 0.0)))
    return gens


def _flow_rows(grid: Grid, state: GridState, sens: Ptdf, element_ids: list[str]):
    """Base flows, limits and the sensitivity matrix restricted to
    in-service lines and the given injection elements."""
    sol = state.solution
    live = [i for i, lid in enumerate(sol.line_ids) if sol.in_service[i]]
    f = sol.flows[live]
    limits = np.array([grid.line_by_id[sol.line_ids[i]].thermal_limit for i in live])
    M = np.zeros((len(live), len(element_ids)))
    for j, elem in enumerate(element_ids):
        M[:, j] = sens.column_for_element(elem)[live]
    return f, limits, M


def _slack_bounds(grid: Grid, state: GridState):
    slack = grid.slack
    p = state.dispatch[slack.id]
    return slack.ramp, p - slack.p_min, slack.p_max - p


def optimize_redispatch(
    grid: Grid,
    state: GridState,
    config: EngineConfig | None = None,
    sensitivities: Ptdf | None = None,
) -> OptimizedRedispatch:
    """Minimum-adjustment redispatch that brings every line to rho <= 1 if
    reachable, else the best reachable worst loading (flagged
    insufficient)."""
    if state.diverged:
        raise RedispatchError("cannot optimize a diverged state")
    config = config or EngineConfig()
    sens = sensitivities if sensitivities is not None else ptdf(grid, state.topology)

    gens = _free_generators(grid, state)
    if not gens:
        return _no_headroom_result(state)
    ids = [g[0] for g in gens]
    f, limits, M = _flow_rows(grid, state, sens, ids)
    n = len(ids)

    # phase 1: minimize worst loading t over deltas within ramp/limit bounds
    ramp_s, down_s, up_s = _slack_bounds(grid, state)
    ones = np.ones(n)

    A, b = [], []
    for r in range(len(f)):
        A.append(np.append(M[r], -limits[r])); b.append(-f[r])
        A.append(np.append(-M[r], -limits[r])); b.append(f[r])
    # slack feasibility: implied delta = -sum(deltas)
    A.append(np.append(ones, 0.0)); b.append(min(ramp_s, down_s))    # -implied <= ...
    A.append(np.append(-ones, 0.0)); b.append(min(ramp_s, up_s))     # implied <= ...
    bounds = [(lo, hi) for _, lo, hi in gens] + [(0.0, None)]

    res1 = linprog(
        c=np.append(np.zeros(n), 1.0), A_ub=np.array(A), b_ub=np.array(b),
        bounds=bounds, method="highs",
    )
    if not res1.success:
        return _no_headroom_result(state)
    t_star = float(res1.x[-1])
    target = max(t_star, 1.0) + _PHASE_TOL
    insufficient = t_star > 1.0 + 1e-9

    # phase 2: cheapest total adjustment achieving the target loading;
    # tiny id-ordered weights break ties toward low generator ids
    nv = 2 * n + 1  # u, v, s=|implied slack delta|
    cost = np.empty(nv)
    for j in range(n):
        cost[j] = 1.0 + _TIE_EPS * j
        cost[n + j] = 1.0 + _TIE_EPS * j
    cost[-1] = 1.0 + _TIE_EPS * n

    A2, b2 = [], []
    for r in range(len(f)):
        row = np.zeros(nv)
        row[:n] = M[r]; row[n:2 * n] = -M[r]
        A2.append(row.copy()); b2.append(target * limits[r] - f[r])
        A2.append(-row); b2.append(target * limits[r] + f[r])
    sum_row = np.zeros(nv); sum_row[:n] = 1.0; sum_row[n:2 * n] = -1.0
    A2.append(sum_row - np.eye(nv)[-1]); b2.append(0.0)      # sum - s <= 0
    A2.append(-sum_row - np.eye(nv)[-1]); b2.append(0.0)     # -sum - s <= 0
    A2.append(sum_row.copy()); b2.append(down_s)
    A2.append(-sum_row); b2.append(up_s)
    bounds2 = (
        [(0.0, hi) for _, _, hi in gens]
        + [(0.0, -lo) for _, lo, _ in gens]
        + [(0.0, ramp_s)]
    )

    res2 = linprog(c=cost, A_ub=np.array(A2), b_ub=np.array(b2), bounds=bounds2,
                   method="highs")
    if not res2.success:
        return _no_headroom_result(state)

    deltas = {}
    x = res2.x
    for j, gid in enumerate(ids):
        d = float(x[j] - x[n + j])
        if abs(d) > 1e-7:
            deltas[gid] = d
    implied = -sum(deltas.values())
    if abs(implied) > 1e-7:
        deltas[grid.slack_generator] = implied

    pred_flows = f + M @ (x[:n] - x[n:2 * n])
    pred_rho = float(np.max(np.abs(pred_flows) / limits)) if len(f) else 0.0
    total = sum(abs(v) for v in deltas.values())
    return OptimizedRedispatch(
        action=Redispatch(deltas=deltas, insufficient=insufficient),
        predicted_max_rho=pred_rho,
        total_abs_mw=total,
        phase1_max_rho=t_star,
    )


def _no_headroom_result(state: GridState) -> OptimizedRedispatch:
    return OptimizedRedispatch(
        action=Redispatch(insufficient=True),
        predicted_max_rho=state.max_rho,
        total_abs_mw=0.0,
        phase1_max_rho=state.max_rho,
    )


def curtailment_fallback(
    grid: Grid,
    state: GridState,
    config: EngineConfig | None = None,
    sensitivities: Ptdf | None = None,
) -> OptimizedRedispatch:
    """Redispatch LP extended with renewable-output reductions, weighted so
    curtailment is used only where dispatch alone cannot reach the target."""
    if state.diverged:
        raise RedispatchError("cannot optimize a diverged state")
    config = config or EngineConfig()
    sens = sensitivities if sensitivities is not None else ptdf(grid, state.topology)

    gens = _free_generators(grid, state)
    ids = [g[0] for g in gens]
    ren_ids = [r for r in sorted(grid.renewable_ids) if state.dispatch[r] > 1e-9]
    if not ren_ids:
        return optimize_redispatch(grid, state, config, sens)

    f, limits, M = _flow_rows(grid, state, sens, ids + ren_ids)
    n, m = len(ids), len(ren_ids)
    Mg, Mr = M[:, :n], M[:, n:]
    ramp_s, down_s, up_s = _slack_bounds(grid, state)

    # phase 1 with curtailment variables c (output reductions)
    nv1 = n + m + 1
    A, b = [], []
    for r in range(len(f)):
        row = np.zeros(nv1)
        row[:n] = Mg[r]; row[n:n + m] = -Mr[r]; row[-1] = -limits[r]
        A.append(row.copy()); b.append(-f[r])
        row2 = -row; row2[-1] = -limits[r]
        A.append(row2); b.append(f[r])
    # slack implied delta = -(sum deltas) + sum c
    srow = np.zeros(nv1); srow[:n] = 1.0; srow[n:n + m] = -1.0
    A.append(srow.copy()); b.append(min(ramp_s, down_s))
    A.append(-srow); b.append(min(ramp_s, up_s))
    bounds = (
        [(lo, hi) for _, lo, hi in gens]
        + [(0.0, state.dispatch[r]) for r in ren_ids]
        + [(0.0, None)]
    )
    c1 = np.zeros(nv1); c1[-1] = 1.0
    res1 = linprog(c=c1, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds,
                   method="highs")
    if not res1.success:
        return _no_headroom_result(state)
    t_star = float(res1.x[-1])
    target = max(t_star, 1.0) + _PHASE_TOL
    insufficient = t_star > 1.0 + 1e-9

    # phase 2: |deltas| + 10x curtailment + |implied slack|
    nv = 2 * n + m + 1
    cost = np.empty(nv)
    for j in range(n):
        cost[j] = 1.0 + _TIE_EPS * j
        cost[n + j] = 1.0 + _TIE_EPS * j
    for j in range(m):
        cost[2 * n + j] = config.curtailment_penalty * (1.0 + _TIE_EPS * j)
    cost[-1] = 1.0 + _TIE_EPS * n

    A2, b2 = [], []
    for r in range(len(f)):
        row = np.zeros(nv)
        row[:n] = Mg[r]; row[n:2 * n] = -Mg[r]; row[2 * n:2 * n + m] = -Mr[r]
        A2.append(row.copy()); b2.append(target * limits[r] - f[r])
        A2.append(-row); b2.append(target * limits[r] + f[r])
    srow2 = np.zeros(nv)
    srow2[:n] = 1.0; srow2[n:2 * n] = -1.0; srow2[2 * n:2 * n + m] = -1.0
    s_sel = np.zeros(nv); s_sel[-1] = 1.0
    A2.append(srow2 - s_sel); b2.append(0.0)
    A2.append(-srow2 - s_sel); b2.append(0.0)
    A2.append(srow2.copy()); b2.append(down_s)
    A2.append(-srow2); b2.append(up_s)
    bounds2 = (
        [(0.0, hi) for _, _, hi in gens]
        + [(0.0, -lo) for _, lo, _ in gens]
        + [(0.0, state.dispatch[r]) for r in ren_ids]
        + [(0.0, ramp_s)]
    )
    res2 = linprog(c=cost, A_ub=np.array(A2), b_ub=np.array(b2), bounds=bounds2,
                   method="highs")
    if not res2.success:
        return _no_headroom_result(state)

    x = res2.x
    deltas = {}
    for j, gid in enumerate(ids):
        d = float(x[j] - x[n + j])
        if abs(d) > 1e-7:
            deltas[gid] = d
    cuts = {}
    for j, rid in enumerate(ren_ids):
        c_mw = float(x[2 * n + j])
        if c_mw > 1e-7:
            cuts[rid] = state.dispatch[rid] - c_mw  # cap below current output
    implied = -sum(deltas.values()) + sum(
        state.dispatch[r] - cap for r, cap in cuts.items()
    )
    if abs(implied) > 1e-7:
        deltas[grid.slack_generator] = implied

    dg = x[:n] - x[n:2 * n]
    pred_flows = f + Mg @ dg - Mr @ x[2 * n:2 * n + m]
    pred_rho = float(np.max(np.abs(pred_flows) / limits)) if len(f) else 0.0
    total = sum(abs(v) for v in deltas.values())
    curtailed = float(np.sum(x[2 * n:2 * n + m]))
    return OptimizedRedispatch(
        action=Redispatch(deltas=deltas, curtail_caps=cuts, insufficient=insufficient),
        predicted_max_rho=pred_rho,
        total_abs_mw=total,
        curtailment_mw=curtailed,
        phase1_max_rho=t_star,
    )


def optimize_for_topology(
    grid: Grid,
    state: GridState,
    topo_action: SubstationAction | LineAction,
    forecast_row: ChronicRow,
    config: EngineConfig,
) -> OptimizedComposite:
    """Optimize redispatch for the grid as it would look after the topology
    action: simulate the action, rebuild sensitivities on the resulting
    topology, optimize there, and report the combined effect."""
    post = simulate(grid, state, topo_action, forecast_row, config)
    if post.blackout or post.diverged:
        island = getattr(post.solution, "island_elements", ())
        raise RedispatchError(
            f"topology action diverges ({', '.join(island) or 'islanded'})"
        )
    try:
        sens = ptdf(grid, post.topology)
    except PowerFlowError as exc:
        raise RedispatchError(str(exc)) from exc
    opt = optimize_redispatch(grid, post, config, sens)
    if opt.insufficient:
        opt = curtailment_fallback(grid, post, config, sens)

    composite = Composite(topology=topo_action, redispatch=opt.action)
    check = simulate(grid, state, composite, forecast_row, config)
    rho = check.max_rho if not check.diverged else float("inf")
    switched = sum(
        1 for ep, bus in topo_action.assignment.items()
        if state.topology.element_bus[ep] != bus
    ) if isinstance(topo_action, SubstationAction) else 0
    return OptimizedComposite(
        action=composite,
        predicted_max_rho=rho,
        redispatch_total_mw=opt.total_abs_mw,
        endpoints_switched=switched,
    )


def redispatch_reset_step(
    grid: Grid,
    state: GridState,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
) -> Redispatch | NoOp:
    """One step of walking dispatch back to plan (and lifting curtailment
    caps), each generator by at most its ramp; withheld when the simulated
    loading would leave the safe band anywhere over the lookahead window."""
    from .topology_search import guarded_safe

    deviation = state.deviation(grid)
    deltas = {}
    for gid, dev in sorted(deviation.items()):
        if gid == grid.slack_generator or abs(dev) < 1e-6:
            continue
        gen = grid.generator_by_id[gid]
        deltas[gid] = -math.copysign(min(abs(dev), gen.ramp), dev)
    has_caps = bool(state.curtail_caps)
    if not deltas and not has_caps:
        return NoOp()

    # stay inside the slack's ability to absorb the counter-move
    total = sum(deltas.values())
    ramp_s = grid.slack.ramp
    if abs(total) > ramp_s > 0.0:
        scale = ramp_s / abs(total)
        deltas = {g: d * scale for g, d in deltas.items()}

    action = Redispatch(deltas=deltas, lift_caps=has_caps)
    if not guarded_safe(grid, state, action, forecast_rows, config):
        return NoOp(reason="reset withheld: simulated loading unsafe")
    return action
