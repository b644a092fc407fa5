"""Time-stepping simulation engine with overload protection.

A step, in order: reject or clip the incoming action, advance injections
from the chronic row, re-solve the flow, run overload protection (soft
timers, instant trips, cascade re-solve), and book cooldowns.  States are
immutable; ``step`` returns a new one, which makes forecast-based
simulation the same function applied to a forecast row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import (
    Action,
    Composite,
    Curtailment,
    LineAction,
    NoOp,
    Redispatch,
    SubstationAction,
)
from .config import EngineConfig
from .grid import Grid, TopologyState, electrical_nodes, substation_assignment_violation
from .powerflow import Diverged, FlowSolution, dc_solve


class EngineError(Exception):
    pass


@dataclass(frozen=True)
class ChronicRow:
    """One 5-minute slice of the scenario: realized or forecast."""

    loads: dict[str, float]       # load id -> MW consumed
    renewables: dict[str, float]  # wind/solar id -> MW available
    plan: dict[str, float]        # dispatchable id -> planned MW


@dataclass(frozen=True)
class GridState:
    """Dynamic snapshot of the simulated grid at one step."""

    step_index: int
    topology: TopologyState
    dispatch: dict[str, float]          # actual MW per generator
    planned_dispatch: dict[str, float]  # plan (dispatchables) / availability (renewables)
    curtail_caps: dict[str, float]      # renewable id -> cap MW (absent = uncapped)
    loads: dict[str, float]
    solution: FlowSolution | Diverged
    overflow_timers: dict[str, int]
    line_cooldowns: dict[str, int]
    substation_cooldowns: dict[str, int]
    blackout: bool = False
    rejections: tuple[str, ...] = ()
    auto_disconnected: tuple[str, ...] = ()
    applied_action: Action = field(default_factory=NoOp)
    endpoints_switched: int = 0

    @property
    def max_rho(self) -> float:
        return self.solution.max_rho

    @property
    def diverged(self) -> bool:
        return self.solution.diverged

    def deviation(self, grid: Grid) -> dict[str, float]:
        """Actual minus planned MW per dispatchable generator."""
        return {
            g: self.dispatch[g] - self.planned_dispatch[g] for g in grid.dispatchable_ids
        }

    def injections(self, grid: Grid) -> dict[str, float]:
        inj = {g.id: self.dispatch[g.id] for g in grid.generators}
        inj.update({d: -mw for d, mw in self.loads.items()})
        return inj

    def curtailment(self, grid: Grid) -> dict[str, float]:
        """Withheld renewable MW (availability minus actual output)."""
        return {
            r: max(0.0, self.planned_dispatch[r] - self.dispatch[r])
            for r in grid.renewable_ids
        }


def _decremented(counters: dict[str, int]) -> dict[str, int]:
    return {k: v - 1 for k, v in counters.items() if v > 1}


@dataclass
class _Legalized:
    topo_action: SubstationAction | LineAction | None
    deltas: dict[str, float]
    caps: dict[str, float] | None  # None = leave caps unchanged; {} = clear none
    lift_caps: bool
    rejections: list[str]
    rejected_entirely: bool


def _legalize(
    grid: Grid,
    state: GridState,
    action: Action,
    config: EngineConfig,
) -> _Legalized:
    """Apply the legality rules: topology actions are rejected outright on a
    violation (cooldown, busbar rule), redispatch deltas are clipped to
    ramps and limits with a note."""
    out = _Legalized(None, {}, None, False, [], False)

    topo_part: SubstationAction | LineAction | None = None
    dispatch_part: Redispatch | Curtailment | None = None
    if isinstance(action, (SubstationAction, LineAction)):
        topo_part = action
    elif isinstance(action, (Redispatch, Curtailment)):
        dispatch_part = action
    elif isinstance(action, Composite):
        topo_part = action.topology
        dispatch_part = action.redispatch

    if topo_part is not None:
        reason = _topology_violation(grid, state, topo_part, config)
        if reason is not None:
            out.rejections.append(reason)
            out.rejected_entirely = True
            return out
        out.topo_action = topo_part

    if isinstance(dispatch_part, Curtailment):
        dispatch_part = Redispatch(curtail_caps=dispatch_part.caps)

    if isinstance(dispatch_part, Redispatch):
        deviation = state.deviation(grid)
        for gid, delta in dispatch_part.deltas.items():
            gen = grid.generator_by_id.get(gid)
            if gen is None or not gen.dispatchable:
                out.rejections.append(f"redispatch names non-dispatchable '{gid}'")
                continue
            if gid == grid.slack_generator:
                # implied, never applied: the slack balances on its own
                continue
            clipped = max(-gen.ramp, min(gen.ramp, delta))
            # stay inside [p_min, p_max] relative to the current plan + deviation
            lo = gen.p_min - state.planned_dispatch[gid] - deviation[gid]
            hi = gen.p_max - state.planned_dispatch[gid] - deviation[gid]
            clipped = max(lo, min(hi, clipped))
            if abs(clipped - delta) > 1e-9:
                out.rejections.append(
                    f"redispatch on {gid} clipped from {delta:+.2f} to {clipped:+.2f} MW"
                )
            if abs(clipped) > 1e-12:
                out.deltas[gid] = clipped
        caps: dict[str, float] = {}
        for rid, cap in dispatch_part.curtail_caps.items():
            gen = grid.generator_by_id.get(rid)
            if gen is None or gen.dispatchable:
                out.rejections.append(f"curtailment names non-renewable '{rid}'")
                continue
            caps[rid] = max(0.0, min(gen.p_max, cap))
        if caps:
            out.caps = caps
        if getattr(dispatch_part, "lift_caps", False):
            out.lift_caps = True
    return out


def _topology_violation(
    grid: Grid,
    state: GridState,
    action: SubstationAction | LineAction,
    config: EngineConfig,
) -> str | None:
    if isinstance(action, SubstationAction):
        sub = action.substation
        if sub not in grid.endpoints_at:
            return f"unknown substation '{sub}'"
        cd = state.substation_cooldowns.get(sub, 0)
        if cd > 0:
            return f"substation {sub} cooldown: {cd} steps remaining"
        expected = set(grid.endpoints_at[sub])
        if set(action.assignment) != expected:
            return f"substation {sub}: assignment must cover exactly its endpoints"
        if any(b not in (1, 2) for b in action.assignment.values()):
            return f"substation {sub}: busbar must be 1 or 2"
        # only this substation changes: check the busbar rules locally
        return substation_assignment_violation(
            grid, state.topology, sub, action.assignment
        )

    line = grid.line_by_id.get(action.line)
    if line is None:
        return f"unknown line '{action.line}'"
    cd = state.line_cooldowns.get(action.line, 0)
    if cd > 0:
        return f"line {action.line} cooldown: {cd} steps remaining"
    if action.connect == state.topology.line_status[action.line]:
        state_word = "connected" if action.connect else "disconnected"
        return f"line {action.line} is already {state_word}"
    return None


def action_rejections(
    grid: Grid, state: GridState, action: Action, config: EngineConfig
) -> tuple[str, ...]:
    """Legality pre-check without applying: the reasons a topology part
    would be rejected outright, plus any redispatch clipping notes."""
    legal = _legalize(grid, state, action, config)
    return tuple(legal.rejections)


def step(
    grid: Grid,
    state: GridState,
    action: Action,
    row: ChronicRow,
    config: EngineConfig,
) -> GridState:
    """Advance one 5-minute step under the given action and chronic row."""
    if state.blackout:
        raise EngineError("cannot step a blacked-out grid")
    return _advance(grid, state, action, row, config, state.step_index + 1)


def simulate(
    grid: Grid,
    state: GridState,
    action: Action,
    forecast_row: ChronicRow,
    config: EngineConfig,
) -> GridState:
    """Forecast-based what-if: identical semantics to ``step`` (both are
    pure), applied to a forecast row instead of a realized one."""
    if state.blackout:
        raise EngineError("cannot simulate from a blacked-out grid")
    return _advance(grid, state, action, forecast_row, config, state.step_index + 1)


def initial_state(
    grid: Grid, row: ChronicRow, config: EngineConfig
) -> GridState:
    """State at step 0: reference topology, dispatch at plan, no deviations."""
    pre = GridState(
        step_index=-1,
        topology=grid.reference_topology,
        dispatch={g.id: 0.0 for g in grid.generators},
        planned_dispatch={g.id: 0.0 for g in grid.generators},
        curtail_caps={},
        loads={d.id: 0.0 for d in grid.loads},
        solution=Diverged(reason="unsolved"),
        overflow_timers={l.id: 0 for l in grid.lines},
        line_cooldowns={},
        substation_cooldowns={},
    )
    return _advance(grid, pre, NoOp(), row, config, 0)


def _advance(
    grid: Grid,
    state: GridState,
    action: Action,
    row: ChronicRow,
    config: EngineConfig,
    next_index: int,
) -> GridState:
    legal = _legalize(grid, state, action, config)

    line_cooldowns = _decremented(state.line_cooldowns)
    substation_cooldowns = _decremented(state.substation_cooldowns)

    # topology update
    topology = state.topology
    endpoints_switched = 0
    if legal.topo_action is not None:
        if isinstance(legal.topo_action, SubstationAction):
            before = topology
            topology = topology.with_assignment(legal.topo_action.assignment)
            endpoints_switched = sum(
                1
                for ep, bus in legal.topo_action.assignment.items()
                if before.element_bus[ep] != bus
            )
            substation_cooldowns[legal.topo_action.substation] = config.substation_cooldown
        else:
            topology = topology.with_line_status(
                legal.topo_action.line, legal.topo_action.connect
            )
            line_cooldowns[legal.topo_action.line] = config.line_action_cooldown

    # dispatch update: plan from the row, persistent deviations, new deltas
    deviation = state.deviation(grid)
    caps = dict(state.curtail_caps)
    if legal.lift_caps:
        caps = {}
    if legal.caps is not None:
        caps.update(legal.caps)

    planned: dict[str, float] = {}
    dispatch: dict[str, float] = {}
    for gen in grid.generators:
        if gen.dispatchable:
            plan = row.plan.get(gen.id, 0.0)
            planned[gen.id] = plan
            if gen.id == grid.slack_generator:
                continue  # balanced below
            dev = deviation.get(gen.id, 0.0) + legal.deltas.get(gen.id, 0.0)
            dispatch[gen.id] = max(gen.p_min, min(gen.p_max, plan + dev))
        else:
            avail = row.renewables.get(gen.id, 0.0)
            planned[gen.id] = avail
            cap = caps.get(gen.id)
            dispatch[gen.id] = min(avail, cap) if cap is not None else avail

    loads = {d.id: row.loads.get(d.id, 0.0) for d in grid.loads}
    total_load = sum(loads.values())
    others = sum(dispatch.values())
    # the slack generator absorbs the residual; it is exempt from the
    # limit clamp (it is the balancing device, its output is an outcome)
    slack_mw = total_load - others
    dispatch[grid.slack_generator] = slack_mw
    rejections = list(legal.rejections)
    slack_gen = grid.slack
    if not (slack_gen.p_min - 1e-6 <= slack_mw <= slack_gen.p_max + 1e-6):
        rejections.append(
            f"slack {slack_gen.id} balancing output {slack_mw:.2f} MW outside limits"
        )

    injections = {g: mw for g, mw in dispatch.items()}
    injections.update({d: -mw for d, mw in loads.items()})

    node_graph = electrical_nodes(grid, topology)
    solution = dc_solve(grid, topology, injections, node_graph=node_graph)

    base = dict(
        step_index=next_index,
        dispatch=dispatch,
        planned_dispatch=planned,
        curtail_caps=caps,
        loads=loads,
        rejections=tuple(rejections),
        applied_action=action if not legal.rejected_entirely else NoOp(
            reason=rejections[0] if rejections else "rejected"
        ),
        endpoints_switched=endpoints_switched,
    )

    if solution.diverged:
        return GridState(
            topology=topology,
            solution=solution,
            overflow_timers={l.id: 0 for l in grid.lines},
            line_cooldowns=line_cooldowns,
            substation_cooldowns=substation_cooldowns,
            blackout=True,
            auto_disconnected=(),
            **base,
        )

    # overload protection: soft timers advance once per step from the first
    # post-action solve; the cascade loop continues on the hard limit only
    timers: dict[str, int] = {}
    for i, lid in enumerate(solution.line_ids):
        if solution.in_service[i] and solution.rho[i] > 1.0:
            timers[lid] = state.overflow_timers.get(lid, 0) + 1
        else:
            timers[lid] = 0

    auto_disconnected: list[str] = []
    trip = [
        lid
        for i, lid in enumerate(solution.line_ids)
        if solution.in_service[i]
        and (timers[lid] >= config.soft_overflow_steps
             or solution.rho[i] >= config.hard_overflow_rho)
    ]
    while trip:
        for lid in trip:
            topology = topology.with_line_status(lid, False)
            line_cooldowns[lid] = config.line_reconnect_cooldown
            timers[lid] = 0
            auto_disconnected.append(lid)
        node_graph = electrical_nodes(grid, topology)
        solution = dc_solve(grid, topology, injections, node_graph=node_graph)
        if solution.diverged:
            return GridState(
                topology=topology,
                solution=solution,
                overflow_timers={l.id: 0 for l in grid.lines},
                line_cooldowns=line_cooldowns,
                substation_cooldowns=substation_cooldowns,
                blackout=True,
                auto_disconnected=tuple(auto_disconnected),
                **base,
            )
        trip = [
            lid
            for i, lid in enumerate(solution.line_ids)
            if solution.in_service[i] and solution.rho[i] >= config.hard_overflow_rho
        ]

    return GridState(
        topology=topology,
        solution=solution,
        overflow_timers=timers,
        line_cooldowns=line_cooldowns,
        substation_cooldowns=substation_cooldowns,
        blackout=False,
        auto_disconnected=tuple(auto_disconnected),
        **base,
    )


@dataclass(frozen=True)
class OutageResult:
    line: str
    max_rho: float  # inf when the outage diverges
    diverged: bool

    @property
    def violation(self) -> bool:
        return self.diverged or self.max_rho > 1.0


def contingency_screen(
    grid: Grid,
    state: GridState,
    action: Action,
    outage_set: list[str] | tuple[str, ...],
    config: EngineConfig,
) -> tuple[OutageResult, ...]:
    """N-1 screening: apply the action on the state's current injections,
    then for each outage remove that line and re-solve (no protection
    cascade — the raw post-outage loading is the point)."""
    post = _what_if_now(grid, state, action, config)
    if post.diverged:
        return tuple(
            OutageResult(line=lid, max_rho=float("inf"), diverged=True)
            for lid in outage_set
        )
    return screen_outages(grid, post, outage_set)


def screen_outages(
    grid: Grid, state: GridState, outage_set: list[str] | tuple[str, ...]
) -> tuple[OutageResult, ...]:
    """Re-solve the state with each outage line removed.

    The heavy lifting goes through the line outage distribution factors of
    the state's topology — algebraically identical to a from-scratch
    re-solve — with a connectivity pre-check so islanding outages take the
    full path (the islanding policy decides their fate)."""
    from .powerflow import ptdf as compute_ptdf

    if state.diverged:
        return tuple(
            OutageResult(line=lid, max_rho=float("inf"), diverged=True)
            for lid in outage_set
        )
    sol = state.solution
    sens = compute_ptdf(grid, state.topology)
    ng = sens.node_graph
    injections = state.injections(grid)
    limits = np.array([grid.line_by_id[lid].thermal_limit for lid in sol.line_ids])
    line_pos = {lid: i for i, lid in enumerate(sol.line_ids)}

    # bridge detection: outages that split the slack component
    bridges = _bridge_lines(grid, state.topology, ng)

    results = []
    for lid in outage_set:
        if not state.topology.line_status.get(lid, False):
            # already out: the N-1 case degenerates to the base case
            results.append(OutageResult(line=lid, max_rho=sol.max_rho, diverged=False))
            continue
        k = line_pos[lid]
        if lid in bridges:
            topo = state.topology.with_line_status(lid, False)
            full = dc_solve(grid, topo, injections)
            if full.diverged:
                results.append(OutageResult(lid, float("inf"), True))
            else:
                results.append(OutageResult(lid, full.max_rho, False))
            continue
        i = ng.node_index[ng.node_of_element[f"{lid}:from"]]
        j = ng.node_index[ng.node_of_element[f"{lid}:to"]]
        col = sens.matrix[:, i] - sens.matrix[:, j]
        denom = 1.0 - col[k]
        if abs(denom) < 1e-9:
            # numerically a split; defer to the exact path
            topo = state.topology.with_line_status(lid, False)
            full = dc_solve(grid, topo, injections)
            if full.diverged:
                results.append(OutageResult(lid, float("inf"), True))
                continue
            results.append(OutageResult(lid, full.max_rho, False))
            continue
        flows = sol.flows + col * (sol.flows[k] / denom)
        rho = np.abs(flows) / limits
        mask = sol.in_service.copy()
        mask[k] = False
        worst = float(rho[mask].max()) if mask.any() else 0.0
        results.append(OutageResult(lid, worst, False))
    return tuple(results)


def _bridge_lines(grid: Grid, topology: TopologyState, ng) -> frozenset[str]:
    """Lines whose removal disconnects part of the slack component."""
    # union-find over all in-service lines except the probed one is O(E^2);
    # instead find 2-edge-connected components once via an iterative DFS
    adj: dict = {}
    for line in grid.lines:
        if not topology.line_status[line.id]:
            continue
        a = ng.node_of_element[f"{line.id}:from"]
        b = ng.node_of_element[f"{line.id}:to"]
        adj.setdefault(a, []).append((b, line.id))
        adj.setdefault(b, []).append((a, line.id))

    index: dict = {}
    low: dict = {}
    bridges: set[str] = set()
    counter = [0]
    for root in adj:
        if root in index:
            continue
        stack = [(root, None, iter(adj[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        while stack:
            node, via, it = stack[-1]
            advanced = False
            for nxt, lid in it:
                if lid == via:
                    continue
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append((nxt, lid, iter(adj[nxt])))
                    advanced = True
                    break
                low[node] = min(low[node], index[nxt])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[node])
                    if low[node] > index[parent]:
                        bridges.add(via)
    return frozenset(bridges)


def _what_if_now(
    grid: Grid, state: GridState, action: Action, config: EngineConfig
) -> GridState:
    """Re-apply the current chronic slice with an action on top — a
    what-if against 'now' rather than a time advance."""
    row = ChronicRow(
        loads=dict(state.loads),
        renewables={r: state.planned_dispatch[r] for r in grid.renewable_ids},
        plan={g: state.planned_dispatch[g] for g in grid.dispatchable_ids},
    )
    return _advance(grid, state, action, row, config, state.step_index)
