"""Enumeration and simulation-guided ranking of bus-splitting actions.

Candidates are canonical two-busbar partitions of actionable substations
(four or more connected elements, no cooldown): the lowest-ordered
endpoint is pinned to busbar 1, the identity assignment is skipped, and
partitions violating the busbar rules are dropped.  Disconnected lines
past their cooldown contribute reconnection candidates.

The search scores each candidate by simulating it one forecast step, keeps
the beam-width best, extends them with do-nothing continuations over the
horizon, and ranks by worst-case loading along the way.  A heuristic PTDF
prior orders the evaluation queue (and nothing else), so a wall-clock
budget cuts the least promising candidates first; the prior interface is
the seam where a learned policy could plug in.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .actions import LineAction, NoOp, SubstationAction
from .config import EngineConfig
from .engine import ChronicRow, GridState, simulate
from .grid import Grid, substation_assignment_violation, topology_distance
from .powerflow import Ptdf, ptdf


@dataclass(frozen=True)
class ActionCandidate:
    action: SubstationAction | LineAction
    prior_score: float
    predicted_max_rho: tuple[float, ...]
    rank: int
    canonical_id: str

    @property
    def objective(self) -> float:
        return max(self.predicted_max_rho)


@dataclass(frozen=True)
class SearchResult:
    candidates: tuple[ActionCandidate, ...]
    noop_max_rho: tuple[float, ...]
    no_action_needed: bool
    truncated: bool
    empty: bool

    @property
    def best(self) -> ActionCandidate | None:
        return self.candidates[0] if self.candidates else None




def enumerate_candidates(
    grid: Grid, state: GridState, config: EngineConfig | None = None
) -> list[SubstationAction | LineAction]:
    """All unitary topology actions legal right now, in canonical-id order."""
    topo = state.topology
    out: list[SubstationAction | LineAction] = []

    for sub in grid.substation_ids:
        if state.substation_cooldowns.get(sub, 0) > 0:
            continue
        endpoints = grid.endpoints_at[sub]
        connected = [
            ep for ep in endpoints
            if not grid.endpoint_is_line_end(ep)
            or topo.line_status[grid.line_of_endpoint(ep)]
        ]
        if len(connected) < 4:
            continue
        pinned, free = endpoints[0], endpoints[1:]
        current = tuple(topo.element_bus[ep] for ep in endpoints)
        for mask in range(1 << len(free)):
            assignment = {pinned: 1}
            for j, ep in enumerate(free):
                assignment[ep] = 2 if mask >> j & 1 else 1
            if tuple(assignment[ep] for ep in endpoints) == current:
                continue
            if substation_assignment_violation(grid, topo, sub, assignment):
                continue
            out.append(SubstationAction(sub, assignment))

    for line in grid.lines:
        if not topo.line_status[line.id] and state.line_cooldowns.get(line.id, 0) == 0:
            out.append(LineAction(line.id, connect=True))

    out.sort(key=lambda a: a.canonical_id())
    return out


def prior_rank(
    candidates: list[SubstationAction | LineAction],
    state: GridState,
    grid: Grid,
    sensitivities: Ptdf | None = None,
) -> list[float]:
    """Heuristic priors in [0, 1]: summed flow sensitivity of the currently
    overloaded lines to the candidate's location.  All zero when nothing is
    overloaded."""
    if state.diverged or not candidates:
        return [0.0] * len(candidates)
    sol = state.solution
    over = [
        i for i, lid in enumerate(sol.line_ids)
        if sol.in_service[i] and sol.rho[i] > 1.0
    ]
    if not over:
        return [0.0] * len(candidates)
    sens = sensitivities if sensitivities is not None else ptdf(grid, state.topology)
    ng = sens.node_graph

    scores = []
    for cand in candidates:
        if isinstance(cand, SubstationAction):
            nodes = sorted({ng.node_of_element[ep] for ep in cand.assignment})
        else:
            nodes = sorted({
                ng.node_of_element[f"{cand.line}:from"],
                ng.node_of_element[f"{cand.line}:to"],
            })
        cols = [sens.matrix[:, ng.node_index[n]] for n in nodes]
        score = 0.0
        for i in over:
            if len(cols) == 1:
                score += abs(cols[0][i])
            else:
                score += abs(cols[0][i] - cols[1][i])
        scores.append(score)

    top = max(scores)
    if top > 0.0:
        scores = [s / top for s in scores]
    return scores


def search(
    grid: Grid,
    state: GridState,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
    depth: int | None = None,
    beam: int | None = None,
    k: int | None = None,
    budget_ms: float | None = None,
) -> SearchResult:
    """Depth-limited simulation search over unitary topology candidates.

    Level 1 simulates every candidate one forecast step; the beam-width
    best continue under NoOp up to the horizon.  Objective: worst-case max
    rho along the simulated trajectory.  Candidates that diverge, or that
    do worse than NoOp on the first step, are discarded.  On budget expiry
    the result carries what was evaluated so far, flagged truncated.
    """
    if not forecast_rows:
        raise ValueError("search needs at least one forecast row")
    if state.blackout:
        return SearchResult(
            candidates=(), noop_max_rho=(float("inf"),),
            no_action_needed=False, truncated=False, empty=True,
        )
    depth = depth or config.search_depth
    beam = beam or config.search_beam
    k = k or config.search_k
    budget_ms = config.search_budget_ms if budget_ms is None else budget_ms
    horizon = max(1, min(depth, len(forecast_rows)))
    started = time.monotonic()

    noop_traj: list[float] = []
    cursor = state
    for r in range(horizon):
        cursor = simulate(grid, cursor, NoOp(), forecast_rows[r], config)
        if cursor.diverged:
            noop_traj.append(float("inf"))
            break
        noop_traj.append(cursor.max_rho)
    noop_one_step = noop_traj[0]

    candidates = enumerate_candidates(grid, state, config)
    priors = prior_rank(candidates, state, grid)
    queue = sorted(
        zip(candidates, priors),
        key=lambda cp: (-cp[1], cp[0].canonical_id()),
    )

    noop_worst = max(noop_traj)

    truncated = False
    n_dominated = 0
    level1: list[tuple[float, str, object, float, GridState]] = []
    for action, prior in queue:
        if budget_ms and (time.monotonic() - started) * 1000.0 > budget_ms:
            truncated = True
            break
        sim = simulate(grid, state, action, forecast_rows[0], config)
        if sim.diverged or sim.rejections:
            continue
        one_step = sim.max_rho
        if one_step > noop_worst + 1e-9:
            n_dominated += 1
            continue  # acting must not be worse than riding it out
        level1.append((one_step, action.canonical_id(), action, prior, sim))

    level1.sort(key=lambda e: (e[0], e[1]))
    expanded: list[ActionCandidate] = []
    for one_step, cid, action, prior, sim in level1[:beam]:
        traj = [one_step]
        cursor = sim
        dead = False
        for r in range(1, horizon):
            cursor = simulate(grid, cursor, NoOp(), forecast_rows[r], config)
            if cursor.diverged:
                dead = True
                break
            traj.append(cursor.max_rho)
        if dead:
            continue
        if max(traj) > noop_worst + 1e-9:
            n_dominated += 1
            continue
        expanded.append(ActionCandidate(
            action=action,
            prior_score=prior,
            predicted_max_rho=tuple(traj),
            rank=0,
            canonical_id=cid,
        ))

    expanded.sort(key=lambda c: (c.objective, c.canonical_id))
    ranked = tuple(
        ActionCandidate(
            action=c.action,
            prior_score=c.prior_score,
            predicted_max_rho=c.predicted_max_rho,
            rank=i + 1,
            canonical_id=c.canonical_id,
        )
        for i, c in enumerate(expanded[:k])
    )
    # "empty" means there was nothing viable to rank (no candidates, or all
    # of them diverged) — distinct from "NoOp dominates every candidate"
    empty = not candidates or (
        not ranked and not truncated and n_dominated == 0
    )
    return SearchResult(
        candidates=ranked,
        noop_max_rho=tuple(noop_traj),
        no_action_needed=max(noop_traj) < 1.0,
        truncated=truncated,
        empty=empty,
    )


def recovery_step(
    grid: Grid,
    state: GridState,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
) -> SubstationAction | LineAction | NoOp:
    """The single reversion that most reduces topology distance to the
    reference, simulated first and withheld if the loading would leave the
    safe band anywhere over the lookahead window (or everything
    distance-reducing is cooldown-blocked).  The lookahead keeps remedial
    splits in place through the lulls of an ongoing disturbance."""
    ref = grid.reference_topology
    if topology_distance(state.topology, ref) == 0:
        return NoOp()

    options: list[tuple[int, str, SubstationAction | LineAction]] = []
    for sub in grid.substation_ids:
        if state.substation_cooldowns.get(sub, 0) > 0:
            continue
        moved = [
            ep for ep in grid.endpoints_at[sub]
            if state.topology.element_bus[ep] != ref.element_bus[ep]
        ]
        if not moved:
            continue
        assignment = {ep: ref.element_bus[ep] for ep in grid.endpoints_at[sub]}
        action = SubstationAction(sub, assignment)
        options.append((len(moved), action.canonical_id(), action))
    for line in grid.lines:
        if state.topology.line_status[line.id] == ref.line_status[line.id]:
            continue
        if state.line_cooldowns.get(line.id, 0) > 0:
            continue
        action = LineAction(line.id, connect=ref.line_status[line.id])
        options.append((1, action.canonical_id(), action))

    if not options:
        return NoOp(reason="recovery blocked by cooldowns")
    options.sort(key=lambda o: (-o[0], o[1]))
    _, _, action = options[0]

    if not guarded_safe(grid, state, action, forecast_rows, config):
        return NoOp(reason="recovery withheld: simulated loading unsafe")
    return action


def guarded_safe(
    grid: Grid,
    state: GridState,
    action,
    forecast_rows: list[ChronicRow],
    config: EngineConfig,
) -> bool:
    """Apply the action, continue with NoOp over the lookahead window, and
    require every simulated step to stay inside the safe band."""
    window = max(1, min(config.recovery_lookahead, len(forecast_rows)))
    cursor = state
    for r in range(window):
        cursor = simulate(
            grid, cursor, action if r == 0 else NoOp(), forecast_rows[r], config
        )
        if cursor.diverged or cursor.max_rho > config.alert_threshold or (
            r == 0 and cursor.rejections
        ):
            return False
    return True
