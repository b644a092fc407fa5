"""DC load flow and PTDF sensitivities.

The linearized model: net injections P at the electrical nodes relate to
voltage angles through the susceptance matrix, B'θ = P, with the slack
node's angle fixed at zero.  The flow on a line between nodes i and j is
b·(θ_i − θ_j); line loading ρ is |flow| over thermal limit.

Islanding policy: a connected component without the slack is fatal if it
contains any load (the flow diverges — blackout); a component holding only
generators is shed silently and the rest of the grid is solved.

Solver structures (node graph, LU factorization of the reduced
susceptance matrix, PTDF) are cached per topology on the grid object;
topologies repeat heavily across simulation steps, candidate evaluations
and N-1 screening, and the cache is what keeps those paths fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .grid import Grid, NodeGraph, TopologyState, electrical_nodes, islands

_CACHE_LIMIT = 4096


class PowerFlowError(Exception):
    """Raised where a diverged topology cannot be represented in a result."""


@dataclass(frozen=True)
class Diverged:
    """Marker for a failed solve, naming the offending island's elements."""

    reason: str
    island_elements: tuple[str, ...] = ()

    @property
    def diverged(self) -> bool:
        return True

    @property
    def max_rho(self) -> float:
        return float("inf")


@dataclass(frozen=True)
class FlowSolution:
    """Angles per node, signed flows and loadings per line.

    Arrays are indexed by the grid's line order; out-of-service lines carry
    zero flow and zero loading.  Angles follow the node graph's canonical
    node order, zero for nodes outside the slack component.
    """

    node_graph: NodeGraph
    angles: np.ndarray
    line_ids: tuple[str, ...]
    flows: np.ndarray
    rho: np.ndarray
    in_service: np.ndarray

    @property
    def diverged(self) -> bool:
        return False

    @cached_property
    def line_index(self) -> dict[str, int]:
        return {lid: i for i, lid in enumerate(self.line_ids)}

    def flow(self, line_id: str) -> float:
        return float(self.flows[self.line_index[line_id]])

    def rho_of(self, line_id: str) -> float:
        return float(self.rho[self.line_index[line_id]])

    @property
    def max_rho(self) -> float:
        live = self.rho[self.in_service]
        return float(live.max()) if live.size else 0.0

    def overloaded_lines(self, threshold: float = 1.0) -> tuple[str, ...]:
        return tuple(
            lid
            for i, lid in enumerate(self.line_ids)
            if self.in_service[i] and self.rho[i] > threshold
        )


def _island_elements(grid: Grid, members: frozenset) -> tuple[str, ...]:
    elems = []
    for gen in grid.generators:
        if (gen.substation, 1) in members or (gen.substation, 2) in members:
            elems.append(gen.id)
    for load in grid.loads:
        if (load.substation, 1) in members or (load.substation, 2) in members:
            elems.append(load.id)
    return tuple(sorted(elems))


@dataclass
class _Prepared:
    """Everything injection-independent about one topology."""

    ng: NodeGraph
    diverged: Diverged | None
    dropped: frozenset
    in_comp: np.ndarray            # bool per node: in the slack component
    red_nodes: np.ndarray          # node indices of the reduced system
    lu: tuple | None               # LU factorization of B_red
    line_from: np.ndarray          # node index per line (-1: not solvable)
    line_to: np.ndarray
    susceptance: np.ndarray
    in_service: np.ndarray
    limits: np.ndarray
    line_ids: tuple[str, ...]
    elem_index: dict[str, int]     # element id -> node array index
    ptdf_matrix: np.ndarray | None = None


def _prepare(grid: Grid, topology: TopologyState) -> _Prepared:
    cache = grid.solver_cache
    key = topology.key()
    hit = cache.get(key)
    if hit is not None:
        return hit

    ng = electrical_nodes(grid, topology)
    comps = islands(ng)
    solve_nodes: frozenset = frozenset()
    diverged = None
    dropped: set[str] = set()
    for comp in comps:
        if comp.contains_slack:
            solve_nodes = comp.nodes
        elif comp.contains_load:
            diverged = Diverged(
                reason="load islanded from slack",
                island_elements=_island_elements(grid, comp.nodes),
            )
        else:
            for n in comp.nodes:
                dropped.update(ng.generators_at[n])

    n_nodes = len(ng.nodes)
    idx = ng.node_index
    in_comp = np.array([n in solve_nodes for n in ng.nodes])
    slack_i = idx[ng.slack_node]

    line_ids = tuple(l.id for l in grid.lines)
    n_lines = len(line_ids)
    line_from = np.full(n_lines, -1, dtype=int)
    line_to = np.full(n_lines, -1, dtype=int)
    susceptance = np.zeros(n_lines)
    in_service = np.zeros(n_lines, dtype=bool)
    limits = np.empty(n_lines)

    B = np.zeros((n_nodes, n_nodes))
    for k, line in enumerate(grid.lines):
        limits[k] = line.thermal_limit
        if not topology.line_status[line.id]:
            continue
        in_service[k] = True
        i = idx[ng.node_of_element[f"{line.id}:from"]]
        j = idx[ng.node_of_element[f"{line.id}:to"]]
        line_from[k] = i
        line_to[k] = j
        susceptance[k] = line.susceptance
        if not in_comp[i]:
            continue
        b = line.susceptance
        B[i, i] += b
        B[j, j] += b
        B[i, j] -= b
        B[j, i] -= b

    red_mask = in_comp.copy()
    red_mask[slack_i] = False
    red_nodes = np.where(red_mask)[0]
    lu = None
    if diverged is None and red_nodes.size:
        try:
            lu = lu_factor(B[np.ix_(red_nodes, red_nodes)])
        except Exception:
            diverged = Diverged(reason="singular susceptance matrix")

    elem_index = {}
    for elem, node in ng.node_of_element.items():
        elem_index[elem] = idx[node]

    prep = _Prepared(
        ng=ng,
        diverged=diverged,
        dropped=frozenset(dropped),
        in_comp=in_comp,
        red_nodes=red_nodes,
        lu=lu,
        line_from=line_from,
        line_to=line_to,
        susceptance=susceptance,
        in_service=in_service,
        limits=limits,
        line_ids=line_ids,
        elem_index=elem_index,
    )
    if len(cache) >= _CACHE_LIMIT:
        cache.pop(next(iter(cache)))
    cache[key] = prep
    return prep


def dc_solve(
    grid: Grid,
    topology: TopologyState,
    injections: dict[str, float],
    node_graph: NodeGraph | None = None,
) -> FlowSolution | Diverged:
    """Solve the DC load flow for signed per-element injections (MW).

    ``injections`` maps generator and load ids to signed MW (generation
    positive, consumption negative).  The slack node absorbs any residual
    imbalance.
    """
    prep = _prepare(grid, topology)
    if prep.diverged is not None:
        return prep.diverged

    n_nodes = len(prep.ng.nodes)
    p = np.zeros(n_nodes)
    for elem, mw in injections.items():
        if elem in prep.dropped:
            continue
        pos = prep.elem_index.get(elem)
        if pos is None:
            raise PowerFlowError(f"injection names unknown element '{elem}'")
        p[pos] += mw

    theta = np.zeros(n_nodes)
    if prep.red_nodes.size:
        theta_red = lu_solve(prep.lu, p[prep.red_nodes])
        if not np.all(np.isfinite(theta_red)):
            return Diverged(reason="non-finite solution")
        theta[prep.red_nodes] = theta_red

    live = prep.in_service
    flows = np.zeros(len(prep.line_ids))
    flows[live] = prep.susceptance[live] * (
        theta[prep.line_from[live]] - theta[prep.line_to[live]]
    )
    rho = np.abs(flows) / prep.limits

    return FlowSolution(
        node_graph=prep.ng,
        angles=theta,
        line_ids=prep.line_ids,
        flows=flows,
        rho=rho,
        in_service=live.copy(),
    )


@dataclass(frozen=True)
class Ptdf:
    """Flow sensitivity matrix: MW on each line per MW injected at each
    node and withdrawn at the slack.  The slack column is identically zero;
    so are columns for nodes outside the slack component and rows for lines
    outside it."""

    node_graph: NodeGraph
    line_ids: tuple[str, ...]
    matrix: np.ndarray  # lines x nodes

    def column_for_element(self, element_id: str) -> np.ndarray:
        node = self.node_graph.node_of_element[element_id]
        return self.matrix[:, self.node_graph.node_index[node]]


def ptdf(grid: Grid, topology: TopologyState, node_graph: NodeGraph | None = None) -> Ptdf:
    """Power transfer distribution factors for a topology.

    Raises PowerFlowError if a load is islanded from the slack (the
    topology has no solvable flow to be sensitive around).
    """
    prep = _prepare(grid, topology)
    if prep.diverged is not None:
        raise PowerFlowError(
            f"diverged topology: {prep.diverged.reason} "
            f"({', '.join(prep.diverged.island_elements)})"
        )
    if prep.ptdf_matrix is None:
        n_nodes = len(prep.ng.nodes)
        n_lines = len(prep.line_ids)
        X = np.zeros((n_nodes, n_nodes))
        if prep.red_nodes.size:
            X_red = lu_solve(prep.lu, np.eye(prep.red_nodes.size))
            X[np.ix_(prep.red_nodes, prep.red_nodes)] = X_red
        Bf = np.zeros((n_lines, n_nodes))
        for k in np.where(prep.in_service)[0]:
            i, j = prep.line_from[k], prep.line_to[k]
            if not prep.in_comp[i]:
                continue  # rows for lines outside the slack component stay zero
            Bf[k, i] = prep.susceptance[k]
            Bf[k, j] = -prep.susceptance[k]
        prep.ptdf_matrix = Bf @ X
    return Ptdf(node_graph=prep.ng, line_ids=prep.line_ids, matrix=prep.ptdf_matrix)
