"""Static grid description and double-busbar topology semantics.

A grid is a set of substations, each with two busbars, connected by lines
and carrying generators and loads.  A topology assigns every element
endpoint (line end, generator, load) to one of the two busbars and flags
each line in or out of service.  Splitting a substation's elements across
its busbars creates separate electrical nodes; deriving those nodes, the
connectivity islands, and the legality of a given assignment is what this
module does.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path


GeneratorKind = str  # "dispatchable" | "wind" | "solar"

LINE_ENDS = ("from", "to")


class GridValidationError(ValueError):
    """A grid file or topology violates the schema or referential rules."""


def line_endpoint(line_id: str, end: str) -> str:
    return f"{line_id}:{end}"


@dataclass(frozen=True)
class Substation:
    id: str
    name: str = ""


@dataclass(frozen=True)
class Line:
    id: str
    from_substation: str
    to_substation: str
    susceptance: float  # per-unit
    thermal_limit: float  # MW


@dataclass(frozen=True)
class Generator:
    id: str
    substation: str
    kind: GeneratorKind
    p_min: float
    p_max: float
    ramp: float  # MW per step
    cost: float = 0.0  # currency/MWh, informational
    region: str | None = None  # "east" | "west"
    plan_weight: float = 1.0   # share bias in synthetic day-ahead schedules

    @property
    def dispatchable(self) -> bool:
        return self.kind == "dispatchable"


@dataclass(frozen=True)
class Load:
    id: str
    substation: str
    peak_mw: float = 45.0  # nominal demand, the anchor for synthetic scenarios


@dataclass(frozen=True, eq=True)
class TopologyState:
    """Busbar assignment of every element endpoint plus line service status."""

    element_bus: dict[str, int]
    line_status: dict[str, bool]

    def bus_of(self, endpoint: str) -> int:
        return self.element_bus[endpoint]

    def in_service(self, line_id: str) -> bool:
        return self.line_status[line_id]

    def with_assignment(self, assignment: dict[str, int]) -> "TopologyState":
        merged = dict(self.element_bus)
        merged.update(assignment)
        return TopologyState(merged, dict(self.line_status))

    def with_line_status(self, line_id: str, in_service: bool) -> "TopologyState":
        status = dict(self.line_status)
        status[line_id] = in_service
        return TopologyState(dict(self.element_bus), status)

    def key(self) -> tuple:
        """Canonical hashable key, stable across equal topologies (memoized:
        instances are de-facto immutable)."""
        memo = self.__dict__.get("_key_memo")
        if memo is None:
            memo = (
                tuple(sorted(self.element_bus.items())),
                tuple(sorted(self.line_status.items())),
            )
            object.__setattr__(self, "_key_memo", memo)
        return memo


@dataclass(frozen=True)
class Grid:
    substations: tuple[Substation, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    slack_generator: str
    reference_topology: TopologyState
    layout: dict[str, tuple[float, float]] | None = None

    # -- lookups ---------------------------------------------------------

    @cached_property
    def line_by_id(self) -> dict[str, Line]:
        return {l.id: l for l in self.lines}

    @cached_property
    def generator_by_id(self) -> dict[str, Generator]:
        return {g.id: g for g in self.generators}

    @cached_property
    def load_by_id(self) -> dict[str, Load]:
        return {d.id: d for d in self.loads}

    @cached_property
    def substation_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.substations)

    @cached_property
    def dispatchable_ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.generators if g.dispatchable)

    @cached_property
    def renewable_ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.generators if not g.dispatchable)

    @cached_property
    def slack(self) -> Generator:
        return self.generator_by_id[self.slack_generator]

    @cached_property
    def substation_of_endpoint(self) -> dict[str, str]:
        mapping: dict[str, str] = {}
        for line in self.lines:
            mapping[line_endpoint(line.id, "from")] = line.from_substation
            mapping[line_endpoint(line.id, "to")] = line.to_substation
        for gen in self.generators:
            mapping[gen.id] = gen.substation
        for load in self.loads:
            mapping[load.id] = load.substation
        return mapping

    @cached_property
    def endpoints_at(self) -> dict[str, tuple[str, ...]]:
        """Endpoints per substation in canonical order: line ends, then
        generators, then loads, each sorted by id.  The first endpoint in
        this order is the pinning anchor for canonical bus splits."""
        buckets: dict[str, list[tuple[int, str]]] = {s.id: [] for s in self.substations}
        for line in self.lines:
            buckets[line.from_substation].append((0, line_endpoint(line.id, "from")))
            buckets[line.to_substation].append((0, line_endpoint(line.id, "to")))
        for gen in self.generators:
            buckets[gen.substation].append((1, gen.id))
        for load in self.loads:
            buckets[load.substation].append((2, load.id))
        return {
            sub: tuple(ep for _, ep in sorted(items))
            for sub, items in buckets.items()
        }

    @cached_property
    def all_endpoints(self) -> tuple[str, ...]:
        return tuple(ep for sub in self.substation_ids for ep in self.endpoints_at[sub])

    @cached_property
    def solver_cache(self) -> "dict":
        """Per-topology solver structures, managed by the powerflow module."""
        return {}

    def endpoint_is_line_end(self, endpoint: str) -> bool:
        return ":" in endpoint

    def line_of_endpoint(self, endpoint: str) -> str:
        return endpoint.split(":", 1)[0]


def reference_topology(
    substations: tuple[Substation, ...],
    lines: tuple[Line, ...],
    generators: tuple[Generator, ...],
    loads: tuple[Load, ...],
) -> TopologyState:
    """All endpoints on busbar 1, all lines in service."""
    element_bus: dict[str, int] = {}
    for line in lines:
        element_bus[line_endpoint(line.id, "from")] = 1
        element_bus[line_endpoint(line.id, "to")] = 1
    for gen in generators:
        element_bus[gen.id] = 1
    for load in loads:
        element_bus[load.id] = 1
    return TopologyState(element_bus, {line.id: True for line in lines})


# -- node graph derivation -------------------------------------------------

Node = tuple[str, int]  # (substation id, busbar)


@dataclass(frozen=True)
class NodeGraph:
    """Electrical nodes implied by a topology: one node per non-empty busbar."""

    nodes: tuple[Node, ...]  # sorted by (substation id, busbar)
    node_of_element: dict[str, Node]
    edges: tuple[tuple[str, Node, Node], ...]  # (line id, from node, to node)
    slack_node: Node
    generators_at: dict[Node, tuple[str, ...]]
    loads_at: dict[Node, tuple[str, ...]]

    @cached_property
    def node_index(self) -> dict[Node, int]:
        return {n: i for i, n in enumerate(self.nodes)}


def electrical_nodes(grid: Grid, topology: TopologyState) -> NodeGraph:
    """Derive the node graph for a topology.

    Every busbar holding at least one element endpoint becomes a node;
    out-of-service lines contribute endpoints (they still sit on a busbar)
    but no edges.
    """
    occupied: set[Node] = set()
    node_of_element: dict[str, Node] = {}
    for sub in grid.substation_ids:
        for ep in grid.endpoints_at[sub]:
            node = (sub, topology.element_bus[ep])
            occupied.add(node)
            node_of_element[ep] = node

    nodes = tuple(sorted(occupied))
    edges = tuple(
        (line.id,
         node_of_element[line_endpoint(line.id, "from")],
         node_of_element[line_endpoint(line.id, "to")])
        for line in grid.lines
        if topology.line_status[line.id]
    )

    gens_at: dict[Node, list[str]] = {n: [] for n in nodes}
    loads_at: dict[Node, list[str]] = {n: [] for n in nodes}
    for gen in grid.generators:
        gens_at[node_of_element[gen.id]].append(gen.id)
    for load in grid.loads:
        loads_at[node_of_element[load.id]].append(load.id)

    return NodeGraph(
        nodes=nodes,
        node_of_element=node_of_element,
        edges=edges,
        slack_node=node_of_element[grid.slack_generator],
        generators_at={n: tuple(g) for n, g in gens_at.items()},
        loads_at={n: tuple(d) for n, d in loads_at.items()},
    )


@dataclass(frozen=True)
class Island:
    nodes: frozenset[Node]
    contains_slack: bool
    contains_load: bool
    contains_generator: bool


def islands(node_graph: NodeGraph) -> tuple[Island, ...]:
    """Connected components of the node graph, each flagged for content."""
    parent: dict[Node, Node] = {n: n for n in node_graph.nodes}

    def find(n: Node) -> Node:
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for _, a, b in node_graph.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    groups: dict[Node, set[Node]] = {}
    for n in node_graph.nodes:
        groups.setdefault(find(n), set()).add(n)

    result = []
    for members in sorted(groups.values(), key=lambda s: min(s)):
        result.append(Island(
            nodes=frozenset(members),
            contains_slack=node_graph.slack_node in members,
            contains_load=any(node_graph.loads_at[n] for n in members),
            contains_generator=any(node_graph.generators_at[n] for n in members),
        ))
    return tuple(result)


# -- topology metrics and legality ------------------------------------------


def topology_distance(topology: TopologyState, reference: TopologyState) -> int:
    """Endpoints off their reference busbar plus lines off their reference
    service status.  Zero iff the topologies are identical."""
    if set(topology.element_bus) != set(reference.element_bus) or (
        set(topology.line_status) != set(reference.line_status)
    ):
        raise GridValidationError("topologies belong to different grids")
    moved = sum(
        1 for ep, bus in topology.element_bus.items() if bus != reference.element_bus[ep]
    )
    switched = sum(
        1 for lid, st in topology.line_status.items() if st != reference.line_status[lid]
    )
    return moved + switched


def line_endpoint_distance(topology: TopologyState, reference: TopologyState) -> int:
    """Busbar-differing line endpoints only — the count plotted for
    switching-distance profiles."""
    return sum(
        1
        for ep, bus in topology.element_bus.items()
        if ":" in ep and bus != reference.element_bus[ep]
    )


@dataclass(frozen=True)
class TopologyVerdict:
    legal: bool
    violations: tuple[str, ...]


def substation_assignment_violation(
    grid: Grid, topology: TopologyState, sub: str, assignment: dict[str, int]
) -> str | None:
    """The busbar rules applied to a single substation's assignment, with
    line service status taken from the surrounding topology.  Returns the
    first violation, or None."""
    members: dict[int, list[str]] = {1: [], 2: []}
    for ep, bus in assignment.items():
        members[bus].append(ep)
    for bus in (1, 2):
        eps = members[bus]
        if not eps:
            continue
        live = [
            e for e in eps
            if grid.endpoint_is_line_end(e)
            and topology.line_status[grid.line_of_endpoint(e)]
        ]
        if not live:
            return f"{sub} busbar {bus}: injection without line"
        if bus == 2 and len(eps) == 1 and len(live) == 1:
            return f"{sub} busbar 2: busbar isolates a single line"
    return None


def validate_topology(grid: Grid, topology: TopologyState) -> TopologyVerdict:
    """Busbar legality check.

    Per substation: every non-empty busbar must hold at least one
    in-service line endpoint (an injection may never sit on a busbar
    without one), and busbar 2 must not hold exactly one in-service line
    endpoint and nothing else — that split is a line disconnection in
    disguise and has its own action type.
    """
    violations: list[str] = []
    for ep in grid.all_endpoints:
        if ep not in topology.element_bus:
            violations.append(f"endpoint {ep} has no busbar assignment")
    for line in grid.lines:
        if line.id not in topology.line_status:
            violations.append(f"line {line.id} has no service status")
    if violations:
        return TopologyVerdict(False, tuple(violations))

    for sub in grid.substation_ids:
        members: dict[int, list[str]] = {1: [], 2: []}
        for ep in grid.endpoints_at[sub]:
            bus = topology.element_bus[ep]
            if bus not in (1, 2):
                violations.append(f"{sub}: endpoint {ep} assigned to busbar {bus}")
                continue
            members[bus].append(ep)
        for bus in (1, 2):
            eps = members[bus]
            if not eps:
                continue
            live_line_ends = [
                e for e in eps
                if grid.endpoint_is_line_end(e)
                and topology.line_status[grid.line_of_endpoint(e)]
            ]
            if not live_line_ends:
                violations.append(
                    f"{sub} busbar {bus}: injection without line"
                    if any(not grid.endpoint_is_line_end(e) for e in eps)
                    else f"{sub} busbar {bus}: no in-service line endpoint"
                )
            elif bus == 2 and len(eps) == 1 and len(live_line_ends) == 1:
                violations.append(f"{sub} busbar 2: busbar isolates a single line")
    return TopologyVerdict(not violations, tuple(violations))


# -- grid file loading -------------------------------------------------------

_REQUIRED_KEYS = ("substations", "lines", "generators", "loads", "slack")
_GEN_KINDS = ("dispatchable", "wind", "solar")
_REGIONS = ("east", "west")


def load_grid(source: str | Path | dict) -> Grid:
    """Load and validate a grid from a JSON file (or an already-parsed dict).

    A ``storages`` array is accepted and ignored.  ``reference_topology``
    defaults to all endpoints on busbar 1 with every line in service.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source

    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise GridValidationError(f"grid document missing key '{key}'")

    substations = tuple(
        Substation(id=str(s["id"]), name=str(s.get("name", ""))) for s in doc["substations"]
    )
    sub_ids = {s.id for s in substations}
    if len(sub_ids) != len(substations):
        raise GridValidationError("duplicate substation ids")

    def check_sub(element: str, sub: str) -> str:
        if sub not in sub_ids:
            raise GridValidationError(f"{element} references unknown substation '{sub}'")
        return sub

    lines = []
    for l in doc["lines"]:
        lid = str(l["id"])
        line = Line(
            id=lid,
            from_substation=check_sub(f"line {lid}", str(l["from_substation"])),
            to_substation=check_sub(f"line {lid}", str(l["to_substation"])),
            susceptance=float(l["susceptance"]),
            thermal_limit=float(l["thermal_limit"]),
        )
        if line.from_substation == line.to_substation:
            raise GridValidationError(f"line {lid}: connects a substation to itself")
        if line.susceptance <= 0:
            raise GridValidationError(f"line {lid}: susceptance must be > 0")
        if line.thermal_limit <= 0:
            raise GridValidationError(f"line {lid}: thermal_limit must be > 0")
        lines.append(line)

    generators = []
    for g in doc["generators"]:
        gid = str(g["id"])
        gen = Generator(
            id=gid,
            substation=check_sub(f"generator {gid}", str(g["substation"])),
            kind=str(g["kind"]),
            p_min=float(g.get("p_min", 0.0)),
            p_max=float(g["p_max"]),
            ramp=float(g.get("ramp", 0.0)),
            cost=float(g.get("cost", 0.0)),
            region=g.get("region"),
            plan_weight=float(g.get("plan_weight", 1.0)),
        )
        if gen.kind not in _GEN_KINDS:
            raise GridValidationError(f"generator {gid}: unknown kind '{gen.kind}'")
        if gen.p_min > gen.p_max:
            raise GridValidationError(f"generator {gid}: p_min > p_max")
        if gen.ramp < 0:
            raise GridValidationError(f"generator {gid}: ramp must be >= 0")
        if gen.region is not None and gen.region not in _REGIONS:
            raise GridValidationError(f"generator {gid}: region must be east or west")
        generators.append(gen)

    loads = [
        Load(
            id=str(d["id"]),
            substation=check_sub(f"load {d['id']}", str(d["substation"])),
            peak_mw=float(d.get("peak_mw", 45.0)),
        )
        for d in doc["loads"]
    ]

    for group, label in ((lines, "line"), (generators, "generator"), (loads, "load")):
        ids = [e.id for e in group]
        if len(set(ids)) != len(ids):
            raise GridValidationError(f"duplicate {label} ids")

    slack_id = str(doc["slack"])
    gens_by_id = {g.id: g for g in generators}
    if slack_id not in gens_by_id:
        raise GridValidationError(f"slack generator '{slack_id}' does not exist")
    if not gens_by_id[slack_id].dispatchable:
        raise GridValidationError(f"slack generator '{slack_id}' must be dispatchable")

    ref = reference_topology(substations, tuple(lines), tuple(generators), tuple(loads))
    if "reference_topology" in doc and doc["reference_topology"] is not None:
        raw = doc["reference_topology"]
        element_bus = dict(ref.element_bus)
        for ep, bus in raw.get("element_bus", {}).items():
            if ep not in element_bus:
                raise GridValidationError(f"reference topology names unknown endpoint '{ep}'")
            element_bus[ep] = int(bus)
        line_status = dict(ref.line_status)
        for lid, st in raw.get("line_status", {}).items():
            if lid not in line_status:
                raise GridValidationError(f"reference topology names unknown line '{lid}'")
            line_status[lid] = bool(st)
        ref = TopologyState(element_bus, line_status)

    layout = None
    if "layout" in doc and doc["layout"]:
        layout = {
            str(sub): (float(xy[0]), float(xy[1])) for sub, xy in doc["layout"].items()
        }

    grid = Grid(
        substations=substations,
        lines=tuple(lines),
        generators=tuple(generators),
        loads=tuple(loads),
        slack_generator=slack_id,
        reference_topology=ref,
        layout=layout,
    )
    verdict = validate_topology(grid, ref)
    if not verdict.legal:
        raise GridValidationError(
            "reference topology is illegal: " + "; ".join(verdict.violations)
        )
    return grid


def grid_to_document(grid: Grid) -> dict:
    """Inverse of load_grid, for writing fixture files."""
    doc: dict = {
        "substations": [{"id": s.id, "name": s.name} for s in grid.substations],
        "lines": [
            {
                "id": l.id,
                "from_substation": l.from_substation,
                "to_substation": l.to_substation,
                "susceptance": l.susceptance,
                "thermal_limit": l.thermal_limit,
            }
            for l in grid.lines
        ],
        "generators": [
            {
                "id": g.id,
                "substation": g.substation,
                "kind": g.kind,
                "p_min": g.p_min,
                "p_max": g.p_max,
                "ramp": g.ramp,
                "cost": g.cost,
                **({"region": g.region} if g.region else {}),
                **({"plan_weight": g.plan_weight} if g.plan_weight != 1.0 else {}),
            }
            for g in grid.generators
        ],
        "loads": [
            {"id": d.id, "substation": d.substation, "peak_mw": d.peak_mw}
            for d in grid.loads
        ],
        "slack": grid.slack_generator,
    }
    if grid.layout:
        doc["layout"] = {sub: list(xy) for sub, xy in grid.layout.items()}
    return doc
