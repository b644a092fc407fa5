"""Action vocabulary shared by the engine, the optimizers and the service.

An action is one of: NoOp, a substation busbar reconfiguration, a line
status change, a redispatch (with optional curtailment caps), a pure
curtailment, or a composite of one topology action and one redispatch.
All actions serialize to tagged JSON dictionaries for plan files and the
HTTP API.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class NoOp:
    reason: str = ""

    def to_dict(self) -> dict:
        d: dict = {"type": "noop"}
        if self.reason:
            d["reason"] = self.reason
        return d


@dataclass(frozen=True)
class SubstationAction:
    """Assign every endpoint of one substation to a busbar."""

    substation: str
    assignment: dict[str, int]  # endpoint -> busbar

    def to_dict(self) -> dict:
        return {
            "type": "substation",
            "substation": self.substation,
            "assignment": dict(sorted(self.assignment.items())),
        }

    def canonical_id(self) -> str:
        moved = ",".join(
            f"{ep}={bus}" for ep, bus in sorted(self.assignment.items()) if bus == 2
        )
        return f"sub:{self.substation}:{moved or 'ref'}"


@dataclass(frozen=True)
class LineAction:
    line: str
    connect: bool

    def to_dict(self) -> dict:
        return {"type": "line", "line": self.line, "connect": self.connect}

    def canonical_id(self) -> str:
        return f"line:{'reconnect' if self.connect else 'disconnect'}:{self.line}"


@dataclass(frozen=True)
class Redispatch:
    """Signed MW deltas per dispatchable generator, plus optional output
    caps per renewable.  The slack generator's implied delta may appear in
    ``deltas`` for reporting; the engine never applies it directly."""

    deltas: dict[str, float] = field(default_factory=dict)
    curtail_caps: dict[str, float] = field(default_factory=dict)
    insufficient: bool = False
    lift_caps: bool = False  # reset action: remove all standing curtailment caps

    def to_dict(self) -> dict:
        d: dict = {"type": "redispatch", "deltas": dict(sorted(self.deltas.items()))}
        if self.curtail_caps:
            d["curtail_caps"] = dict(sorted(self.curtail_caps.items()))
        if self.insufficient:
            d["insufficient"] = True
        if self.lift_caps:
            d["lift_caps"] = True
        return d

    @property
    def total_abs_mw(self) -> float:
        return sum(abs(v) for v in self.deltas.values())


@dataclass(frozen=True)
class Curtailment:
    caps: dict[str, float]  # renewable id -> MW cap

    def to_dict(self) -> dict:
        return {"type": "curtailment", "caps": dict(sorted(self.caps.items()))}


@dataclass(frozen=True)
class Composite:
    topology: SubstationAction | LineAction
    redispatch: Redispatch

    def to_dict(self) -> dict:
        return {
            "type": "composite",
            "topology": self.topology.to_dict(),
            "redispatch": self.redispatch.to_dict(),
        }

    def canonical_id(self) -> str:
        return f"composite:{self.topology.canonical_id()}"


Action = NoOp | SubstationAction | LineAction | Redispatch | Curtailment | Composite

TopologyKind = (SubstationAction, LineAction)


def action_from_dict(d: dict) -> Action:
    kind = d.get("type")
    if kind == "noop":
        return NoOp(reason=d.get("reason", ""))
    if kind == "substation":
        return SubstationAction(
            substation=d["substation"],
            assignment={ep: int(b) for ep, b in d["assignment"].items()},
        )
    if kind == "line":
        return LineAction(line=d["line"], connect=bool(d["connect"]))
    if kind == "redispatch":
        return Redispatch(
            deltas={g: float(v) for g, v in d.get("deltas", {}).items()},
            curtail_caps={r: float(v) for r, v in d.get("curtail_caps", {}).items()},
            insufficient=bool(d.get("insufficient", False)),
            lift_caps=bool(d.get("lift_caps", False)),
        )
    if kind == "curtailment":
        return Curtailment(caps={r: float(v) for r, v in d["caps"].items()})
    if kind == "composite":
        topo = action_from_dict(d["topology"])
        if not isinstance(topo, TopologyKind):
            raise ValueError("composite topology part must be a topology action")
        rd = action_from_dict(d["redispatch"])
        if not isinstance(rd, Redispatch):
            raise ValueError("composite redispatch part must be a redispatch")
        return Composite(topology=topo, redispatch=rd)
    raise ValueError(f"unknown action type: {kind!r}")


def is_noop(action: Action) -> bool:
    if isinstance(action, NoOp):
        return True
    if isinstance(action, Redispatch):
        return (
            not action.curtail_caps
            and not action.lift_caps
            and all(abs(v) < 1e-12 for v in action.deltas.values())
        )
    return False
