"""Operator-assistant HTTP service: sessions over a live simulated grid,
alerting, ranked recommendations with N-1 screening, what-if simulation,
and an auditable confirm-and-apply loop.

Sessions are in-memory.  Reads return consistent snapshots; mutations
(advance, apply) are serialized per session.  The candidate cache is valid
only for the step it was computed on and is invalidated by every advance.
In paused mode no non-NoOp action executes without a prior apply — the
operator keeps the final decision; auto-advance mode (for demos and
testing) lets the agent decide and labels every entry accordingly.
"""

from __future__ import annotations

import itertools
import json
import math
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from .actions import Action, NoOp, action_from_dict, is_noop
from .agent import GridStatus, decide, observe
from .chronics import Chronic, forecast, load_chronics
from .config import EngineConfig
from .engine import GridState, action_rejections, initial_state, screen_outages, simulate, step
from .grid import Grid, line_endpoint_distance, load_grid, topology_distance
from .topology_search import SearchResult, search


class ServiceError(Exception):
    def __init__(self, status_code: int, code: str, message: str, detail: str = ""):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message
        self.detail = detail


def _json_safe(x: float) -> float | str:
    return "inf" if isinstance(x, float) and math.isinf(x) else x


@dataclass
class AuditEntry:
    index: int
    step: int
    actor: str  # "operator" | "auto"
    kind: str  # "staged" | "step"
    action: dict
    outcome: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index, "step": self.step, "actor": self.actor,
            "kind": self.kind, "action": self.action, "outcome": self.outcome,
            "detail": self.detail,
        }


@dataclass
class Session:
    id: str
    grid_name: str
    chronic_name: str
    grid: Grid
    chronic: Chronic
    config: EngineConfig
    state: GridState
    mode: str = "paused"  # "paused" | "auto"
    n1_lines: list[str] | None = None
    staged: Action | None = None
    staged_by: str = "operator"
    candidates_cache: dict | None = None
    audit: list[AuditEntry] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock)

    def audit_append(self, step_index: int, actor: str, kind: str,
                     action: Action, outcome: str, detail: str = "") -> None:
        self.audit.append(AuditEntry(
            index=len(self.audit), step=step_index, actor=actor, kind=kind,
            action=action.to_dict(), outcome=outcome, detail=detail,
        ))

    def record_history(self) -> None:
        s = self.state
        self.history.append({
            "step": s.step_index,
            "max_rho": _json_safe(s.max_rho if not s.diverged else float("inf")),
            "redispatch_mw": sum(
                abs(s.dispatch[g] - s.planned_dispatch[g])
                for g in self.grid.dispatchable_ids
            ),
            "topology_distance": line_endpoint_distance(
                s.topology, self.grid.reference_topology
            ),
            "blackout": s.blackout,
        })


class FixtureStore:
    """Grid JSON files and chronic CSVs, referenced by file stem."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._grids: dict[str, Grid] = {}
        self._chronics: dict[str, Chronic] = {}

    def grid(self, name: str) -> Grid:
        if name not in self._grids:
            path = self.root / f"{name}.json"
            if not path.exists():
                raise ServiceError(404, "unknown_grid", f"grid fixture '{name}' not found")
            self._grids[name] = load_grid(path)
        return self._grids[name]

    def chronic(self, name: str) -> Chronic:
        if name not in self._chronics:
            path = self.root / f"{name}.csv"
            if not path.exists():
                raise ServiceError(
                    404, "unknown_chronic", f"chronic fixture '{name}' not found"
                )
            self._chronics[name] = load_chronics(path)
        return self._chronics[name]


class SessionStore:
    def __init__(self, fixtures: FixtureStore, config: EngineConfig):
        self.fixtures = fixtures
        self.config = config
        self.sessions: dict[str, Session] = {}
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def create(self, grid_name: str, chronic_name: str, mode: str,
               overrides: dict, n1_lines: list[str] | None) -> Session:
        grid = self.fixtures.grid(grid_name)
        chronic = self.fixtures.chronic(chronic_name)
        config = self.config.with_overrides(**overrides) if overrides else self.config
        if mode not in ("paused", "auto"):
            raise ServiceError(422, "bad_mode", f"unknown mode '{mode}'")
        state = initial_state(grid, chronic.row(0), config)
        with self._lock:
            sid = f"s{next(self._counter):04d}"
        session = Session(
            id=sid, grid_name=grid_name, chronic_name=chronic_name,
            grid=grid, chronic=chronic, config=config, state=state, mode=mode,
            n1_lines=n1_lines,
        )
        session.record_history()
        self.sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise ServiceError(404, "unknown_session", f"session '{sid}' not found")
        return session

    def save_snapshots(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for session in self.sessions.values():
            with session.lock:
                doc = {
                    "id": session.id,
                    "grid": session.grid_name,
                    "chronic": session.chronic_name,
                    "mode": session.mode,
                    "step_index": session.state.step_index,
                    "blackout": session.state.blackout,
                    "topology": {
                        "element_bus": session.state.topology.element_bus,
                        "line_status": session.state.topology.line_status,
                    },
                    "dispatch": session.state.dispatch,
                    "curtail_caps": session.state.curtail_caps,
                    "audit": [e.to_dict() for e in session.audit],
                }
            (directory / f"{session.id}.json").write_text(
                json.dumps(doc, indent=1), encoding="utf-8"
            )


def _forecast_rows(session: Session, horizon: int):
    t = session.state.step_index + 1
    remaining = session.chronic.step_count - t
    if remaining <= 0:
        return []
    return forecast(session.chronic, t, min(horizon, remaining))


def _status(session: Session) -> GridStatus:
    rows = _forecast_rows(session, session.config.observer_horizon)
    return observe(session.grid, session.state, rows, session.config)


def _snapshot(session: Session) -> dict:
    with session.lock:
        state = session.state
        status = _status(session)
        sol = state.solution
        lines = []
        for i, lid in enumerate(sol.line_ids if not state.diverged else ()):
            line = session.grid.line_by_id[lid]
            lines.append({
                "id": lid,
                "from_substation": line.from_substation,
                "to_substation": line.to_substation,
                "in_service": bool(sol.in_service[i]),
                "flow_mw": round(float(sol.flows[i]), 3),
                "rho": round(float(sol.rho[i]), 6),
                "thermal_limit": line.thermal_limit,
            })
        return {
            "session": session.id,
            "grid": session.grid_name,
            "chronic": session.chronic_name,
            "mode": session.mode,
            "step_index": state.step_index,
            "step_count": session.chronic.step_count,
            "blackout": state.blackout,
            "status": {
                "level": status.level,
                "max_rho": _json_safe(status.max_rho),
                "triggers": [
                    {"line": lid, "rho": round(r, 4), "forecast_step": k}
                    for lid, r, k in status.triggers
                ],
            },
            "max_rho": _json_safe(state.max_rho if not state.diverged else float("inf")),
            "topology": {
                "element_bus": state.topology.element_bus,
                "line_status": state.topology.line_status,
            },
            "topology_distance": topology_distance(
                state.topology, session.grid.reference_topology
            ),
            "lines": lines,
            "generators": [
                {
                    "id": g.id, "substation": g.substation, "kind": g.kind,
                    "dispatch_mw": round(state.dispatch[g.id], 3),
                    "planned_mw": round(state.planned_dispatch[g.id], 3),
                }
                for g in session.grid.generators
            ],
            "loads": [
                {"id": d.id, "substation": d.substation,
                 "mw": round(state.loads[d.id], 3)}
                for d in session.grid.loads
            ],
            "layout": {
                sub: list(xy) for sub, xy in (session.grid.layout or {}).items()
            },
            "staged_action": session.staged.to_dict() if session.staged else None,
            "history": session.history[-min(len(session.history), 288):],
            "audit_tail": [e.to_dict() for e in session.audit[-10:]],
        }


def _screen_set(session: Session) -> list[str]:
    if session.n1_lines:
        return list(session.n1_lines)
    state = session.state
    return [
        lid for lid in state.topology.line_status
        if state.topology.line_status[lid]
    ]


def _recommend(session: Session, action: Action, rank: int,
               canonical_id: str, trajectory: tuple[float, ...],
               status: GridStatus | None = None) -> dict:
    """Project one action: forecast trajectory plus N-1 screening of the
    resulting state."""
    rows = _forecast_rows(session, 1)
    outages = _screen_set(session)
    if rows:
        post = simulate(session.grid, session.state, action, rows[0], session.config)
    else:
        post = session.state
    if post.diverged:
        n1 = {"screened": len(outages), "violations": len(outages),
              "worst_rho": "inf"}
        post_lines = []
    else:
        report = screen_outages(session.grid, post, outages)
        worst = max((r.max_rho for r in report), default=0.0)
        n1 = {
            "screened": len(report),
            "violations": sum(1 for r in report if r.violation),
            "worst_rho": _json_safe(round(worst, 6) if math.isfinite(worst) else worst),
        }
        sol = post.solution
        post_lines = [
            {"id": lid, "rho": round(float(sol.rho[i]), 6),
             "in_service": bool(sol.in_service[i])}
            for i, lid in enumerate(sol.line_ids)
        ]
    status = status if status is not None else _status(session)
    affected = None
    if hasattr(action, "substation"):
        affected = action.substation
    elif hasattr(action, "line"):
        affected = action.line
    return {
        "rank": rank,
        "candidate_id": canonical_id,
        "action": action.to_dict(),
        "projected_max_rho": [_json_safe(round(r, 6)) for r in trajectory],
        "post_lines": post_lines,
        "n1": n1,
        "explanation": {
            "triggering_lines": [
                {"line": lid, "rho": round(r, 4), "forecast_step": k}
                for lid, r, k in status.triggers
            ],
            "affected": affected,
        },
    }


def create_app(
    fixtures_dir: str | Path,
    config: EngineConfig | None = None,
    snapshot_dir: str | Path | None = None,
    console_dir: str | Path | None = None,
) -> FastAPI:
    config = config or EngineConfig()
    store = SessionStore(FixtureStore(fixtures_dir), config)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if snapshot_dir is not None:
            store.save_snapshots(snapshot_dir)

    app = FastAPI(title="grid congestion assistant", version="0.1.0",
                  lifespan=lifespan)
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def service_error_handler(_req: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.post("/api/sessions")
    def create_session(body: dict):
        session = store.create(
            grid_name=body.get("grid", ""),
            chronic_name=body.get("chronic", ""),
            mode=body.get("mode", "paused"),
            overrides=body.get("config", {}),
            n1_lines=body.get("n1_lines"),
        )
        return {"session_id": session.id, "state": _snapshot(session)}

    @app.get("/api/sessions/{sid}/state")
    def get_state(sid: str):
        return _snapshot(store.get(sid))

    @app.post("/api/sessions/{sid}/advance")
    def advance(sid: str, body: dict | None = None):
        session = store.get(sid)
        steps = int((body or {}).get("steps", 1))
        if steps < 1:
            raise ServiceError(422, "bad_steps", "steps must be >= 1")
        with session.lock:
            for _ in range(steps):
                if session.state.blackout:
                    raise ServiceError(
                        409, "blackout",
                        "session is blacked out; no further steps possible",
                    )
                t = session.state.step_index + 1
                if t >= session.chronic.step_count:
                    raise ServiceError(
                        409, "end_of_chronic", "the scenario has no further steps"
                    )
                if session.staged is not None:
                    action, actor = session.staged, session.staged_by
                    session.staged = None
                elif session.mode == "auto":
                    rows = _forecast_rows(
                        session,
                        max(session.config.observer_horizon,
                            session.config.recovery_lookahead),
                    )
                    action = decide(session.grid, session.state, rows, session.config).action
                    actor = "auto"
                else:
                    action, actor = NoOp(), "auto"
                nxt = step(session.grid, session.state, action,
                           session.chronic.row(t), session.config)
                session.state = nxt
                session.candidates_cache = None
                outcome = "blackout" if nxt.blackout else (
                    "rejected" if nxt.rejections and not is_noop(action) else "applied"
                )
                session.audit_append(
                    nxt.step_index, actor, "step", action, outcome,
                    detail="; ".join(nxt.rejections),
                )
                session.record_history()
                if nxt.blackout:
                    break
            return _snapshot(session)

    @app.get("/api/sessions/{sid}/candidates")
    def get_candidates(sid: str):
        session = store.get(sid)
        with session.lock:
            cache = session.candidates_cache
            if cache is not None and cache["step_index"] == session.state.step_index:
                return cache
            started = time.monotonic()
            status = _status(session)
            if session.state.blackout:
                result = {
                    "step_index": session.state.step_index,
                    "status": "Critical",
                    "note": "session is blacked out; no recommendations",
                    "recommendations": [],
                    "computed_ms": 0.0,
                }
                session.candidates_cache = result
                return result
            if status.safe:
                result = {
                    "step_index": session.state.step_index,
                    "status": status.level,
                    "note": "grid is safe; no action needed",
                    "recommendations": [],
                    "computed_ms": round((time.monotonic() - started) * 1000.0, 1),
                }
                session.candidates_cache = result
                return result
            rows = _forecast_rows(
                session, max(session.config.search_depth, 1)
            ) or [None]
            if rows == [None]:
                raise ServiceError(409, "end_of_chronic", "no forecast left to search")
            # keep headroom inside the latency envelope for the per-candidate
            # N-1 screening that follows the search
            budget = session.config.search_budget_ms
            if budget:
                budget = max(500.0, budget - 600.0)
            found: SearchResult = search(
                session.grid, session.state, rows, session.config,
                budget_ms=budget,
            )
            recommendations = [
                _recommend(session, c.action, c.rank, c.canonical_id,
                           c.predicted_max_rho, status=status)
                for c in found.candidates
            ]
            result = {
                "step_index": session.state.step_index,
                "status": status.level,
                "note": "truncated by budget" if found.truncated else "",
                "noop_max_rho": [_json_safe(r) for r in found.noop_max_rho],
                "recommendations": recommendations,
                "computed_ms": round((time.monotonic() - started) * 1000.0, 1),
            }
            session.candidates_cache = result
            return result

    @app.post("/api/sessions/{sid}/simulate")
    def simulate_candidate(sid: str, body: dict):
        session = store.get(sid)
        with session.lock:
            if session.state.blackout:
                raise ServiceError(409, "blackout", "session is blacked out")
            action = _parse_action(body.get("action"))
            rejections = action_rejections(
                session.grid, session.state, action, session.config
            )
            hard = [r for r in rejections if "clipped" not in r]
            if hard:
                raise ServiceError(
                    422, "illegal_action", "action is not legal on the current state",
                    detail="; ".join(hard),
                )
            rec = _recommend(session, action, 0, "what-if", _trajectory(session, action))
            rec["rejections"] = list(rejections)
            return rec

    @app.post("/api/sessions/{sid}/apply")
    def apply_action(sid: str, body: dict):
        session = store.get(sid)
        with session.lock:
            if session.state.blackout:
                raise ServiceError(409, "blackout", "session is blacked out")
            if "candidate_id" in body:
                cache = session.candidates_cache
                if cache is None or cache["step_index"] != session.state.step_index:
                    raise ServiceError(
                        409, "stale_candidates",
                        "no candidate list for the current step; fetch candidates first",
                    )
                match = [
                    r for r in cache.get("recommendations", [])
                    if r["candidate_id"] == body["candidate_id"]
                ]
                if not match:
                    raise ServiceError(
                        404, "unknown_candidate",
                        f"candidate '{body['candidate_id']}' is not in the current list",
                    )
                action = action_from_dict(match[0]["action"])
            else:
                action = _parse_action(body.get("action"))
            rejections = action_rejections(
                session.grid, session.state, action, session.config
            )
            hard = [r for r in rejections if "clipped" not in r]
            if hard:
                raise ServiceError(
                    422, "illegal_action", "action is not legal on the current state",
                    detail="; ".join(hard),
                )
            replaced = session.staged is not None
            session.staged = action
            session.staged_by = "operator"
            session.audit_append(
                session.state.step_index, "operator", "staged", action,
                "staged (replaced previous)" if replaced else "staged",
            )
            return {
                "staged": action.to_dict(),
                "replaced_previous": replaced,
                "executes_at_step": session.state.step_index + 1,
            }

    @app.get("/api/sessions/{sid}/audit")
    def get_audit(sid: str):
        session = store.get(sid)
        with session.lock:
            return {"entries": [e.to_dict() for e in session.audit]}

    if console_dir is not None and Path(console_dir).exists():
        console_path = Path(console_dir)

        @app.get("/console")
        def console_index():
            return FileResponse(console_path / "index.html")

        @app.get("/console/{asset:path}")
        def console_asset(asset: str):
            target = (console_path / asset).resolve()
            if not str(target).startswith(str(console_path.resolve())) or (
                not target.is_file()
            ):
                raise ServiceError(404, "not_found", f"no console asset '{asset}'")
            return FileResponse(target)

    return app


def _parse_action(raw) -> Action:
    if raw is None:
        raise ServiceError(422, "bad_action", "missing 'action' body field")
    try:
        return action_from_dict(raw)
    except (KeyError, ValueError, TypeError) as exc:
        raise ServiceError(422, "bad_action", f"cannot parse action: {exc}")


def _trajectory(session: Session, action: Action) -> tuple[float, ...]:
    # same horizon and engine path as the search, so a what-if on a cached
    # candidate reproduces the cached numbers exactly
    rows = _forecast_rows(session, max(session.config.search_depth, 1))
    if not rows:
        return (session.state.max_rho,)
    cursor = session.state
    out = []
    for r, row in enumerate(rows):
        cursor = simulate(
            session.grid, cursor, action if r == 0 else NoOp(), row, session.config
        )
        if cursor.diverged:
            out.append(float("inf"))
            break
        out.append(cursor.max_rho)
    return tuple(out)
