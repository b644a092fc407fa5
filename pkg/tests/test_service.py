from __future__ import annotations

import threading

import pytest
from fastapi.testclient import TestClient

from gridcm.config import EngineConfig
from gridcm.chronics import generate_scenario, write_chronic
from gridcm.fixtures import DESK14_LOAD_PEAKS, DESK14_PLAN_WEIGHTS, desk14, write_grid
from gridcm.service import create_app


@pytest.fixture(scope="module")
def fixtures_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    grid = desk14()
    write_grid(grid, root / "desk14.json")
    congested = generate_scenario(
        grid, 20250001, "congested", DESK14_LOAD_PEAKS, DESK14_PLAN_WEIGHTS
    )
    write_chronic(congested, root / "congested.csv")
    calm = generate_scenario(
        grid, 31, "calm", DESK14_LOAD_PEAKS, DESK14_PLAN_WEIGHTS
    )
    write_chronic(calm, root / "calm.csv")
    return root


@pytest.fixture()
def client(fixtures_dir):
    app = create_app(fixtures_dir, EngineConfig())
    with TestClient(app) as c:
        yield c


def make_session(client, chronic="congested", **kw) -> str:
    body = {"grid": "desk14", "chronic": chronic, **kw}
    resp = client.post("/api/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()["session_id"]


def advance_to_alert(client, sid, limit=288) -> dict:
    """Advance a paused session until the observer leaves Safe."""
    for _ in range(limit):
        state = client.get(f"/api/sessions/{sid}/state").json()
        if state["status"]["level"] != "Safe":
            return state
        resp = client.post(f"/api/sessions/{sid}/advance", json={"steps": 1})
        assert resp.status_code == 200
    raise AssertionError("never left Safe")


class TestSessions:
    def test_create_starts_paused_at_step_zero(self, client):
        resp = client.post(
            "/api/sessions", json={"grid": "desk14", "chronic": "calm"}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["state"]["step_index"] == 0
        assert body["state"]["mode"] == "paused"

    def test_unknown_chronic_404(self, client):
        resp = client.post(
            "/api/sessions", json={"grid": "desk14", "chronic": "nope"}
        )
        assert resp.status_code == 404
        body = resp.json()
        assert body["code"] == "unknown_chronic"
        assert "nope" in body["message"]

    def test_two_creates_distinct_ids(self, client):
        a = make_session(client)
        b = make_session(client)
        assert a != b

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/zzz/state").status_code == 404


class TestStateAndAdvance:
    def test_snapshot_matches_observer(self, client):
        sid = make_session(client, chronic="calm")
        state = client.get(f"/api/sessions/{sid}/state").json()
        assert state["status"]["level"] in ("Safe", "Alert", "Critical")
        assert len(state["lines"]) == 19
        assert state["step_count"] == 288

    def test_advance_grows_history(self, client):
        sid = make_session(client, chronic="calm")
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 10})
        state = client.get(f"/api/sessions/{sid}/state").json()
        assert state["step_index"] == 10
        assert len(state["history"]) == 11  # includes step 0

    def test_paused_advance_is_noop_with_auto_actor(self, client):
        sid = make_session(client, chronic="calm")
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 3})
        audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
        steps = [e for e in audit if e["kind"] == "step"]
        assert len(steps) == 3
        assert all(e["actor"] == "auto" for e in steps)
        assert all(e["action"]["type"] == "noop" for e in steps)

    def test_auto_mode_on_calm_day_stays_noop(self, client):
        sid = make_session(client, chronic="calm", mode="auto")
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 20})
        audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
        assert all(e["action"]["type"] == "noop" for e in audit if e["kind"] == "step")

    def test_concurrent_snapshot_never_torn(self, client):
        sid = make_session(client, chronic="calm")
        errors = []

        def reader():
            for _ in range(20):
                state = client.get(f"/api/sessions/{sid}/state").json()
                if len(state["history"]) != state["step_index"] + 1:
                    errors.append(state["step_index"])

        t = threading.Thread(target=reader)
        t.start()
        for _ in range(20):
            client.post(f"/api/sessions/{sid}/advance", json={"steps": 1})
        t.join()
        assert not errors


class TestCandidates:
    def test_safe_state_empty_list(self, client):
        sid = make_session(client, chronic="calm")
        body = client.get(f"/api/sessions/{sid}/candidates").json()
        assert body["recommendations"] == []
        assert "safe" in body["note"]

    def test_alert_yields_ranked_recommendations(self, client):
        sid = make_session(client)
        advance_to_alert(client, sid)
        body = client.get(f"/api/sessions/{sid}/candidates").json()
        recs = body["recommendations"]
        assert recs, body
        assert [r["rank"] for r in recs] == list(range(1, len(recs) + 1))
        assert len(recs) <= 5
        # rank 1 strictly better than doing nothing at one step
        assert recs[0]["projected_max_rho"][0] <= body["noop_max_rho"][0] + 1e-9
        for r in recs:
            assert r["n1"]["screened"] == 19
            assert "violations" in r["n1"]

    def test_cache_hit_on_same_step(self, client):
        sid = make_session(client)
        advance_to_alert(client, sid)
        a = client.get(f"/api/sessions/{sid}/candidates").json()
        b = client.get(f"/api/sessions/{sid}/candidates").json()
        assert a == b  # byte-identical cached payload

    def test_cache_invalidated_by_advance(self, client):
        sid = make_session(client)
        advance_to_alert(client, sid)
        a = client.get(f"/api/sessions/{sid}/candidates").json()
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 1})
        b = client.get(f"/api/sessions/{sid}/candidates").json()
        assert b["step_index"] == a["step_index"] + 1


class TestSimulateAndApply:
    def test_simulate_noop_matches_observer_horizon(self, client):
        sid = make_session(client, chronic="calm")
        rec = client.post(
            f"/api/sessions/{sid}/simulate", json={"action": {"type": "noop"}}
        ).json()
        assert len(rec["projected_max_rho"]) >= 1

    def test_simulate_cached_candidate_matches_cache(self, client):
        sid = make_session(client)
        advance_to_alert(client, sid)
        recs = client.get(f"/api/sessions/{sid}/candidates").json()["recommendations"]
        top = recs[0]
        sim = client.post(
            f"/api/sessions/{sid}/simulate", json={"action": top["action"]}
        ).json()
        assert sim["projected_max_rho"][0] == pytest.approx(
            top["projected_max_rho"][0], abs=1e-9
        )
        assert sim["n1"] == top["n1"]

    def test_simulate_cooldown_rejection(self, client):
        sid = make_session(client)
        state = advance_to_alert(client, sid)
        recs = client.get(f"/api/sessions/{sid}/candidates").json()["recommendations"]
        sub_recs = [r for r in recs if r["action"]["type"] == "substation"]
        assert sub_recs
        action = sub_recs[0]["action"]
        client.post(f"/api/sessions/{sid}/apply", json={"action": action})
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 1})
        resp = client.post(f"/api/sessions/{sid}/simulate", json={"action": action})
        assert resp.status_code == 422
        assert "cooldown" in resp.json()["detail"]

    def test_apply_then_advance_executes_exactly_that_action(self, client):
        sid = make_session(client)
        advance_to_alert(client, sid)
        recs = client.get(f"/api/sessions/{sid}/candidates").json()["recommendations"]
        pick = recs[min(1, len(recs) - 1)]
        resp = client.post(
            f"/api/sessions/{sid}/apply", json={"candidate_id": pick["candidate_id"]}
        )
        assert resp.status_code == 200
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 1})
        audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
        last_step = [e for e in audit if e["kind"] == "step"][-1]
        assert last_step["actor"] == "operator"
        assert last_step["action"] == pick["action"]
        assert last_step["outcome"] == "applied"

    def test_second_apply_replaces_first(self, client):
        sid = make_session(client)
        advance_to_alert(client, sid)
        recs = client.get(f"/api/sessions/{sid}/candidates").json()["recommendations"]
        assert len(recs) >= 2
        client.post(f"/api/sessions/{sid}/apply",
                    json={"candidate_id": recs[0]["candidate_id"]})
        second = client.post(f"/api/sessions/{sid}/apply",
                             json={"candidate_id": recs[1]["candidate_id"]})
        assert second.json()["replaced_previous"]
        audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
        staged = [e for e in audit if e["kind"] == "staged"]
        assert len(staged) == 2

    def test_paused_mode_never_acts_without_apply(self, client):
        sid = make_session(client)
        for _ in range(40):
            client.post(f"/api/sessions/{sid}/advance", json={"steps": 1})
        audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
        for e in audit:
            if e["kind"] == "step" and e["action"]["type"] != "noop":
                raise AssertionError(f"non-noop without apply: {e}")

    def test_illegal_apply_rejected(self, client):
        sid = make_session(client, chronic="calm")
        resp = client.post(
            f"/api/sessions/{sid}/apply",
            json={"action": {"type": "line", "line": "L01", "connect": True}},
        )
        assert resp.status_code == 422  # already connected

    def test_audit_has_one_entry_per_transition(self, client):
        sid = make_session(client, chronic="calm")
        client.post(f"/api/sessions/{sid}/advance", json={"steps": 7})
        audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
        steps = [e for e in audit if e["kind"] == "step"]
        assert [e["step"] for e in steps] == list(range(1, 8))
