"""The operator-assistant loop, driven programmatically.

Spins the HTTP service in-process, opens a session on a congested day,
waits for the observer to raise an alert, fetches ranked recommendations
with their N-1 screening, what-ifs the top one, confirms it, and advances
— the same loop the browser console drives.

(For the real thing: `gridcm serve --fixtures fixtures --console-dir
frontend/dist` and open http://localhost:8000/console)
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from gridcm import EngineConfig
from gridcm.chronics import generate_scenario, write_chronic
from gridcm.fixtures import desk14, write_grid
from gridcm.service import create_app

root = Path(tempfile.mkdtemp())
grid = desk14()
write_grid(grid, root / "desk14.json")
write_chronic(generate_scenario(grid, 20250001, "congested"), root / "day.csv")

client = TestClient(create_app(root, EngineConfig()))
sid = client.post("/api/sessions", json={"grid": "desk14", "chronic": "day"}).json()["session_id"]
print(f"session {sid} opened (paused)")

state = client.get(f"/api/sessions/{sid}/state").json()
while state["status"]["level"] == "Safe":
    state = client.post(f"/api/sessions/{sid}/advance", json={"steps": 1}).json()
print(f"step {state['step_index']}: observer says {state['status']['level']} "
      f"(forecast worst rho {state['status']['max_rho']:.3f})")
for trig in state["status"]["triggers"][:3]:
    print(f"  trigger: {trig['line']} at rho {trig['rho']:.3f} "
          f"in {trig['forecast_step']} steps")

body = client.get(f"/api/sessions/{sid}/candidates").json()
print(f"\n{len(body['recommendations'])} recommendations "
      f"(computed in {body['computed_ms']:.0f} ms):")
for rec in body["recommendations"]:
    print(f"  #{rec['rank']} {rec['candidate_id']}: projected "
          f"{rec['projected_max_rho']}, N-1 violations "
          f"{rec['n1']['violations']}/{rec['n1']['screened']}")

top = body["recommendations"][0]
what_if = client.post(f"/api/sessions/{sid}/simulate",
                      json={"action": top["action"]}).json()
print(f"\nwhat-if on #1 confirms projection {what_if['projected_max_rho']}")

client.post(f"/api/sessions/{sid}/apply", json={"candidate_id": top["candidate_id"]})
state = client.post(f"/api/sessions/{sid}/advance", json={"steps": 1}).json()
print(f"confirmed and advanced: step {state['step_index']}, "
      f"max rho {state['max_rho']:.3f}")

audit = client.get(f"/api/sessions/{sid}/audit").json()["entries"]
print("\naudit tail:")
for entry in audit[-3:]:
    print(f"  [{entry['index']}] step {entry['step']} {entry['actor']:>8} "
          f"{entry['kind']:>6}: {entry['action']['type']} -> {entry['outcome']}")
