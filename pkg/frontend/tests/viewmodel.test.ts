import assert from "node:assert/strict";
import { test } from "node:test";

import type { CandidatesResponse, Snapshot } from "../src/types.js";
import {
  candidateRows,
  describeAction,
  loadBand,
  splitSubstations,
  statusBanner,
  whatIfDeltas,
} from "../src/viewmodel.js";

function snapshotStub(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    session: "s0001",
    grid: "t3",
    chronic: "day",
    mode: "paused",
    step_index: 12,
    step_count: 288,
    blackout: false,
    status: { level: "Safe", max_rho: 0.62, triggers: [] },
    max_rho: 0.62,
    topology: {
      element_bus: {
        "L12:from": 1, "L12:to": 1, "L13:from": 1, "L13:to": 1,
        "L23:from": 1, "L23:to": 1, G1: 1, G2: 1, D3: 1,
      },
      line_status: { L12: true, L13: true, L23: true },
    },
    topology_distance: 0,
    lines: [
      { id: "L12", from_substation: "S1", to_substation: "S2",
        in_service: true, flow_mw: -33.3, rho: 0.333, thermal_limit: 100 },
      { id: "L13", from_substation: "S1", to_substation: "S3",
        in_service: true, flow_mw: 33.3, rho: 0.333, thermal_limit: 100 },
      { id: "L23", from_substation: "S2", to_substation: "S3",
        in_service: true, flow_mw: 66.7, rho: 0.667, thermal_limit: 100 },
    ],
    generators: [
      { id: "G1", substation: "S1", kind: "dispatchable",
        dispatch_mw: 0, planned_mw: 0 },
      { id: "G2", substation: "S2", kind: "wind",
        dispatch_mw: 100, planned_mw: 100 },
    ],
    loads: [{ id: "D3", substation: "S3", mw: 100 }],
    layout: { S1: [0, 0], S2: [2, 0], S3: [1, 1.6] },
    staged_action: null,
    history: [],
    audit_tail: [],
    ...overrides,
  };
}

test("load color bands follow the 0.9 / 1.0 thresholds", () => {
  assert.equal(loadBand(0.5), "ok");
  assert.equal(loadBand(0.89), "ok");
  assert.equal(loadBand(0.9), "warn");
  assert.equal(loadBand(1.0), "warn");
  assert.equal(loadBand(1.01), "over");
  assert.equal(loadBand("inf"), "over");
});

test("status banner reflects blackout and triggers", () => {
  const alert = statusBanner(snapshotStub({
    status: {
      level: "Alert", max_rho: 0.98,
      triggers: [{ line: "L23", rho: 0.98, forecast_step: 2 }],
    },
  }));
  assert.equal(alert.cssClass, "alert");
  assert.match(alert.triggers[0], /L23 at 98.0% in 10 min/);

  const dead = statusBanner(snapshotStub({ blackout: true }));
  assert.equal(dead.cssClass, "critical");
  assert.match(dead.headline, /BLACKOUT/);
});

test("candidate rows keep the service ranking", () => {
  const response: CandidatesResponse = {
    step_index: 5,
    status: "Alert",
    note: "",
    recommendations: [2, 1, 3].map((rank) => ({
      rank,
      candidate_id: `c${rank}`,
      action: { type: "line", line: `L${rank}`, connect: true },
      projected_max_rho: [0.9 + rank / 100],
      post_lines: [],
      n1: { screened: 3, violations: rank - 1, worst_rho: 1.0 },
      explanation: { triggering_lines: [], affected: null },
    })),
    computed_ms: 12,
  };
  const rows = candidateRows(response);
  assert.deepEqual(rows.map((r) => r.rank), [1, 2, 3]);
  assert.equal(rows[1].n1Badge, "N-1: 1");
});

test("what-if deltas are service numbers, sorted by movement", () => {
  const before = snapshotStub();
  const deltas = whatIfDeltas(before, [
    { id: "L12", rho: 0.233 },
    { id: "L13", rho: 0.433 },
    { id: "L23", rho: 0.667 },  // unchanged: dropped
  ]);
  assert.deepEqual(deltas.map((d) => d.line), ["L12", "L13"]);
  assert.ok(Math.abs(deltas[0].delta + 0.1) < 1e-9);
});

test("split substations are detected from busbar assignments", () => {
  const plain = snapshotStub();
  assert.equal(splitSubstations(plain).size, 0);
  // S2 genuinely split: L12:to and G2 on busbar 2, L23:from stays on 1
  const split = snapshotStub({
    topology: {
      element_bus: {
        "L12:from": 1, "L12:to": 2, "L13:from": 1, "L13:to": 1,
        "L23:from": 1, "L23:to": 1, G1: 1, G2: 2, D3: 1,
      },
      line_status: { L12: true, L13: true, L23: true },
    },
  });
  assert.deepEqual([...splitSubstations(split)].sort(), ["S2"]);
});

test("action descriptions stay readable", () => {
  assert.equal(describeAction({ type: "noop" }), "no operation");
  assert.match(
    describeAction({
      type: "substation",
      substation: "S04",
      assignment: { "L04:from": 2, "L03:to": 1, D04: 2 },
    }),
    /split S04: move L04:from, D04 to busbar 2/,
  );
  assert.match(
    describeAction({ type: "redispatch", deltas: { G2: -15, G3: 15 } }),
    /G2 -15.0 MW G3 \+15.0 MW/,
  );
});
