/** Console round-trip against a live service (set GRIDCM_URL, e.g. via
 * ./run_integration.sh):
 *
 *  - candidates render ranked,
 *  - what-if numbers equal the candidate table's numbers,
 *  - confirm + advance produces an operator audit entry and an updated
 *    diagram model.
 */
import assert from "node:assert/strict";
import { test } from "node:test";
import { AssistantClient } from "../src/api.js";
import { resolveLayout } from "../src/layout.js";
import { candidateRows, loadBand, splitSubstations, whatIfDeltas, } from "../src/viewmodel.js";
const base = process.env.GRIDCM_URL ?? "";
const gridName = process.env.GRIDCM_GRID ?? "desk14";
const chronicName = process.env.GRIDCM_CHRONIC ?? "desk14-congested-day1";
/** What the SVG renderer consumes: positions plus per-line stroke state.
 * Comparing two of these is the headless stand-in for "the diagram
 * updated". */
function diagramModel(snapshot) {
    const substations = [
        ...new Set(snapshot.lines.flatMap((l) => [l.from_substation, l.to_substation])),
    ].sort();
    const layout = resolveLayout(substations, snapshot.lines.map((l) => [l.from_substation, l.to_substation]), snapshot.layout ?? {});
    return {
        positions: substations.map((s) => [s, layout.get(s).x, layout.get(s).y]),
        strokes: snapshot.lines.map((l) => ({
            id: l.id,
            dashed: !l.in_service,
            band: l.in_service ? loadBand(l.rho) : "out",
        })),
        splits: [...splitSubstations(snapshot)].sort(),
    };
}
test("console round-trip against a live session", { skip: !base }, async () => {
    const client = new AssistantClient(base);
    const created = await client.createSession(gridName, chronicName);
    const sid = created.session_id;
    let snapshot = created.state;
    // ride the chronic until the observer wants attention
    let guard = 0;
    while (snapshot.status.level === "Safe" && guard++ < 288) {
        snapshot = await client.advance(sid, 1);
    }
    assert.notEqual(snapshot.status.level, "Safe", "never left Safe");
    const beforeModel = diagramModel(snapshot);
    // 1. candidates render ranked
    const candidates = await client.getCandidates(sid);
    const rows = candidateRows(candidates);
    assert.ok(rows.length >= 1, "no recommendations on the congested fixture");
    assert.deepEqual(rows.map((r) => r.rank), Array.from({ length: rows.length }, (_, i) => i + 1), "ranks must be contiguous from 1");
    // 2. what-if numbers equal the candidate table's numbers
    const top = rows[0];
    const whatIf = await client.simulate(sid, top.action);
    assert.deepEqual(whatIf.projected_max_rho, top.projected, "what-if projection must match the candidate table");
    assert.deepEqual(whatIf.n1, candidates.recommendations[0].n1);
    const deltas = whatIfDeltas(snapshot, whatIf.post_lines);
    assert.ok(deltas.length >= 1, "the top candidate should move some line");
    // 3. confirm + advance: operator audit entry, updated diagram
    const staged = await client.applyCandidate(sid, top.candidateId);
    assert.deepEqual(staged.staged, top.action);
    snapshot = await client.advance(sid, 1);
    const audit = await client.getAudit(sid);
    const lastStep = audit.entries.filter((e) => e.kind === "step").at(-1);
    assert.equal(lastStep.actor, "operator");
    assert.deepEqual(lastStep.action, top.action);
    assert.equal(lastStep.outcome, "applied");
    const afterModel = diagramModel(snapshot);
    assert.notDeepEqual(afterModel, beforeModel, "the diagram model must change after an applied action");
    if (top.action.type === "substation") {
        assert.ok(afterModel.splits.includes(top.action.substation), "a split substation draws two busbar glyphs");
    }
});
