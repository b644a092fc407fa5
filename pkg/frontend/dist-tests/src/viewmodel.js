/** Pure view-model mapping: API payloads in, render-ready structures out.
 *
 * Nothing in here recomputes electrical quantities — loadings, MWh and
 * projections are displayed exactly as the service reported them. */
/** Loading color bands: green below 0.9, amber from 0.9 to 1.0, red above. */
export function loadBand(rho) {
    if (rho === "inf")
        return "over";
    if (rho > 1.0)
        return "over";
    if (rho >= 0.9)
        return "warn";
    return "ok";
}
export const BAND_COLORS = {
    ok: "#2e9e5b",
    warn: "#e0a93e",
    over: "#d6453d",
};
export function asNumber(x) {
    return x === "inf" ? Infinity : x;
}
export function fmtRho(x) {
    return x === "inf" ? "∞" : x.toFixed(3);
}
export function statusBanner(snapshot) {
    const s = snapshot.status;
    const headline = snapshot.blackout
        ? `BLACKOUT at step ${snapshot.step_index}`
        : `${s.level} — worst forecast loading ${fmtRho(s.max_rho)}`;
    return {
        level: s.level,
        cssClass: snapshot.blackout ? "critical" : s.level.toLowerCase(),
        headline,
        triggers: s.triggers.map((t) => `${t.line} at ${(t.rho * 100).toFixed(1)}% in ${t.forecast_step * 5} min`),
    };
}
/** One human line per action, no electrical math. */
export function describeAction(action) {
    switch (action.type) {
        case "noop":
            return action.reason ? `no operation (${action.reason})` : "no operation";
        case "line":
            return `${action.connect ? "reconnect" : "disconnect"} line ${action.line}`;
        case "substation": {
            const moved = Object.entries(action.assignment)
                .filter(([, bus]) => bus === 2)
                .map(([ep]) => ep);
            return moved.length
                ? `split ${action.substation}: move ${moved.join(", ")} to busbar 2`
                : `revert ${action.substation} to a single busbar`;
        }
        case "redispatch": {
            const parts = Object.entries(action.deltas).map(([g, mw]) => `${g} ${mw >= 0 ? "+" : ""}${mw.toFixed(1)} MW`);
            const caps = Object.entries(action.curtail_caps ?? {}).map(([r, mw]) => `cap ${r} at ${mw.toFixed(1)} MW`);
            return ["redispatch", ...parts, ...caps].join(" ");
        }
        case "composite":
            return `${describeAction(action.topology)} + ${describeAction(action.redispatch)}`;
    }
}
/** Ranked table rows, in the order the service ranked them. */
export function candidateRows(response) {
    const rows = response.recommendations.map((rec) => toRow(rec));
    rows.sort((a, b) => a.rank - b.rank);
    return rows;
}
function toRow(rec) {
    const worst = Math.max(...rec.projected_max_rho.map(asNumber));
    return {
        rank: rec.rank,
        candidateId: rec.candidate_id,
        label: describeAction(rec.action),
        action: rec.action,
        projected: rec.projected_max_rho,
        projectedText: rec.projected_max_rho.map(fmtRho).join(" → "),
        worstProjected: worst,
        n1Badge: `N-1: ${rec.n1.violations}`,
        n1Violations: rec.n1.violations,
        band: loadBand(worst === Infinity ? "inf" : worst),
    };
}
/** Before/after per-line loadings for the what-if panel; "after" comes
 * from a simulate call's projection of the first step. */
export function whatIfDeltas(before, afterLines) {
    const byId = new Map(before.lines.map((l) => [l.id, l.rho]));
    const out = [];
    for (const line of afterLines) {
        const prev = byId.get(line.id);
        if (prev === undefined)
            continue;
        const delta = line.rho - prev;
        if (Math.abs(delta) < 5e-4)
            continue;
        out.push({
            line: line.id,
            before: prev,
            after: line.rho,
            delta,
            band: loadBand(line.rho),
        });
    }
    out.sort((a, b) => Math.abs(b.delta) - Math.abs(a.delta));
    return out;
}
export function historySeries(snapshot) {
    const h = snapshot.history;
    return {
        steps: h.map((p) => p.step),
        maxRho: h.map((p) => asNumber(p.max_rho)),
        redispatchMw: h.map((p) => p.redispatch_mw),
        topologyDistance: h.map((p) => p.topology_distance),
    };
}
/** Substations whose elements sit on more than one busbar (drawn with two
 * busbar glyphs). */
export function splitSubstations(snapshot) {
    const buses = new Map();
    for (const [endpoint, bus] of Object.entries(snapshot.topology.element_bus)) {
        const sub = substationOfEndpoint(endpoint, snapshot);
        if (sub === null)
            continue;
        if (!buses.has(sub))
            buses.set(sub, new Set());
        buses.get(sub).add(bus);
    }
    return new Set([...buses.entries()].filter(([, b]) => b.size > 1).map(([sub]) => sub));
}
function substationOfEndpoint(endpoint, snapshot) {
    const colon = endpoint.indexOf(":");
    if (colon >= 0) {
        const lineId = endpoint.slice(0, colon);
        const end = endpoint.slice(colon + 1);
        const line = snapshot.lines.find((l) => l.id === lineId);
        if (!line)
            return null;
        return end === "from" ? line.from_substation : line.to_substation;
    }
    const gen = snapshot.generators.find((g) => g.id === endpoint);
    if (gen)
        return gen.substation;
    const load = snapshot.loads.find((d) => d.id === endpoint);
    return load ? load.substation : null;
}
