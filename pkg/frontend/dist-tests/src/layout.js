/** Substation coordinates: either straight from the grid file's layout
 * block, or a small deterministic force layout when the file has none. */
export function resolveLayout(substations, edges, provided) {
    const out = new Map();
    if (substations.every((s) => provided[s] !== undefined)) {
        for (const s of substations) {
            out.set(s, { x: provided[s][0], y: provided[s][1] });
        }
        return normalize(out);
    }
    return normalize(forceLayout(substations, edges));
}
/** Plain spring embedding, deterministically seeded from the ids: good
 * enough to untangle desk-scale grids without any dependency. */
export function forceLayout(substations, edges, iterations = 300) {
    const n = substations.length;
    const index = new Map(substations.map((s, i) => [s, i]));
    const xs = new Float64Array(n);
    const ys = new Float64Array(n);
    for (let i = 0; i < n; i++) {
        // deterministic pseudo-random ring start
        const h = hash(substations[i]);
        const angle = (2 * Math.PI * i) / n + (h % 100) / 500;
        const radius = 1.0 + ((h >> 8) % 100) / 400;
        xs[i] = radius * Math.cos(angle);
        ys[i] = radius * Math.sin(angle);
    }
    const pairs = edges
        .map(([a, b]) => [index.get(a), index.get(b)])
        .filter(([a, b]) => a !== undefined && b !== undefined);
    const spring = 0.45;
    for (let it = 0; it < iterations; it++) {
        const step = 0.04 * (1 - it / iterations) + 0.002;
        const fx = new Float64Array(n);
        const fy = new Float64Array(n);
        for (let i = 0; i < n; i++) {
            for (let j = i + 1; j < n; j++) {
                let dx = xs[i] - xs[j];
                let dy = ys[i] - ys[j];
                const d2 = dx * dx + dy * dy + 1e-6;
                const rep = 0.08 / d2;
                dx *= rep;
                dy *= rep;
                fx[i] += dx;
                fy[i] += dy;
                fx[j] -= dx;
                fy[j] -= dy;
            }
        }
        for (const [a, b] of pairs) {
            const dx = xs[b] - xs[a];
            const dy = ys[b] - ys[a];
            const d = Math.sqrt(dx * dx + dy * dy) + 1e-9;
            const pull = (d - spring) * 0.5;
            fx[a] += (dx / d) * pull;
            fy[a] += (dy / d) * pull;
            fx[b] -= (dx / d) * pull;
            fy[b] -= (dy / d) * pull;
        }
        for (let i = 0; i < n; i++) {
            xs[i] += Math.max(-0.1, Math.min(0.1, fx[i] * step * 10));
            ys[i] += Math.max(-0.1, Math.min(0.1, fy[i] * step * 10));
        }
    }
    const out = new Map();
    substations.forEach((s, i) => out.set(s, { x: xs[i], y: ys[i] }));
    return out;
}
function hash(s) {
    let h = 2166136261;
    for (let i = 0; i < s.length; i++) {
        h ^= s.charCodeAt(i);
        h = Math.imul(h, 16777619);
    }
    return h >>> 0;
}
/** Scale into the unit box with a margin, preserving aspect. */
function normalize(points) {
    const values = [...points.values()];
    const minX = Math.min(...values.map((p) => p.x));
    const maxX = Math.max(...values.map((p) => p.x));
    const minY = Math.min(...values.map((p) => p.y));
    const maxY = Math.max(...values.map((p) => p.y));
    const span = Math.max(maxX - minX, maxY - minY, 1e-9);
    const out = new Map();
    for (const [s, p] of points) {
        out.set(s, {
            x: 0.06 + (0.88 * (p.x - minX)) / span,
            y: 0.06 + (0.88 * (p.y - minY)) / span,
        });
    }
    return out;
}
