/** SVG single-line diagram: substations as busbar glyphs (two when split),
 * lines colored by loading, dashed when out of service. */

import { resolveLayout } from "./layout.js";
import type { Snapshot } from "./types.js";
import { BAND_COLORS, loadBand, splitSubstations } from "./viewmodel.js";

const NS = "http://www.w3.org/2000/svg";

export function renderDiagram(
  svg: SVGSVGElement,
  snapshot: Snapshot,
  onHover?: (text: string) => void,
): void {
  svg.replaceChildren();
  const width = svg.clientWidth || 760;
  const height = svg.clientHeight || 520;
  const substations = [
    ...new Set(
      snapshot.lines.flatMap((l) => [l.from_substation, l.to_substation]),
    ),
  ].sort();
  const layout = resolveLayout(
    substations,
    snapshot.lines.map((l) => [l.from_substation, l.to_substation]),
    snapshot.layout ?? {},
  );
  const px = (s: string) => {
    const p = layout.get(s)!;
    return { x: p.x * width, y: p.y * height };
  };
  const split = splitSubstations(snapshot);

  for (const line of snapshot.lines) {
    const a = px(line.from_substation);
    const b = px(line.to_substation);
    const el = document.createElementNS(NS, "line");
    el.setAttribute("x1", String(a.x));
    el.setAttribute("y1", String(a.y));
    el.setAttribute("x2", String(b.x));
    el.setAttribute("y2", String(b.y));
    if (!line.in_service) {
      el.setAttribute("stroke", "#8a8f98");
      el.setAttribute("stroke-dasharray", "6 5");
      el.setAttribute("stroke-width", "2");
    } else {
      el.setAttribute("stroke", BAND_COLORS[loadBand(line.rho)]);
      el.setAttribute("stroke-width", String(2 + 3 * Math.min(line.rho, 1.5)));
    }
    el.addEventListener("mouseenter", () =>
      onHover?.(
        line.in_service
          ? `${line.id}: ${line.flow_mw.toFixed(1)} MW, ` +
            `${(line.rho * 100).toFixed(1)}% of ${line.thermal_limit} MW`
          : `${line.id}: out of service`,
      ),
    );
    svg.appendChild(el);
  }

  const gens = new Map<string, number>();
  for (const g of snapshot.generators) {
    gens.set(g.substation, (gens.get(g.substation) ?? 0) + 1);
  }
  const loads = new Set(snapshot.loads.map((d) => d.substation));

  for (const sub of substations) {
    const p = px(sub);
    const group = document.createElementNS(NS, "g");
    const bars = split.has(sub) ? [-4, 4] : [0];
    for (const dy of bars) {
      const bar = document.createElementNS(NS, "rect");
      bar.setAttribute("x", String(p.x - 13));
      bar.setAttribute("y", String(p.y + dy - 2));
      bar.setAttribute("width", "26");
      bar.setAttribute("height", "4");
      bar.setAttribute("rx", "1.5");
      bar.setAttribute("fill", split.has(sub) ? "#7e57c2" : "#3a4a5e");
      group.appendChild(bar);
    }
    if (gens.get(sub)) {
      const dot = document.createElementNS(NS, "circle");
      dot.setAttribute("cx", String(p.x - 17));
      dot.setAttribute("cy", String(p.y - 9));
      dot.setAttribute("r", "4");
      dot.setAttribute("fill", "#2f77c2");
      group.appendChild(dot);
    }
    if (loads.has(sub)) {
      const tri = document.createElementNS(NS, "path");
      tri.setAttribute(
        "d",
        `M ${p.x + 13} ${p.y - 12} l 8 0 l -4 7 z`,
      );
      tri.setAttribute("fill", "#a85f2e");
      group.appendChild(tri);
    }
    const label = document.createElementNS(NS, "text");
    label.setAttribute("x", String(p.x));
    label.setAttribute("y", String(p.y + 18));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "sub-label");
    label.textContent = sub;
    group.appendChild(label);
    group.addEventListener("mouseenter", () =>
      onHover?.(`${sub}${split.has(sub) ? " (split across two busbars)" : ""}`),
    );
    svg.appendChild(group);
  }
}
