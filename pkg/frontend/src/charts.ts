/** Minimal SVG step charts for the history panel and candidate
 * sparklines. */

const NS = "http://www.w3.org/2000/svg";

export function renderSeries(
  svg: SVGSVGElement,
  values: number[],
  options: { hline?: number; color?: string } = {},
): void {
  svg.replaceChildren();
  if (!values.length) return;
  const width = svg.clientWidth || 220;
  const height = svg.clientHeight || 48;
  const finite = values.map((v) => (Number.isFinite(v) ? v : 2.0));
  const hi = Math.max(...finite, options.hline ?? 0, 1e-9) * 1.05;
  const lo = Math.min(...finite, 0);
  const sx = (i: number) => (i / Math.max(values.length - 1, 1)) * (width - 4) + 2;
  const sy = (v: number) => height - 3 - ((v - lo) / (hi - lo)) * (height - 6);

  if (options.hline !== undefined) {
    const rule = document.createElementNS(NS, "line");
    rule.setAttribute("x1", "0");
    rule.setAttribute("x2", String(width));
    rule.setAttribute("y1", String(sy(options.hline)));
    rule.setAttribute("y2", String(sy(options.hline)));
    rule.setAttribute("stroke", "#d6453d");
    rule.setAttribute("stroke-dasharray", "3 3");
    rule.setAttribute("stroke-width", "1");
    svg.appendChild(rule);
  }
  const path = document.createElementNS(NS, "path");
  path.setAttribute(
    "d",
    finite.map((v, i) => `${i ? "L" : "M"} ${sx(i).toFixed(1)} ${sy(v).toFixed(1)}`).join(" "),
  );
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", options.color ?? "#2f77c2");
  path.setAttribute("stroke-width", "1.6");
  svg.appendChild(path);
}

export function sparkline(values: number[], hline = 1.0): SVGSVGElement {
  const svg = document.createElementNS(NS, "svg") as SVGSVGElement;
  svg.setAttribute("width", "90");
  svg.setAttribute("height", "22");
  const hi = Math.max(...values.filter(Number.isFinite), hline) * 1.05 || 1;
  const sx = (i: number) => (i / Math.max(values.length - 1, 1)) * 86 + 2;
  const sy = (v: number) => 20 - (Math.min(v, hi) / hi) * 18;
  const rule = document.createElementNS(NS, "line");
  rule.setAttribute("x1", "0");
  rule.setAttribute("x2", "90");
  rule.setAttribute("y1", String(sy(hline)));
  rule.setAttribute("y2", String(sy(hline)));
  rule.setAttribute("stroke", "#d6453d");
  rule.setAttribute("stroke-width", "0.7");
  svg.appendChild(rule);
  const path = document.createElementNS(NS, "path");
  path.setAttribute(
    "d",
    values
      .map((v, i) => `${i ? "L" : "M"} ${sx(i).toFixed(1)} ${sy(Number.isFinite(v) ? v : hi).toFixed(1)}`)
      .join(" "),
  );
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", "#3a4a5e");
  path.setAttribute("stroke-width", "1.4");
  svg.appendChild(path);
  return svg;
}
