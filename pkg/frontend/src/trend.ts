// Minimal SVG line chart: best value of a chosen metric per sweep point
// (partition size or trade-off number). Points come straight from server
// data; nothing is recomputed client-side.

export interface TrendPoint {
  x: number;
  label: string;
  y: number;
}

const W = 640;
const H = 300;
const PAD = 44;

export function renderTrendChart(
  container: HTMLElement,
  points: TrendPoint[],
  metricLabel: string,
): void {
  container.innerHTML = "";
  if (points.length === 0) {
    const empty = document.createElement("p");
    empty.textContent = "No completed experiments to chart yet.";
    container.appendChild(empty);
    return;
  }
  const sorted = [...points].sort((a, b) => a.x - b.x);
  const xs = sorted.map((p) => p.x);
  const ys = sorted.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;

  const px = (x: number) => PAD + ((x - xMin) / xSpan) * (W - 2 * PAD);
  const py = (y: number) => H - PAD - ((y - yMin) / ySpan) * (H - 2 * PAD);

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
  svg.setAttribute("class", "trend-chart");

  const axis = document.createElementNS(svg.namespaceURI, "path");
  axis.setAttribute(
    "d",
    `M ${PAD} ${PAD} L ${PAD} ${H - PAD} L ${W - PAD} ${H - PAD}`,
  );
  axis.setAttribute("fill", "none");
  axis.setAttribute("stroke", "#888");
  svg.appendChild(axis);

  const line = document.createElementNS(svg.namespaceURI, "polyline");
  line.setAttribute(
    "points",
    sorted.map((p) => `${px(p.x)},${py(p.y)}`).join(" "),
  );
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#2266cc");
  line.setAttribute("stroke-width", "2");
  svg.appendChild(line);

  for (const p of sorted) {
    const dot = document.createElementNS(svg.namespaceURI, "circle");
    dot.setAttribute("cx", String(px(p.x)));
    dot.setAttribute("cy", String(py(p.y)));
    dot.setAttribute("r", "4");
    dot.setAttribute("fill", "#2266cc");
    dot.setAttribute("data-x", String(p.x));
    dot.setAttribute("data-y", String(p.y));
    const tip = document.createElementNS(svg.namespaceURI, "title");
    tip.textContent = `${p.label}: ${p.y}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  }

  const yLabel = document.createElementNS(svg.namespaceURI, "text");
  yLabel.setAttribute("x", "8");
  yLabel.setAttribute("y", String(PAD - 10));
  yLabel.textContent = metricLabel;
  svg.appendChild(yLabel);

  for (const p of sorted) {
    const tick = document.createElementNS(svg.namespaceURI, "text");
    tick.setAttribute("x", String(px(p.x)));
    tick.setAttribute("y", String(H - PAD + 16));
    tick.setAttribute("text-anchor", "middle");
    tick.setAttribute("font-size", "11");
    tick.textContent = p.label;
    svg.appendChild(tick);
  }

  container.appendChild(svg);
}
