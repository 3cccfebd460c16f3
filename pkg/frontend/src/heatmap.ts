/** DOM renderers for the confidence matrix, the predicted-edge list,
 *  and the accuracy sparkline. No framework: each render replaces the
 *  container's children from the data it is handed. */

import type { GraphView } from "./api.js";
import type { EdgeRow, TracePoint } from "./model.js";
import { cellColor } from "./model.js";

function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export interface MatrixData {
  names: string[];
  confidences: (number | null)[][];
  experimented: ((i: number, j: number) => boolean) | null;
}

export function matrixFromGraph(graph: GraphView): MatrixData {
  return {
    names: graph.variables.map((v) => v.name),
    confidences: graph.confidences,
    experimented: (i, j) => graph.experimented[i]?.[j] ?? false,
  };
}

/** Paint the n-by-n grid. Diagonal cells are voided, experimented
 *  cells get a frozen outline, and the whole table lives inside a
 *  scroll container so large graphs stay navigable. */
export function renderMatrix(container: HTMLElement, data: MatrixData): void {
  clear(container);
  const n = data.names.length;
  const table = document.createElement("table");
  table.className = "matrix";

  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th"));
  for (let j = 0; j < n; j += 1) {
    const th = document.createElement("th");
    th.textContent = String(j);
    th.title = data.names[j] ?? "";
    head.appendChild(th);
  }

  const body = table.createTBody();
  for (let i = 0; i < n; i += 1) {
    const row = body.insertRow();
    const label = document.createElement("th");
    label.textContent = `${i} ${data.names[i] ?? ""}`;
    row.appendChild(label);
    for (let j = 0; j < n; j += 1) {
      const cell = row.insertCell();
      if (i === j) {
        cell.className = "void";
        continue;
      }
      const value = data.confidences[i]?.[j] ?? null;
      cell.style.background = cellColor(value);
      if (value !== null) {
        cell.title = `${data.names[i]} → ${data.names[j]}: ${value >= 0 ? "present" : "absent"} (${value})`;
      }
      if (data.experimented && data.experimented(i, j)) cell.classList.add("frozen");
    }
  }
  container.appendChild(table);
}

export function renderEdgeList(container: HTMLElement, rows: EdgeRow[]): void {
  clear(container);
  if (rows.length === 0) {
    const empty = document.createElement("p");
    empty.className = "muted";
    empty.textContent = "No edges predicted present.";
    container.appendChild(empty);
    return;
  }
  const list = document.createElement("ol");
  list.className = "edge-list";
  for (const row of rows) {
    const item = document.createElement("li");
    const arrow = document.createElement("span");
    arrow.textContent = `${row.parent} → ${row.child}`;
    const score = document.createElement("span");
    score.className = "edge-score" + (row.experimented ? " frozen-text" : "");
    score.textContent = row.experimented ? `${row.confidence} (tested)` : String(row.confidence);
    item.append(arrow, score);
    list.appendChild(item);
  }
  container.appendChild(list);
}

/** Inline SVG line of F1 against budget spent. */
export function renderSparkline(container: HTMLElement, points: TracePoint[]): void {
  clear(container);
  if (points.length === 0) {
    const empty = document.createElement("p");
    empty.className = "muted";
    empty.textContent = "No scored rounds yet.";
    container.appendChild(empty);
    return;
  }
  const w = 260;
  const h = 72;
  const pad = 6;
  const svgNS = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNS, "svg");
  svg.setAttribute("viewBox", `0 0 ${w} ${h}`);
  svg.setAttribute("class", "sparkline");

  const x = (p: TracePoint) => pad + p.budget_fraction * (w - 2 * pad);
  const y = (p: TracePoint) => h - pad - p.f1 * (h - 2 * pad);

  const axis = document.createElementNS(svgNS, "line");
  axis.setAttribute("x1", String(pad));
  axis.setAttribute("y1", String(h - pad));
  axis.setAttribute("x2", String(w - pad));
  axis.setAttribute("y2", String(h - pad));
  axis.setAttribute("class", "spark-axis");
  svg.appendChild(axis);

  const line = document.createElementNS(svgNS, "polyline");
  line.setAttribute("points", points.map((p) => `${x(p)},${y(p)}`).join(" "));
  line.setAttribute("class", "spark-line");
  svg.appendChild(line);

  const last = points[points.length - 1];
  if (last !== undefined) {
    const dot = document.createElementNS(svgNS, "circle");
    dot.setAttribute("cx", String(x(last)));
    dot.setAttribute("cy", String(y(last)));
    dot.setAttribute("r", "3");
    dot.setAttribute("class", "spark-dot");
    svg.appendChild(dot);
    const label = document.createElement("div");
    label.className = "spark-label";
    label.textContent = `f1 ${last.f1.toFixed(3)} at ${(last.budget_fraction * 100).toFixed(0)}% budget`;
    container.append(svg, label);
    return;
  }
  container.appendChild(svg);
}
