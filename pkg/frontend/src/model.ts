/** Pure view-model helpers.
 *
 * Everything rendered is a projection of server payloads plus two
 * pieces of transient client state: pairs the reviewer skipped for now
 * (an ordering choice, never sent to the server) and optimistic marks
 * for answers still in flight.
 */

import type { GraphView, Metrics, Proposal, RoundRecord, SessionView } from "./api.js";

export function pairKey(pair: readonly number[]): string {
  return `${pair[0]},${pair[1]}`;
}

export function parsePairKey(key: string): [number, number] {
  const parts = key.split(",");
  return [Number(parts[0]), Number(parts[1])];
}

/** Cards sorted most-uncertain first: ascending |confidence|, ties by
 *  pair order. Skipped pairs keep that relative order but move to the
 *  back of the queue. */
export function orderProposals(proposals: Proposal[], skipped: ReadonlySet<string>): Proposal[] {
  const ranked = [...proposals].sort((a, b) => {
    const gap = Math.abs(a.confidence) - Math.abs(b.confidence);
    if (gap !== 0) return gap;
    return a.pair[0] - b.pair[0] || a.pair[1] - b.pair[1];
  });
  const kept = ranked.filter((p) => !skipped.has(pairKey(p.pair)));
  const deferred = ranked.filter((p) => skipped.has(pairKey(p.pair)));
  return [...kept, ...deferred];
}

export function pendingCount(view: SessionView): number {
  return view.pending.length;
}

/** Answers applied locally while their POST is still in flight. */
export type OptimisticMarks = ReadonlyMap<string, 0 | 1>;

export function markAnswered(
  marks: OptimisticMarks,
  pair: readonly [number, number],
  label: 0 | 1,
): OptimisticMarks {
  const next = new Map(marks);
  next.set(pairKey(pair), label);
  return next;
}

export function revertMark(marks: OptimisticMarks, pair: readonly [number, number]): OptimisticMarks {
  const next = new Map(marks);
  next.delete(pairKey(pair));
  return next;
}

export function isAnswered(proposal: Proposal, marks: OptimisticMarks): boolean {
  return proposal.answered || marks.has(pairKey(proposal.pair));
}

/** Diverging cell color: hue encodes the predicted label, lightness
 *  encodes |confidence| so near-zero cells fade toward white. */
export function cellColor(value: number | null): string {
  if (value === null) return "transparent";
  const magnitude = Math.min(Math.abs(value), 100) / 100;
  const hue = value >= 0 ? 215 : 12;
  const lightness = 94 - magnitude * 46;
  return `hsl(${hue} 72% ${lightness}%)`;
}

/** Confidence grid for one recorded round; cells the record does not
 *  mention (the diagonal) stay null. */
export function matrixFromRecord(record: RoundRecord, n: number): (number | null)[][] {
  const grid: (number | null)[][] = Array.from({ length: n }, () =>
    Array<number | null>(n).fill(null),
  );
  for (const [key, value] of Object.entries(record.confidences)) {
    const [i, j] = parsePairKey(key);
    const row = grid[i];
    if (row !== undefined && j >= 0 && j < n) row[j] = value;
  }
  return grid;
}

export interface TracePoint {
  round: number;
  budget_fraction: number;
  f1: number;
}

/** Accuracy trace over rounds that had ground truth to score against. */
export function f1Trace(rounds: RoundRecord[]): TracePoint[] {
  return rounds
    .filter((r): r is RoundRecord & { metrics: Metrics } => r.metrics !== null)
    .map((r) => ({ round: r.round, budget_fraction: r.budget_fraction, f1: r.metrics.f1 }));
}

export interface EdgeRow {
  parent: string;
  child: string;
  confidence: number;
  experimented: boolean;
}

/** Pairs currently labeled present, strongest first, for the list toggle. */
export function predictedEdges(graph: GraphView): EdgeRow[] {
  const rows: EdgeRow[] = [];
  for (let i = 0; i < graph.n; i += 1) {
    for (let j = 0; j < graph.n; j += 1) {
      if (i === j) continue;
      const confidence = graph.confidences[i]?.[j];
      if (confidence === null || confidence === undefined || confidence < 0) continue;
      rows.push({
        parent: graph.variables[i]?.name ?? `var ${i}`,
        child: graph.variables[j]?.name ?? `var ${j}`,
        confidence,
        experimented: graph.experimented[i]?.[j] ?? false,
      });
    }
  }
  rows.sort((a, b) => b.confidence - a.confidence);
  return rows;
}
