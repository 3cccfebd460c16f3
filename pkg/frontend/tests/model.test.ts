import { describe, expect, it } from "vitest";

import type { GraphView, Proposal, RoundRecord } from "../src/api.js";
import {
  cellColor,
  f1Trace,
  isAnswered,
  markAnswered,
  matrixFromRecord,
  orderProposals,
  pairKey,
  parsePairKey,
  predictedEdges,
  revertMark,
} from "../src/model.js";

function proposal(pair: [number, number], confidence: number, answered = false): Proposal {
  return {
    pair,
    parent: `v${pair[0]}`,
    child: `v${pair[1]}`,
    confidence,
    rationale: null,
    answered,
  };
}

describe("pair keys", () => {
  it("round-trips", () => {
    expect(pairKey([3, 7])).toBe("3,7");
    expect(parsePairKey("3,7")).toEqual([3, 7]);
    expect(parsePairKey(pairKey([0, 12]))).toEqual([0, 12]);
  });
});

describe("orderProposals", () => {
  it("sorts by |confidence| ascending with pair order breaking ties", () => {
    const input = [
      proposal([0, 1], -40),
      proposal([2, 0], 5),
      proposal([1, 2], -5),
      proposal([0, 2], 10),
    ];
    const ordered = orderProposals(input, new Set());
    expect(ordered.map((p) => p.pair)).toEqual([
      [1, 2],
      [2, 0],
      [0, 2],
      [0, 1],
    ]);
  });

  it("moves skipped pairs to the back, keeping their relative order", () => {
    const input = [
      proposal([0, 1], -40),
      proposal([2, 0], 5),
      proposal([1, 2], -5),
      proposal([0, 2], 10),
    ];
    const skipped = new Set([pairKey([1, 2]), pairKey([2, 0])]);
    const ordered = orderProposals(input, skipped);
    expect(ordered.map((p) => p.pair)).toEqual([
      [0, 2],
      [0, 1],
      [1, 2],
      [2, 0],
    ]);
  });

  it("does not mutate its input", () => {
    const input = [proposal([0, 1], 50), proposal([1, 0], 1)];
    orderProposals(input, new Set());
    expect(input[0]!.pair).toEqual([0, 1]);
  });
});

describe("optimistic marks", () => {
  it("marks and reverts without touching the original map", () => {
    const empty = new Map<string, 0 | 1>();
    const marked = markAnswered(empty, [0, 1], 1);
    expect(empty.size).toBe(0);
    expect(marked.get("0,1")).toBe(1);
    const reverted = revertMark(marked, [0, 1]);
    expect(marked.get("0,1")).toBe(1);
    expect(reverted.has("0,1")).toBe(false);
  });

  it("answers come from either the server flag or a local mark", () => {
    const marks = markAnswered(new Map(), [0, 1], 0);
    expect(isAnswered(proposal([0, 1], 10), marks)).toBe(true);
    expect(isAnswered(proposal([1, 0], 10, true), new Map())).toBe(true);
    expect(isAnswered(proposal([2, 1], 10), marks)).toBe(false);
  });
});

describe("cellColor", () => {
  it("voids missing cells", () => {
    expect(cellColor(null)).toBe("transparent");
  });

  it("separates the two labels by hue", () => {
    expect(cellColor(80)).toContain("hsl(215");
    expect(cellColor(-80)).toContain("hsl(12");
    // zero counts as present
    expect(cellColor(0)).toContain("hsl(215");
  });

  it("darkens with magnitude", () => {
    const light = Number(/([\d.]+)%\)$/.exec(cellColor(5))?.[1]);
    const dark = Number(/([\d.]+)%\)$/.exec(cellColor(95))?.[1]);
    expect(light).toBeGreaterThan(dark);
    expect(cellColor(100)).toBe(cellColor(250));
  });
});

describe("matrixFromRecord", () => {
  const record: RoundRecord = {
    round: 1,
    budget_fraction: 0.5,
    metrics: null,
    breakdown: null,
    confidences: { "0,1": 40, "1,0": -10, "0,2": 100, "2,0": -100, "1,2": 5, "2,1": -5 },
    flags: [],
  };

  it("places values and leaves the diagonal null", () => {
    const grid = matrixFromRecord(record, 3);
    expect(grid[0]![1]).toBe(40);
    expect(grid[1]![0]).toBe(-10);
    expect(grid[2]![0]).toBe(-100);
    expect(grid[0]![0]).toBeNull();
    expect(grid[1]![1]).toBeNull();
    expect(grid[2]![2]).toBeNull();
  });

  it("ignores keys outside the grid", () => {
    const oversized: RoundRecord = { ...record, confidences: { "9,9": 1, "0,1": 2 } };
    const grid = matrixFromRecord(oversized, 3);
    expect(grid[0]![1]).toBe(2);
    expect(grid).toHaveLength(3);
  });
});

describe("f1Trace", () => {
  it("keeps only scored rounds", () => {
    const metrics = { tp: 1, fp: 0, fn: 0, tn: 5, precision: 1, recall: 1, f1: 1 };
    const rounds: RoundRecord[] = [
      { round: 0, budget_fraction: 0, metrics: { ...metrics, f1: 0.4 }, breakdown: null, confidences: {}, flags: [] },
      { round: 1, budget_fraction: 0.25, metrics: null, breakdown: null, confidences: {}, flags: [] },
      { round: 2, budget_fraction: 0.5, metrics: { ...metrics, f1: 0.8 }, breakdown: null, confidences: {}, flags: [] },
    ];
    expect(f1Trace(rounds)).toEqual([
      { round: 0, budget_fraction: 0, f1: 0.4 },
      { round: 2, budget_fraction: 0.5, f1: 0.8 },
    ]);
  });
});

describe("predictedEdges", () => {
  const graph: GraphView = {
    n: 3,
    variables: [
      { id: 0, name: "rain", description: "" },
      { id: 1, name: "mud", description: "" },
      { id: 2, name: "traffic", description: "" },
    ],
    confidences: [
      [null, 80, -20],
      [0, null, 100],
      [-100, 55, null],
    ],
    labels: [
      [null, 1, 0],
      [1, null, 1],
      [0, 1, null],
    ],
    experimented: [
      [false, false, false],
      [false, false, true],
      [true, false, false],
    ],
  };

  it("lists present labels strongest first and flags tested pairs", () => {
    const rows = predictedEdges(graph);
    expect(rows.map((r) => [r.parent, r.child, r.confidence])).toEqual([
      ["mud", "traffic", 100],
      ["rain", "mud", 80],
      ["traffic", "mud", 55],
      ["mud", "rain", 0],
    ]);
    expect(rows[0]!.experimented).toBe(true);
    expect(rows[1]!.experimented).toBe(false);
  });
});
