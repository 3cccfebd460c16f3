/** App shell: session picker, proposal cards, confidence matrix.
 *
 * All durable state lives on the server; this module holds only the
 * open session id (mirrored into the URL hash so a refresh reopens
 * it), transient skip ordering, and optimistic marks for answers whose
 * POST has not come back yet.
 */

import { ApiError, SessionApi } from "./api.js";
import type { GraphView, HistoryView, Proposal, SessionView } from "./api.js";
import {
  f1Trace,
  isAnswered,
  markAnswered,
  matrixFromRecord,
  orderProposals,
  pairKey,
  predictedEdges,
  revertMark,
} from "./model.js";
import type { OptimisticMarks } from "./model.js";
import { matrixFromGraph, renderEdgeList, renderMatrix, renderSparkline } from "./heatmap.js";

const POLL_MS = 2000;

const api = new SessionApi();

interface AppState {
  sessionId: string | null;
  view: SessionView | null;
  graph: GraphView | null;
  history: HistoryView | null;
  marks: OptimisticMarks;
  skipped: Set<string>;
  cardErrors: Map<string, string>;
  // null = follow the live matrix; a number pins the slider to one round
  sliderIndex: number | null;
  showEdgeList: boolean;
}

const state: AppState = {
  sessionId: null,
  view: null,
  graph: null,
  history: null,
  marks: new Map(),
  skipped: new Set(),
  cardErrors: new Map(),
  sliderIndex: null,
  showEdgeList: false,
};

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function input(id: string): HTMLInputElement {
  return byId(id) as HTMLInputElement;
}

function showBanner(message: string): void {
  const banner = byId("banner");
  banner.textContent = message;
  banner.classList.remove("hidden");
}

function hideBanner(): void {
  byId("banner").classList.add("hidden");
}

function describeRound(index: number): string {
  return index === 0 ? "initial prediction" : `after round ${index}`;
}

// ---------------------------------------------------------------- picker

async function refreshSessionList(): Promise<void> {
  const listEl = byId("session-list");
  const { sessions } = await api.listSessions();
  listEl.replaceChildren();
  byId("list-empty").classList.toggle("hidden", sessions.length > 0);
  for (const s of sessions) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.type = "button";
    const phase = s.finished ? "finished" : `round ${s.round}`;
    button.textContent = `${s.id} · ${s.n} variables · ${phase}`;
    if (s.finished) button.classList.add("done");
    button.addEventListener("click", () => {
      void openSession(s.id);
    });
    item.appendChild(button);
    listEl.appendChild(item);
  }
}

async function handleCreate(event: Event): Promise<void> {
  event.preventDefault();
  const errorEl = byId("create-error");
  errorEl.textContent = "";
  let graph: unknown;
  try {
    graph = JSON.parse(input("graph-json").value);
  } catch {
    errorEl.textContent = "Graph JSON does not parse.";
    return;
  }
  const config = {
    rounds: Number(input("cfg-rounds").value),
    per_round: Number(input("cfg-per-round").value),
    zero_shot_samples: Number(input("cfg-samples").value),
    seed: Number(input("cfg-seed").value),
    policy: (byId("cfg-policy") as HTMLSelectElement).value,
  };
  try {
    const { id } = await api.createSession(graph, config);
    await openSession(id);
  } catch (err) {
    errorEl.textContent = err instanceof ApiError ? err.message : "Could not reach the server.";
  }
}

// ------------------------------------------------------------- workbench

async function openSession(id: string): Promise<void> {
  state.sessionId = id;
  state.view = null;
  state.graph = null;
  state.history = null;
  state.marks = new Map();
  state.skipped = new Set();
  state.cardErrors = new Map();
  state.sliderIndex = null;
  window.location.hash = id;
  byId("picker").classList.add("hidden");
  byId("workbench").classList.remove("hidden");
  await refreshAll();
}

function closeSession(): void {
  state.sessionId = null;
  window.location.hash = "";
  byId("workbench").classList.add("hidden");
  byId("picker").classList.remove("hidden");
  void refreshSessionList().catch(() => showBanner("Could not reach the server."));
}

async function refreshAll(): Promise<void> {
  const id = state.sessionId;
  if (!id) return;
  const [view, graph, history] = await Promise.all([
    api.getView(id),
    api.getGraph(id),
    api.getHistory(id),
  ]);
  if (state.sessionId !== id) return;
  state.view = view;
  state.graph = graph;
  state.history = history;
  render();
}

async function poll(): Promise<void> {
  const id = state.sessionId;
  if (!id) return;
  try {
    const view = await api.getView(id);
    if (state.sessionId !== id) return;
    const roundTurned =
      state.view === null ||
      view.round !== state.view.round ||
      view.finished !== state.view.finished;
    state.view = view;
    if (roundTurned) {
      // a commit happened elsewhere: confidences and history moved
      state.marks = new Map();
      state.skipped.clear();
      state.cardErrors.clear();
      const [graph, history] = await Promise.all([api.getGraph(id), api.getHistory(id)]);
      if (state.sessionId !== id) return;
      state.graph = graph;
      state.history = history;
    }
    hideBanner();
    render();
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      showBanner("Session not found on the server; retrying. A restarted server reloads sessions from disk.");
    } else if (err instanceof ApiError) {
      showBanner(`Server error while refreshing: ${err.message}`);
    } else {
      showBanner("Connection lost; retrying.");
    }
  }
}

async function submit(pair: [number, number], label: 0 | 1): Promise<void> {
  const id = state.sessionId;
  if (!id) return;
  state.marks = markAnswered(state.marks, pair, label);
  state.cardErrors.delete(pairKey(pair));
  render();
  try {
    const res = await api.submitFeedback(id, pair, label);
    if (state.sessionId !== id) return;
    if (res.committed) {
      // last answer of the round: the engine ran, everything moved
      state.marks = new Map();
      state.skipped.clear();
      state.cardErrors.clear();
      await refreshAll();
    } else {
      const view = await api.getView(id);
      if (state.sessionId !== id) return;
      state.view = view;
      state.marks = revertMark(state.marks, pair);
      render();
    }
    hideBanner();
  } catch (err) {
    if (state.sessionId !== id) return;
    state.marks = revertMark(state.marks, pair);
    if (err instanceof ApiError && err.status === 404) {
      showBanner("Session not found on the server; the answer was not recorded.");
    } else if (err instanceof ApiError) {
      state.cardErrors.set(pairKey(pair), err.message);
    } else {
      state.cardErrors.set(pairKey(pair), "Network failure; the answer was not recorded.");
    }
    render();
  }
}

// --------------------------------------------------------------- render

function render(): void {
  renderStatus();
  renderProposals();
  renderGraphPane();
  renderTimeline();
}

function renderStatus(): void {
  const view = state.view;
  if (!view) return;
  byId("status-id").textContent = view.id;
  byId("status-round").textContent = view.finished
    ? `finished after round ${view.round}`
    : `round ${view.round}`;
  byId("status-budget").textContent = `budget ${(view.budget_fraction * 100).toFixed(0)}%`;
  const f1El = byId("status-f1");
  if (view.metrics) {
    f1El.textContent = `f1 ${view.metrics.f1.toFixed(3)}`;
    f1El.classList.remove("hidden");
  } else {
    f1El.classList.add("hidden");
  }
  byId("status-pending").textContent = view.finished
    ? "no answers needed"
    : `${view.pending.length} awaiting answer`;
}

function descriptionLookup(): Map<string, string> {
  const names = new Map<string, string>();
  for (const v of state.graph?.variables ?? []) names.set(v.name, v.description);
  return names;
}

function proposalCard(proposal: Proposal, descriptions: Map<string, string>): HTMLElement {
  const key = pairKey(proposal.pair);
  const answered = isAnswered(proposal, state.marks);
  const card = document.createElement("div");
  card.className = "card" + (answered ? " answered" : "");

  const pairLine = document.createElement("div");
  pairLine.className = "pair-line";
  const lean = proposal.confidence >= 0 ? "present" : "absent";
  pairLine.innerHTML = "";
  const arrow = document.createElement("span");
  arrow.textContent = `${proposal.parent} → ${proposal.child} `;
  const leanEl = document.createElement("span");
  leanEl.className = "lean";
  leanEl.textContent = `leaning ${lean} (confidence ${proposal.confidence})`;
  pairLine.append(arrow, leanEl);
  card.appendChild(pairLine);

  const parentDesc = descriptions.get(proposal.parent);
  const childDesc = descriptions.get(proposal.child);
  if (parentDesc || childDesc) {
    const desc = document.createElement("p");
    desc.className = "descriptions";
    desc.textContent = `${proposal.parent}: ${parentDesc ?? "?"} · ${proposal.child}: ${childDesc ?? "?"}`;
    card.appendChild(desc);
  }

  if (proposal.rationale) {
    const rationale = document.createElement("p");
    rationale.className = "rationale";
    rationale.textContent = proposal.rationale;
    card.appendChild(rationale);
  }

  const actions = document.createElement("div");
  actions.className = "actions";
  const present = document.createElement("button");
  present.type = "button";
  present.className = "present";
  present.textContent = "Present";
  present.addEventListener("click", () => void submit(proposal.pair, 1));
  const absent = document.createElement("button");
  absent.type = "button";
  absent.className = "absent";
  absent.textContent = "Absent";
  absent.addEventListener("click", () => void submit(proposal.pair, 0));
  actions.append(present, absent);
  if (!answered) {
    const skip = document.createElement("button");
    skip.type = "button";
    skip.textContent = "Skip for now";
    skip.addEventListener("click", () => {
      state.skipped.add(key);
      renderProposals();
    });
    actions.appendChild(skip);
  }
  card.appendChild(actions);

  if (answered) {
    const verdict = document.createElement("p");
    verdict.className = "verdict";
    const mark = state.marks.get(key);
    verdict.textContent =
      mark !== undefined
        ? `Marked ${mark === 1 ? "present" : "absent"}; you can change it until the round commits.`
        : "Answer staged; you can change it until the round commits.";
    card.appendChild(verdict);
  }

  const error = state.cardErrors.get(key);
  if (error) {
    const note = document.createElement("p");
    note.className = "card-error";
    note.textContent = `Rejected: ${error}`;
    card.appendChild(note);
  }
  return card;
}

function renderProposals(): void {
  const view = state.view;
  if (!view) return;
  const cardsEl = byId("proposal-cards");
  byId("finished-note").classList.toggle("hidden", !view.finished);
  cardsEl.replaceChildren();
  if (view.finished) return;
  const descriptions = descriptionLookup();
  for (const proposal of orderProposals(view.proposals, state.skipped)) {
    cardsEl.appendChild(proposalCard(proposal, descriptions));
  }
}

function renderGraphPane(): void {
  const graph = state.graph;
  const history = state.history;
  if (!graph) return;

  const matrixBox = byId("matrix-box");
  const edgeBox = byId("edge-box");
  const toggle = byId("toggle-view");
  matrixBox.classList.toggle("hidden", state.showEdgeList);
  edgeBox.classList.toggle("hidden", !state.showEdgeList);
  toggle.textContent = state.showEdgeList ? "Show matrix" : "Show edge list";

  const rounds = history?.rounds ?? [];
  const slider = input("round-slider");
  const lastIndex = Math.max(rounds.length - 1, 0);
  slider.max = String(lastIndex);
  const shown = state.sliderIndex === null ? lastIndex : Math.min(state.sliderIndex, lastIndex);
  slider.value = String(shown);
  const live = state.sliderIndex === null || shown === lastIndex;
  byId("slider-label").textContent = rounds.length
    ? `${describeRound(shown)}${live ? " (live)" : ""}`
    : "";

  if (state.showEdgeList) {
    renderEdgeList(edgeBox, predictedEdges(graph));
    return;
  }
  if (live || rounds[shown] === undefined) {
    renderMatrix(matrixBox, matrixFromGraph(graph));
  } else {
    const record = rounds[shown];
    renderMatrix(matrixBox, {
      names: graph.variables.map((v) => v.name),
      confidences: matrixFromRecord(record, graph.n),
      experimented: null,
    });
  }
}

function renderTimeline(): void {
  const history = state.history;
  const sparkBox = byId("spark-box");
  const timelineEl = byId("timeline");
  if (!history) return;
  renderSparkline(sparkBox, f1Trace(history.rounds));
  timelineEl.replaceChildren();
  const list = document.createElement("ul");
  list.className = "timeline-list";
  for (const record of history.rounds) {
    if (record.round === 0 || !record.breakdown) continue;
    const item = document.createElement("li");
    const b = record.breakdown;
    item.textContent =
      `round ${record.round}: ${b.experiment_improvements} fixed by experiment, ` +
      `${b.update_improvements} by updates, ${b.regressions} regressed`;
    list.appendChild(item);
  }
  if (list.childElementCount > 0) timelineEl.appendChild(list);
}

// ----------------------------------------------------------------- init

function wireControls(): void {
  byId("create-form").addEventListener("submit", (e) => void handleCreate(e));
  byId("back").addEventListener("click", closeSession);
  byId("toggle-view").addEventListener("click", () => {
    state.showEdgeList = !state.showEdgeList;
    renderGraphPane();
  });
  input("round-slider").addEventListener("input", () => {
    const slider = input("round-slider");
    const value = Number(slider.value);
    state.sliderIndex = value >= Number(slider.max) ? null : value;
    renderGraphPane();
  });
}

async function start(): Promise<void> {
  wireControls();
  window.setInterval(() => void poll(), POLL_MS);
  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) {
    try {
      await openSession(fromHash);
      return;
    } catch {
      showBanner(`Could not reopen session ${fromHash}.`);
      closeSession();
    }
  }
  try {
    await refreshSessionList();
  } catch {
    showBanner("Could not reach the server.");
  }
}

void start();
