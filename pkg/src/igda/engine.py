"""Discovery engine: prediction state, selection policies, round loop.

Phase 1 scores every candidate pair zero-shot (K samples each, signed
average).  Phase 2 runs R rounds: select I pairs to experiment on,
reveal their true labels, freeze them at +/-100, and propagate belief
updates to adjacent pairs.  ``DiscoveryRun`` exposes the loop stepwise
(propose -> feedback -> commit) so the same engine drives batch runs
against an oracle and interactive human sessions.

Semantics pinned here:

* Experimented pairs freeze to the signed pole (+100 present, -100
  absent) and never change or get re-selected afterwards.
* Update targets of an experiment (i, j) are the pairs (i, k) sharing
  its parent and (l, j) sharing its child, k/l outside {i, j}, filtered
  to non-experimented pairs with |confidence| < 100.  The reverse pair
  (j, i) matches neither form, so it is never targeted.
* Update prompts see the round-start snapshot: the experiment's
  pre-reveal prediction and the target's pre-update prior.
* A pair targeted by several experiments in one round buffers one
  update output per experiment; at round end its confidence becomes the
  plain mean of the buffer (the prior participates only through the
  individual updates).  Buffers are then discarded.
"""
from __future__ import annotations

import dataclasses
import logging
import random
from dataclasses import dataclass, field
from statistics import fmean
from typing import Callable, Mapping, Protocol

from .errors import (
    DiscoveryError,
    InconsistentOracleError,
    InvalidGraphError,
    PolicyUnavailableError,
    SessionError,
)
from .graph import (
    GroundTruthGraph,
    Pair,
    candidate_edges,
    compute_metrics,
    diff_rounds,
    graph_hash,
    label_from_confidence,
)
from .predictor import RevisionContext, SelectionContext, derive_seed
from .prompts import SHARES_CHILD, SHARES_PARENT, LocalUpdateContext, PromptContext
from .runlog import RoundLog, RoundSummary, RunHeader, RunLog, UpdateEvent

logger = logging.getLogger(__name__)

POLICIES = ("uncertainty", "random", "static", "llm-direct")
STRATEGIES = ("local", "none", "global")
ADJACENCY_SCOPES = ("shared-endpoint", "any-shared-node")


@dataclass(frozen=True)
class DiscoveryConfig:
    rounds: int
    per_round: int
    zero_shot_samples: int = 16
    update_samples: int = 1
    policy: str = "uncertainty"
    strategy: str = "local"
    seed: int = 0
    runs: int = 5
    adjacency_scope: str = "shared-endpoint"
    llm_direct_max_pairs: int = 600

    def __post_init__(self):
        if self.rounds < 1 or self.per_round < 1:
            raise ValueError("rounds and per_round must be >= 1")
        if self.zero_shot_samples < 1 or self.update_samples < 1:
            raise ValueError("sample counts must be >= 1")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.adjacency_scope not in ADJACENCY_SCOPES:
            raise ValueError(f"unknown adjacency scope {self.adjacency_scope!r}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class ExperimentOracle(Protocol):
    def answer(self, pair: Pair) -> int: ...


class TruthOracle:
    """Answers experiments from a known ground-truth graph."""

    def __init__(self, graph: GroundTruthGraph):
        if not graph.has_truth:
            raise InvalidGraphError("truth oracle needs ground-truth edges")
        self.graph = graph

    def answer(self, pair: Pair) -> int:
        return self.graph.label_of(*pair)


class PredictionState:
    """Mutable per-pair beliefs plus experiment bookkeeping."""

    def __init__(self, n: int, confidences: Mapping[Pair, float]):
        expected = set(candidate_edges(n))
        if set(confidences) != expected:
            raise InvalidGraphError("initial confidences must cover every candidate pair")
        self.n = n
        self.confidence: dict[Pair, float] = {
            p: max(-100.0, min(100.0, float(c))) for p, c in confidences.items()
        }
        self.experimented: set[Pair] = set()
        self.history: list[dict[Pair, float]] = [dict(self.confidence)]

    def labels(self) -> dict[Pair, int]:
        return {p: label_from_confidence(c) for p, c in self.confidence.items()}

    def alive(self, pair: Pair) -> bool:
        """Eligible for belief updates: untested and not at a pole."""
        return pair not in self.experimented and abs(self.confidence[pair]) < 100.0

    def remaining(self) -> list[Pair]:
        return sorted(p for p in self.confidence if p not in self.experimented)

    def freeze(self, pair: Pair, label: int):
        self.confidence[pair] = 100.0 if label == 1 else -100.0
        self.experimented.add(pair)

    def snapshot(self):
        self.history.append(dict(self.confidence))


# ============================================================
# Selection policies
# ============================================================

def select_uncertain(state: PredictionState, count: int) -> list[Pair]:
    """Lowest |confidence| first; ties break lexicographically by pair."""
    remaining = state.remaining()
    remaining.sort(key=lambda p: (abs(state.confidence[p]), p))
    return remaining[: min(count, len(remaining))]


def select_random(state: PredictionState, count: int, rng: random.Random) -> list[Pair]:
    """Uniform without replacement over untested pairs."""
    remaining = state.remaining()
    return rng.sample(remaining, min(count, len(remaining)))


def static_ranking(initial: Mapping[Pair, float]) -> list[Pair]:
    """Fixed experimentation order: ascending initial |confidence|."""
    return sorted(initial, key=lambda p: (abs(initial[p]), p))


def select_static(ranking: list[Pair], state: PredictionState, count: int) -> list[Pair]:
    picked = [p for p in ranking if p not in state.experimented]
    return picked[: min(count, len(picked))]


def select_llm_direct(
    state: PredictionState,
    predictor,
    count: int,
    variables,
    round_index: int,
    rng: random.Random,
    max_pairs: int,
) -> tuple[list[Pair], int]:
    """Ask the predictor for experiments; fill any deficit at random.

    Returns (selection, number of randomly filled slots).
    """
    if len(state.confidence) > max_pairs:
        raise PolicyUnavailableError(
            f"llm-direct selection disabled beyond {max_pairs} pairs "
            f"(graph has {len(state.confidence)})"
        )
    remaining = state.remaining()
    count = min(count, len(remaining))
    ctx = SelectionContext(
        variables=tuple(variables),
        confidences=dict(state.confidence),
        experimented=frozenset(state.experimented),
        count=count,
        round_index=round_index,
    )
    proposal = predictor.propose_edges(ctx)
    accepted = [p for p in proposal.pairs if p not in state.experimented][:count]
    deficit = count - len(accepted)
    if deficit > 0:
        pool = [p for p in remaining if p not in accepted]
        fill = rng.sample(pool, deficit)
        logger.info(
            "llm-direct proposals short by %d at round %d; filling randomly",
            deficit, round_index,
        )
        accepted.extend(fill)
    return accepted, deficit


# ============================================================
# Feedback application
# ============================================================

def adjacent_update_targets(
    state: PredictionState, experiment: Pair, scope: str = "shared-endpoint"
) -> list[tuple[Pair, str]]:
    """Update targets for one experimented pair, in canonical order.

    Default scope: pairs sharing the experiment's parent as parent, then
    pairs sharing its child as child.  The wider scope (study knob)
    admits every pair sharing at least one node, tagged by whichever
    endpoint it shares (parent side wins when both).
    """
    i, j = experiment
    out: list[tuple[Pair, str]] = []
    if scope == "shared-endpoint":
        for k in range(state.n):
            if k not in (i, j) and state.alive((i, k)):
                out.append(((i, k), SHARES_PARENT))
        for l in range(state.n):
            if l not in (i, j) and state.alive((l, j)):
                out.append(((l, j), SHARES_CHILD))
        return out
    for target in sorted(state.confidence):
        if target == experiment or not state.alive(target):
            continue
        x, y = target
        if i in (x, y):
            out.append((target, SHARES_PARENT))
        elif j in (x, y):
            out.append((target, SHARES_CHILD))
    return out


def apply_feedback_and_update(
    state: PredictionState,
    results: list[tuple[Pair, int]],
    predictor,
    config: DiscoveryConfig,
    graph: GroundTruthGraph,
    round_index: int,
) -> tuple[list[UpdateEvent], dict[Pair, float] | None, list[str]]:
    """Freeze experiment results, then propagate belief updates.

    Returns (update events, global revisions or None, flags).  Mutates
    ``state`` in place; the caller snapshots afterwards.
    """
    round_start = dict(state.confidence)
    for pair, label in results:
        if label not in (0, 1):
            raise DiscoveryError(f"experiment label must be 0/1, got {label!r}")
        state.freeze(pair, label)

    events: list[UpdateEvent] = []
    flags: list[str] = []
    global_revisions: dict[Pair, float] | None = None

    if config.strategy == "local":
        buffers: dict[Pair, list[float]] = {}
        for exp_pair, label in results:
            for target, relation in adjacent_update_targets(
                state, exp_pair, config.adjacency_scope
            ):
                ctx = LocalUpdateContext(
                    variables=graph.variables,
                    experiment_pair=exp_pair,
                    experiment_label=label,
                    experiment_prior=round_start[exp_pair],
                    target_pair=target,
                    target_prior=round_start[target],
                    relation=relation,
                )
                result = predictor.update_edge(ctx, config.update_samples)
                if result.skipped or result.confidence is None:
                    events.append(UpdateEvent(
                        exp_pair, target, relation, round_start[target], None, True
                    ))
                    flags.append(f"update-skipped:{target[0]},{target[1]}")
                    continue
                value = result.confidence.value
                buffers.setdefault(target, []).append(value)
                events.append(UpdateEvent(
                    exp_pair, target, relation, round_start[target], value, False
                ))
        for target in sorted(buffers):
            state.confidence[target] = fmean(buffers[target])
    elif config.strategy == "global":
        ctx = RevisionContext(
            variables=graph.variables,
            confidences=dict(state.confidence),
            experimented=frozenset(state.experimented),
            feedback=tuple(results),
            round_index=round_index,
        )
        revision = predictor.revise_graph(ctx)
        global_revisions = {}
        for pair in sorted(revision.revisions):
            if pair in state.experimented or abs(state.confidence[pair]) >= 100.0:
                continue
            value = max(-100.0, min(100.0, float(revision.revisions[pair])))
            state.confidence[pair] = value
            global_revisions[pair] = value

    return events, global_revisions, flags


# ============================================================
# Initialization (phase 1)
# ============================================================

def initialize(
    graph: GroundTruthGraph, predictor, samples: int
) -> tuple[dict[Pair, float], list[Pair], dict[Pair, str]]:
    """Zero-shot confidence for every candidate pair, in canonical order.

    Returns (confidences, pairs flagged for total sample failure, an
    excerpt of raw response text per pair where available).
    """
    confidences: dict[Pair, float] = {}
    flagged: list[Pair] = []
    excerpts: dict[Pair, str] = {}
    for i, j in candidate_edges(graph.n):
        ctx = PromptContext(
            task_description=graph.task_description,
            target=graph.variables[j],
            parent=graph.variables[i],
            variables=graph.variables,
        )
        result = predictor.assess_edge(ctx, samples)
        confidences[(i, j)] = result.confidence.value
        if result.failed:
            flagged.append((i, j))
        if result.samples and result.samples[-1].raw_text:
            excerpts[(i, j)] = result.samples[-1].raw_text[:280]
    return confidences, flagged, excerpts


# ============================================================
# The run loop
# ============================================================

class DiscoveryRun:
    """Stepwise discovery loop: proposals -> feedback -> auto-commit.

    A round commits as soon as every proposed pair has an answer; the
    commit applies freezes and updates, records the round, and computes
    the next round's proposals.  ``run_discovery`` drives this against a
    synchronous oracle; the session service drives it from HTTP calls.
    """

    def __init__(
        self,
        graph: GroundTruthGraph,
        config: DiscoveryConfig,
        predictor,
        initial: Mapping[Pair, float] | None = None,
        label: str = "",
        run_index: int = 0,
    ):
        self.graph = graph
        self.config = config
        self.predictor = predictor
        initial_flags: list[str] = []
        self.excerpts: dict[Pair, str] = {}
        if initial is None:
            confidences, failed_pairs, excerpts = initialize(
                graph, predictor, config.zero_shot_samples
            )
            initial = confidences
            initial_flags = [f"zero-shot-failed:{i},{j}" for i, j in failed_pairs]
            self.excerpts = excerpts
        self.state = PredictionState(graph.n, initial)
        self._ranking = (
            static_ranking(self.state.confidence) if config.policy == "static" else []
        )
        self._select_rng = random.Random(derive_seed(config.seed, "selection"))
        self._fill_rng = random.Random(derive_seed(config.seed, "fill"))
        self._answers: dict[Pair, int] = {}
        self._pending: dict[Pair, int] = {}
        self._proposals: list[Pair] = []
        self._fill_count = 0
        self._rounds_done = 0
        self.finished = False

        label = label or f"{config.policy}+{config.strategy}"
        metrics = (
            compute_metrics(self.state.labels(), graph) if graph.has_truth else None
        )
        self.log = RunLog(
            header=RunHeader(
                graph_hash=graph_hash(graph),
                n=graph.n,
                seed=config.seed,
                policy=config.policy,
                strategy=config.strategy,
                label=label,
                config=config.to_dict(),
                truth_edges=sorted(graph.edges) if graph.has_truth else None,
                run_index=run_index,
            ),
            initial=RoundSummary(
                round_index=0,
                budget_fraction=0.0,
                metrics=metrics,
                breakdown=None,
                confidences=dict(self.state.confidence),
                flags=initial_flags,
            ),
        )
        self._advance()

    # ---- stepwise interface ----

    @property
    def round_index(self) -> int:
        """1-based index of the round currently awaiting feedback."""
        return self._rounds_done + 1

    def proposals(self) -> list[Pair]:
        return list(self._proposals)

    def pending(self) -> list[Pair]:
        return [p for p in self._proposals if p not in self._pending]

    def submit_feedback(self, pair: Pair, label: int) -> bool:
        """Record one answer; commits the round when none are pending.

        Returns True when this submission committed the round.  An
        already-answered pair may be re-answered until the commit (that
        is the undo window); afterwards re-submission is an error.
        """
        if self.finished:
            raise SessionError("run already finished")
        if pair not in self._proposals:
            raise SessionError(f"pair {pair} is not among the current proposals")
        if label not in (0, 1):
            raise SessionError(f"label must be 0 or 1, got {label!r}")
        self._pending[pair] = label
        if len(self._pending) == len(self._proposals):
            self._commit_round()
            return True
        return False

    # ---- internals ----

    def _advance(self):
        remaining = self.state.remaining()
        if not remaining or self._rounds_done >= self.config.rounds:
            self.finished = True
            self._proposals = []
            return
        count = min(self.config.per_round, len(remaining))
        policy = self.config.policy
        self._fill_count = 0
        if policy == "uncertainty":
            self._proposals = select_uncertain(self.state, count)
        elif policy == "random":
            self._proposals = select_random(self.state, count, self._select_rng)
        elif policy == "static":
            self._proposals = select_static(self._ranking, self.state, count)
        else:
            self._proposals, self._fill_count = select_llm_direct(
                self.state,
                self.predictor,
                count,
                self.graph.variables,
                self.round_index,
                self._fill_rng,
                self.config.llm_direct_max_pairs,
            )
        if not self._proposals:
            self.finished = True

    def _commit_round(self):
        round_index = self.round_index
        results = [(p, self._pending[p]) for p in self._proposals]
        for pair, label in results:
            if pair in self.state.experimented:
                raise InconsistentOracleError(f"pair {pair} was already experimented")
            if pair in self._answers and self._answers[pair] != label:
                raise InconsistentOracleError(
                    f"oracle answered {pair} with both {self._answers[pair]} and {label}"
                )
            self._answers[pair] = label

        prev_labels = self.state.labels()
        events, global_revisions, flags = apply_feedback_and_update(
            self.state, results, self.predictor, self.config, self.graph, round_index
        )
        self.state.snapshot()
        if self._fill_count:
            flags = flags + [f"random-fill:{self._fill_count}"]

        metrics = None
        breakdown = None
        if self.graph.has_truth:
            new_labels = self.state.labels()
            metrics = compute_metrics(new_labels, self.graph)
            breakdown = diff_rounds(
                prev_labels, new_labels, self.graph, [p for p, _ in results]
            )
        fraction = len(self.state.experimented) / len(self.state.confidence)
        self.log.rounds.append(RoundLog(
            round_index=round_index,
            policy=self.config.policy,
            selection=list(self._proposals),
            experiments=results,
            updates=events,
            summary=RoundSummary(
                round_index=round_index,
                budget_fraction=fraction,
                metrics=metrics,
                breakdown=breakdown,
                confidences=dict(self.state.confidence),
                flags=flags,
            ),
            random_fill=self._fill_count,
            global_revisions=global_revisions,
        ))
        self._rounds_done += 1
        self._pending = {}
        self._advance()


def run_discovery(
    graph: GroundTruthGraph,
    config: DiscoveryConfig,
    predictor,
    oracle: ExperimentOracle,
    initial: Mapping[Pair, float] | None = None,
    label: str = "",
    run_index: int = 0,
) -> RunLog:
    """Drive a full discovery run against a synchronous oracle."""
    run = DiscoveryRun(
        graph, config, predictor, initial=initial, label=label, run_index=run_index
    )
    while not run.finished:
        for pair in run.proposals():
            run.submit_feedback(pair, oracle.answer(pair))
    return run.log


def run_batch(
    graph: GroundTruthGraph,
    config: DiscoveryConfig,
    predictor_factory: Callable[[int], object],
    oracle: ExperimentOracle,
    initial: Mapping[Pair, float] | None = None,
    label: str = "",
) -> list[RunLog]:
    """Repeat a run with derived per-run seeds, sharing one initial state.

    The initial prediction is computed once (all runs of all methods are
    meant to start from the same baseline) unless supplied.  A run that
    aborts is logged and skipped; the batch returns the completed logs.
    """
    if initial is None:
        init_predictor = predictor_factory(derive_seed(config.seed, "init"))
        confidences, _, _ = initialize(graph, init_predictor, config.zero_shot_samples)
        initial = confidences
    logs: list[RunLog] = []
    for index in range(config.runs):
        run_seed = derive_seed(config.seed, "run", index)
        run_config = dataclasses.replace(config, seed=run_seed)
        predictor = predictor_factory(run_seed)
        try:
            logs.append(run_discovery(
                graph, run_config, predictor, oracle,
                initial=dict(initial), label=label, run_index=index,
            ))
        except DiscoveryError as exc:
            logger.warning("run %d aborted, continuing batch: %s", index, exc)
    return logs
