"""Edge predictors: prompt-driven (text backends) and simulated.

A predictor answers four kinds of questions the discovery engine asks:

* assess one candidate edge zero-shot (K independent samples),
* revise one edge after an adjacent experiment (local update),
* propose the next edges to test (selection ablation),
* revise the whole graph in one shot (global-update ablation).

``PromptPredictor`` renders prompts, sends them to a ``TextBackend``,
and parses the responses.  ``SimulatedPredictor`` skips text entirely
and draws from seeded distributions whose reliability is configurable;
it is the workhorse for offline experiments and tests.
"""
from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from statistics import fmean
from typing import Callable, Sequence

from .errors import AggregationError, InvalidGraphError, TransportError
from .graph import GroundTruthGraph, Pair, SignedConfidence, VariableSpec
from .parsing import EdgeAssessment, parse_assessment, parse_edge_list, parse_graph_revisions
from .prompts import (
    LocalUpdateContext,
    PromptContext,
    render_direct_selection_prompt,
    render_global_update_prompt,
    render_update_prompt,
    render_zero_shot_prompt,
)

logger = logging.getLogger(__name__)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of identifying parts."""
    key = "/".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")


def aggregate_samples(samples: Sequence[EdgeAssessment]) -> SignedConfidence:
    """Signed average of per-sample confidences (present +, absent -)."""
    if not samples:
        raise AggregationError("cannot aggregate an empty sample list")
    return SignedConfidence(fmean(s.signed for s in samples))


# ============================================================
# Request plumbing
# ============================================================

@dataclass(frozen=True)
class RequestMeta:
    """Structured request identity, for scripted backends and audit."""

    kind: str  # zero-shot | local-update | direct-selection | global-update
    pair: Pair | None = None
    experiment_pair: Pair | None = None
    relation: str | None = None


class TextBackend:
    """Produces a raw completion text for a prompt + sample index."""

    def complete(self, prompt: str, sample_index: int, meta: RequestMeta | None = None) -> str:
        raise NotImplementedError

    def complete_many(
        self, prompt: str, count: int, meta: RequestMeta | None = None
    ) -> list[str | TransportError]:
        """Sample indices 0..count-1; per-sample failures, no batch abort."""
        out: list[str | TransportError] = []
        for index in range(count):
            try:
                out.append(self.complete(prompt, index, meta))
            except TransportError as exc:
                out.append(exc)
        return out


class ScriptedBackend(TextBackend):
    """Deterministic backend driven by a caller-supplied handler."""

    def __init__(self, handler: Callable[[str, int, RequestMeta | None], str]):
        self._handler = handler

    def complete(self, prompt: str, sample_index: int, meta: RequestMeta | None = None) -> str:
        return self._handler(prompt, sample_index, meta)


def demo_script_backend(salt: int = 0) -> ScriptedBackend:
    """Offline demo backend: stable pseudo-judgments from request hashes.

    Zero-shot and update requests get a well-formed decision/confidence
    response derived from the request identity.  Selection and global
    prompts return empty text, so the engine falls back to its seeded
    fill and keeps priors, respectively.
    """

    def handler(prompt: str, sample_index: int, meta: RequestMeta | None) -> str:
        kind = meta.kind if meta else "zero-shot"
        key = derive_seed(salt, kind, meta.pair if meta else prompt,
                          meta.experiment_pair if meta else None, sample_index)
        if kind == "zero-shot":
            word = "YES" if key % 2 else "NO"
            return f"<decision>{word}</decision>\n<confidence>{1 + (key >> 1) % 100}</confidence>"
        if kind == "local-update":
            word = "PARENT" if key % 2 else "NOT CAUSAL"
            return f"<decision>{word}</decision> <confidence>{1 + (key >> 1) % 100}</confidence>"
        return ""

    return ScriptedBackend(handler)


# ============================================================
# Result shapes
# ============================================================

@dataclass
class ZeroShotResult:
    confidence: SignedConfidence
    samples: list[EdgeAssessment]
    dropped: int = 0
    failed: bool = False  # every sample failed; confidence forced to 0


@dataclass
class UpdateResult:
    confidence: SignedConfidence | None
    samples: list[EdgeAssessment] = field(default_factory=list)
    dropped: int = 0
    skipped: bool = False  # every sample failed; caller keeps the prior


@dataclass
class ProposalResult:
    pairs: list[Pair]
    attempts: int = 1


@dataclass
class RevisionResult:
    revisions: dict[Pair, float]


@dataclass(frozen=True)
class SelectionContext:
    """State snapshot handed to a predictor asked to pick experiments."""

    variables: tuple[VariableSpec, ...]
    confidences: dict[Pair, float]
    experimented: frozenset[Pair]
    count: int
    round_index: int


@dataclass(frozen=True)
class RevisionContext:
    """State snapshot plus fresh feedback for a whole-graph revision."""

    variables: tuple[VariableSpec, ...]
    confidences: dict[Pair, float]
    experimented: frozenset[Pair]
    feedback: tuple[tuple[Pair, int], ...]
    round_index: int


# ============================================================
# Prompt-driven predictor
# ============================================================

class PromptPredictor:
    """Renders prompts, samples a text backend, parses the responses.

    Malformed samples are retried with fresh completions up to
    ``parse_retries`` times each, then dropped.  Samples whose transport
    already failed terminally are dropped without parse retries (the
    gateway has its own retry budget).
    """

    def __init__(self, backend: TextBackend, parse_retries: int = 3):
        self.backend = backend
        self.parse_retries = parse_retries

    def _parse_or_retry(
        self,
        prompt: str,
        first: str | TransportError,
        meta: RequestMeta,
        fresh_index: int,
    ) -> tuple[EdgeAssessment | None, int]:
        """Returns (assessment or None, next unused sample index)."""
        candidate = first
        retries_left = self.parse_retries
        while True:
            if isinstance(candidate, str):
                try:
                    return parse_assessment(candidate), fresh_index
                except Exception:
                    pass
            if retries_left == 0:
                return None, fresh_index
            retries_left -= 1
            try:
                candidate = self.backend.complete(prompt, fresh_index, meta)
            except TransportError as exc:
                candidate = exc
            fresh_index += 1

    def assess_edge(self, ctx: PromptContext, samples: int) -> ZeroShotResult:
        prompt = render_zero_shot_prompt(ctx)
        meta = RequestMeta("zero-shot", pair=ctx.pair)
        raw = self.backend.complete_many(prompt, samples, meta)
        kept: list[EdgeAssessment] = []
        dropped = 0
        fresh_index = samples
        for item in raw:
            if isinstance(item, TransportError):
                dropped += 1
                continue
            assessment, fresh_index = self._parse_or_retry(prompt, item, meta, fresh_index)
            if assessment is None:
                dropped += 1
            else:
                kept.append(assessment)
        if not kept:
            logger.warning("all %d zero-shot samples failed for pair %s", samples, ctx.pair)
            return ZeroShotResult(SignedConfidence(0.0), [], dropped, failed=True)
        return ZeroShotResult(aggregate_samples(kept), kept, dropped, failed=False)

    def update_edge(self, ctx: LocalUpdateContext, samples: int = 1) -> UpdateResult:
        prompt = render_update_prompt(ctx)
        meta = RequestMeta(
            "local-update",
            pair=ctx.target_pair,
            experiment_pair=ctx.experiment_pair,
            relation=ctx.relation,
        )
        raw = self.backend.complete_many(prompt, samples, meta)
        kept: list[EdgeAssessment] = []
        dropped = 0
        fresh_index = samples
        for item in raw:
            if isinstance(item, TransportError):
                dropped += 1
                continue
            assessment, fresh_index = self._parse_or_retry(prompt, item, meta, fresh_index)
            if assessment is None:
                dropped += 1
            else:
                kept.append(assessment)
        if not kept:
            logger.warning(
                "update skipped for target %s after experiment %s: all samples failed",
                ctx.target_pair, ctx.experiment_pair,
            )
            return UpdateResult(None, [], dropped, skipped=True)
        return UpdateResult(aggregate_samples(kept), kept, dropped, skipped=False)

    def propose_edges(self, ctx: SelectionContext) -> ProposalResult:
        meta = RequestMeta("direct-selection")
        accepted: list[Pair] = []
        attempts = 0
        while len(accepted) < ctx.count and attempts < 1 + self.parse_retries:
            needed = ctx.count - len(accepted)
            prompt = render_direct_selection_prompt(
                ctx.variables, ctx.confidences, ctx.experimented, needed
            )
            attempts += 1
            try:
                text = self.backend.complete(prompt, attempts - 1, meta)
            except TransportError:
                continue
            for pair in parse_edge_list(text, ctx.variables):
                if pair in ctx.experimented or pair in accepted:
                    continue
                if pair not in ctx.confidences:
                    continue
                accepted.append(pair)
                if len(accepted) == ctx.count:
                    break
        return ProposalResult(accepted, attempts)

    def revise_graph(self, ctx: RevisionContext) -> RevisionResult:
        prompt = render_global_update_prompt(
            ctx.variables, ctx.confidences, ctx.experimented, list(ctx.feedback)
        )
        meta = RequestMeta("global-update")
        try:
            text = self.backend.complete(prompt, 0, meta)
        except TransportError:
            logger.warning("global update unavailable at round %d", ctx.round_index)
            return RevisionResult({})
        revisions = parse_graph_revisions(text, ctx.variables)
        eligible = {
            pair: value
            for pair, value in revisions.items()
            if pair not in ctx.experimented
            and pair in ctx.confidences
            and abs(ctx.confidences[pair]) < 100.0
        }
        return RevisionResult(eligible)


# ============================================================
# Simulated predictor
# ============================================================

@dataclass(frozen=True)
class OracleParams:
    """Reliability knobs for the simulated predictor.

    zero_shot_accuracy: probability a zero-shot decision matches truth.
    calibration_gap:    how much higher |confidence| runs on correct
                        decisions than on incorrect ones, in expectation.
    update_fidelity:    probability a local update moves toward the true
                        signed pole (+100 present / -100 absent).
    update_step:        (lo, hi) range of one update's magnitude.
    """

    zero_shot_accuracy: float = 0.7
    calibration_gap: float = 30.0
    update_fidelity: float = 0.8
    update_step: tuple[float, float] = (5.0, 15.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.zero_shot_accuracy <= 1.0:
            raise ValueError("zero_shot_accuracy must be in (0, 1]")
        if not 0.0 <= self.calibration_gap <= 99.0:
            raise ValueError("calibration_gap must be in [0, 99]")
        if not 0.0 <= self.update_fidelity <= 1.0:
            raise ValueError("update_fidelity must be in [0, 1]")
        lo, hi = self.update_step
        if not 1.0 <= lo <= hi <= 100.0:
            raise ValueError("update_step must satisfy 1 <= lo <= hi <= 100")


def sim_zero_shot(params: OracleParams, truth_label: int, rng: random.Random) -> EdgeAssessment:
    """One synthetic zero-shot sample.

    The decision matches the truth with probability zero_shot_accuracy.
    Confidence magnitude is uniform over [1+gap, 100] for correct
    decisions and [1, 100-gap] for incorrect ones, so the mean magnitude
    of correct samples exceeds incorrect ones by exactly the gap.  Draw
    order: correctness, then confidence.
    """
    correct = rng.random() < params.zero_shot_accuracy
    present = (truth_label == 1) if correct else (truth_label != 1)
    gap = round(params.calibration_gap)
    if correct:
        confidence = rng.randint(1 + gap, 100)
    else:
        confidence = rng.randint(1, 100 - gap)
    return EdgeAssessment(present=present, confidence=confidence)


def sim_local_update(
    params: OracleParams, truth_label: int, prior: float, rng: random.Random
) -> float:
    """One synthetic local update of a prior signed confidence.

    With probability update_fidelity the prior moves toward the true
    pole by a uniform step from update_step, otherwise away by the same
    step distribution; the result is clamped to [-100, 100].  Draw
    order: fidelity, then step size.
    """
    toward = 1.0 if truth_label == 1 else -1.0
    faithful = rng.random() < params.update_fidelity
    lo, hi = params.update_step
    step = rng.uniform(lo, hi)
    direction = toward if faithful else -toward
    return max(-100.0, min(100.0, prior + direction * step))


class SimulatedPredictor:
    """Textless predictor drawing from seeded, truth-aware distributions.

    Every call derives its own RNG substream from (seed, call identity),
    so results do not depend on call order and are bit-reproducible.
    """

    def __init__(self, params: OracleParams, truth: GroundTruthGraph):
        if not truth.has_truth:
            raise InvalidGraphError("simulated predictor needs ground-truth edges")
        self.params = params
        self.truth = truth

    def _rng(self, *parts) -> random.Random:
        return random.Random(derive_seed(self.params.seed, *parts))

    def assess_edge(self, ctx: PromptContext, samples: int) -> ZeroShotResult:
        pair = ctx.pair
        truth_label = self.truth.label_of(*pair)
        rng = self._rng("assess", *pair)
        drawn = [sim_zero_shot(self.params, truth_label, rng) for _ in range(samples)]
        return ZeroShotResult(aggregate_samples(drawn), drawn)

    def update_edge(self, ctx: LocalUpdateContext, samples: int = 1) -> UpdateResult:
        truth_label = self.truth.label_of(*ctx.target_pair)
        rng = self._rng("update", *ctx.experiment_pair, *ctx.target_pair)
        outs = [
            sim_local_update(self.params, truth_label, ctx.target_prior, rng)
            for _ in range(samples)
        ]
        return UpdateResult(SignedConfidence(fmean(outs)))

    def propose_edges(self, ctx: SelectionContext) -> ProposalResult:
        remaining = sorted(p for p in ctx.confidences if p not in ctx.experimented)
        rng = self._rng("direct", ctx.round_index)
        count = min(ctx.count, len(remaining))
        return ProposalResult(rng.sample(remaining, count))

    def revise_graph(self, ctx: RevisionContext) -> RevisionResult:
        rng = self._rng("global", ctx.round_index)
        revisions: dict[Pair, float] = {}
        for pair in sorted(ctx.confidences):
            if pair in ctx.experimented or abs(ctx.confidences[pair]) >= 100.0:
                continue
            truth_label = self.truth.label_of(*pair)
            revisions[pair] = sim_local_update(
                self.params, truth_label, ctx.confidences[pair], rng
            )
        return RevisionResult(revisions)
