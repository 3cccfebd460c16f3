"""Run-log record model and JSONL (de)serialization.

A run log captures one discovery run end to end: a header (graph hash,
resolved config, seed), the initial prediction snapshot, and per round
the selection, experiment results, belief updates, and a summary with
metrics, improvement breakdown, and the full confidence snapshot.

The JSONL encoding is deterministic (sorted keys, no wall-clock fields)
so reruns from the same seeds and caches are byte-identical.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import LogIntegrityError
from .graph import GraphMetrics, ImprovementBreakdown, Pair

logger = logging.getLogger(__name__)


def _encode_pairs(confidences: Mapping[Pair, float]) -> dict[str, float]:
    return {f"{i},{j}": value for (i, j), value in confidences.items()}


def _decode_pairs(data: Mapping[str, float]) -> dict[Pair, float]:
    out: dict[Pair, float] = {}
    for key, value in data.items():
        i, j = key.split(",")
        out[(int(i), int(j))] = float(value)
    return out


@dataclass
class RunHeader:
    graph_hash: str
    n: int
    seed: int
    policy: str
    strategy: str
    label: str
    config: dict
    truth_edges: list[Pair] | None = None
    run_index: int = 0

    def to_record(self) -> dict:
        return {
            "type": "run_header",
            "graph_hash": self.graph_hash,
            "n": self.n,
            "seed": self.seed,
            "policy": self.policy,
            "strategy": self.strategy,
            "label": self.label,
            "config": self.config,
            "truth_edges": (
                sorted([i, j] for i, j in self.truth_edges)
                if self.truth_edges is not None
                else None
            ),
            "run_index": self.run_index,
        }

    @staticmethod
    def from_record(rec: Mapping) -> "RunHeader":
        truth = rec.get("truth_edges")
        return RunHeader(
            graph_hash=rec["graph_hash"],
            n=int(rec["n"]),
            seed=int(rec["seed"]),
            policy=rec["policy"],
            strategy=rec["strategy"],
            label=rec.get("label", ""),
            config=dict(rec.get("config", {})),
            truth_edges=(
                [(int(i), int(j)) for i, j in truth] if truth is not None else None
            ),
            run_index=int(rec.get("run_index", 0)),
        )


@dataclass
class UpdateEvent:
    """One (experiment, adjacent target) local-update call."""

    experiment_pair: Pair
    target_pair: Pair
    relation: str
    prior: float
    output: float | None  # None when the update was skipped
    skipped: bool = False

    def to_record(self, round_index: int) -> dict:
        return {
            "type": "local_update",
            "round": round_index,
            "experiment_pair": list(self.experiment_pair),
            "target_pair": list(self.target_pair),
            "relation": self.relation,
            "prior": self.prior,
            "output": self.output,
            "skipped": self.skipped,
        }


@dataclass
class RoundSummary:
    round_index: int
    budget_fraction: float
    metrics: GraphMetrics | None
    breakdown: ImprovementBreakdown | None
    confidences: dict[Pair, float]
    flags: list[str] = field(default_factory=list)

    def labels(self) -> dict[Pair, int]:
        return {p: (1 if c >= 0 else 0) for p, c in self.confidences.items()}

    def to_record(self) -> dict:
        return {
            "type": "round_summary",
            "round": self.round_index,
            "budget_fraction": self.budget_fraction,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "breakdown": self.breakdown.to_dict() if self.breakdown else None,
            "confidences": _encode_pairs(self.confidences),
            "flags": list(self.flags),
        }

    @staticmethod
    def from_record(rec: Mapping) -> "RoundSummary":
        metrics = rec.get("metrics")
        breakdown = rec.get("breakdown")
        return RoundSummary(
            round_index=int(rec["round"]),
            budget_fraction=float(rec["budget_fraction"]),
            metrics=GraphMetrics(**metrics) if metrics else None,
            breakdown=ImprovementBreakdown.from_dict(breakdown) if breakdown else None,
            confidences=_decode_pairs(rec["confidences"]),
            flags=list(rec.get("flags", [])),
        )


@dataclass
class RoundLog:
    round_index: int
    policy: str
    selection: list[Pair]
    experiments: list[tuple[Pair, int]]
    updates: list[UpdateEvent]
    summary: RoundSummary
    random_fill: int = 0
    global_revisions: dict[Pair, float] | None = None


@dataclass
class RunLog:
    header: RunHeader
    initial: RoundSummary
    rounds: list[RoundLog] = field(default_factory=list)
    truncated: bool = False

    def snapshots(self) -> list[dict[Pair, float]]:
        """Confidence snapshots: initial plus one per completed round."""
        return [self.initial.confidences] + [r.summary.confidences for r in self.rounds]

    def summaries(self) -> list[RoundSummary]:
        return [self.initial] + [r.summary for r in self.rounds]


def write_runlog(log: RunLog, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records: list[dict] = [log.header.to_record(), log.initial.to_record()]
    for rnd in log.rounds:
        records.append({
            "type": "round_selection",
            "round": rnd.round_index,
            "policy": rnd.policy,
            "pairs": [list(p) for p in rnd.selection],
            "random_fill": rnd.random_fill,
        })
        for pair, label in rnd.experiments:
            records.append({
                "type": "experiment",
                "round": rnd.round_index,
                "pair": list(pair),
                "label": label,
            })
        for event in rnd.updates:
            records.append(event.to_record(rnd.round_index))
        if rnd.global_revisions is not None:
            records.append({
                "type": "global_update",
                "round": rnd.round_index,
                "revisions": _encode_pairs(rnd.global_revisions),
            })
        records.append(rnd.summary.to_record())
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_runlog(path: str | Path) -> RunLog:
    """Parse a JSONL run log; a truncated tail drops the incomplete round."""
    path = Path(path)
    header: RunHeader | None = None
    initial: RoundSummary | None = None
    rounds: list[RoundLog] = []
    current: RoundLog | None = None

    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                logger.warning("%s:%d: unparseable line, treating as truncation", path, line_no)
                break
            kind = rec.get("type")
            if kind == "run_header":
                header = RunHeader.from_record(rec)
            elif kind == "round_summary":
                summary = RoundSummary.from_record(rec)
                if summary.round_index == 0:
                    initial = summary
                elif current is not None and current.round_index == summary.round_index:
                    current.summary = summary
                    rounds.append(current)
                    current = None
                else:
                    raise LogIntegrityError(
                        f"{path}:{line_no}: summary for round {summary.round_index} "
                        "without a matching selection"
                    )
            elif kind == "round_selection":
                if current is not None:
                    raise LogIntegrityError(
                        f"{path}:{line_no}: round {rec['round']} starts before "
                        f"round {current.round_index} was summarized"
                    )
                current = RoundLog(
                    round_index=int(rec["round"]),
                    policy=rec.get("policy", ""),
                    selection=[(int(i), int(j)) for i, j in rec["pairs"]],
                    experiments=[],
                    updates=[],
                    summary=None,  # type: ignore[arg-type]
                    random_fill=int(rec.get("random_fill", 0)),
                )
            elif kind == "experiment":
                if current is None:
                    raise LogIntegrityError(f"{path}:{line_no}: experiment outside a round")
                current.experiments.append(
                    ((int(rec["pair"][0]), int(rec["pair"][1])), int(rec["label"]))
                )
            elif kind == "local_update":
                if current is None:
                    raise LogIntegrityError(f"{path}:{line_no}: update outside a round")
                current.updates.append(UpdateEvent(
                    experiment_pair=(int(rec["experiment_pair"][0]), int(rec["experiment_pair"][1])),
                    target_pair=(int(rec["target_pair"][0]), int(rec["target_pair"][1])),
                    relation=rec["relation"],
                    prior=float(rec["prior"]),
                    output=(None if rec["output"] is None else float(rec["output"])),
                    skipped=bool(rec.get("skipped", False)),
                ))
            elif kind == "global_update":
                if current is None:
                    raise LogIntegrityError(f"{path}:{line_no}: global update outside a round")
                current.global_revisions = _decode_pairs(rec["revisions"])
            else:
                raise LogIntegrityError(f"{path}:{line_no}: unknown record type {kind!r}")

    if header is None or initial is None:
        raise LogIntegrityError(f"{path}: missing run header or initial snapshot")
    log = RunLog(header=header, initial=initial, rounds=rounds)
    if current is not None:
        log.truncated = True
        logger.warning("%s: truncated log, dropped incomplete round %d", path, current.round_index)
    return log
