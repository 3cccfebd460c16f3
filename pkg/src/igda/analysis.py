"""Post-run analysis: F1 curves, method ranking, improvement attribution.

Consumes run logs (in memory or JSONL), aggregates them per method on a
common budget grid, and exports deterministic CSVs.  The improvement
series recomputes every breakdown from the logged snapshots as an
integrity check against the logged values.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, stdev
from typing import Mapping, Sequence

from .errors import GridAlignmentError, LogIntegrityError
from .graph import (
    GroundTruthGraph,
    ImprovementBreakdown,
    VariableSpec,
    diff_rounds,
)
from .runlog import RunLog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvePoint:
    budget_fraction: float
    f1_mean: float
    f1_spread: float = 0.0


@dataclass(frozen=True)
class RankTable:
    """Per-budget-step ranks (0 = best F1), ties sharing the mean rank."""

    methods: tuple[str, ...]
    fractions: tuple[float, ...]
    per_step: tuple[dict[str, float], ...]
    average: dict[str, float]


@dataclass(frozen=True)
class RoundImprovement:
    round_index: int
    breakdown: ImprovementBreakdown
    experiment_share: float | None
    update_share: float | None


def f1_curve(log: RunLog) -> list[CurvePoint]:
    """One point per round boundary, starting at budget fraction 0.

    A truncated log yields the partial curve that was recorded.
    """
    if log.truncated:
        logger.warning("building a partial curve from a truncated log")
    points = []
    for summary in log.summaries():
        if summary.metrics is None:
            raise LogIntegrityError(
                f"round {summary.round_index} has no metrics; "
                "curves need runs against a known truth"
            )
        points.append(CurvePoint(summary.budget_fraction, summary.metrics.f1))
    return points


def _check_common_grid(fraction_lists: Sequence[Sequence[float]], what: str):
    first = list(fraction_lists[0])
    for other in fraction_lists[1:]:
        if list(other) != first:
            raise GridAlignmentError(
                f"{what}: budget grids differ ({first[:4]}... vs {list(other)[:4]}...)"
            )


def aggregate_curves(logs: Sequence[RunLog]) -> list[CurvePoint]:
    """Pointwise mean and sample standard deviation across runs.

    All logs must describe the same graph and the same budget grid.
    """
    if not logs:
        raise GridAlignmentError("no logs to aggregate")
    hashes = {log.header.graph_hash for log in logs}
    if len(hashes) != 1:
        raise GridAlignmentError(f"logs describe different graphs: {sorted(hashes)}")
    curves = [f1_curve(log) for log in logs]
    _check_common_grid([[p.budget_fraction for p in c] for c in curves], "aggregate_curves")
    out = []
    for step in range(len(curves[0])):
        values = [c[step].f1_mean for c in curves]
        spread = stdev(values) if len(values) > 1 else 0.0
        out.append(CurvePoint(curves[0][step].budget_fraction, fmean(values), spread))
    return out


def curve_auc(points: Sequence[CurvePoint]) -> float:
    """Trapezoidal area of the F1 curve over budget fraction."""
    if len(points) < 2:
        raise GridAlignmentError("need at least two curve points for an AUC")
    area = 0.0
    for a, b in zip(points, points[1:]):
        area += (b.budget_fraction - a.budget_fraction) * (a.f1_mean + b.f1_mean) / 2.0
    return area


def rank_methods(curves: Mapping[str, Sequence[CurvePoint]]) -> RankTable:
    """Rank methods by F1 at every budget step (0 = best).

    Ties share the mean of the ranks they span, so each step's ranks sum
    to m*(m-1)/2.  The summary is the per-method mean over steps.
    """
    if not curves:
        raise GridAlignmentError("no curves to rank")
    methods = tuple(sorted(curves))
    _check_common_grid(
        [[p.budget_fraction for p in curves[m]] for m in methods], "rank_methods"
    )
    fractions = tuple(p.budget_fraction for p in curves[methods[0]])
    per_step: list[dict[str, float]] = []
    for step in range(len(fractions)):
        values = {m: curves[m][step].f1_mean for m in methods}
        ranks: dict[str, float] = {}
        for m in methods:
            better = sum(1 for other in methods if values[other] > values[m])
            tied = sum(1 for other in methods if values[other] == values[m])
            ranks[m] = better + (tied - 1) / 2.0
        per_step.append(ranks)
    average = {m: fmean(step[m] for step in per_step) for m in methods}
    return RankTable(methods, fractions, tuple(per_step), average)


def _truth_from_header(log: RunLog) -> GroundTruthGraph:
    header = log.header
    if header.truth_edges is None:
        raise LogIntegrityError("log header carries no truth edges")
    variables = tuple(VariableSpec(i, f"V{i}") for i in range(header.n))
    return GroundTruthGraph(variables, frozenset(header.truth_edges))


def improvement_series(log: RunLog) -> list[RoundImprovement]:
    """Per-round improvement attribution, verified against the snapshots.

    Every logged breakdown is recomputed from consecutive confidence
    snapshots and the experimented set; any disagreement raises
    LogIntegrityError.  Shares are None for rounds with no improvements.
    """
    truth = _truth_from_header(log)
    out: list[RoundImprovement] = []
    snapshots = log.summaries()
    for idx, rnd in enumerate(log.rounds):
        prev = snapshots[idx].labels()
        new = snapshots[idx + 1].labels()
        recomputed = diff_rounds(prev, new, truth, [p for p, _ in rnd.experiments])
        logged = rnd.summary.breakdown
        if logged is None:
            raise LogIntegrityError(f"round {rnd.round_index} has no logged breakdown")
        if recomputed != logged:
            raise LogIntegrityError(
                f"round {rnd.round_index}: logged breakdown {logged.to_dict()} "
                f"!= recomputed {recomputed.to_dict()}"
            )
        improvements = logged.experiment_improvements + logged.update_improvements
        if improvements > 0:
            experiment_share = logged.experiment_improvements / improvements
            update_share = logged.update_improvements / improvements
        else:
            experiment_share = None
            update_share = None
        out.append(RoundImprovement(rnd.round_index, logged, experiment_share, update_share))
    return out


# ============================================================
# CSV export / import
# ============================================================

CURVE_FIELDS = ["method", "round", "fraction", "f1_mean", "f1_spread"]
IMPROVEMENT_FIELDS = [
    "method", "round",
    "experiment_improvements", "update_improvements", "regressions",
    "net_improvement", "total_changed", "experiment_share", "update_share",
]


def write_curves_csv(path: str | Path, curves: Mapping[str, Sequence[CurvePoint]]):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_FIELDS)
        for method in sorted(curves):
            for index, point in enumerate(curves[method]):
                writer.writerow([
                    method, index,
                    repr(point.budget_fraction),
                    repr(point.f1_mean),
                    repr(point.f1_spread),
                ])


def read_curves_csv(path: str | Path) -> dict[str, list[CurvePoint]]:
    path = Path(path)
    out: dict[str, list[CurvePoint]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CURVE_FIELDS:
            raise LogIntegrityError(f"{path}: unexpected curve columns {reader.fieldnames}")
        for row in reader:
            out.setdefault(row["method"], []).append(CurvePoint(
                float(row["fraction"]), float(row["f1_mean"]), float(row["f1_spread"])
            ))
    return out


def write_ranks_csv(path: str | Path, table: RankTable):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "fraction", *table.methods])
        for index, ranks in enumerate(table.per_step):
            writer.writerow([
                index,
                repr(table.fractions[index]),
                *[repr(ranks[m]) for m in table.methods],
            ])
        writer.writerow(["mean", "", *[repr(table.average[m]) for m in table.methods]])


def write_improvements_csv(
    path: str | Path, improvements: Mapping[str, Sequence[RoundImprovement]]
):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(IMPROVEMENT_FIELDS)
        for method in sorted(improvements):
            for item in improvements[method]:
                b = item.breakdown
                writer.writerow([
                    method, item.round_index,
                    b.experiment_improvements, b.update_improvements, b.regressions,
                    b.net_improvement, b.total_changed,
                    "" if item.experiment_share is None else repr(item.experiment_share),
                    "" if item.update_share is None else repr(item.update_share),
                ])


def analysis_config_hash(logs_by_method: Mapping[str, Sequence[RunLog]]) -> str:
    """Content hash of the comparison setup (methods + shared grid knobs)."""
    payload = {
        "methods": sorted(logs_by_method),
        "grids": {
            method: [
                {
                    "rounds": log.header.config.get("rounds"),
                    "per_round": log.header.config.get("per_round"),
                    "runs": len(logs),
                }
                for log in logs[:1]
            ]
            for method, logs in logs_by_method.items()
        },
    }
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


def export_analysis(
    out_dir: str | Path, logs_by_method: Mapping[str, Sequence[RunLog]]
) -> dict[str, Path]:
    """Write curves/ranks/improvements CSVs; names embed content hashes.

    Returns {"curves": path, "ranks": path or absent, "improvements": path}.
    Ranks are only written when at least two methods are compared;
    improvements only for logs that carry truth and breakdowns.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not logs_by_method:
        raise GridAlignmentError("nothing to analyze")
    all_logs = [log for logs in logs_by_method.values() for log in logs]
    hashes = {log.header.graph_hash for log in all_logs}
    if len(hashes) != 1:
        raise GridAlignmentError(f"logs describe different graphs: {sorted(hashes)}")
    ghash = hashes.pop()[:12]
    chash = analysis_config_hash(logs_by_method)[:12]

    curves = {
        method: aggregate_curves(logs) for method, logs in logs_by_method.items()
    }
    paths: dict[str, Path] = {}
    curves_path = out_dir / f"curves_{ghash}_{chash}.csv"
    write_curves_csv(curves_path, curves)
    paths["curves"] = curves_path

    if len(curves) > 1:
        ranks_path = out_dir / f"ranks_{ghash}_{chash}.csv"
        write_ranks_csv(ranks_path, rank_methods(curves))
        paths["ranks"] = ranks_path

    improvements: dict[str, list[RoundImprovement]] = {}
    for method, logs in sorted(logs_by_method.items()):
        for log in logs:
            key = method if len(logs) == 1 else f"{method}#{log.header.run_index}"
            improvements[key] = improvement_series(log)
    improvements_path = out_dir / f"improvements_{ghash}_{chash}.csv"
    write_improvements_csv(improvements_path, improvements)
    paths["improvements"] = improvements_path
    return paths
