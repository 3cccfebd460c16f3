"""Directed-graph data model, pair enumeration, and edge-level metrics.

The prediction target is a simple directed graph over named variables:
ordered pairs (parent, child), no self-edges, cycles allowed.  Every
ordered pair of distinct variables is a candidate edge, so a graph over
n variables has exactly n*(n-1) candidates.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import CoverageError, InvalidGraphError, InvalidPairError

Pair = tuple[int, int]

# Label convention: 1 = edge present, 0 = edge absent.
PRESENT = 1
ABSENT = 0


def candidate_edges(n: int) -> list[Pair]:
    """All ordered pairs (i, j) with i != j, in lexicographic order."""
    if n < 2:
        raise InvalidGraphError(f"need at least 2 variables, got {n}")
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def label_from_confidence(value: float) -> int:
    """Sign rule for turning a signed confidence into an edge label.

    Zero counts as present: the label is 1 exactly when value >= 0.
    """
    return PRESENT if value >= 0 else ABSENT


@dataclass(frozen=True)
class SignedConfidence:
    """A belief about one candidate edge, in [-100, +100].

    Positive sign means the edge is predicted present, negative absent.
    Magnitude is confidence; values are clamped at construction.
    """

    value: float

    def __post_init__(self):
        clamped = max(-100.0, min(100.0, float(self.value)))
        object.__setattr__(self, "value", clamped)

    @property
    def label(self) -> int:
        return label_from_confidence(self.value)

    @property
    def uncertainty(self) -> float:
        """Magnitude-based uncertainty: 100 - |value|, in [0, 100]."""
        return 100.0 - abs(self.value)


@dataclass(frozen=True)
class VariableSpec:
    """One node: stable integer id, display name, free-text description."""

    id: int
    name: str
    description: str = ""


@dataclass(frozen=True)
class GroundTruthGraph:
    """A variable set plus (optionally) the true edge set.

    ``edges`` is None when the truth is unknown (prediction-only input);
    an empty frozenset means "known: no edges".
    """

    variables: tuple[VariableSpec, ...]
    edges: frozenset[Pair] | None = None
    task_description: str = ""

    def __post_init__(self):
        n = len(self.variables)
        if n < 2:
            raise InvalidGraphError(f"need at least 2 variables, got {n}")
        ids = [v.id for v in self.variables]
        if ids != list(range(n)):
            raise InvalidGraphError("variable ids must be 0..n-1 in order")
        names = [v.name for v in self.variables]
        if len(set(names)) != n:
            raise InvalidGraphError("variable names must be unique")
        if any(not v.name for v in self.variables):
            raise InvalidGraphError("variable names must be non-empty")
        if self.edges is not None:
            for i, j in self.edges:
                if i == j:
                    raise InvalidGraphError(f"self-edge ({i}, {j}) not allowed")
                if not (0 <= i < n and 0 <= j < n):
                    raise InvalidGraphError(f"edge ({i}, {j}) out of range")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def has_truth(self) -> bool:
        return self.edges is not None

    def name_of(self, var_id: int) -> str:
        if not 0 <= var_id < self.n:
            raise InvalidPairError(f"variable id {var_id} out of range")
        return self.variables[var_id].name

    def id_of(self, name: str) -> int:
        for v in self.variables:
            if v.name == name:
                return v.id
        raise InvalidPairError(f"unknown variable name {name!r}")

    def label_of(self, parent: int, child: int) -> int:
        """True label of the ordered pair (parent, child)."""
        if self.edges is None:
            raise InvalidGraphError("graph has no ground-truth edges")
        if parent == child:
            raise InvalidPairError(f"self-edge ({parent}, {child}) queried")
        if not (0 <= parent < self.n and 0 <= child < self.n):
            raise InvalidPairError(f"pair ({parent}, {child}) out of range")
        return PRESENT if (parent, child) in self.edges else ABSENT

    def truth_labels(self) -> dict[Pair, int]:
        return {p: self.label_of(*p) for p in candidate_edges(self.n)}


# ============================================================
# Metrics over full-coverage label maps
# ============================================================

@dataclass(frozen=True)
class GraphMetrics:
    """Directed-edge confusion counts plus precision/recall/F1."""

    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }

    @staticmethod
    def from_counts(tp: int, fp: int, fn: int, tn: int) -> "GraphMetrics":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return GraphMetrics(tp, fp, fn, tn, precision, recall, f1)


def _check_coverage(predicted: Mapping[Pair, int], n: int):
    expected = set(candidate_edges(n))
    got = set(predicted)
    if got != expected:
        missing = sorted(expected - got)[:5]
        extra = sorted(got - expected)[:5]
        raise CoverageError(
            f"prediction must cover all {n * (n - 1)} ordered pairs; "
            f"missing={missing} extra={extra}"
        )


def compute_metrics(predicted: Mapping[Pair, int], truth: GroundTruthGraph) -> GraphMetrics:
    """Confusion counts of a full-coverage label map against the truth.

    Every ordered pair must appear exactly once; tp+fp+fn+tn == n*(n-1).
    """
    _check_coverage(predicted, truth.n)
    tp = fp = fn = tn = 0
    for pair, label in predicted.items():
        actual = truth.label_of(*pair)
        if label == PRESENT and actual == PRESENT:
            tp += 1
        elif label == PRESENT:
            fp += 1
        elif actual == PRESENT:
            fn += 1
        else:
            tn += 1
    return GraphMetrics.from_counts(tp, fp, fn, tn)


@dataclass(frozen=True)
class ImprovementBreakdown:
    """Label flips between consecutive rounds, attributed by cause.

    A flip to the correct label counts as an experiment improvement when
    the pair was experimented on this round, else as an update
    improvement.  A flip away from the correct label is a regression.
    """

    experiment_improvements: int
    update_improvements: int
    regressions: int
    net_improvement: int
    total_changed: int

    def to_dict(self) -> dict:
        return {
            "experiment_improvements": self.experiment_improvements,
            "update_improvements": self.update_improvements,
            "regressions": self.regressions,
            "net_improvement": self.net_improvement,
            "total_changed": self.total_changed,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "ImprovementBreakdown":
        return ImprovementBreakdown(
            experiment_improvements=int(d["experiment_improvements"]),
            update_improvements=int(d["update_improvements"]),
            regressions=int(d["regressions"]),
            net_improvement=int(d["net_improvement"]),
            total_changed=int(d["total_changed"]),
        )


def diff_rounds(
    prev: Mapping[Pair, int],
    new: Mapping[Pair, int],
    truth: GroundTruthGraph,
    experimented: Iterable[Pair],
) -> ImprovementBreakdown:
    """Attribute label changes between two full-coverage label maps."""
    _check_coverage(prev, truth.n)
    _check_coverage(new, truth.n)
    experimented_set = set(experimented)
    exp_impr = upd_impr = regressions = changed = 0
    for pair in prev:
        before, after = prev[pair], new[pair]
        if before == after:
            continue
        changed += 1
        actual = truth.label_of(*pair)
        if after == actual:
            if pair in experimented_set:
                exp_impr += 1
            else:
                upd_impr += 1
        elif before == actual:
            regressions += 1
    net = exp_impr + upd_impr - regressions
    return ImprovementBreakdown(exp_impr, upd_impr, regressions, net, changed)


# ============================================================
# Graph file I/O
# ============================================================

def parse_graph(data: Mapping, source: str = "<graph>") -> GroundTruthGraph:
    """Build a graph from the JSON wire format.

    Expected shape::

        {"task_description": str,
         "variables": [{"name": str, "description": str}, ...],
         "edges": [[parentName, childName], ...]}   # optional

    Variable ids are assigned by list position.  Duplicate names,
    self-edges, and unknown endpoint names are rejected.
    """
    if not isinstance(data, Mapping):
        raise InvalidGraphError(f"{source}: top level must be an object")
    raw_vars = data.get("variables")
    if not isinstance(raw_vars, list) or not raw_vars:
        raise InvalidGraphError(f"{source}: 'variables' must be a non-empty list")
    variables = []
    seen: set[str] = set()
    for idx, entry in enumerate(raw_vars):
        if not isinstance(entry, Mapping) or "name" not in entry:
            raise InvalidGraphError(f"{source}: variable #{idx} needs a 'name'")
        name = str(entry["name"])
        if not name:
            raise InvalidGraphError(f"{source}: variable #{idx} has an empty name")
        if name in seen:
            raise InvalidGraphError(f"{source}: duplicate variable name {name!r}")
        seen.add(name)
        variables.append(VariableSpec(idx, name, str(entry.get("description", ""))))
    by_name = {v.name: v.id for v in variables}

    edges: frozenset[Pair] | None = None
    if "edges" in data:
        raw_edges = data["edges"]
        if not isinstance(raw_edges, list):
            raise InvalidGraphError(f"{source}: 'edges' must be a list")
        pairs = set()
        for idx, entry in enumerate(raw_edges):
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise InvalidGraphError(f"{source}: edge #{idx} must be [parent, child]")
            pname, cname = str(entry[0]), str(entry[1])
            if pname not in by_name or cname not in by_name:
                raise InvalidGraphError(f"{source}: edge #{idx} names an unknown variable")
            if pname == cname:
                raise InvalidGraphError(f"{source}: edge #{idx} is a self-edge on {pname!r}")
            pairs.add((by_name[pname], by_name[cname]))
        edges = frozenset(pairs)

    return GroundTruthGraph(
        variables=tuple(variables),
        edges=edges,
        task_description=str(data.get("task_description", "")),
    )


def load_graph(path: str | Path) -> GroundTruthGraph:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidGraphError(f"{path}: cannot read graph file: {exc}") from exc
    return parse_graph(data, source=str(path))


def graph_to_dict(graph: GroundTruthGraph) -> dict:
    out: dict = {
        "task_description": graph.task_description,
        "variables": [
            {"name": v.name, "description": v.description} for v in graph.variables
        ],
    }
    if graph.edges is not None:
        out["edges"] = sorted(
            [graph.name_of(i), graph.name_of(j)] for i, j in graph.edges
        )
    return out


def graph_hash(graph: GroundTruthGraph) -> str:
    """Stable content hash of a graph definition (sha256 hex)."""
    canonical = json.dumps(graph_to_dict(graph), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def random_graph(
    n: int,
    density: float,
    seed: int,
    task_description: str = "Recover the directed graph over the listed variables.",
    ensure_edge: bool = True,
) -> GroundTruthGraph:
    """Seeded random truth graph: each candidate pair kept with p=density."""
    if not 0.0 <= density <= 1.0:
        raise InvalidGraphError(f"density must be in [0, 1], got {density}")
    rng = random.Random(seed)
    pairs = [p for p in candidate_edges(n) if rng.random() < density]
    if ensure_edge and not pairs:
        pairs = [rng.choice(candidate_edges(n))]
    variables = tuple(VariableSpec(i, f"V{i}", f"variable {i}") for i in range(n))
    return GroundTruthGraph(variables, frozenset(pairs), task_description)
