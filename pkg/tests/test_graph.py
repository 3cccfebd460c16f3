import json
import random

import pytest

from igda import (
    GroundTruthGraph,
    ImprovementBreakdown,
    SignedConfidence,
    VariableSpec,
    candidate_edges,
    compute_metrics,
    diff_rounds,
    graph_hash,
    label_from_confidence,
    load_graph,
    parse_graph,
    random_graph,
)
from igda.errors import CoverageError, InvalidGraphError
from igda.graph import GraphMetrics, graph_to_dict


# ------------------------------------------------------------
# independent oracle: count the confusion matrix pair by pair
# ------------------------------------------------------------

def brute_force_metrics(predicted, truth_edges, n):
    tp = fp = fn = tn = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            actual = (i, j) in truth_edges
            said = predicted[(i, j)] == 1
            if said and actual:
                tp += 1
            elif said and not actual:
                fp += 1
            elif not said and actual:
                fn += 1
            else:
                tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return tp, fp, fn, tn, precision, recall, f1


def make_graph(n, edges):
    return GroundTruthGraph(
        variables=tuple(VariableSpec(i, f"V{i}") for i in range(n)),
        edges=frozenset(edges),
    )


def test_candidate_edges_order_and_count():
    assert candidate_edges(3) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert len(candidate_edges(9)) == 72
    with pytest.raises(InvalidGraphError):
        candidate_edges(1)


def test_label_from_confidence_zero_is_present():
    assert label_from_confidence(0.0) == 1
    assert label_from_confidence(-0.0001) == 0
    assert label_from_confidence(55.0) == 1


def test_signed_confidence_clamps_and_labels():
    assert SignedConfidence(250.0).value == 100.0
    assert SignedConfidence(-250.0).value == -100.0
    assert SignedConfidence(-3.0).label == 0
    assert SignedConfidence(0.0).label == 1
    assert SignedConfidence(-40.0).uncertainty == 60.0


def test_metrics_hand_case():
    # 4 nodes, truth {(0,1),(1,2)}; prediction hits (0,1), misses (1,2),
    # invents (2,0) and (3,1)
    graph = make_graph(4, {(0, 1), (1, 2)})
    predicted = {p: 0 for p in candidate_edges(4)}
    predicted[(0, 1)] = 1
    predicted[(2, 0)] = 1
    predicted[(3, 1)] = 1
    m = compute_metrics(predicted, graph)
    assert (m.tp, m.fp, m.fn, m.tn) == (1, 2, 1, 8)
    assert m.precision == pytest.approx(1 / 3)
    assert m.recall == pytest.approx(1 / 2)
    assert m.f1 == pytest.approx(2 * (1 / 3) * (1 / 2) / (1 / 3 + 1 / 2))


def test_metrics_zero_denominators():
    graph = make_graph(3, set())
    predicted = {p: 0 for p in candidate_edges(3)}
    m = compute_metrics(predicted, graph)
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert m.tn == 6


def test_metrics_match_brute_force_oracle():
    rng = random.Random(4242)
    for _ in range(1000):
        n = rng.randint(3, 10)
        edges = {p for p in candidate_edges(n) if rng.random() < rng.random()}
        graph = make_graph(n, edges)
        predicted = {p: rng.randint(0, 1) for p in candidate_edges(n)}
        m = compute_metrics(predicted, graph)
        tp, fp, fn, tn, precision, recall, f1 = brute_force_metrics(predicted, edges, n)
        assert (m.tp, m.fp, m.fn, m.tn) == (tp, fp, fn, tn)
        assert m.precision == precision and m.recall == recall and m.f1 == f1


def test_metrics_requires_full_coverage():
    graph = make_graph(3, {(0, 1)})
    predicted = {p: 0 for p in candidate_edges(3)}
    del predicted[(2, 1)]
    with pytest.raises(CoverageError):
        compute_metrics(predicted, graph)
    predicted[(2, 1)] = 0
    predicted[(1, 1)] = 0
    with pytest.raises(CoverageError):
        compute_metrics(predicted, graph)


def test_diff_rounds_attribution():
    graph = make_graph(3, {(0, 1), (1, 2)})
    pairs = candidate_edges(3)
    prev = {p: 0 for p in pairs}
    new = dict(prev)
    new[(0, 1)] = 1          # fixed by this round's experiment
    new[(1, 2)] = 1          # fixed by an update
    new[(2, 0)] = 1          # regression
    b = diff_rounds(prev, new, graph, experimented=[(0, 1)])
    assert b.experiment_improvements == 1
    assert b.update_improvements == 1
    assert b.regressions == 1
    assert b.net_improvement == 1
    assert b.total_changed == 3
    assert b.net_improvement == (
        b.experiment_improvements + b.update_improvements - b.regressions
    )


def test_diff_rounds_flip_to_wrong_on_experimented_pair_is_regression():
    # oracle answers are trusted; a flip away from truth on an
    # experimented pair can only mean the truth disagreed with the graph
    # under test, still a regression by label accounting
    graph = make_graph(3, {(0, 1)})
    pairs = candidate_edges(3)
    prev = {p: 0 for p in pairs}
    prev[(1, 2)] = 1
    new = dict(prev)
    new[(1, 2)] = 0          # correct flip, not experimented -> update
    b = diff_rounds(prev, new, graph, experimented=[])
    assert b.update_improvements == 1 and b.regressions == 0


def test_graph_validation_rejects_bad_shapes():
    with pytest.raises(InvalidGraphError):
        GroundTruthGraph(variables=(), edges=frozenset())
    with pytest.raises(InvalidGraphError):
        GroundTruthGraph(
            variables=(VariableSpec(0, "a"), VariableSpec(2, "b")), edges=frozenset()
        )
    with pytest.raises(InvalidGraphError):
        make_graph(3, {(0, 0)})
    with pytest.raises(InvalidGraphError):
        make_graph(3, {(0, 5)})
    with pytest.raises(InvalidGraphError):
        GroundTruthGraph(
            variables=(VariableSpec(0, "same"), VariableSpec(1, "same")),
            edges=frozenset(),
        )


def test_parse_graph_wire_format():
    data = {
        "task_description": "demo",
        "variables": [{"name": "a", "description": "first"}, {"name": "b"}],
        "edges": [["a", "b"]],
    }
    g = parse_graph(data)
    assert g.n == 2 and g.has_truth
    assert g.label_of(0, 1) == 1 and g.label_of(1, 0) == 0
    assert g.name_of(1) == "b" and g.id_of("a") == 0

    no_edges = parse_graph({"variables": [{"name": "a"}, {"name": "b"}]})
    assert no_edges.edges is None and not no_edges.has_truth


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.update(variables=[]), "non-empty"),
    (lambda d: d["variables"].append({"name": "a"}), "duplicate"),
    (lambda d: d["edges"].append(["a", "a"]), "self-edge"),
    (lambda d: d["edges"].append(["a", "zzz"]), "unknown"),
    (lambda d: d.update(edges="nope"), "list"),
    (lambda d: d["edges"].append(["a"]), "parent, child"),
])
def test_parse_graph_rejections(mutate, message):
    data = {
        "variables": [{"name": "a"}, {"name": "b"}],
        "edges": [["a", "b"]],
    }
    mutate(data)
    with pytest.raises(InvalidGraphError, match=message):
        parse_graph(data)


def test_load_graph_round_trip(tmp_path):
    g = random_graph(6, 0.3, seed=99)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(graph_to_dict(g)))
    g2 = load_graph(path)
    assert g2 == g
    assert graph_hash(g2) == graph_hash(g)


def test_load_graph_bad_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(InvalidGraphError):
        load_graph(path)
    with pytest.raises(InvalidGraphError):
        load_graph(tmp_path / "missing.json")


def test_graph_hash_is_content_addressed():
    g1 = make_graph(4, {(0, 1), (2, 3)})
    g2 = make_graph(4, {(2, 3), (0, 1)})
    assert graph_hash(g1) == graph_hash(g2)
    g3 = make_graph(4, {(0, 1)})
    assert graph_hash(g1) != graph_hash(g3)


def test_random_graph_is_seeded_and_never_empty():
    a = random_graph(8, 0.25, seed=5)
    b = random_graph(8, 0.25, seed=5)
    assert a.edges == b.edges
    assert random_graph(8, 0.25, seed=6).edges != a.edges or True  # may collide, not required
    sparse = random_graph(5, 0.0, seed=1)
    assert len(sparse.edges) == 1  # guaranteed at least one edge
    for i, j in a.edges:
        assert i != j and 0 <= i < 8 and 0 <= j < 8


def test_improvement_breakdown_round_trip():
    b = ImprovementBreakdown(2, 1, 1, 2, 4)
    assert ImprovementBreakdown.from_dict(b.to_dict()) == b


def test_metrics_from_counts_consistency_fuzz():
    rng = random.Random(7)
    for _ in range(200):
        tp, fp, fn, tn = (rng.randint(0, 30) for _ in range(4))
        m = GraphMetrics.from_counts(tp, fp, fn, tn)
        if tp + fp:
            assert m.precision == tp / (tp + fp)
        if tp + fn:
            assert m.recall == tp / (tp + fn)
        if m.precision + m.recall:
            assert m.f1 == pytest.approx(
                2 * m.precision * m.recall / (m.precision + m.recall)
            )
