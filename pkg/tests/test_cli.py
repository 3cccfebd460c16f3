import json
import socket

import pytest

import golden_trace as gt
from igda.cli import main, safe_label
from igda.runlog import read_runlog


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "graph.json"
    path.write_text(json.dumps(gt.GRAPH_DICT))
    return path


def blind_graph_file(tmp_path):
    data = {k: v for k, v in gt.GRAPH_DICT.items() if k != "edges"}
    path = tmp_path / "blind.json"
    path.write_text(json.dumps(data))
    return path


def sim_args(graph_file, out_dir, *extra):
    return [
        "--graph", str(graph_file), "--out", str(out_dir),
        "--backend", "simulated", "--samples", "2", *extra,
    ]


# ------------------------------------------------------------
# predict
# ------------------------------------------------------------

def test_predict_writes_cache_and_scores(tmp_path, graph_file, capsys):
    assert main(["predict", *sim_args(graph_file, tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "20 pairs" in out
    assert "initial f1" in out
    caches = list((tmp_path / "out").glob("initial_*.json"))
    assert len(caches) == 1
    payload = json.loads(caches[0].read_text())
    assert len(payload["confidences"]) == 20


def test_predict_without_truth_skips_score_line(tmp_path, capsys):
    graph = blind_graph_file(tmp_path)
    code = main([
        "predict", *sim_args(graph, tmp_path / "out"), "--oracle", "simulated",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "wrote" in out and "initial f1" not in out


def test_predict_truth_oracle_requires_edges(tmp_path, capsys):
    graph = blind_graph_file(tmp_path)
    assert main(["predict", *sim_args(graph, tmp_path / "out")]) == 1
    assert "edges" in capsys.readouterr().err


def test_missing_graph_file_is_input_error(tmp_path, capsys):
    code = main(["predict", "--graph", str(tmp_path / "void.json"),
                 "--out", str(tmp_path / "out")])
    assert code == 1
    assert "error" in capsys.readouterr().err


# ------------------------------------------------------------
# discover
# ------------------------------------------------------------

def discover_args(graph_file, out_dir, *extra):
    return [
        "discover", *sim_args(graph_file, out_dir),
        "--rounds", "2", "--per-round", "2", "--runs", "2", *extra,
    ]


def test_discover_requires_cached_initial(tmp_path, graph_file, capsys):
    assert main(discover_args(graph_file, tmp_path / "out")) == 1
    assert "no cached initial prediction" in capsys.readouterr().err


def test_predict_then_discover_pipeline(tmp_path, graph_file, capsys):
    out = tmp_path / "out"
    assert main(["predict", *sim_args(graph_file, out)]) == 0
    assert main(discover_args(graph_file, out)) == 0
    printed = capsys.readouterr().out
    assert "final f1=" in printed
    logs = sorted(out.glob("runlog_*.jsonl"))
    assert len(logs) == 2
    assert {read_runlog(p).header.run_index for p in logs} == {0, 1}
    assert list(out.glob("curves_*.csv")) and list(out.glob("improvements_*.csv"))


def test_discover_init_computes_fresh_cache(tmp_path, graph_file, capsys):
    out = tmp_path / "out"
    assert main(discover_args(graph_file, out, "--init")) == 0
    assert list(out.glob("initial_*.json"))
    assert "wrote" in capsys.readouterr().out


def test_discover_synthesizes_truth_for_simulated_oracle(tmp_path, capsys):
    graph = blind_graph_file(tmp_path)
    code = main(discover_args(
        graph, tmp_path / "out", "--init", "--oracle", "simulated",
        "--density", "0.3",
    ))
    assert code == 0
    [log] = [read_runlog(p) for p in sorted((tmp_path / "out").glob("runlog_*run0.jsonl"))]
    assert log.header.truth_edges  # hidden truth was synthesized
    assert "final f1=" in capsys.readouterr().out


def test_discover_label_is_sanitized(tmp_path, graph_file):
    out = tmp_path / "out"
    assert main(discover_args(graph_file, out, "--init", "--runs", "1",
                              "--label", "my run/one")) == 0
    assert safe_label("my run/one") == "my-run-one"
    assert list(out.glob("runlog_my-run-one_*.jsonl"))


def test_outputs_are_byte_deterministic(tmp_path, graph_file):
    def produce(out_dir):
        assert main(["predict", *sim_args(graph_file, out_dir)]) == 0
        assert main(discover_args(graph_file, out_dir)) == 0
        return {
            p.relative_to(out_dir).as_posix(): p.read_bytes()
            for p in sorted(out_dir.rglob("*"))
            if p.is_file()
        }

    first = produce(tmp_path / "a")
    second = produce(tmp_path / "b")
    assert first == second


def test_config_file_with_flag_override(tmp_path, graph_file):
    config = tmp_path / "settings.json"
    config.write_text(json.dumps({"rounds": 3, "per_round": 1, "runs": 1}))
    out = tmp_path / "out"
    code = main([
        "discover", *sim_args(graph_file, out), "--init",
        "--config", str(config), "--rounds", "2",
    ])
    assert code == 0
    [log_path] = out.glob("runlog_*.jsonl")
    header = read_runlog(log_path).header
    assert header.config["rounds"] == 2      # flag beats the file
    assert header.config["per_round"] == 1   # file beats the default


def test_unknown_config_key_rejected(tmp_path, graph_file, capsys):
    config = tmp_path / "settings.json"
    config.write_text(json.dumps({"round_count": 3}))
    code = main(["discover", *sim_args(graph_file, tmp_path / "out"),
                 "--init", "--config", str(config)])
    assert code == 1
    assert "unknown config key" in capsys.readouterr().err


def test_llm_backend_without_endpoint_is_backend_error(tmp_path, graph_file, capsys):
    code = main([
        "predict", "--graph", str(graph_file), "--out", str(tmp_path / "out"),
        "--backend", "llm",
    ])
    assert code == 2
    assert "--base-url is required" in capsys.readouterr().err


# ------------------------------------------------------------
# analyze
# ------------------------------------------------------------

def test_analyze_ranks_two_methods(tmp_path, graph_file, capsys, monkeypatch):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(discover_args(graph_file, out_a, "--init", "--runs", "1",
                              "--policy", "uncertainty", "--label", "unc")) == 0
    assert main(discover_args(graph_file, out_b, "--init", "--runs", "1",
                              "--policy", "random", "--label", "rnd")) == 0
    capsys.readouterr()

    monkeypatch.chdir(tmp_path)
    code = main(["analyze", "--log", "a/runlog_*.jsonl", "--log", "b/runlog_*.jsonl",
                 "--out", "ranked"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "average rank" in printed
    assert "unc" in printed and "rnd" in printed
    assert list((tmp_path / "ranked").glob("ranks_*.csv"))


def test_analyze_grid_mismatch_exit_code(tmp_path, graph_file, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(discover_args(graph_file, out_a, "--init", "--runs", "1",
                              "--label", "m")) == 0
    assert main(["discover", *sim_args(graph_file, out_b), "--init",
                 "--rounds", "3", "--per-round", "1", "--runs", "1",
                 "--label", "m"]) == 0
    logs = sorted(str(p) for d in (out_a, out_b) for p in d.glob("runlog_*.jsonl"))
    code = main(["analyze", *sum((["--log", p] for p in logs), []),
                 "--out", str(tmp_path / "ranked")])
    assert code == 3
    assert "analysis error" in capsys.readouterr().err


def test_analyze_missing_log_path(tmp_path, capsys):
    code = main(["analyze", "--log", str(tmp_path / "none.jsonl"),
                 "--out", str(tmp_path / "out")])
    assert code == 1


def test_analyze_unmatched_glob(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main(["analyze", "--log", "nothing_*.jsonl", "--out", "out"])
    assert code == 1
    assert "no run logs match" in capsys.readouterr().err


# ------------------------------------------------------------
# serve
# ------------------------------------------------------------

def test_serve_reports_busy_port(tmp_path, capsys):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        code = main(["serve", "--host", "127.0.0.1", "--port", str(port),
                     "--out", str(tmp_path / "out")])
    finally:
        blocker.close()
    assert code == 4
    assert "unavailable" in capsys.readouterr().err
