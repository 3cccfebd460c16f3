"""Command line interface.

Subcommands:

  predict   score every candidate edge zero-shot and cache the result
  discover  run budgeted experimentation rounds from a cached or fresh
            initial prediction, writing one run log per repetition
  analyze   turn run logs into accuracy-vs-budget curves, method ranks,
            and per-round improvement attribution (CSV)
  serve     host the interactive session API (plus the bundled UI)

Exit codes: 0 ok, 1 bad input (graph, config, missing initial cache),
2 backend unreachable or misconfigured, 3 analysis grid mismatch,
4 requested port unavailable.

Option precedence: command line flag > --config file entry > default.
All outputs land under --out; nothing else is written.  API keys are
read from the environment (IGDA_API_KEY by default), never from files.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import random
import re
import socket
import sys
from pathlib import Path

from .analysis import export_analysis, rank_methods, aggregate_curves
from .engine import (
    ADJACENCY_SCOPES,
    POLICIES,
    STRATEGIES,
    DiscoveryConfig,
    TruthOracle,
    initialize,
    run_batch,
)
from .errors import (
    DiscoveryError,
    GatewayConfigError,
    GridAlignmentError,
    InvalidGraphError,
    TransportError,
)
from .gateway import GatewayBackend, GatewayConfig, LlmGateway
from .graph import (
    GroundTruthGraph,
    candidate_edges,
    compute_metrics,
    graph_hash,
    label_from_confidence,
    load_graph,
    random_graph,
)
from .predictor import (
    OracleParams,
    PromptPredictor,
    SimulatedPredictor,
    demo_script_backend,
    derive_seed,
)
from .runlog import read_runlog, write_runlog

logger = logging.getLogger(__name__)

BACKENDS = ("llm", "simulated", "scripted")
ORACLES = ("truth", "simulated", "session")

# settings that may come from a --config file; flag wins when given
CONFIG_KEYS = {
    "rounds": int, "per_round": int, "samples": int, "update_samples": int,
    "policy": str, "updates": str, "seed": int, "runs": int,
    "adjacency_scope": str, "backend": str, "oracle": str,
    "base_url": str, "model": str, "temperature": float, "density": float,
    "sim_accuracy": float, "sim_gap": float, "sim_fidelity": float,
    "sim_step_lo": float, "sim_step_hi": float, "label": str,
}

DEFAULTS = {
    "rounds": 5, "per_round": 2, "samples": 16, "update_samples": 1,
    "policy": "uncertainty", "updates": "local", "seed": 0, "runs": 5,
    "adjacency_scope": "shared-endpoint", "backend": "simulated",
    "oracle": "truth", "base_url": "", "model": "", "temperature": 0.7,
    "density": 0.2, "sim_accuracy": 0.7, "sim_gap": 30.0,
    "sim_fidelity": 0.8, "sim_step_lo": 5.0, "sim_step_hi": 15.0,
    "label": "",
}


def resolve_settings(args: argparse.Namespace) -> dict:
    """defaults <- config file <- explicit flags."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise ValueError("--config must hold a JSON object")
        for key, value in raw.items():
            if key not in CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            settings[key] = CONFIG_KEYS[key](value)
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


# ============================================================
# Shared construction helpers
# ============================================================

def sim_params(settings: dict, seed: int) -> OracleParams:
    return OracleParams(
        zero_shot_accuracy=settings["sim_accuracy"],
        calibration_gap=settings["sim_gap"],
        update_fidelity=settings["sim_fidelity"],
        update_step=(settings["sim_step_lo"], settings["sim_step_hi"]),
        seed=seed,
    )


def resolve_truth(graph: GroundTruthGraph, settings: dict) -> GroundTruthGraph:
    """The graph whose edges answer experiments (and drive simulation).

    oracle=truth requires the input graph to carry edges.  For
    oracle=simulated a hidden truth is synthesized over the same
    variables from (seed, density), so any variable list can be
    exercised end to end without revealing anything to the predictor
    beyond its reliability knobs.
    """
    if settings["oracle"] == "simulated":
        template = random_graph(
            graph.n, settings["density"], derive_seed(settings["seed"], "synthetic-truth")
        )
        return GroundTruthGraph(
            variables=graph.variables,
            edges=template.edges,
            task_description=graph.task_description,
        )
    if settings["oracle"] == "truth" and not graph.has_truth:
        raise InvalidGraphError(
            "graph file has no \"edges\"; supply them or pick --oracle simulated"
        )
    return graph


def build_gateway(settings: dict, out_dir: Path) -> LlmGateway:
    if not settings["base_url"]:
        raise GatewayConfigError("--base-url is required with --backend llm")
    if not settings["model"]:
        raise GatewayConfigError("--model is required with --backend llm")
    return LlmGateway(GatewayConfig(
        base_url=settings["base_url"],
        model=settings["model"],
        temperature=settings["temperature"],
        cache_dir=out_dir / "cache",
        audit_path=out_dir / "audit.jsonl",
    ))


def predictor_factory(settings: dict, truth: GroundTruthGraph, out_dir: Path):
    """seed -> predictor, matching the batch runner's substream contract."""
    backend_name = settings["backend"]
    if backend_name == "simulated":
        return lambda seed: SimulatedPredictor(sim_params(settings, seed), truth)
    if backend_name == "scripted":
        return lambda seed: PromptPredictor(demo_script_backend(salt=settings["seed"]))
    gateway = build_gateway(settings, out_dir)
    backend = GatewayBackend(gateway)
    return lambda seed: PromptPredictor(backend)


def initial_fingerprint(settings: dict, graph: GroundTruthGraph) -> str:
    """Identity of a cached initial prediction: graph + scoring recipe."""
    backend_name = settings["backend"]
    payload: dict = {
        "graph": graph_hash(graph),
        "backend": backend_name,
        "samples": settings["samples"],
    }
    if backend_name == "llm":
        payload.update(
            base_url=settings["base_url"], model=settings["model"],
            temperature=settings["temperature"],
        )
    elif backend_name == "simulated":
        params = sim_params(settings, derive_seed(settings["seed"], "init"))
        payload.update(
            accuracy=params.zero_shot_accuracy, gap=params.calibration_gap,
            seed=params.seed, oracle=settings["oracle"], density=settings["density"],
        )
    else:
        payload.update(seed=settings["seed"])
    raw = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()


def initial_cache_path(out_dir: Path, graph: GroundTruthGraph, fingerprint: str) -> Path:
    return out_dir / f"initial_{graph_hash(graph)[:12]}_{fingerprint[:12]}.json"


def compute_initial(settings: dict, graph: GroundTruthGraph,
                    truth: GroundTruthGraph, out_dir: Path):
    factory = predictor_factory(settings, truth, out_dir)
    predictor = factory(derive_seed(settings["seed"], "init"))
    return initialize(graph, predictor, settings["samples"])


def save_initial(path: Path, graph: GroundTruthGraph, fingerprint: str,
                 confidences, flagged):
    payload = {
        "graph_hash": graph_hash(graph),
        "fingerprint": fingerprint,
        "confidences": {f"{i},{j}": confidences[(i, j)] for i, j in sorted(confidences)},
        "flagged": [f"{i},{j}" for i, j in flagged],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_initial(path: Path, graph: GroundTruthGraph) -> dict:
    payload = json.loads(path.read_text())
    if payload.get("graph_hash") != graph_hash(graph):
        raise InvalidGraphError(f"cached initial {path} was built for a different graph")
    out = {}
    for key, value in payload["confidences"].items():
        i, j = key.split(",")
        out[(int(i), int(j))] = float(value)
    expected = set(candidate_edges(graph.n))
    if set(out) != expected:
        raise InvalidGraphError(f"cached initial {path} does not cover every pair")
    return out


def safe_label(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._+-]+", "-", label) or "run"


class StdinOracle:
    """Interactive oracle: asks the terminal for each experiment result."""

    def __init__(self, graph: GroundTruthGraph):
        self.graph = graph

    def answer(self, pair):
        i, j = pair
        question = f"experiment: does {self.graph.name_of(i)} -> {self.graph.name_of(j)} hold? [y/n] "
        while True:
            reply = input(question).strip().lower()
            if reply in ("y", "yes", "1"):
                return 1
            if reply in ("n", "no", "0"):
                return 0
            print("please answer y or n", file=sys.stderr)


# ============================================================
# Subcommands
# ============================================================

def cmd_predict(args: argparse.Namespace) -> int:
    settings = resolve_settings(args)
    graph = load_graph(args.graph)
    out_dir = Path(args.out)
    truth = resolve_truth(graph, settings)
    confidences, flagged, _ = compute_initial(settings, graph, truth, out_dir)
    fingerprint = initial_fingerprint(settings, graph)
    path = initial_cache_path(out_dir, graph, fingerprint)
    save_initial(path, graph, fingerprint, confidences, flagged)
    print(f"wrote {path} ({len(confidences)} pairs, {len(flagged)} flagged)")
    if graph.has_truth:
        labels = {p: label_from_confidence(c) for p, c in confidences.items()}
        m = compute_metrics(labels, graph)
        print(f"initial f1 {m.f1:.4f} precision {m.precision:.4f} recall {m.recall:.4f}")
    return 0


def cmd_discover(args: argparse.Namespace) -> int:
    settings = resolve_settings(args)
    graph = load_graph(args.graph)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = resolve_truth(graph, settings)

    if settings["oracle"] == "session":
        oracle = StdinOracle(graph)
        settings["runs"] = 1
        scored = graph  # no hidden answers; metrics only if the file had edges
    else:
        oracle = TruthOracle(truth)
        scored = truth

    if settings["backend"] == "simulated" and not scored.has_truth:
        raise InvalidGraphError(
            "simulated backend needs ground truth; give the graph edges "
            "or use --oracle simulated"
        )

    fingerprint = initial_fingerprint(settings, graph)
    cache = initial_cache_path(out_dir, graph, fingerprint)
    if cache.exists():
        initial = load_initial(cache, graph)
    elif args.init:
        confidences, flagged, _ = compute_initial(settings, graph, scored, out_dir)
        save_initial(cache, graph, fingerprint, confidences, flagged)
        print(f"wrote {cache}")
        initial = confidences
    else:
        print(
            f"no cached initial prediction at {cache}; rerun with --init "
            "or run `igda predict` first",
            file=sys.stderr,
        )
        return 1

    config = DiscoveryConfig(
        rounds=settings["rounds"],
        per_round=settings["per_round"],
        zero_shot_samples=settings["samples"],
        update_samples=settings["update_samples"],
        policy=settings["policy"],
        strategy=settings["updates"],
        seed=settings["seed"],
        runs=settings["runs"],
        adjacency_scope=settings["adjacency_scope"],
    )
    label = settings["label"] or f"{config.policy}+{config.strategy}"
    factory = predictor_factory(settings, scored, out_dir)
    logs = run_batch(scored, config, factory, oracle, initial=initial, label=label)
    if not logs:
        print("every run aborted; see warnings above", file=sys.stderr)
        return 1

    ghash = graph_hash(scored)[:12]
    paths = []
    for log in logs:
        path = out_dir / f"runlog_{safe_label(label)}_{ghash}_run{log.header.run_index}.jsonl"
        write_runlog(log, path)
        paths.append(path)
        if log.rounds and log.rounds[-1].summary.metrics:
            final = log.rounds[-1].summary.metrics
            print(f"run {log.header.run_index}: rounds={len(log.rounds)} final f1={final.f1:.4f}")
        else:
            print(f"run {log.header.run_index}: rounds={len(log.rounds)}")
    print(f"wrote {len(paths)} run log(s) to {out_dir}")

    if scored.has_truth:
        exported = export_analysis(out_dir, {label: logs})
        for name, p in sorted(exported.items()):
            print(f"wrote {name}: {p}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    logs_by_method: dict[str, list] = {}
    for pattern in args.log:
        matches = sorted(Path().glob(pattern)) if any(c in pattern for c in "*?[") \
            else [Path(pattern)]
        if not matches:
            print(f"no run logs match {pattern!r}", file=sys.stderr)
            return 1
        for path in matches:
            log = read_runlog(path)
            logs_by_method.setdefault(log.header.label, []).append(log)
    out_dir = Path(args.out)
    exported = export_analysis(out_dir, logs_by_method)
    for name, path in sorted(exported.items()):
        print(f"wrote {name}: {path}")
    if len(logs_by_method) > 1:
        curves = {m: aggregate_curves(ls) for m, ls in logs_by_method.items()}
        table = rank_methods(curves)
        print("average rank (lower is better):")
        for method in sorted(table.average, key=table.average.get):
            print(f"  {method}: {table.average[method]:.3f}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    # deferred: uvicorn and the app are only needed here
    import uvicorn

    from .session import SessionManager, create_app

    settings = resolve_settings(args)
    out_dir = Path(args.out)

    def builder(graph: GroundTruthGraph, config: DiscoveryConfig):
        backend_name = settings["backend"]
        if backend_name == "simulated":
            if not graph.has_truth:
                raise InvalidGraphError(
                    "simulated backend needs the session graph to carry edges"
                )
            return SimulatedPredictor(sim_params(settings, config.seed), graph)
        if backend_name == "scripted":
            return PromptPredictor(demo_script_backend(salt=config.seed))
        return PromptPredictor(GatewayBackend(build_gateway(settings, out_dir)))

    defaults = DiscoveryConfig(
        rounds=settings["rounds"],
        per_round=settings["per_round"],
        zero_shot_samples=settings["samples"],
        update_samples=settings["update_samples"],
        policy=settings["policy"],
        strategy=settings["updates"],
        seed=settings["seed"],
        runs=1,
        adjacency_scope=settings["adjacency_scope"],
    )

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    except OSError:
        print(f"port {args.port} on {args.host} is unavailable", file=sys.stderr)
        return 4
    finally:
        probe.close()

    manager = SessionManager(out_dir, builder, defaults)
    static_dir = Path(args.static) if args.static else Path("frontend/dist")
    app = create_app(manager, static_dir if static_dir.is_dir() else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ============================================================
# Parser
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igda",
        description="interactive graph discovery: zero-shot prediction plus "
                    "budgeted experimentation rounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--config", help="JSON file of settings; flags win")
    common.add_argument("--seed", type=int, help="base seed (default 0)")
    common.add_argument("-v", "--verbose", action="store_true")

    backend = argparse.ArgumentParser(add_help=False)
    backend.add_argument("--backend", choices=BACKENDS, help="predictor backend")
    backend.add_argument("--base-url", dest="base_url", help="chat-completions endpoint")
    backend.add_argument("--model", help="model name for the llm backend")
    backend.add_argument("--temperature", type=float, help="sampling temperature")
    backend.add_argument("--samples", type=int, help="zero-shot samples per pair")
    backend.add_argument("--sim-accuracy", dest="sim_accuracy", type=float)
    backend.add_argument("--sim-gap", dest="sim_gap", type=float)
    backend.add_argument("--sim-fidelity", dest="sim_fidelity", type=float)
    backend.add_argument("--sim-step-lo", dest="sim_step_lo", type=float)
    backend.add_argument("--sim-step-hi", dest="sim_step_hi", type=float)

    p = sub.add_parser("predict", parents=[common, backend],
                       help="cache zero-shot predictions for a graph")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--oracle", choices=ORACLES, help="truth source (default truth)")
    p.add_argument("--density", type=float, help="edge density for --oracle simulated")
    p.set_defaults(func=cmd_predict)

    d = sub.add_parser("discover", parents=[common, backend],
                       help="run experimentation rounds")
    d.add_argument("--graph", required=True, help="graph JSON file")
    d.add_argument("--policy", choices=POLICIES, help="experiment selection policy")
    d.add_argument("--updates", choices=STRATEGIES, help="belief update strategy")
    d.add_argument("--rounds", type=int, help="experimentation rounds")
    d.add_argument("--per-round", dest="per_round", type=int, help="experiments per round")
    d.add_argument("--update-samples", dest="update_samples", type=int)
    d.add_argument("--runs", type=int, help="repetitions with derived seeds")
    d.add_argument("--adjacency-scope", dest="adjacency_scope", choices=ADJACENCY_SCOPES)
    d.add_argument("--oracle", choices=ORACLES, help="experiment answers (default truth)")
    d.add_argument("--density", type=float, help="edge density for --oracle simulated")
    d.add_argument("--label", help="method label recorded in run logs")
    d.add_argument("--init", action="store_true",
                   help="compute the initial prediction if not cached")
    d.set_defaults(func=cmd_discover)

    a = sub.add_parser("analyze", parents=[common],
                       help="summarize run logs into CSV tables")
    a.add_argument("--log", action="append", required=True,
                   help="run log path or glob; repeatable")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("serve", parents=[common, backend],
                       help="serve the interactive session API")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8321)
    s.add_argument("--static", help="directory of UI assets (default frontend/dist)")
    s.add_argument("--policy", choices=POLICIES)
    s.add_argument("--updates", choices=STRATEGIES)
    s.add_argument("--rounds", type=int)
    s.add_argument("--per-round", dest="per_round", type=int)
    s.add_argument("--update-samples", dest="update_samples", type=int)
    s.add_argument("--adjacency-scope", dest="adjacency_scope", choices=ADJACENCY_SCOPES)
    s.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InvalidGraphError, DiscoveryError, ValueError, OSError) as exc:
        if isinstance(exc, (TransportError, GatewayConfigError)):
            print(f"backend error: {exc}", file=sys.stderr)
            return 2
        if isinstance(exc, GridAlignmentError):
            print(f"analysis error: {exc}", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
