# file: app/jobs/runner.py
"""Command-line entry point composing the toolkit stages.

Stages talk through files: Interaction JSONL, Label / Predictions CSV,
Embedding TSV and the versioned binary graph / embedding / model artifacts.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pandas as pd
import torch

from app import constants
from app.config import RunConfig, get_app_settings, write_schema
from app.errors import ConfigError, GraphError, ToolkitError
from app.graphs.build import (
    build_bipartite,
    build_direct,
    export_edge_list,
    project,
    row_normalize,
    union_graphs,
)
from app.jobs import pipelines
from app.jobs.experiment import ExperimentPlan, UserSource, run_experiment, write_results
from app.labeling.weak_labels import KeywordRule, seed_from_profiles
from app.logging_setup import setup_logging
from app.ml import gcn
from app.ml.classifiers import (
    forest_train,
    load_classifier,
    logistic_train,
    save_classifier,
)
from app.ml.fusion import fuse
from app.models.graph import EmbeddingMatrix, GraphMode, SparseGraph
from app.models.interaction import SignalKind, UserRegistry
from app.models.labels import ClassRegistry, LabelDistribution, LabeledUserSet
from app.processing import cost as cost_model
from app.processing.metrics import coverage, evaluate, group_labeled_set, group_labels
from app.processing.polarization import (
    modularity,
    noise_sweep,
    partition_from_labels,
    plot_curve,
    write_curve,
)
from app.propagation.label_prop import (
    PropagationConfig,
    PropagationGraphMode,
    majority_vote_oracle,
    predict,
    propagate,
)
from app.storage.artifacts import load_embedding, load_graph, save_embedding, save_graph
from app.storage.files import (
    load_labels,
    read_embedding_tsv,
    read_predictions,
    save_labels,
    write_embedding_tsv,
    write_predictions,
)
from app.storage.records import ingest_file, write_records_file
from app.synth.sbm import SbmConfig, generate, multi_signal_generate, write_synthetic
from app.utils.utils import derive_seed

log = logging.getLogger("jobs.runner")

KIND_CHOICES = [k.value for k in SignalKind]


# ---------------------------
# helpers
# ---------------------------
def _seed(args: argparse.Namespace, run: RunConfig) -> int:
    for candidate in (args.seed, run.master_seed, get_app_settings().DEFAULT_SEED):
        if candidate is not None:
            return int(candidate)
    raise ConfigError(f"--seed is required for {args.command}")


def _classes(arg: str | None) -> ClassRegistry | None:
    return ClassRegistry(c.strip() for c in arg.split(",")) if arg else None


def _read_embedding(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file not found: {path}")
    with path.open("rb") as fh:
        head = fh.read(len(constants.ARTIFACT_MAGIC))
    return load_embedding(path) if head == constants.ARTIFACT_MAGIC else read_embedding_tsv(path)


def _write_embedding(embedding: EmbeddingMatrix, path: str | Path) -> None:
    if Path(path).suffix == ".tsv":
        write_embedding_tsv(embedding, path)
    else:
        save_embedding(embedding, path)


def _seeds_in_graph(seeds: LabeledUserSet, graph: SparseGraph) -> LabeledUserSet:
    kept = seeds.subset(u for u in seeds if u in graph.users)
    if len(kept) < len(seeds):
        log.warning("%d seed users are not in the graph and were skipped", len(seeds) - len(kept))
    return kept


def _graphs_from_interactions(
    path: str, kinds: list[str], threads: int, binary: bool = False
) -> tuple[list[SparseGraph], Any]:
    store, registry = ingest_file(path, threads=threads)
    graphs = []
    for kind in kinds:
        kind = SignalKind(kind)
        if kind.targets_users:
            graphs.append(build_direct(store, kind, registry, binary=binary))
        else:
            graphs.append(build_bipartite(store, kind, registry, binary=binary))
    return graphs, store


def _square(graphs: list[SparseGraph]) -> list[SparseGraph]:
    """Bipartite graphs are projected so all graphs share the user x user shape."""
    return [project(g) if g.mode is GraphMode.BIPARTITE else g for g in graphs]


# ---------------------------
# subcommands
# ---------------------------
def cmd_ingest(args, run: RunConfig) -> dict:
    store, registry = ingest_file(args.input, threads=args.threads)
    if args.output:
        write_records_file(store.records(), args.output)
    return {
        "records": len(store),
        "users": len(registry),
        "kinds": {
            k.value: len(store.records(k)) for k in sorted(store.kinds(), key=lambda k: k.value)
        },
    }


def cmd_build_graph(args, run: RunConfig) -> dict:
    graphs, _ = _graphs_from_interactions(args.input, args.kind, args.threads, args.binary)
    if len(graphs) > 1:
        modes = {g.mode for g in graphs}
        if len(modes) > 1:
            raise GraphError("cannot combine user-to-user and bipartite kinds in one graph")
        graph = union_graphs(graphs)
    else:
        graph = graphs[0]
    save_graph(graph, args.output)
    if args.edge_list:
        export_edge_list(graph, args.edge_list)
    return {"signal": graph.signal, "mode": graph.mode.value, "users": graph.n, "edges": graph.nnz}


def cmd_project(args, run: RunConfig) -> dict:
    graph = project(load_graph(args.input), block_rows=args.block_rows)
    if args.row_normalize:
        graph = row_normalize(graph)
    save_graph(graph, args.output)
    return {"signal": graph.signal, "users": graph.n, "edges": graph.nnz}


def _propagation_config(args, run: RunConfig) -> PropagationConfig:
    update: dict[str, Any] = {}
    if args.iterations is not None:
        update["iterations"] = args.iterations
    if args.alpha is not None:
        update["alpha"] = args.alpha
    if args.graph_mode is not None:
        update["graph_mode"] = PropagationGraphMode(args.graph_mode)
    if getattr(args, "no_clamp", False):
        update["clamp_seeds"] = False
    return PropagationConfig.model_validate({**run.propagation.model_dump(), **update})


def cmd_propagate(args, run: RunConfig) -> dict:
    graph = load_graph(args.graph)
    seeds = _seeds_in_graph(load_labels(args.seeds, _classes(args.classes)), graph)
    result = propagate(graph, seeds, _propagation_config(args, run))
    predicted = predict(result.distribution, args.abstain_threshold)
    write_predictions(result.distribution, predicted, args.output)
    return {
        "users": len(result.distribution.users),
        "reached": result.reached,
        "abstained": int(np.sum(predicted == constants.ABSTAIN)),
        "runtime_s": result.runtime_s,
    }


def cmd_majority_vote(args, run: RunConfig) -> dict:
    graph = load_graph(args.graph)
    seeds = _seeds_in_graph(load_labels(args.seeds, _classes(args.classes)), graph)
    mode = PropagationGraphMode(args.graph_mode or run.propagation.graph_mode)
    predicted = majority_vote_oracle(graph, seeds, mode)
    users = graph.users
    scores = np.zeros((len(users), len(seeds.classes)))
    voted = predicted != constants.ABSTAIN
    scores[np.flatnonzero(voted), predicted[voted]] = 1.0
    write_predictions(LabelDistribution(scores, users, seeds.classes), predicted, args.output)
    return {"users": len(users), "abstained": int((~voted).sum())}


def cmd_train_gcn(args, run: RunConfig) -> dict:
    graph = load_graph(args.graph)
    seeds = _seeds_in_graph(load_labels(args.seeds, _classes(args.classes)), graph)
    update: dict[str, Any] = {"seed": derive_seed(_seed(args, run), "gcn", graph.signal)}
    for name in ("epochs", "hidden_dim", "layers", "learning_rate"):
        value = getattr(args, name)
        if value is not None:
            update[name] = value
    if args.graph_mode is not None:
        update["graph_mode"] = gcn.GcnGraphMode(args.graph_mode)
    if args.unsupervised:
        update["supervised"] = False
    config = gcn.GcnConfig.model_validate({**run.gcn.model_dump(), **update})
    activity = None
    if args.interactions:
        store, _ = ingest_file(args.interactions, threads=args.threads)
        activity = store.activity_counts(SignalKind(graph.signal))
    result = gcn.train(graph, seeds, config, activity)
    _write_embedding(result.embedding, args.output)
    if args.log_csv:
        gcn.write_training_log(result, args.log_csv)
    if args.head_output and result.head_distribution is not None:
        dist = result.head_distribution
        write_predictions(dist, predict(dist), args.head_output)
    last = result.training_log[-1] if result.training_log else (0, float("nan"), float("nan"))
    return {
        "signal": result.embedding.signal,
        "users": len(result.embedding.users),
        "dim": result.embedding.dim,
        "config_hash": result.embedding.config_hash,
        "final_loss_link": last[1],
        "final_loss_cls": last[2],
        "runtime_s": result.runtime_s,
    }


def _fused_from(paths: list[str], order: str | None):
    embeddings = [_read_embedding(p) for p in paths]
    registry = UserRegistry(u for e in embeddings for u in e.users)
    signal_order = [s.strip() for s in order.split(",")] if order else None
    return fuse(embeddings, registry, signal_order)


def cmd_fuse(args, run: RunConfig) -> dict:
    fused = _fused_from(args.embeddings, args.order)
    signal = "+".join(fused.signals)
    write_embedding_tsv(EmbeddingMatrix(fused.users, fused.features, signal), args.output)
    return {"signal": signal, "users": len(fused.users), "dim": fused.features.shape[1]}


def cmd_classify(args, run: RunConfig) -> dict:
    fused = _fused_from(args.features, args.order)
    if args.load_model:
        model = load_classifier(args.load_model)
    else:
        if not args.labels:
            raise ConfigError("--labels is required unless --load-model is given")
        train = load_labels(args.labels, _classes(args.classes))
        users = [u for u in train if u in fused.users]
        labels = np.array([train.label_of(u) for u in users], dtype=np.int64)
        if args.model == "forest":
            seed = derive_seed(_seed(args, run), "forest") % 2**32
            config = run.forest.model_copy(update={"seed": seed})
            model = forest_train(fused.rows(users), labels, train.classes, config, args.threads)
        else:
            model = logistic_train(fused.rows(users), labels, train.classes, run.logistic)
    if args.save_model:
        save_classifier(model, args.save_model)
    dist = model.predict(fused)
    predicted = predict(dist)
    write_predictions(dist, predicted, args.output)
    return {"model": model.kind, "users": len(fused.users), "absent": int(fused.absent.sum())}


def cmd_weak_label(args, run: RunConfig) -> dict:
    rule = KeywordRule.from_json_file(args.rules) if args.rules else KeywordRule.default_us()
    labeled = seed_from_profiles(args.profiles, rule)
    save_labels(labeled, args.output)
    return {"labeled": len(labeled), "counts": labeled.class_counts()}


def cmd_evaluate(args, run: RunConfig) -> dict:
    gold = load_labels(args.gold, _classes(args.classes))
    users, predicted = read_predictions(args.predictions, gold.classes)
    if args.user_type:
        gold = gold.by_type(UserSource(args.user_type).user_type)
    report = evaluate(users, predicted, gold, args.exclude_abstain).to_dict()
    if args.group:
        mapping = json.loads(Path(args.group).read_text(encoding="utf-8"))
        coarse_pred, _ = group_labels(predicted, gold.classes, mapping)
        report["grouped"] = evaluate(
            users, coarse_pred, group_labeled_set(gold, mapping), args.exclude_abstain
        ).to_dict()
    if args.interactions:
        store, _ = ingest_file(args.interactions, threads=args.threads)
        report["coverage"] = coverage(gold.users, args.requires or [], store)
    return report


def cmd_cost_plan(args, run: RunConfig) -> dict:
    table = run.rate_table
    if args.counts:
        df = pd.read_csv(args.counts, dtype={"user": str}, keep_default_na=False)
        counts = df["count"].astype(int).tolist()
        return cost_model.cost_plan(counts, table.get(args.endpoint), args.endpoint).to_dict()
    if not args.interactions:
        raise ConfigError("cost-plan needs --counts or --interactions")
    store, registry = ingest_file(args.interactions, threads=args.threads)
    users = list(registry)
    if args.signals:
        endpoints = cost_model.endpoints_for(args.signals)
        plan = cost_model.combined_cost_plan(
            {ep: cost_model.endpoint_counts(store, users, ep) for ep in endpoints}, table
        )
    else:
        counts = cost_model.endpoint_counts(store, users, args.endpoint)
        plan = cost_model.cost_plan(counts, table.get(args.endpoint), args.endpoint)
    return plan.to_dict()


def cmd_polarization(args, run: RunConfig) -> dict:
    graph = load_graph(args.graph)
    labels = load_labels(args.labels, _classes(args.classes))
    q = modularity(graph, partition_from_labels(graph, labels))
    out: dict[str, Any] = {"modularity": q}
    if args.output or args.plot:
        fractions = [float(f) for f in args.fractions.split(",")]
        points = noise_sweep(graph, labels, fractions, args.trials, _seed(args, run), args.threads)
        if args.output:
            write_curve(points, args.output)
        if args.plot:
            plot_curve(points, args.plot)
        out["curve"] = [p.__dict__ for p in points]
    return out


def cmd_synth(args, run: RunConfig) -> dict:
    update: dict[str, Any] = {"seed": _seed(args, run)}
    if args.blocks:
        update["block_sizes"] = [int(b) for b in args.blocks.split(",")]
    for name in ("p_in", "p_out", "seed_fraction", "politician_fraction", "politician_density"):
        value = getattr(args, name)
        if value is not None:
            update[name] = value
    if args.class_names:
        update["class_names"] = [c.strip() for c in args.class_names.split(",")]
    config = SbmConfig.model_validate({**run.sbm.model_dump(), **update})
    if args.signal:
        spec = {}
        for item in args.signal:
            kind, p_in, p_out = item.split(":")
            spec[SignalKind(kind)] = (float(p_in), float(p_out))
        graphs, gold, seeds = multi_signal_generate(config, spec)
    else:
        data = generate(config)
        graphs, gold, seeds = {data.graph.signal: data.graph}, data.gold, data.seeds
    paths = write_synthetic(graphs, gold, seeds, args.out_dir)
    return {
        "users": len(gold),
        "edges": {s: g.nnz for s, g in graphs.items()},
        "seeds": len(seeds),
        "files": {k: str(v) for k, v in paths.items()},
    }


def cmd_experiment(args, run: RunConfig) -> dict:
    seed = _seed(args, run)
    update: dict[str, Any] = {"seed": seed}
    for name in ("repetitions", "test_fraction", "method"):
        value = getattr(args, name)
        if value is not None:
            update[name] = value
    if args.signals:
        update["signals"] = args.signals
    if args.seed_source:
        update["seed_source"] = args.seed_source
    if args.test_source:
        update["test_source"] = args.test_source
    if args.exclude_abstain:
        update["exclude_abstain"] = True
    plan = ExperimentPlan.model_validate({**run.experiment.model_dump(), **update})
    if plan.method not in pipelines.METHODS:
        raise ConfigError(f"unknown method {plan.method!r}; choose from {list(pipelines.METHODS)}")
    gold = load_labels(args.gold, _classes(args.classes))

    store = None
    if plan.method == "embedding_forest":
        if not args.embeddings:
            raise ConfigError("--embeddings is required for embedding_forest")
        forest_config = run.forest.model_copy(update={"seed": derive_seed(seed, "forest") % 2**32})
        pipeline = pipelines.embedding_forest_pipeline(
            [_read_embedding(p) for p in args.embeddings], forest_config, args.threads
        )
    else:
        if not args.interactions:
            raise ConfigError(f"--interactions is required for {plan.method}")
        graphs, store = _graphs_from_interactions(args.interactions, plan.signals, args.threads)
        if plan.method == "label_propagation":
            pipeline = pipelines.label_propagation_pipeline(_square(graphs), run.propagation)
        else:
            activity = {g.signal: store.activity_counts(SignalKind(g.signal)) for g in graphs}
            gcn_config = run.gcn.model_copy(update={"seed": derive_seed(seed, "gcn")})
            if plan.method == "gcn_head":
                pipeline = pipelines.gcn_head_pipeline(
                    union_graphs(_square(graphs)) if len(graphs) > 1 else graphs[0],
                    gcn_config,
                    activity.get(graphs[0].signal),
                )
            else:
                forest_config = run.forest.model_copy(
                    update={"seed": derive_seed(seed, "forest") % 2**32}
                )
                pipeline = pipelines.gcn_forest_pipeline(
                    graphs, gcn_config, forest_config, activity, args.threads
                )

    result = run_experiment(plan, pipeline, gold, args.threads)
    users_per_window = None
    if store is not None:
        endpoints = cost_model.endpoints_for(plan.signals)
        users = gold.users
        users_per_window = cost_model.combined_cost_plan(
            {ep: cost_model.endpoint_counts(store, users, ep) for ep in endpoints},
            run.rate_table,
        ).users_per_window
    summary = result.summary(users_per_window)
    if args.output:
        write_results([summary], args.output)
    summary["accuracies"] = [r.metrics.accuracy for r in result.repetitions]
    return summary


def cmd_schema(args, run: RunConfig) -> dict:
    write_schema(args.output)
    return {"schema": str(args.output)}


# ---------------------------
# parser
# ---------------------------
def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Master RNG seed (falls back to master_seed in --config or PARTY_DEFAULT_SEED)",
    )


def _add_classes(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--classes",
        default=None,
        help="Comma-separated class order; inferred (sorted) from the label file if omitted",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="party-toolkit",
        description="Infer party affiliation of social media users from interaction graphs.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads (default PARTY_THREADS)",
    )
    parser.add_argument("--json", action="store_true", help="Print results as JSON on stdout")
    parser.add_argument("--log-level", default=None, help="Logging level (default PARTY_LOG_LEVEL)")
    parser.add_argument("--config", default=None, help="Run config JSON overriding stage defaults")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="Parse and merge Interaction JSONL")
    p.add_argument("--input", required=True, help="Interaction JSONL file")
    p.add_argument("--output", default=None, help="Write merged records as canonical JSONL")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-graph", help="Build a direct or bipartite graph artifact")
    p.add_argument("--input", required=True, help="Interaction JSONL file")
    p.add_argument(
        "--kind",
        nargs="+",
        required=True,
        choices=KIND_CHOICES,
        help="Signal kind(s); several are summed",
    )
    p.add_argument("--binary", action="store_true", help="Clip edge weights to 1")
    p.add_argument("--output", required=True, help="Graph artifact path")
    p.add_argument("--edge-list", default=None, help="Also export a src/dst/weight TSV")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("project", help="Project a graph to its co-activity graph")
    p.add_argument("--input", required=True, help="Graph artifact")
    p.add_argument("--output", required=True, help="Projected graph artifact path")
    p.add_argument("--block-rows", type=int, default=4096, help="Rows per sparse product block")
    p.add_argument(
        "--row-normalize",
        action="store_true",
        help="Scale projection rows to sum to 1 (default: raw co-activity counts)",
    )
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("propagate", help="Label propagation from seed labels")
    p.add_argument("--graph", required=True, help="Graph artifact")
    p.add_argument("--seeds", required=True, help="Seed Label CSV")
    _add_classes(p)
    p.add_argument("--iterations", type=int, default=None, help="Propagation iterations")
    p.add_argument(
        "--alpha",
        type=float,
        default=None,
        help="Rate at which new label mass replaces old",
    )
    p.add_argument(
        "--graph-mode",
        choices=["direct", "projected"],
        default=None,
        help="Symmetrized direct or projected graph",
    )
    p.add_argument(
        "--no-clamp",
        action="store_true",
        help="Do not re-clamp seed rows after each iteration",
    )
    p.add_argument(
        "--abstain-threshold",
        type=float,
        default=0.0,
        help="Abstain when the top score is at most this",
    )
    p.add_argument("--output", required=True, help="Predictions CSV path")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("majority-vote", help="Weighted majority label of seeded neighbours")
    p.add_argument("--graph", required=True, help="Graph artifact")
    p.add_argument("--seeds", required=True, help="Seed Label CSV")
    _add_classes(p)
    p.add_argument(
        "--graph-mode",
        choices=["direct", "projected"],
        default=None,
        help="Symmetrized direct or projected graph",
    )
    p.add_argument("--output", required=True, help="Predictions CSV path")
    p.set_defaults(func=cmd_majority_vote)

    p = sub.add_parser("train-gcn", help="Train a GCN and write user embeddings")
    p.add_argument("--graph", required=True, help="Graph artifact")
    p.add_argument("--seeds", required=True, help="Seed Label CSV")
    _add_classes(p)
    _add_seed(p)
    p.add_argument("--epochs", type=int, default=None, help="Training epochs")
    p.add_argument("--hidden-dim", type=int, default=None, help="Embedding width")
    p.add_argument(
        "--layers",
        type=int,
        choices=[1, 2],
        default=None,
        help="Graph convolution layers",
    )
    p.add_argument("--learning-rate", type=float, default=None, help="Adam learning rate")
    p.add_argument(
        "--graph-mode",
        choices=["direct", "projected"],
        default=None,
        help="Train on the symmetrized direct or the projected graph",
    )
    p.add_argument("--unsupervised", action="store_true", help="Link prediction only")
    p.add_argument("--interactions", default=None, help="Interaction JSONL for activity counts")
    p.add_argument(
        "--output",
        required=True,
        help="Embedding path (.tsv for TSV, otherwise binary)",
    )
    p.add_argument("--log-csv", default=None, help="Per-epoch loss log CSV")
    p.add_argument(
        "--head-output",
        default=None,
        help="Predictions CSV from the classification head",
    )
    p.set_defaults(func=cmd_train_gcn)

    p = sub.add_parser("fuse", help="Concatenate per-signal embeddings")
    p.add_argument("--embeddings", nargs="+", required=True, help="Embedding TSV or binary files")
    p.add_argument("--order", default=None, help="Comma-separated signal order")
    p.add_argument("--output", required=True, help="Fused Embedding TSV path")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("classify", help="Random forest or logistic classifier over embeddings")
    p.add_argument(
        "--features",
        nargs="+",
        required=True,
        help="Embedding TSV or binary files, fused in order",
    )
    p.add_argument("--order", default=None, help="Comma-separated signal order")
    p.add_argument("--labels", default=None, help="Training Label CSV")
    _add_classes(p)
    _add_seed(p)
    p.add_argument(
        "--model",
        choices=["forest", "logistic"],
        default="forest",
        help="Classifier type",
    )
    p.add_argument("--save-model", default=None, help="Write the trained model artifact")
    p.add_argument(
        "--load-model",
        default=None,
        help="Predict with a saved model instead of training",
    )
    p.add_argument("--output", required=True, help="Predictions CSV path")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("weak-label", help="Keyword seed labels from profile descriptions")
    p.add_argument("--profiles", required=True, help="Profiles CSV (user,description[,user_type])")
    p.add_argument(
        "--rules",
        default=None,
        help="Rule JSON {class: [keywords]}; US lists by default",
    )
    p.add_argument("--output", required=True, help="Label CSV path")
    p.set_defaults(func=cmd_weak_label)

    p = sub.add_parser("evaluate", help="Accuracy, F1, confusion and coverage")
    p.add_argument("--predictions", required=True, help="Predictions CSV")
    p.add_argument("--gold", required=True, help="Gold Label CSV")
    _add_classes(p)
    p.add_argument(
        "--exclude-abstain",
        action="store_true",
        help="Drop abstentions instead of counting them wrong",
    )
    p.add_argument(
        "--user-type",
        choices=[s.value for s in UserSource],
        default=None,
        help="Evaluate on one user type only",
    )
    p.add_argument("--group", default=None, help="JSON mapping of classes onto coarse groups")
    p.add_argument("--interactions", default=None, help="Interaction JSONL for signal coverage")
    p.add_argument(
        "--requires",
        nargs="*",
        choices=KIND_CHOICES,
        default=None,
        help="Signal kinds the method needs",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cost-plan", help="Users retrievable per rate-limit window")
    p.add_argument("--endpoint", default="tweets", help="Endpoint name in the rate table")
    p.add_argument("--counts", default=None, help="CSV with user,count columns")
    p.add_argument("--interactions", default=None, help="Interaction JSONL to count items from")
    p.add_argument(
        "--signals",
        nargs="*",
        choices=KIND_CHOICES,
        default=None,
        help="Plan for these signals; slowest endpoint wins",
    )
    p.set_defaults(func=cmd_cost_plan)

    p = sub.add_parser("polarization", help="Modularity of the labeled partition and noise sweep")
    p.add_argument("--graph", required=True, help="Graph artifact")
    p.add_argument("--labels", required=True, help="Label CSV defining the partition")
    _add_classes(p)
    _add_seed(p)
    p.add_argument(
        "--fractions",
        default="0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5",
        help="Comma-separated swap fractions",
    )
    p.add_argument("--trials", type=int, default=20, help="Trials per swap fraction")
    p.add_argument("--output", default=None, help="Curve CSV path (runs the sweep)")
    p.add_argument("--plot", default=None, help="Curve image path (runs the sweep)")
    p.set_defaults(func=cmd_polarization)

    p = sub.add_parser("synth", help="Generate a stochastic block model fixture")
    _add_seed(p)
    p.add_argument("--out-dir", required=True, help="Output directory")
    p.add_argument("--blocks", default=None, help="Comma-separated block sizes")
    p.add_argument("--p-in", type=float, default=None, help="Within-block edge probability")
    p.add_argument("--p-out", type=float, default=None, help="Cross-block edge probability")
    p.add_argument(
        "--seed-fraction",
        type=float,
        default=None,
        help="Fraction of each block given seed labels",
    )
    p.add_argument(
        "--politician-fraction",
        type=float,
        default=None,
        help="Fraction of each block typed politician",
    )
    p.add_argument(
        "--politician-density",
        type=float,
        default=None,
        help="Edge probability multiplier for politician endpoints",
    )
    p.add_argument("--class-names", default=None, help="Comma-separated class names, one per block")
    p.add_argument(
        "--signal",
        action="append",
        default=None,
        help="kind:p_in:p_out, repeatable, for multi-signal fixtures",
    )
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="Repeated random-split evaluation of a method")
    p.add_argument("--gold", required=True, help="Gold Label CSV")
    _add_classes(p)
    _add_seed(p)
    p.add_argument("--interactions", default=None, help="Interaction JSONL")
    p.add_argument(
        "--embeddings",
        nargs="*",
        default=None,
        help="Embedding files for embedding_forest",
    )
    p.add_argument(
        "--method",
        choices=list(pipelines.METHODS),
        default=None,
        help="Prediction method",
    )
    p.add_argument(
        "--signals",
        nargs="+",
        choices=KIND_CHOICES,
        default=None,
        help="Signals the method uses",
    )
    p.add_argument("--repetitions", type=int, default=None, help="Number of random splits")
    p.add_argument(
        "--test-fraction",
        type=float,
        default=None,
        help="Share of the test pool held out",
    )
    p.add_argument(
        "--seed-source",
        choices=[s.value for s in UserSource],
        default=None,
        help="User type training seeds come from",
    )
    p.add_argument(
        "--test-source",
        choices=[s.value for s in UserSource],
        default=None,
        help="User type test users come from",
    )
    p.add_argument(
        "--exclude-abstain",
        action="store_true",
        help="Drop abstentions instead of counting them wrong",
    )
    p.add_argument("--output", default=None, help="Results CSV path")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("schema", help="Write the run config JSON schema")
    p.add_argument("--output", default="docs/run_config.schema.json", help="Schema path")
    p.set_defaults(func=cmd_schema)

    return parser


def _emit(result: dict, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(json.dumps(result, sort_keys=True, default=float) + "\n")
        return
    for key, value in result.items():
        sys.stdout.write(f"{key}: {value}\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_app_settings()
    setup_logging(args.log_level or settings.LOG_LEVEL)
    args.threads = args.threads or settings.THREADS
    torch.set_num_threads(args.threads)

    handler: Callable[[argparse.Namespace, RunConfig], dict] = args.func
    try:
        run = RunConfig.from_json_file(args.config) if args.config else RunConfig()
        result = handler(args, run)
    except (ToolkitError, FileNotFoundError, KeyError, ValueError) as e:
        message = str(e.args[0]) if isinstance(e, KeyError) and e.args else str(e)
        sys.stderr.write(f"error: {type(e).__name__}: {' '.join(message.split())}\n")
        return 1
    _emit(result, args.json)
    return 0


if __name__ == "__main__":
    sys.exit(main())
