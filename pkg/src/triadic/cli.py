"""Command-line front end.

Every subcommand writes CSV artifacts plus ``manifest.json`` into the output
directory.  The manifest records the resolved options, seeds, library versions
and the SHA-256 of every input and artifact; ``triadic rerun`` replays it.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 invalid input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy
import yaml

from . import __version__
from .dataset import SCHEMES, PredictorSet, build_samples, course_keys, split_by_two_paths
from .deepnet import DeepConfig
from .embedding import EmbeddingTable, WalkConfig, embed_graph, locality_summary, walk_locality, write_walks
from .errors import ConfigurationError, EmptyInputError, NotFoundError, ParseError, ValidationError
from .evaluation import bacc_histogram, summarize, write_histogram_csv, write_reports_csv
from .experiments import (
    CLASSIFIERS, connected_runs, curve_models, embedding_samples, isolated_runs,
    treatment_one, treatment_two,
)
from .forest import ForestConfig
from .graph import (
    mean_nominations_by_prosociality, prosociality_distribution, relation_type_distribution,
    two_path_histogram, two_path_stats,
)
from .io import read_network, read_rows, write_network, write_rows
from .mlp import TrainConfig, ensemble_curve, ensemble_surface
from .synth import BlockConfig, SynthConfig, block_corpus, generate_network, nucleate, planted_threshold_network

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3
OUTPUT_ENV = "TRIADIC_OUTPUT_DIR"
MANIFEST = "manifest.json"
# options that never affect artifacts and are not replayed
_NOT_RECORDED = {"command", "config", "output_dir", "handler"}


class UsageError(Exception):
    pass


def sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _versions() -> dict[str, str]:
    return {"triadic": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


# -- shared helpers ---------------------------------------------------------------

def _load_graph(args):
    for p in (args.nodes, args.edges):
        if not Path(p).is_file():
            raise ValidationError(f"input file not found: {p}")
    g, report = read_network(args.nodes, args.edges)
    if report.dropped_nodes:
        print(f"dropped {len(report.dropped_nodes)} incomplete students and "
              f"{report.dropped_edges} of their relations", file=sys.stderr)
    return g


def _load_labels(path) -> dict:
    if not Path(path).is_file():
        raise ValidationError(f"labels file not found: {path}")
    labels = {}
    for line, rec in enumerate(read_rows(path, ("src", "dst", "label")), start=2):
        if rec["label"] not in ("0", "1"):
            raise ParseError(line, f"{path}: label must be 0 or 1")
        labels[rec["src"], rec["dst"]] = int(rec["label"])
    return labels


def _seeds(args) -> list[int]:
    seeds = list(range(args.seed, args.seed + args.seeds))
    if not seeds:
        raise ValidationError("seed list is empty")
    return seeds


def _train_config(args) -> TrainConfig:
    return TrainConfig(lr0=args.lr0, lr_decay=args.lr_decay, minibatch=args.minibatch,
                       steps=args.steps, hidden=args.hidden)


def _dist_rows(dist: dict):
    return ([k, v] for k, v in sorted(dist.items()))


# -- subcommands --------------------------------------------------------------------

def cmd_stats(args, out: Path) -> list[Path]:
    g = _load_graph(args)
    files = [
        write_rows(out / "relation_types.csv", ["weight", "fraction"], _dist_rows(relation_type_distribution(g))),
        write_rows(out / "two_paths.csv", ["two_path_count", "fraction"], _dist_rows(two_path_histogram(g))),
    ]
    if g.has_attributes and g.n_nodes:
        files.append(write_rows(out / "prosociality.csv", ["prosociality", "fraction"],
                                _dist_rows(prosociality_distribution(g))))
        rows = []
        for sign in ("friend", "enemy"):
            for direction in ("out", "in"):
                for level, (mean, sem) in sorted(mean_nominations_by_prosociality(g, sign, direction).items()):
                    rows.append([sign, direction, level, mean, sem])
        files.append(write_rows(out / "nominations.csv", ["sign", "direction", "prosociality", "mean", "sem"], rows))
    return files


def cmd_influence(args, out: Path) -> list[Path]:
    g = _load_graph(args)
    influence, paths = two_path_stats(g)
    rows = ([i, j, w, influence[i, j], paths[i, j]] for i, j, w in g.edges())
    return [write_rows(out / "influence.csv", ["src", "dst", "weight", "influence", "two_path_count"], rows)]


def cmd_train_local(args, out: Path) -> list[Path]:
    g = _load_graph(args)
    labels = _load_labels(args.labels) if args.labels else None
    scheme = SCHEMES[args.scheme]
    seeds = _seeds(args)
    reports = []
    for name in args.predictors:
        ps = PredictorSet(name)
        if ps is PredictorSet.embedding_pair:
            raise ConfigurationError("embedding_pair belongs to train-global")
        connected, isolated = split_by_two_paths(build_samples(g, scheme, ps, labels=labels))
        if args.relations in ("connected", "both") and connected:
            reports += connected_runs(connected, ps, seeds, _train_config(args), args.test_fraction)[0]
        if args.relations in ("isolated", "both") and len(isolated) >= args.folds:
            config = TrainConfig.for_isolated(lr0=args.lr0, lr_decay=args.lr_decay,
                                              minibatch=args.minibatch, hidden=args.hidden,
                                              steps=args.isolated_steps)
            reports += isolated_runs(isolated, ps, args.folds, seeds[0], config)
    if not reports:
        raise ValidationError("no relations to train on")
    summary = []
    for key in sorted({(r.metadata["relations"], r.metadata["predictors"]) for r in reports}):
        s = summarize([r for r in reports if (r.metadata["relations"], r.metadata["predictors"]) == key])
        summary.append([*key, s["mean"], s["sem"], s["n"], s["n_degenerate"]])
    return [
        write_reports_csv(out / "reports.csv", reports),
        write_rows(out / "summary.csv", ["relations", "predictors", "mean_bacc", "sem", "n", "n_degenerate"], summary),
    ]


def cmd_curves(args, out: Path) -> list[Path]:
    g = _load_graph(args)
    seeds = _seeds(args)
    scheme = SCHEMES[args.scheme]
    files = []
    models = curve_models(g, PredictorSet.influence_only, seeds, scheme, _train_config(args))
    curve = ensemble_curve(models, (args.influence_min, args.influence_max), args.points)
    files.append(write_rows(out / "influence_curve.csv",
                            ["influence", "p_friend", "p_friend_sem", "p_enemy", "p_enemy_sem"],
                            curve.tolist()))
    models = curve_models(g, PredictorSet.prosociality_only, seeds, scheme, _train_config(args),
                          connected_only=not args.all_relations)
    mean, sem = ensemble_surface(models)
    grid = (0.0, 1 / 3, 2 / 3, 1.0)
    rows = [[grid[a], grid[b], float(mean[a, b]), float(sem[a, b])]
            for a in range(len(grid)) for b in range(len(grid))]
    files.append(write_rows(out / "prosociality_surface.csv",
                            ["src_prosociality", "dst_prosociality", "p_friend", "p_friend_sem"], rows))
    return files


def _walk_config(args) -> WalkConfig:
    return WalkConfig(p=args.p, q=args.q, walks_per_node=args.walks_per_node, walk_length=args.walk_length,
                      dimension=args.dimension, window=args.window, negatives=args.negatives,
                      epochs=args.epochs, seed=args.seed)


def cmd_embed(args, out: Path) -> list[Path]:
    g = _load_graph(args)
    table, walks = embed_graph(g, _walk_config(args))
    summary = locality_summary(walk_locality(walks, g))
    rows = [[d, f] for d, f in sorted(summary["distribution"].items())]
    return [
        table.to_csv(out / "embedding.csv"),
        write_walks(out / "walks.txt", walks, table.nodes),
        write_rows(out / "locality.csv", ["max_distance", "fraction"], rows),
        write_rows(out / "locality_summary.csv", ["mean", "std", "sem"],
                   [[summary["mean"], summary["std"], summary["sem"]]]),
    ]


def cmd_train_global(args, out: Path) -> list[Path]:
    g = _load_graph(args)
    files = []
    if args.embedding:
        if not Path(args.embedding).is_file():
            raise ValidationError(f"embedding file not found: {args.embedding}")
        table = EmbeddingTable.from_csv(args.embedding)
    else:
        table, _ = embed_graph(g, _walk_config(args))
        files.append(table.to_csv(out / "embedding.csv"))
    samples = embedding_samples(g, table, SCHEMES[args.scheme], args.merge)
    if args.model == "deep":
        fit = CLASSIFIERS["deep"](DeepConfig(lr0=args.deep_lr0, epochs=args.deep_epochs, minibatch=args.deep_minibatch))
    else:
        fit = CLASSIFIERS["forest"](ForestConfig(n_trees=args.trees, max_depth=args.max_depth))
    seeds = list(range(args.seed, args.seed + args.runs)) if args.runs else None
    if args.treatment == "I":
        reports = treatment_one(samples, fit, seeds or list(range(args.seed, args.seed + 10)),
                                args.test_fraction, args.smote_k, model=args.model)
    else:
        courses = None
        if args.holdout:
            wanted = [tuple(c.split(":", 1)) for c in args.holdout]
            known = {(str(s), str(c)): (s, c) for s, c in course_keys(samples)}
            missing = [w for w in wanted if w not in known]
            if missing:
                raise NotFoundError(f"unknown courses {missing}")
            courses = [known[w] for w in wanted]
        reports = treatment_two(samples, fit, seeds, courses, args.smote_k, model=args.model)
    files.append(write_reports_csv(out / "reports.csv", reports))
    s = summarize(reports)
    files.append(write_rows(out / "summary.csv", ["treatment", "model", "mean_bacc", "sem", "n", "n_degenerate"],
                            [[args.treatment, args.model, s["mean"], s["sem"], s["n"], s["n_degenerate"]]]))
    if s["n"]:
        edges, density = bacc_histogram(reports, args.bins, (0.0, 1.0))
        files.append(write_histogram_csv(out / "histogram.csv", edges, density))
    return files


def cmd_simulate(args, out: Path) -> list[Path]:
    nodes, edges = out / "nodes.csv", out / "edges.csv"
    files = [nodes, edges]
    if args.kind in ("calibrated", "nucleated"):
        config = SynthConfig(n_schools=args.schools, courses_per_school=args.courses,
                             students_per_course=args.students, target_out_degree=args.out_degree,
                             mu=args.mu, scale=args.scale, noise=args.noise, resign=args.resign, seed=args.seed)
        g = generate_network(config) if args.kind == "calibrated" else nucleate(config)
        write_network(g, nodes, edges)
    elif args.kind == "planted":
        planted = planted_threshold_network(args.students, args.theta, args.eta, args.seed)
        write_network(planted.graph, nodes, edges)
        rows = ([i, j, planted.labels[i, j], planted.clean_labels[i, j], planted.influence[i, j]]
                for i, j, _ in planted.graph.edges())
        files.append(write_rows(out / "labels.csv", ["src", "dst", "label", "clean_label", "influence"], rows))
    else:
        g, blocks = block_corpus(BlockConfig(n_schools=args.schools, courses_per_school=args.courses,
                                             students_per_course=args.students, seed=args.seed))
        write_network(g, nodes, edges)
        files.append(write_rows(out / "blocks.csv", ["student_id", "block"], sorted(blocks.items())))
    return files


COMMANDS: dict[str, Callable] = {
    "stats": cmd_stats, "influence": cmd_influence, "train-local": cmd_train_local, "curves": cmd_curves,
    "embed": cmd_embed, "train-global": cmd_train_global, "simulate": cmd_simulate,
}
_INPUT_OPTIONS = ("nodes", "edges", "labels", "embedding")


# -- manifests ----------------------------------------------------------------------

def _recorded_options(args) -> dict[str, Any]:
    opts = {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED}
    for k in _INPUT_OPTIONS:
        if opts.get(k):
            opts[k] = str(Path(opts[k]).resolve())
    return opts


def write_manifest(args, out: Path, artifacts: list[Path]) -> Path:
    options = _recorded_options(args)
    inputs = {k: {"path": options[k], "sha256": sha256(options[k])}
              for k in _INPUT_OPTIONS if options.get(k)}
    manifest = {
        "command": args.command,
        "options": options,
        "seed": options.get("seed"),
        "versions": _versions(),
        "inputs": inputs,
        "artifacts": {p.relative_to(out).as_posix(): sha256(p) for p in sorted(set(artifacts))},
    }
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def execute(command: str, options: dict[str, Any], out: Path) -> Path:
    """Run one subcommand with fully resolved ``options``; returns the manifest path."""
    out.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(command=command, **options)
    artifacts = COMMANDS[command](args, out)
    return write_manifest(args, out, artifacts)


def cmd_rerun(args) -> int:
    path = Path(args.manifest)
    if not path.is_file():
        raise ValidationError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("command") not in COMMANDS:
        raise ValidationError(f"{path}: unknown command {manifest.get('command')!r}")
    for name, info in manifest.get("inputs", {}).items():
        if not Path(info["path"]).is_file() or sha256(info["path"]) != info["sha256"]:
            raise ValidationError(f"input {name} changed or missing: {info['path']}")
    out = Path(args.output_dir)
    if out.resolve() == path.parent.resolve():
        raise UsageError("rerun needs an output directory different from the original run")
    new = json.loads(execute(manifest["command"], manifest["options"], out).read_text(encoding="utf-8"))
    diffs = sorted(k for k in set(manifest["artifacts"]) | set(new["artifacts"])
                   if manifest["artifacts"].get(k) != new["artifacts"].get(k))
    for k in diffs:
        print(f"artifact differs: {k}", file=sys.stderr)
    print("identical" if not diffs else f"{len(diffs)} artifacts differ")
    return EXIT_OK if not diffs else EXIT_RUNTIME


# -- argument parsing -------------------------------------------------------------------

def _graph_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", required=True, help="students CSV")
    p.add_argument("--edges", required=True, help="relations CSV (src,dst,weight)")


def _mlp_options(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    p.add_argument("--lr0", type=float, default=d.lr0)
    p.add_argument("--lr-decay", type=float, default=d.lr_decay)
    p.add_argument("--minibatch", type=int, default=d.minibatch)
    p.add_argument("--steps", type=int, default=d.steps)
    p.add_argument("--hidden", type=int, default=d.hidden)


def _walk_options(p: argparse.ArgumentParser) -> None:
    d = WalkConfig()
    p.add_argument("--p", type=float, default=d.p, help="return parameter")
    p.add_argument("--q", type=float, default=d.q, help="in-out parameter")
    p.add_argument("--walks-per-node", type=int, default=d.walks_per_node)
    p.add_argument("--walk-length", type=int, default=d.walk_length)
    p.add_argument("--dimension", type=int, default=d.dimension)
    p.add_argument("--window", type=int, default=d.window)
    p.add_argument("--negatives", type=int, default=d.negatives)
    p.add_argument("--epochs", type=int, default=d.epochs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triadic", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=None,
                        help=f"artifact directory (default: ${OUTPUT_ENV} or ./triadic-output)")
    common.add_argument("--config", default=None, help="JSON or YAML file of option defaults")
    common.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("stats", parents=[common], help="relation, two-path and prosociality tables")
    _graph_inputs(p)

    p = sub.add_parser("influence", parents=[common], help="per-edge triadic influence")
    _graph_inputs(p)

    p = sub.add_parser("train-local", parents=[common], help="local-predictor accuracies")
    _graph_inputs(p)
    p.add_argument("--predictors", nargs="+", default=["influence_and_traits", "influence_only",
                                                       "traits_only", "prosociality_only"],
                   choices=[ps.value for ps in PredictorSet if ps is not PredictorSet.embedding_pair])
    p.add_argument("--relations", choices=("connected", "isolated", "both"), default="both",
                   help="isolated runs only apply to trait-based predictor sets")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="default")
    p.add_argument("--labels", default=None, help="CSV (src,dst,label) overriding the class scheme")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds starting at --seed")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--isolated-steps", type=int, default=1000)
    _mlp_options(p)

    p = sub.add_parser("curves", parents=[common], help="learned friend probability curves")
    _graph_inputs(p)
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="default")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--influence-min", type=float, default=-10.0)
    p.add_argument("--influence-max", type=float, default=30.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--all-relations", action="store_true",
                   help="train the prosociality surface on isolated relations too")
    _mlp_options(p)

    p = sub.add_parser("embed", parents=[common], help="biased walks and node embeddings")
    _graph_inputs(p)
    _walk_options(p)

    p = sub.add_parser("train-global", parents=[common], help="embedding-based classifiers")
    _graph_inputs(p)
    p.add_argument("--treatment", choices=("I", "II"), default="I")
    p.add_argument("--model", choices=sorted(CLASSIFIERS), default="deep")
    p.add_argument("--embedding", default=None, help="embedding CSV; computed when omitted")
    p.add_argument("--merge", default="hadamard", choices=("hadamard", "average", "abs_diff",
                                                           "squared_diff", "concat"))
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="default")
    p.add_argument("--runs", type=int, default=None,
                   help="number of runs (treatment I default 10; treatment II default one per course)")
    p.add_argument("--holdout", nargs="+", default=None, metavar="SCHOOL:COURSE")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--deep-lr0", type=float, default=DeepConfig().lr0)
    p.add_argument("--deep-epochs", type=int, default=DeepConfig().epochs)
    p.add_argument("--deep-minibatch", type=int, default=DeepConfig().minibatch)
    p.add_argument("--trees", type=int, default=ForestConfig().n_trees)
    p.add_argument("--max-depth", type=int, default=ForestConfig().max_depth)
    _walk_options(p)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic network")
    p.add_argument("--kind", choices=("calibrated", "nucleated", "planted", "blocks"), default="calibrated")
    d = SynthConfig()
    p.add_argument("--schools", type=int, default=d.n_schools)
    p.add_argument("--courses", type=int, default=d.courses_per_school)
    p.add_argument("--students", type=int, default=d.students_per_course,
                   help="students per course (planted: total nodes)")
    p.add_argument("--out-degree", type=float, default=d.target_out_degree)
    p.add_argument("--mu", type=float, default=d.mu)
    p.add_argument("--scale", type=float, default=d.scale)
    p.add_argument("--noise", type=float, default=d.noise)
    p.add_argument("--resign", action="store_true")
    p.add_argument("--theta", type=float, default=5.0, help="planted threshold")
    p.add_argument("--eta", type=float, default=0.05, help="planted label flip rate")

    p = sub.add_parser("rerun", help="replay a manifest and compare artifacts")
    p.add_argument("manifest")
    p.add_argument("--output-dir", required=True)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Use the ``--config`` file (if any) as defaults for the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a mapping of option names to values")
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if known.command not in sub.choices:
        return
    target = sub.choices[known.command]
    dests = {a.dest for a in target._actions}
    defaults = {}
    for key, value in data.items():
        dest = str(key).replace("-", "_")
        if dest not in dests:
            raise UsageError(f"{path}: unknown option {key!r} for {known.command}")
        defaults[dest] = value
    for action in target._actions:
        if action.dest in defaults and action.required:
            action.required = False
    target.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        if args.command == "rerun":
            return cmd_rerun(args)
        for name in ("nodes", "edges"):
            if hasattr(args, name) and getattr(args, name) is None:
                raise UsageError(f"--{name} is required")
        out = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "triadic-output")
        options = _recorded_options(args)
        manifest = execute(args.command, options, out)
        print(manifest)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ParseError, ConfigurationError, NotFoundError, EmptyInputError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - any other failure maps to the runtime code
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
