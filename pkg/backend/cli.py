"""
DAG-WGAN Studio - Command Line
==============================
simulate -> train -> evaluate -> generate -> dimprob

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 training did not converge (results are still written).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from backend.errors import ConfigError, DagWganError, GraphFormatError, TrainingDivergedError
from backend.services.autoencoder_service import DataMode
from backend.services.dataset_service import (
    Checkpoint,
    load_checkpoint,
    load_continuous,
    load_graph,
    load_manifest_data,
    load_train_config,
    one_hot_decode,
    output_dir,
    probability_columns,
    save_checkpoint,
    save_continuous,
    save_discrete,
    write_continuous_benchmark,
    write_discrete_benchmark,
    write_training_outputs,
)
from backend.services.metrics_service import (
    dimension_wise_probability,
    evaluate_graphs,
    generate_samples,
    summarize_runs,
    write_dimprob_csv,
    write_dimprob_svg,
    write_run_report,
)
from backend.services.sem_synth_service import (
    DiscreteSimSpec,
    SemSpec,
    SemVariant,
    SynthConfig,
    TransferKind,
)
from backend.services.trainer import TrainResult, get_training_service

logger = logging.getLogger("dagwgan-cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_simulate(args) -> int:
    if args.variant == "discrete":
        spec = DiscreteSimSpec(m=args.m, cardinality=args.cardinality,
                               expected_degree=args.degree, seed=args.seed)
    else:
        spec = SemSpec(m=args.m, variant=SemVariant(args.variant), noise_std=args.noise_std,
                       expected_degree=args.degree, seed=args.seed,
                       transfer=TransferKind(args.transfer))
    out_dir = Path(args.out_dir) if args.out_dir else \
        output_dir() / f"sim_{args.variant}_m{args.m}_seed{args.seed}"
    if args.variant == "discrete":
        manifest = write_discrete_benchmark(out_dir, spec, args.n)
    else:
        manifest = write_continuous_benchmark(out_dir, spec, args.n)
    print(manifest)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_train_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    manifest, data = load_manifest_data(args.data)
    out = Path(args.out)
    if manifest.data_mode is DataMode.DISCRETE:
        node_dim, cards = max(manifest.cardinalities), manifest.cardinalities
    else:
        node_dim, cards = 1, None

    def on_checkpoint(partial: TrainResult):
        save_checkpoint(out, Checkpoint(model=partial.model, critic=partial.critic,
                                        train_config=cfg, auglag=partial.auglag,
                                        converged=partial.converged))
        logger.info(f"Checkpoint written to {out}")

    try:
        result = get_training_service().train(
            data, cfg, manifest.num_nodes, node_dim=node_dim, data_mode=manifest.data_mode,
            cardinalities=cards, on_checkpoint=on_checkpoint,
        )
    except TrainingDivergedError as e:
        print(f"error: {e.message}", file=sys.stderr)
        if e.partial is not None:
            write_training_outputs(out, e.partial, cfg)
            print(f"last good model written to {out}", file=sys.stderr)
        return EXIT_NOT_CONVERGED

    write_training_outputs(out, result, cfg)
    print(json.dumps(result.summary(), sort_keys=True))
    if not result.converged:
        print(f"warning: training did not converge (h={result.final_h:.3e})", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_evaluate(args) -> int:
    truth = load_graph(args.truth)
    report = {}
    if args.learned:
        learned = load_graph(args.learned, dag=False)
        _check_same_size(learned.m, truth.m, args.learned)
        report = evaluate_graphs(learned.edges, truth.edges, truth.m)
    if args.runs:
        runs = {}
        truth_path = Path(args.truth).resolve()
        for path in sorted(Path(args.runs).rglob("*.graph.txt")):
            # ground-truth graphs written by simulate sit next to the runs
            if path.resolve() == truth_path or path.name.startswith("truth."):
                continue
            learned = load_graph(path, dag=False)
            _check_same_size(learned.m, truth.m, path)
            runs[str(path.relative_to(args.runs))] = evaluate_graphs(
                learned.edges, truth.edges, truth.m)["shd"]
        if not runs:
            raise UsageError(f"no *.graph.txt files under {args.runs}")
        summary = summarize_runs(list(runs.values()))
        report["runs"] = runs
        report["summary"] = summary.to_dict()
        if args.report:
            write_run_report(args.report, runs, summary)
    if not report:
        raise UsageError("evaluate needs --learned and/or --runs")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _check_same_size(m_learned: int, m_truth: int, path):
    if m_learned != m_truth:
        raise GraphFormatError(f"{path}: {m_learned} nodes, ground truth has {m_truth}")


def cmd_generate(args) -> int:
    ckpt = load_checkpoint(args.model)
    model = ckpt.model
    rng = np.random.default_rng(args.seed)
    cfg = model.config
    if cfg.data_mode is DataMode.DISCRETE:
        cards = cfg.cardinalities or [cfg.node_dim] * cfg.num_nodes
        if args.sample:
            save_discrete(args.out, one_hot_decode(
                generate_samples(model, args.n, rng, sample_onehot=True), cards))
        else:
            probs, names = probability_columns(generate_samples(model, args.n, rng), cards)
            save_continuous(args.out, probs, names)
    else:
        save_continuous(args.out, generate_samples(model, args.n, rng))
    print(args.out)
    return EXIT_OK


def cmd_dimprob(args) -> int:
    report = dimension_wise_probability(load_continuous(args.real), load_continuous(args.synth))
    write_dimprob_svg(args.out, report)
    if args.csv:
        write_dimprob_csv(args.csv, report)
    if report.correlation_defined:
        print(f"correlation: {report.correlation:.6f}")
    else:
        print(f"correlation: undefined ({report.note})")
    return EXIT_OK


# =============================================================================
# PARSER
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dagwgan", description="Causal structure learning with DAG-WGAN")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="Generate a synthetic benchmark")
    p.add_argument("--m", type=int, required=True, help="Number of nodes")
    p.add_argument("--variant", default="linear",
                   choices=[v.value for v in SemVariant] + ["discrete"])
    p.add_argument("--n", type=int, default=SynthConfig.DEFAULT_SAMPLES)
    p.add_argument("--degree", type=float, default=3.0, help="Expected node degree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--transfer", default=TransferKind.COS_PLUS_ONE.value,
                   choices=[t.value for t in TransferKind], help="h(x) for nonlinear1")
    p.add_argument("--cardinality", type=int, default=3, help="Categories per discrete node")
    p.add_argument("--out-dir", type=Path, help="Defaults under $DAGWGAN_OUTPUT_DIR")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="Learn a DAG from a dataset manifest")
    p.add_argument("--data", type=Path, required=True, help="Dataset manifest (JSON)")
    p.add_argument("--config", type=Path, help="Flat YAML training config")
    p.add_argument("--out", type=Path, required=True, help="Checkpoint path (.npz)")
    p.add_argument("--seed", type=int, help="Overrides the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="SHD against a ground-truth graph")
    p.add_argument("--learned", type=Path)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--runs", type=Path, help="Directory of *.graph.txt files to summarize")
    p.add_argument("--report", type=Path, help="Write a run summary CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="Sample from a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--n", type=int, default=SynthConfig.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--sample", action="store_true",
                   help="Discrete models: write sampled codes instead of probabilities")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dimprob", help="Dimension-wise probability scatter")
    p.add_argument("--real", type=Path, required=True)
    p.add_argument("--synth", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="SVG path")
    p.add_argument("--csv", type=Path, help="Also write the per-dimension means")
    p.set_defaults(func=cmd_dimprob)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        _report(e)
        return EXIT_USAGE
    except DagWganError as e:
        _report(e)
        return EXIT_DATA
    except ValueError as e:
        # pydantic validation of command-line values
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def _report(error: DagWganError):
    print(f"error: {error.message}", file=sys.stderr)
    for hint in error.suggestions:
        print(f"  hint: {hint}", file=sys.stderr)


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
