"""
qnn-graphlearn - train dissipative QNNs on graph-structured quantum data.

Usage:
    qnn-graphlearn gen-data --dataset line --seed 7 --output results/
    qnn-graphlearn train --dataset clusters --gamma-graph -0.5 --seed 1
    qnn-graphlearn sweep --dataset line --shots 30 --jobs 8 --emit-svg
    qnn-graphlearn replicate line --seed 42 --output results/line
    qnn-graphlearn check-gradients --topology 3 2 1 --shots 5
    qnn-graphlearn presets

Exit codes:
    0  success
    1  file system error (unwritable output path, ...)
    2  configuration error, reported before any computation
    3  numerical invariant violated
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from qnn_graphlearn import __version__
from qnn_graphlearn.config import (
    ExperimentConfig,
    check_topology_fits,
    dataset_builder,
    resolve_config,
    resolve_s_values,
)
from qnn_graphlearn.errors import (
    ConfigError,
    DatasetError,
    NumericalInvariantError,
    QnnGraphError,
    TrainingSignalError,
)
from qnn_graphlearn.experiment_defs import list_experiments, print_experiment_summary
from qnn_graphlearn.gradcheck import DEFAULT_PROBE_EPSILONS, finite_difference_check
from qnn_graphlearn.graph_data import (
    DatasetBuilder,
    GraphDataset,
    SupervisionMask,
    list_datasets,
)
from qnn_graphlearn.network import NetworkTopology
from qnn_graphlearn.plots import emit_svg
from qnn_graphlearn.reporting import (
    RunSummary,
    write_run_report,
    write_sweep_csv,
    write_training_csv,
)
from qnn_graphlearn.serialization import (
    build_manifest,
    dataset_to_document,
    network_to_document,
    save_json,
)
from qnn_graphlearn.training import (
    PairedTraining,
    ShotResult,
    SweepTable,
    prepare_shot,
    shot_streams,
    sweep_supervised,
    train_paired,
)

logger = logging.getLogger(__name__)

RULE = "=" * 75
THIN_RULE = "-" * 75

EXIT_OK = 0
EXIT_OS_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# =============================================================================
# Shared setup
# =============================================================================


def _banner(title: str, fields: dict[str, Any]) -> None:
    print("\n" + RULE)
    print(title)
    print(RULE)
    for key, value in fields.items():
        print(f"{key + ':':<15}{value}")
    print(RULE)


def _dataset_label(config: ExperimentConfig) -> str:
    return config.dataset if config.is_builtin else Path(config.dataset).stem


Prepared = tuple[DatasetBuilder, NetworkTopology, GraphDataset]


def _prepare(
    config: ExperimentConfig, *, needs_split: bool = True, needs_sweep: bool = False
) -> Prepared:
    """Resolve builder and topology and check them against a probe dataset.

    Every check runs before any output is written.
    """
    builder = dataset_builder(config)
    topology = config.network_topology()
    probe = builder(np.random.default_rng(config.seed))
    check_topology_fits(topology, probe)
    last = probe.num_vertices - 1
    if needs_split and not 1 <= config.supervised <= last:
        raise ConfigError(
            f"supervised must lie in 1..{last} for a two-arm run, got {config.supervised}"
        )
    if needs_sweep:
        bad = [s for s in resolve_s_values(config, probe.num_vertices) if not 1 <= s <= last]
        if bad:
            raise ConfigError(f"sweep needs 1 <= S <= N-1 = {last}, got S={bad}")
    return builder, topology, probe


def _output_dir(config: ExperimentConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# =============================================================================
# Commands
# =============================================================================


def cmd_gen_data(config: ExperimentConfig) -> int:
    """Write the dataset a ``train`` run with the same seed would use."""
    builder, _, _ = _prepare(config, needs_split=False)
    streams = shot_streams(config.seed, (config.supervised, 0))
    dataset = builder(streams.inputs)
    path = _output_dir(config) / f"dataset_{_dataset_label(config)}.json"
    save_json(dataset_to_document(dataset, seed=config.seed), path)

    _banner(
        "DATASET",
        {
            "Dataset": dataset.name,
            "Seed": config.seed,
            "Vertices": dataset.num_vertices,
            "Edges": dataset.num_edges,
            "Input qubits": dataset.input_qubits,
        },
    )
    for v, w in dataset.edges():
        print(f"  v{v + 1} -- v{w + 1}   weight {dataset.adjacency[v, w]:g}")
    print(THIN_RULE)
    print(f"📁 Dataset saved to: {path}")
    return EXIT_OK


def _run_train(
    config: ExperimentConfig, prepared: Prepared, out_dir: Path
) -> tuple[PairedTraining, list[Path]]:
    builder, topology, _ = prepared
    hyper = config.hyperparams()
    dataset, mask, network = prepare_shot(builder, topology, config.seed, config.supervised, 0)

    _banner(
        "TRAINING (supervised vs supervised + graph)",
        {
            "Dataset": dataset.name,
            "Topology": list(topology.widths),
            "Seed": config.seed,
            "Supervised": [v + 1 for v in mask.supervised],
            "gamma_graph": hyper.gamma_graph,
            "epsilon/eta": f"{hyper.epsilon} / {hyper.eta}",
            "Rounds": hyper.rounds,
        },
    )
    start = time.perf_counter()
    paired = train_paired(dataset, mask, network, hyper)
    elapsed = time.perf_counter() - start

    label = _dataset_label(config)
    csv_path = write_training_csv(out_dir / f"{label}_training.csv", paired, hyper.epsilon)
    artifacts = [
        csv_path,
        save_json(
            network_to_document(paired.supervised.network), out_dir / "network_supervised.json"
        ),
        save_json(network_to_document(paired.graph.network), out_dir / "network_graph.json"),
    ]
    if config.emit_svg:
        artifacts.append(emit_svg(csv_path, "training"))

    sv, gr = paired.supervised.final, paired.graph.final
    print(f"{'Arm':<22} {'Training':>10} {'Testing':>10} {'Graph':>10}")
    print(THIN_RULE)
    print(f"{'supervised':<22} {sv.l_sv:>10.4f} {sv.l_usv:>10.4f} {sv.l_graph:>10.4f}")
    print(f"{'supervised + graph':<22} {gr.l_sv:>10.4f} {gr.l_usv:>10.4f} {gr.l_graph:>10.4f}")
    print(THIN_RULE)
    print(f"Total time:    {elapsed:.2f} seconds")
    return paired, artifacts


def _run_sweep(
    config: ExperimentConfig, prepared: Prepared, out_dir: Path
) -> tuple[SweepTable, list[Path]]:
    builder, topology, probe = prepared
    hyper = config.hyperparams()
    s_values = resolve_s_values(config, probe.num_vertices)

    _banner(
        "SUPERVISED-COUNT SWEEP",
        {
            "Dataset": probe.name,
            "Topology": list(topology.widths),
            "Seed": config.seed,
            "S values": s_values,
            "Shots": hyper.shots,
            "gamma_graph": hyper.gamma_graph,
            "Jobs": config.jobs or "all cores",
        },
    )

    def progress(result: ShotResult, done: int, total: int) -> None:
        print(
            f"[{done}/{total}] S={result.s} shot {result.shot}: "
            f"testing {result.supervised_final.l_usv:.4f} (sv) "
            f"{result.graph_final.l_usv:.4f} (sv+G)"
        )

    start = time.perf_counter()
    table = sweep_supervised(
        builder, topology, hyper, s_values, jobs=config.jobs, progress=progress
    )
    elapsed = time.perf_counter() - start

    csv_path = write_sweep_csv(out_dir / f"{_dataset_label(config)}_sweep.csv", table)
    artifacts = [csv_path]
    if config.emit_svg:
        artifacts.append(emit_svg(csv_path, "sweep"))

    print("\n" + RULE)
    print("SWEEP SUMMARY")
    print(RULE)
    print(f"{'S':>3} {'Train sv':>10} {'Train sv+G':>11} {'Test sv':>10} {'Test sv+G':>10}")
    print(THIN_RULE)
    for s, sv_train, gr_train, sv_test, gr_test in table.rows():
        print(f"{s:>3} {sv_train:>10.4f} {gr_train:>11.4f} {sv_test:>10.4f} {gr_test:>10.4f}")
    print(THIN_RULE)
    print(f"Total time:    {elapsed:.2f} seconds")
    return table, artifacts


def _finish(
    command: str,
    config: ExperimentConfig,
    out_dir: Path,
    artifacts: list[Path],
    seeds: dict[str, Any],
    paired: PairedTraining | None = None,
    sweep: SweepTable | None = None,
) -> None:
    manifest = build_manifest(command, config.to_dict(), seeds, artifacts)
    manifest_path = save_json(manifest, out_dir / "manifest.json")
    report_path = write_run_report(
        out_dir / "report.md",
        RunSummary(command, config.to_dict(), paired, sweep, [*artifacts, manifest_path]),
    )
    print()
    print(f"📁 Results saved to: {out_dir}")
    for path in [*artifacts, manifest_path, report_path]:
        print(f"  - {path.name}")
    print(RULE)


def cmd_train(config: ExperimentConfig) -> int:
    prepared = _prepare(config)
    out_dir = _output_dir(config)
    paired, artifacts = _run_train(config, prepared, out_dir)
    seeds = {"seed": config.seed, "spawn_key": [config.supervised, 0]}
    _finish("train", config, out_dir, artifacts, seeds, paired=paired)
    return EXIT_OK


def cmd_sweep(config: ExperimentConfig) -> int:
    prepared = _prepare(config, needs_split=False, needs_sweep=True)
    out_dir = _output_dir(config)
    table, artifacts = _run_sweep(config, prepared, out_dir)
    seeds = {"seed": config.seed, "spawn_keys": "(S, shot) for every S and shot < shots"}
    _finish("sweep", config, out_dir, artifacts, seeds, sweep=table)
    return EXIT_OK


def cmd_replicate(config: ExperimentConfig) -> int:
    """Training curves and the supervised-count sweep of one builtin experiment."""
    prepared = _prepare(config, needs_sweep=True)
    out_dir = _output_dir(config)
    paired, train_artifacts = _run_train(config, prepared, out_dir)
    table, sweep_artifacts = _run_sweep(config, prepared, out_dir)
    seeds = {
        "seed": config.seed,
        "train_spawn_key": [config.supervised, 0],
        "sweep_spawn_keys": "(S, shot) for every S and shot < shots",
    }
    _finish(
        "replicate",
        config,
        out_dir,
        [*train_artifacts, *sweep_artifacts],
        seeds,
        paired=paired,
        sweep=table,
    )
    return EXIT_OK


def cmd_check_gradients(config: ExperimentConfig) -> int:
    """Finite-difference check of the update direction on random instances.

    Three arms per instance: gamma = 0 (supervised term alone), S = 0 (graph
    term alone) and the combined loss.
    """
    builder, topology, _ = _prepare(config, needs_split=False)
    hyper = config.hyperparams()
    graph_gamma = hyper.gamma_graph if hyper.gamma_graph != 0 else -1.0

    _banner(
        "GRADIENT CHECK",
        {
            "Dataset": _dataset_label(config),
            "Topology": list(topology.widths),
            "Seed": config.seed,
            "Instances": hyper.shots,
            "Probe eps": list(DEFAULT_PROBE_EPSILONS),
        },
    )
    failures = 0
    total = 0
    for shot in range(hyper.shots):
        dataset, mask, network = prepare_shot(
            builder, topology, config.seed, config.supervised, shot
        )
        empty = SupervisionMask.from_supervised([], dataset.num_vertices)
        arms = (
            ("gamma=0", mask, hyper.with_gamma(0.0)),
            ("S=0", empty, hyper.with_gamma(graph_gamma)),
            ("combined", mask, hyper.with_gamma(graph_gamma)),
        )
        for name, arm_mask, arm_hyper in arms:
            if name == "gamma=0" and arm_mask.num_supervised == 0:
                continue
            total += 1
            report = finite_difference_check(
                network, dataset, arm_mask, arm_hyper, DEFAULT_PROBE_EPSILONS, normalize=True
            )
            ok = report.passes()
            failures += 0 if ok else 1
            smallest = min(report.probes, key=lambda p: p.epsilon)
            order = "n/a" if report.order is None else f"{report.order:.2f}"
            status = "[PASSED]" if ok else "[FAILED]"
            print(
                f"[{shot + 1}/{hyper.shots}] {name:<9} dL/ds={report.analytic:+.6e} "
                f"residual={smallest.abs_residual:.2e} order={order}  {status}"
            )
            if not ok:
                for line in report.summary_lines():
                    print(f"      {line}")

    print("\n" + RULE)
    print("TEST SUMMARY")
    print(RULE)
    print(f"Checks run:    {total}")
    print(f"Failures:      {failures}")
    print(THIN_RULE)
    if failures:
        print("Some gradient checks FAILED")
        return EXIT_NUMERICAL
    print("All gradient checks PASSED")
    return EXIT_OK


def cmd_list_presets() -> int:
    experiments = list_experiments()
    print(f"Found {len(experiments)} experiment presets:\n")
    for experiment in experiments:
        print_experiment_summary(experiment)
        print()
    print(f"Builtin datasets: {', '.join(list_datasets())}")
    return EXIT_OK


# =============================================================================
# Argument parsing
# =============================================================================


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", type=Path, help="YAML or JSON config document")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--jobs", "-j", type=int, help="Worker processes (default: all cores)")
    common.add_argument("--output", "-o", dest="output_dir", help="Output directory")
    common.add_argument(
        "--emit-svg", action="store_const", const=True, help="Also write SVG plots"
    )
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    overrides = common.add_argument_group("config overrides")
    overrides.add_argument("--dataset", "-d", help="Builtin name or dataset JSON path")
    overrides.add_argument("--topology", type=int, nargs="+", help="Layer widths, e.g. 3 1")
    overrides.add_argument("--epsilon", type=float, help="Step size")
    overrides.add_argument("--eta", type=float, help="Update-matrix scale")
    overrides.add_argument("--gamma-graph", type=float, help="Graph-loss weight (<= 0)")
    overrides.add_argument("--rounds", type=int, help="Training rounds")
    overrides.add_argument("--shots", type=int, help="Shots per S (instances for check-gradients)")
    overrides.add_argument("--supervised", "-S", type=int, help="Supervised vertices for train")
    overrides.add_argument("--s-values", type=int, nargs="+", help="S values for sweep")
    overrides.add_argument("--threshold", type=float, help="Adjacency fidelity threshold")
    overrides.add_argument(
        "--m-method", choices=["reduced", "full"], help="M-matrix evaluation path"
    )
    overrides.add_argument(
        "--stop-on-plateau", action="store_const", const=True, help="Stop on a loss plateau"
    )
    return common


OVERRIDE_KEYS = (
    "seed",
    "jobs",
    "output_dir",
    "emit_svg",
    "dataset",
    "topology",
    "epsilon",
    "eta",
    "gamma_graph",
    "rounds",
    "shots",
    "supervised",
    "s_values",
    "threshold",
    "m_method",
    "stop_on_plateau",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnn-graphlearn",
        description="Train dissipative quantum neural networks on graph-structured data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  qnn-graphlearn train --dataset clusters --gamma-graph -0.5 --seed 1
  qnn-graphlearn sweep --dataset line --shots 30 --jobs 8 --emit-svg
  qnn-graphlearn replicate line --seed 42 --output results/line
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_options()

    sub.add_parser("gen-data", parents=[common], help="Write a dataset JSON document")
    sub.add_parser("train", parents=[common], help="Per-round losses of both arms")
    sub.add_parser("sweep", parents=[common], help="Mean final losses over shots for every S")
    replicate = sub.add_parser(
        "replicate", parents=[common], help="Training curves and sweep of a builtin experiment"
    )
    replicate.add_argument("example", choices=list_datasets(), help="Builtin experiment")
    sub.add_parser(
        "check-gradients", parents=[common], help="Finite-difference check of the update rule"
    )
    sub.add_parser("presets", help="List the builtin experiment presets")
    return parser


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "replicate": cmd_replicate,
    "check-gradients": cmd_check_gradients,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "presets":
        return cmd_list_presets()

    try:
        overrides = {key: getattr(args, key) for key in OVERRIDE_KEYS}
        preset = None
        if args.command == "replicate":
            if args.seed is None:
                raise ConfigError("replicate needs an explicit --seed")
            preset = args.example
            overrides["dataset"] = args.example
        config = resolve_config(args.config, overrides, preset=preset)
        return COMMANDS[args.command](config)
    except (ConfigError, DatasetError, TrainingSignalError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalInvariantError as e:
        print(f"Numerical invariant violated: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_OS_ERROR
    except QnnGraphError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_OS_ERROR


if __name__ == "__main__":
    sys.exit(main())
