"""
CSV emission and markdown run reports.

The CSV headers are fixed plot-data column names:

    training: step times epsilon,SsvTraining,SsvGraphTraining,SsvTestingUsv,SsvGraphTestingUsv
    sweep:    numberSupervisedPairsList,SsvTrainingMeanList,SsvGraphTrainingMeanList,
              SsvTestingUsvMeanList,SsvGraphTestingUsvMeanList

Loss cells use ``%.12g``, the step column ``%.6f``. Nothing is written when a
value is NaN, infinite or a fidelity outside [0, 1].
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from qnn_graphlearn.errors import NumericalInvariantError
from qnn_graphlearn.losses import LossRecord
from qnn_graphlearn.training import PairedTraining, SweepTable

logger = logging.getLogger(__name__)

TRAINING_HEADER = (
    "step times epsilon",
    "SsvTraining",
    "SsvGraphTraining",
    "SsvTestingUsv",
    "SsvGraphTestingUsv",
)
SWEEP_HEADER = (
    "numberSupervisedPairsList",
    "SsvTrainingMeanList",
    "SsvGraphTrainingMeanList",
    "SsvTestingUsvMeanList",
    "SsvGraphTestingUsvMeanList",
)

# Fidelities may overshoot [0, 1] by rounding only.
FIDELITY_SLACK = 1e-9


def _fmt_loss(value: float | None, column: str, row: int) -> str:
    if value is None:
        return ""
    if not math.isfinite(value):
        raise NumericalInvariantError(f"{column} row {row}: non-finite value {value}")
    if not -FIDELITY_SLACK <= value <= 1 + FIDELITY_SLACK:
        raise NumericalInvariantError(f"{column} row {row}: fidelity {value} outside [0, 1]")
    return "%.12g" % min(max(value, 0.0), 1.0)


def _render(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def _padded(records: Sequence[LossRecord], length: int) -> list[LossRecord]:
    """Repeat the last record of an arm that stopped early."""
    return list(records) + [records[-1]] * (length - len(records))


def training_rows(paired: PairedTraining, epsilon: float) -> list[list[str]]:
    length = max(len(paired.supervised.records), len(paired.graph.records))
    supervised = _padded(paired.supervised.records, length)
    graph = _padded(paired.graph.records, length)
    rows = []
    for step, (sv, gr) in enumerate(zip(supervised, graph, strict=True)):
        rows.append(
            [
                "%.6f" % (step * epsilon),
                _fmt_loss(sv.l_sv, TRAINING_HEADER[1], step),
                _fmt_loss(gr.l_sv, TRAINING_HEADER[2], step),
                _fmt_loss(sv.l_usv, TRAINING_HEADER[3], step),
                _fmt_loss(gr.l_usv, TRAINING_HEADER[4], step),
            ]
        )
    return rows


def sweep_rows(table: SweepTable) -> list[list[str]]:
    rows = []
    for i, (s, sv_train, gr_train, sv_test, gr_test) in enumerate(table.rows()):
        rows.append(
            [
                str(s),
                _fmt_loss(sv_train, SWEEP_HEADER[1], i),
                _fmt_loss(gr_train, SWEEP_HEADER[2], i),
                _fmt_loss(sv_test, SWEEP_HEADER[3], i),
                _fmt_loss(gr_test, SWEEP_HEADER[4], i),
            ]
        )
    return rows


def write_training_csv(path: Path, paired: PairedTraining, epsilon: float) -> Path:
    """One row per round (rounds + 1 rows) for both arms."""
    return _write(path, _render(TRAINING_HEADER, training_rows(paired, epsilon)))


def write_sweep_csv(path: Path, table: SweepTable) -> Path:
    """One row per S of the mean final losses of both arms."""
    return _write(path, _render(SWEEP_HEADER, sweep_rows(table)))


# =============================================================================
# Markdown run report
# =============================================================================


@dataclass
class RunSummary:
    """Everything a run report shows."""

    command: str
    config: Mapping[str, Any]
    paired: PairedTraining | None = None
    sweep: SweepTable | None = None
    artifacts: list[Path] = field(default_factory=list)


def _fmt_float(val: float | None, default: str = "N/A") -> str:
    """Format a loss or return default."""
    if val is None:
        return default
    return f"{val:.4f}"


def _fmt_delta(graph: float | None, supervised: float | None, default: str = "N/A") -> str:
    if graph is None or supervised is None:
        return default
    return f"{graph - supervised:+.4f}"


def _winner_emoji(supervised: float | None, graph: float | None) -> str:
    """Higher fidelity wins."""
    if supervised is None or graph is None:
        return "N/A"
    if math.isclose(supervised, graph, abs_tol=1e-12):
        return "🤝 Tie"
    return "🏆 Graph" if graph > supervised else "🏆 Supervised"


def generate_run_report(summary: RunSummary) -> str:
    lines: list[str] = []
    config = summary.config

    # =========================================================================
    # HEADER
    # =========================================================================
    lines.extend(
        [
            f"# 📊 Run Report: {summary.command} `{config.get('dataset')}`",
            "",
            "| Property | Value |",
            "|----------|-------|",
            f"| Dataset | `{config.get('dataset')}` |",
            f"| Topology | `{config.get('topology')}` |",
            f"| Seed | `{config.get('seed')}` |",
            f"| epsilon / eta | `{config.get('epsilon')}` / `{config.get('eta')}` |",
            f"| gamma_graph | `{config.get('gamma_graph')}` |",
            f"| Rounds | `{config.get('rounds')}` |",
            f"| Shots | `{config.get('shots')}` |",
            "",
            "---",
            "",
        ]
    )

    # =========================================================================
    # EXECUTIVE SUMMARY
    # =========================================================================
    if summary.paired is not None:
        sv = summary.paired.supervised.final
        gr = summary.paired.graph.final
        lines.extend(
            [
                "## 🏆 Executive Summary",
                "",
                f"Final losses after {len(summary.paired.graph.records) - 1} rounds "
                f"with S = {config.get('supervised')}.",
                "",
                "| Metric | Supervised | Supervised + Graph | Delta | Winner |",
                "|--------|:----------:|:------------------:|:-----:|:------:|",
                f"| Training loss | {_fmt_float(sv.l_sv)} | {_fmt_float(gr.l_sv)} "
                f"| {_fmt_delta(gr.l_sv, sv.l_sv)} | {_winner_emoji(sv.l_sv, gr.l_sv)} |",
                f"| Testing loss | {_fmt_float(sv.l_usv)} | {_fmt_float(gr.l_usv)} "
                f"| {_fmt_delta(gr.l_usv, sv.l_usv)} | {_winner_emoji(sv.l_usv, gr.l_usv)} |",
                f"| Graph loss | {sv.l_graph:.4f} | {gr.l_graph:.4f} | N/A | N/A |",
                "",
            ]
        )
        if summary.paired.graph.stopped_early or summary.paired.supervised.stopped_early:
            lines.extend(["> ⚠️ At least one arm stopped early on a plateau.", ""])
        lines.extend(["---", ""])

    # =========================================================================
    # SWEEP TABLE
    # =========================================================================
    if summary.sweep is not None:
        lines.extend(
            [
                "## 📈 Supervised-count Sweep",
                "",
                f"Means over {config.get('shots')} shots per S.",
                "",
                "| S | Training (sv) | Training (sv+G) | Testing (sv) | Testing (sv+G) | Winner |",
                "|:-:|:-------------:|:---------------:|:------------:|:--------------:|:------:|",
            ]
        )
        for s, sv_train, gr_train, sv_test, gr_test in summary.sweep.rows():
            lines.append(
                f"| {s} | {sv_train:.4f} | {gr_train:.4f} | {sv_test:.4f} | {gr_test:.4f} "
                f"| {_winner_emoji(sv_test, gr_test)} |"
            )
        lines.extend(["", "---", ""])

    # =========================================================================
    # ARTIFACTS
    # =========================================================================
    if summary.artifacts:
        lines.extend(["## 📁 Artifacts", ""])
        lines.extend(f"- `{Path(p).name}`" for p in summary.artifacts)
        lines.append("")

    return "\n".join(lines)


def write_run_report(path: Path, summary: RunSummary) -> Path:
    return _write(path, generate_run_report(summary))
