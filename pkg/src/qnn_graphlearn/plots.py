"""
Static SVG plots of the training and sweep CSVs.

Two panels per figure (training loss, testing loss), each with the
supervised-only series in green and the supervised+graph series in blue.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import matplotlib as mpl
from matplotlib.figure import Figure

from qnn_graphlearn.errors import ReportError
from qnn_graphlearn.reporting import SWEEP_HEADER, TRAINING_HEADER

logger = logging.getLogger(__name__)

SUPERVISED_COLOR = "#2ca02c"
GRAPH_COLOR = "#1f77b4"

PLOT_KINDS = {
    "training": {"header": TRAINING_HEADER, "xlabel": "s·ε", "marker_every": None},
    "sweep": {"header": SWEEP_HEADER, "xlabel": "S", "marker_every": 1},
}


def read_loss_csv(csv_path: Path, kind: str) -> dict[str, list[float | None]]:
    """Columns of a training or sweep CSV; blank cells become None.

    Raises:
        ReportError: unknown kind, wrong header, ragged rows or unparsable cells
    """
    if kind not in PLOT_KINDS:
        raise ReportError(f"unknown plot kind {kind!r}; expected one of {list(PLOT_KINDS)}")
    header = PLOT_KINDS[kind]["header"]
    with open(csv_path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != header:
        raise ReportError(f"{csv_path}: header does not match a {kind} CSV")
    if len(rows) < 2:
        raise ReportError(f"{csv_path}: no data rows")

    columns: dict[str, list[float | None]] = {name: [] for name in header}
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ReportError(f"{csv_path}:{line_no}: expected {len(header)} cells, got {len(row)}")
        for name, cell in zip(header, row, strict=True):
            try:
                columns[name].append(float(cell) if cell.strip() else None)
            except ValueError as e:
                raise ReportError(f"{csv_path}:{line_no}: bad value {cell!r} in {name}") from e
    return columns


def _plot_pair(ax, x, supervised, graph, marker_every: int | None) -> None:
    """Training curves get ~20 markers, sweeps one per S."""
    for values, color, label in (
        (supervised, SUPERVISED_COLOR, "supervised"),
        (graph, GRAPH_COLOR, "supervised + graph"),
    ):
        points = [(xi, yi) for xi, yi in zip(x, values, strict=True) if yi is not None]
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        markevery = marker_every or max(1, len(points) // 20)
        ax.plot(xs, ys, color=color, label=label, marker="o", markersize=3, markevery=markevery)


def render_figure(columns: dict[str, list[float | None]], kind: str) -> Figure:
    """Training and testing panels for columns read by ``read_loss_csv``."""
    plot = PLOT_KINDS[kind]
    header = plot["header"]
    x = columns[header[0]]
    fig = Figure(figsize=(10, 4))
    axes = fig.subplots(1, 2, sharey=True)
    panels = (
        ("training loss", header[1], header[2]),
        ("testing loss", header[3], header[4]),
    )
    for ax, (title, sv_col, gr_col) in zip(axes, panels, strict=True):
        _plot_pair(ax, x, columns[sv_col], columns[gr_col], plot["marker_every"])
        ax.set_title(title)
        ax.set_xlabel(plot["xlabel"])
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("loss")
    axes[0].legend(loc="lower right")
    fig.tight_layout()
    return fig


def emit_svg(csv_path: Path, kind: str, svg_path: Path | None = None) -> Path:
    """Render ``csv_path`` to SVG next to it (or at ``svg_path``)."""
    columns = read_loss_csv(csv_path, kind)
    svg_path = Path(svg_path) if svg_path else Path(csv_path).with_suffix(".svg")

    # fixed hash salt keeps element ids, and so the file, reproducible
    with mpl.rc_context({"svg.hashsalt": "qnn-graphlearn", "svg.fonttype": "none"}):
        fig = render_figure(columns, kind)
        svg_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
    logger.debug("wrote %s", svg_path)
    return svg_path
