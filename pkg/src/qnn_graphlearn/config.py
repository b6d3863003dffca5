"""
Experiment configuration.

Resolution order, later wins:

1. ExperimentConfig defaults
2. the builtin preset named by ``dataset`` (``experiments/<name>.yaml``)
3. a ``--config`` document (YAML or JSON)
4. explicit command-line flags
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from qnn_graphlearn.errors import ConfigError, DatasetError
from qnn_graphlearn.experiment_defs import preset_config
from qnn_graphlearn.graph_data import (
    DATASET_REGISTRY,
    DatasetBuilder,
    GraphDataset,
    get_dataset_builder,
)
from qnn_graphlearn.network import NetworkTopology
from qnn_graphlearn.training import Hyperparams

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = Path("results")


@dataclass
class ExperimentConfig:
    dataset: str = "clusters"
    topology: list[int] = field(default_factory=lambda: [3, 1])
    epsilon: float = 0.01
    eta: float = 1.0
    gamma_graph: float = 0.0
    rounds: int = 1000
    shots: int = 30
    s_values: list[int] | None = None
    supervised: int = 3
    seed: int = 0
    threshold: float | None = None
    jobs: int | None = None
    m_method: str = "reduced"
    stop_on_plateau: bool = False
    output_dir: str = str(DEFAULT_OUTPUT_DIR)
    emit_svg: bool = False

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> ExperimentConfig:
        """Build and validate; unknown keys are a ConfigError."""
        unknown = sorted(set(values) - cls.field_names())
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(unknown)}; "
                f"valid keys: {', '.join(sorted(cls.field_names()))}"
            )
        try:
            config = cls(**values)
            config.validate()
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid config value: {e}") from e
        return config

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            epsilon=float(self.epsilon),
            eta=float(self.eta),
            gamma_graph=float(self.gamma_graph),
            rounds=int(self.rounds),
            shots=int(self.shots),
            seed=int(self.seed),
            m_method=self.m_method,
            stop_on_plateau=bool(self.stop_on_plateau),
        )

    def network_topology(self) -> NetworkTopology:
        return NetworkTopology(tuple(int(w) for w in self.topology))

    @property
    def is_builtin(self) -> bool:
        return self.dataset in DATASET_REGISTRY

    def validate(self) -> None:
        """Raise ConfigError for any invalid field before computation starts."""
        self.hyperparams()
        if not isinstance(self.topology, list | tuple) or not self.topology:
            raise ConfigError(f"topology must be a list of widths, got {self.topology!r}")
        self.network_topology()
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.supervised < 0:
            raise ConfigError(f"supervised must be >= 0, got {self.supervised}")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.threshold is not None and not 0 < self.threshold <= 1:
            raise ConfigError(f"threshold must lie in (0, 1], got {self.threshold}")
        if self.s_values is not None:
            if not self.s_values:
                raise ConfigError("s_values must not be empty")
            if any(not isinstance(s, int) or s < 0 for s in self.s_values):
                raise ConfigError(f"s_values must be non-negative integers, got {self.s_values}")
        if not self.is_builtin and not Path(self.dataset).suffix:
            raise ConfigError(
                f"unknown builtin dataset {self.dataset!r}; valid options: "
                f"{', '.join(DATASET_REGISTRY)} (or a path to a dataset JSON file)"
            )


def load_config_document(path: Path) -> dict[str, Any]:
    """Read a YAML or JSON config document (JSON is a subset of YAML)."""
    try:
        with open(path, encoding="utf-8") as f:
            doc = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config document must be a mapping")
    return doc


def resolve_config(
    config_path: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    *,
    preset: str | None = None,
) -> ExperimentConfig:
    """Merge defaults, preset, config document and flags (``None`` flags are ignored)."""
    document = load_config_document(config_path) if config_path else {}
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    dataset = preset or flags.get("dataset") or document.get("dataset") or ExperimentConfig.dataset

    merged: dict[str, Any] = {}
    merged.update(preset_config(dataset))
    merged.update(document)
    merged.update(flags)
    logger.debug("resolved config for dataset %s: %s", dataset, merged)
    return ExperimentConfig.from_mapping(merged)


# =============================================================================
# Dataset resolution
# =============================================================================


class FixedDatasetBuilder:
    """Builder for a dataset read from a file; every shot sees the same inputs."""

    def __init__(self, dataset: GraphDataset) -> None:
        self.dataset = dataset

    def __call__(self, rng: Any) -> GraphDataset:
        return self.dataset


def dataset_builder(config: ExperimentConfig) -> DatasetBuilder:
    """Builder for the configured dataset (builtin name or dataset JSON path)."""
    if config.is_builtin:
        return get_dataset_builder(config.dataset, config.threshold)

    from qnn_graphlearn.serialization import dataset_from_document, load_json

    path = Path(config.dataset)
    try:
        doc = load_json(path)
    except FileNotFoundError as e:
        raise ConfigError(f"dataset file not found: {path}") from e
    except ValueError as e:
        raise DatasetError(f"cannot parse dataset file {path}: {e}") from e
    return FixedDatasetBuilder(dataset_from_document(doc))


def check_topology_fits(topology: NetworkTopology, dataset: GraphDataset) -> None:
    """Raise ConfigError when the network registers do not match the dataset."""
    if topology.input_width != dataset.input_qubits:
        raise ConfigError(
            f"topology input width {topology.input_width} does not match the "
            f"{dataset.input_qubits}-qubit inputs of dataset {dataset.name!r}"
        )
    if topology.output_width != dataset.output_qubits:
        raise ConfigError(
            f"topology output width {topology.output_width} does not match the "
            f"{dataset.output_qubits}-qubit targets of dataset {dataset.name!r}"
        )


def resolve_s_values(config: ExperimentConfig, num_vertices: int) -> list[int]:
    """Configured S values, or 1..N-1."""
    if config.s_values is None:
        return list(range(1, num_vertices))
    return list(config.s_values)
