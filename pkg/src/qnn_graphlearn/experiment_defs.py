"""
experiment_defs.py - Load and list the builtin experiment presets.

Each preset is one YAML file under ``qnn_graphlearn/experiments/`` with an
``id``, a display ``name``, a ``description`` and a ``config`` mapping of
ExperimentConfig fields.

Usage:
    from qnn_graphlearn.experiment_defs import get_experiment, list_experiments
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import yaml

from qnn_graphlearn.errors import ConfigError

logger = logging.getLogger(__name__)

# Paths
PACKAGE_DIR = Path(__file__).parent
EXPERIMENTS_DIR = PACKAGE_DIR / "experiments"


def list_experiment_files() -> list[Path]:
    """List all YAML preset files."""
    if not EXPERIMENTS_DIR.exists():
        return []
    return sorted(EXPERIMENTS_DIR.glob("*.yaml"))


def load_experiment(file_path: Path) -> dict[str, Any]:
    """
    Load a single preset from a YAML file.

    Raises:
        FileNotFoundError: If file doesn't exist
        ConfigError: If the file is not a mapping with a ``config`` section
    """
    with open(file_path, encoding="utf-8") as f:
        experiment = yaml.safe_load(f)

    if not isinstance(experiment, dict) or not isinstance(experiment.get("config"), dict):
        raise ConfigError(f"{file_path}: preset needs a 'config' mapping")

    # Add metadata
    experiment["_file"] = str(file_path)
    experiment["_filename"] = file_path.name
    experiment.setdefault("id", file_path.stem)

    return experiment


def list_experiments() -> list[dict[str, Any]]:
    """Load every preset; broken files are skipped with a warning."""
    experiments = []
    for file_path in list_experiment_files():
        try:
            experiments.append(load_experiment(file_path))
        except (OSError, yaml.YAMLError, ConfigError) as e:
            logger.warning("failed to load %s: %s", file_path, e)
    return experiments


def get_experiment_ids() -> list[str]:
    return [experiment["id"] for experiment in list_experiments()]


def get_experiment(experiment_id: str) -> dict[str, Any]:
    """
    Preset by id.

    Raises:
        ConfigError: naming the available presets when the id is unknown
    """
    for experiment in list_experiments():
        if experiment["id"] == experiment_id:
            return experiment
    raise ConfigError(
        f"unknown experiment {experiment_id!r}; available: {', '.join(get_experiment_ids())}"
    )


def preset_config(experiment_id: str) -> dict[str, Any]:
    """The ``config`` mapping of a preset, or {} when there is no such preset."""
    for experiment in list_experiments():
        if experiment["id"] == experiment_id:
            return dict(experiment["config"])
    return {}


def print_experiment_summary(experiment: dict[str, Any]) -> None:
    """Print a summary of a preset."""
    config = experiment["config"]
    print(f"ID: {experiment.get('id')}")
    print(f"Name: {experiment.get('name')}")
    print(f"Tags: {', '.join(experiment.get('tags', []))}")
    print(f"Topology: {config.get('topology')}")
    print(f"gamma_graph: {config.get('gamma_graph')}   supervised: {config.get('supervised')}")
    print(f"S values: {config.get('s_values')}")
    print(f"File: {experiment.get('_filename')}")
