"""
JSON documents for datasets, networks and run manifests.

Complex arrays are stored row-major with real and imaginary parts
interleaved: ``[re0, im0, re1, im1, ...]``. Every document carries
``"version": 1``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from qnn_graphlearn import __version__
from qnn_graphlearn.errors import DatasetError
from qnn_graphlearn.graph_data import GraphDataset
from qnn_graphlearn.linalg import DensityMatrix, PureState
from qnn_graphlearn.network import NetworkState, NetworkTopology

logger = logging.getLogger(__name__)

DOCUMENT_VERSION = 1


def interleave(values: npt.ArrayLike) -> list[float]:
    flat = np.asarray(values, dtype=np.complex128).ravel()
    out = np.empty(2 * flat.size, dtype=np.float64)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return [float(x) for x in out]


def deinterleave(values: Sequence[float]) -> npt.NDArray[np.complex128]:
    data = np.asarray(values, dtype=np.float64)
    if data.ndim != 1 or data.size % 2:
        raise DatasetError(f"interleaved array needs an even-length flat list, got {data.shape}")
    return data[0::2] + 1j * data[1::2]


def _square(values: Sequence[float], what: str) -> npt.NDArray[np.complex128]:
    flat = deinterleave(values)
    dim = int(round(np.sqrt(flat.size)))
    if dim * dim != flat.size:
        raise DatasetError(f"{what}: {flat.size} entries do not form a square matrix")
    return flat.reshape(dim, dim)


def _check_version(doc: Mapping[str, Any], kind: str) -> None:
    version = doc.get("version")
    if version != DOCUMENT_VERSION:
        raise DatasetError(f"unsupported {kind} document version {version!r}")


# =============================================================================
# Datasets
# =============================================================================


def dataset_to_document(dataset: GraphDataset, seed: int | None = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "version": DOCUMENT_VERSION,
        "name": dataset.name,
        "num_vertices": dataset.num_vertices,
    }
    if dataset.input_states is not None:
        doc["input_amplitudes"] = [interleave(s.amplitudes) for s in dataset.input_states]
    else:
        doc["input_matrices"] = [interleave(rho.matrix) for rho in dataset.inputs]
    doc["target_amplitudes"] = [interleave(t.amplitudes) for t in dataset.targets]
    doc["adjacency"] = [[float(x) for x in row] for row in dataset.adjacency]
    doc["seed"] = seed
    return doc


def dataset_from_document(doc: Mapping[str, Any]) -> GraphDataset:
    """Rebuild and validate a dataset.

    Raises:
        DatasetError: on a missing key, a wrong version or any invariant violation
    """
    _check_version(doc, "dataset")
    try:
        n = int(doc["num_vertices"])
        targets = [PureState(deinterleave(t)) for t in doc["target_amplitudes"]]
        inputs: list[PureState | DensityMatrix]
        if "input_amplitudes" in doc:
            inputs = [PureState(deinterleave(a)) for a in doc["input_amplitudes"]]
        else:
            inputs = [
                DensityMatrix(_square(m, "input matrix")) for m in doc["input_matrices"]
            ]
        adjacency = np.asarray(doc["adjacency"], dtype=np.float64)
    except KeyError as e:
        raise DatasetError(f"dataset document is missing {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, DatasetError):
            raise
        raise DatasetError(f"malformed dataset document: {e}") from e
    if len(targets) != n:
        raise DatasetError(f"num_vertices = {n} but {len(targets)} targets are listed")
    return GraphDataset.from_states(inputs, targets, adjacency, name=doc.get("name", "custom"))


# =============================================================================
# Networks
# =============================================================================


def network_to_document(network: NetworkState) -> dict[str, Any]:
    return {
        "version": DOCUMENT_VERSION,
        "widths": list(network.topology.widths),
        "perceptrons": [[interleave(u) for u in layer] for layer in network.perceptrons],
    }


def network_from_document(doc: Mapping[str, Any]) -> NetworkState:
    _check_version(doc, "network")
    try:
        topology = NetworkTopology(tuple(int(w) for w in doc["widths"]))
        layers = tuple(
            tuple(_square(u, "perceptron") for u in layer) for layer in doc["perceptrons"]
        )
    except KeyError as e:
        raise DatasetError(f"network document is missing {e}") from e
    return NetworkState(topology, layers)


# =============================================================================
# Files and manifests
# =============================================================================


def save_json(doc: Mapping[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def load_json(path: Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(
    command: str,
    config: Mapping[str, Any],
    seeds: Mapping[str, Any],
    outputs: Iterable[Path],
) -> dict[str, Any]:
    """Everything needed to rerun a command: config, seeds, versions, output hashes.

    No timestamps, so the manifest itself is reproducible.
    """
    return {
        "version": DOCUMENT_VERSION,
        "command": command,
        "config": dict(config),
        "seeds": dict(seeds),
        "versions": {
            "qnn_graphlearn": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
