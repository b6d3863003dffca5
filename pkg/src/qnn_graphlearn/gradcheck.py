"""
Finite-difference validation of the analytic update direction.

For directions K^l_j the analytic derivative of L_SV+G along
U -> exp(i s K) U is sum_lj tr(G^l_j K^l_j). The forward difference
(L(eps) - L(0)) / eps must approach it linearly in eps.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from qnn_graphlearn.graph_data import GraphDataset, SupervisionMask
from qnn_graphlearn.linalg import HermitianOperator
from qnn_graphlearn.losses import loss_combined
from qnn_graphlearn.network import NetworkState, PerceptronIndex
from qnn_graphlearn.training import Hyperparams
from qnn_graphlearn.updates import (
    LossGradient,
    apply_update,
    forward_traces,
    k_matrices,
    loss_gradient_operator,
)

logger = logging.getLogger(__name__)

DEFAULT_PROBE_EPSILONS = (1e-3, 1e-4, 1e-5)

# Orders are compared after rounding to one decimal; a two-point fit of an
# exactly first-order residual drifts by the eps^2 term.
ORDER_DECIMALS = 1


@dataclass(frozen=True)
class ProbeResult:
    epsilon: float
    finite_difference: float
    abs_residual: float
    rel_residual: float


@dataclass
class FiniteDifferenceReport:
    base_loss: float
    analytic: float
    direction_norm: float
    probes: list[ProbeResult] = field(default_factory=list)
    order: float | None = None

    @property
    def residuals(self) -> list[float]:
        return [p.abs_residual for p in self.probes]

    def residual_shrinks(self) -> bool:
        """Residuals decrease as the probe step decreases."""
        ordered = sorted(self.probes, key=lambda p: p.epsilon, reverse=True)
        return all(
            b.abs_residual < a.abs_residual for a, b in zip(ordered, ordered[1:], strict=False)
        )

    def within(self, factor: float = 10.0, scale: float = 1.0) -> bool:
        """|residual| <= factor * eps * scale at every probe."""
        return all(p.abs_residual <= factor * p.epsilon * scale for p in self.probes)

    def converges(self, min_order: float = 1.0) -> bool:
        """Fitted order (to one decimal) >= min_order with shrinking residuals."""
        if self.order is None:
            return False
        return round(self.order, ORDER_DECIMALS) >= min_order and self.residual_shrinks()

    def passes(self, factor: float = 10.0, min_order: float = 1.0) -> bool:
        """|residual| <= factor * eps at every probe, and the check converges."""
        return bool(self.probes) and self.within(factor) and self.converges(min_order)

    def summary_lines(self) -> list[str]:
        lines = [
            f"analytic dL/ds = {self.analytic:+.10e}   (L = {self.base_loss:.10f})",
            f"{'eps':>10} {'finite diff':>18} {'|residual|':>12} {'relative':>12}",
        ]
        for p in self.probes:
            lines.append(
                f"{p.epsilon:>10.1e} {p.finite_difference:>+18.10e} "
                f"{p.abs_residual:>12.3e} {p.rel_residual:>12.3e}"
            )
        order = "n/a" if self.order is None else f"{self.order:.2f}"
        lines.append(f"fitted convergence order: {order}")
        return lines


def _combined_loss(
    network: NetworkState, dataset: GraphDataset, mask: SupervisionMask, gamma_graph: float
) -> float:
    outputs = [trace.output for trace in forward_traces(network, dataset)]
    return loss_combined(outputs, dataset.targets, mask, dataset.adjacency, gamma_graph)


def curvature_weight(dataset: GraphDataset, gamma_graph: float) -> float:
    """1 + |gamma| * sum(A): bounds the second derivative of L_SV+G per unit direction."""
    return 1.0 + abs(gamma_graph) * float(np.sum(dataset.adjacency))


def _fit_order(probes: Sequence[ProbeResult]) -> float | None:
    usable = [p for p in probes if p.abs_residual > 0]
    if len(usable) < 2:
        return None
    log_eps = np.log([p.epsilon for p in usable])
    log_res = np.log([p.abs_residual for p in usable])
    slope, _ = np.polyfit(log_eps, log_res, 1)
    return float(slope)


def finite_difference_check(
    network: NetworkState,
    dataset: GraphDataset,
    mask: SupervisionMask,
    hyper: Hyperparams,
    probe_epsilons: Sequence[float] = DEFAULT_PROBE_EPSILONS,
    *,
    directions: Mapping[PerceptronIndex, HermitianOperator] | None = None,
    normalize: bool = False,
    sign: float = 1.0,
) -> FiniteDifferenceReport:
    """Compare forward differences with the analytic directional derivative.

    Args:
        network: Network to differentiate at
        dataset: Graph dataset
        mask: Supervision mask (S = 0 checks the graph term alone)
        hyper: Supplies gamma_graph, eta and the M-matrix method
        probe_epsilons: Step sizes to probe
        directions: Hermitian K per perceptron (default: the update matrices)
        normalize: Rescale directions so their spectral norms sum to
            1 / (2 * sqrt(curvature_weight)), which keeps the forward-difference
            residual below 10 * eps
        sign: Multiplies every direction (-1 flips the derivative)

    Returns:
        FiniteDifferenceReport with per-probe residuals and fitted order
    """
    gradient = LossGradient(network, dataset, mask, method=hyper.m_method)
    if directions is None:
        directions = k_matrices(network, dataset, mask, hyper, traces=gradient.traces)
    norm = sum(k.norm() for k in directions.values())
    scale = sign
    if normalize and norm > 0:
        weight = curvature_weight(dataset, hyper.gamma_graph)
        scale = sign / (2.0 * norm * float(np.sqrt(weight)))
    scaled = {idx: HermitianOperator(scale * k.matrix) for idx, k in directions.items()}

    analytic = 0.0
    for (layer, j), k in scaled.items():
        g = loss_gradient_operator(gradient, hyper.gamma_graph, layer, j)
        analytic += float(np.trace(g.matrix @ k.matrix).real)

    base = _combined_loss(network, dataset, mask, hyper.gamma_graph)
    report = FiniteDifferenceReport(
        base_loss=base, analytic=analytic, direction_norm=abs(scale) * norm
    )
    for eps in probe_epsilons:
        moved = apply_update(network, scaled, eps)
        fd = (_combined_loss(moved, dataset, mask, hyper.gamma_graph) - base) / eps
        residual = abs(fd - analytic)
        report.probes.append(
            ProbeResult(
                epsilon=float(eps),
                finite_difference=fd,
                abs_residual=residual,
                rel_residual=residual / max(abs(analytic), 1e-300),
            )
        )
    report.order = _fit_order(report.probes)
    logger.debug("finite-difference check: %s", report.summary_lines())
    return report
