"""Loss sensitivity to perturbations of the operator spectrum.

The quantity of interest is |d loss / d lambda_k| for every eigenvalue of
the propagation operator, holding the eigenvectors fixed. It is obtained
by backpropagating the loss to the dense operator matrix and contracting
with each eigenvector: u_k^T (d loss / d A~) u_k. Small magnitudes mean
the model is stable to perturbing that part of the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .bundle import GraphBundle
from .graph import normalized_operator
from .models import ModelConfig, gcn_forward
from .nn import LayerParams, Tensor
from .spectral import CapabilityError, SpectralDecomposition


@dataclass(frozen=True, eq=False)
class SpectralGradient:
    """Per-eigenvalue loss sensitivity, aligned with descending order.

    ``eigenspace_groups`` / ``eigenspace_magnitudes`` give the per-distinct-
    eigenvalue trace magnitudes, which stay well defined when eigenvalues
    are degenerate and the per-index values are basis-dependent.
    """

    magnitudes: np.ndarray  # (m,) nonnegative
    signed: np.ndarray  # (m,) u_k^T G u_k before taking magnitudes
    model_tag: str = ""
    dataset_tag: str = ""
    eigenspace_groups: tuple[tuple[int, int], ...] = ()
    eigenspace_magnitudes: np.ndarray = None

    def __post_init__(self):
        self.magnitudes.setflags(write=False)
        self.signed.setflags(write=False)
        if self.magnitudes.min(initial=0.0) < 0.0:
            raise ValueError("magnitudes must be nonnegative")


def loss_grad_wrt_operator(
    layers: list[LayerParams],
    bundle: GraphBundle,
    cfg: ModelConfig,
    operator_matrix: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the training loss w.r.t. every dense operator entry.

    Evaluated in inference mode (dropout off) on the training mask, at the
    given parameters. Returns the zero matrix for identity propagation
    (the loss does not depend on the operator); raises CapabilityError for
    band-factored propagation, which has no dense entry-wise gradient.
    """
    n = bundle.num_nodes
    if cfg.kind == "mlp" or cfg.propagation == "identity":
        return np.zeros((n, n))
    if cfg.propagation == "band":
        raise CapabilityError(
            "sensitivity needs dense propagation; band-factored operators "
            "do not expose entry-wise gradients"
        )
    if operator_matrix is None:
        operator_matrix = normalized_operator(bundle.graph).dense()
    op_tensor = Tensor(np.asarray(operator_matrix, dtype=np.float64))
    logits = gcn_forward(bundle.features, op_tensor, layers, training=False)
    loss = nn.masked_softmax_xent(logits, bundle.labels, bundle.train_idx)
    loss.backward()
    return op_tensor.grad if op_tensor.grad is not None else np.zeros((n, n))


def spectral_gradient(
    g_matrix: np.ndarray,
    d: SpectralDecomposition,
    model_tag: str = "",
    dataset_tag: str = "",
) -> SpectralGradient:
    """Contract the operator gradient with every eigenvector pair.

    Entry k is |u_k^T G u_k|, the loss derivative magnitude w.r.t. the
    k-th eigenvalue at fixed eigenvectors. Requires a complete
    decomposition so the report covers the whole spectrum.
    """
    if not d.complete:
        raise ValueError("spectral gradient needs a complete decomposition")
    u = d.eigenvectors
    signed = np.einsum("ik,ij,jk->k", u, g_matrix, u, optimize=True)
    groups = tuple(d.tie_groups())
    group_mags = np.array(
        [abs(signed[a : b + 1].sum()) for a, b in groups]
    )
    return SpectralGradient(
        magnitudes=np.abs(signed),
        signed=signed,
        model_tag=model_tag,
        dataset_tag=dataset_tag,
        eigenspace_groups=groups,
        eigenspace_magnitudes=group_mags,
    )
