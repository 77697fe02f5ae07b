"""Weight-free entity aggregation in relational space.

Each extended edge contributes the composed message h_s * z_r, weighted by a
tanh attention score on the relation-projected head/tail pair and scaled by
1/sqrt(d_s * d_t). No trainable parameters besides the embeddings themselves.
"""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .kgdata import ExtendedGraph


def compose(h: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Project an entity vector into a relation's space (Hadamard product)."""
    h = np.asarray(h, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if h.shape != z.shape:
        raise ValueError(f"compose dimension mismatch: {h.shape} vs {z.shape}")
    return h * z


def attention(h_s: np.ndarray, z_r: np.ndarray, h_t: np.ndarray) -> float:
    """tanh inner product of the two relation-projected endpoints, in (-1, 1)."""
    return float(np.tanh(compose(h_s, z_r) @ compose(h_t, z_r)))


def aggregate(h: Tensor, z: Tensor, graph: ExtendedGraph) -> tuple[Tensor, np.ndarray]:
    """One layer of attention-weighted neighborhood aggregation.

    Returns the next entity matrix and the per-edge attention values of this
    layer (detached copy, aligned with the graph's edge order).
    """
    if h.shape[0] != graph.num_entities or z.shape[0] != graph.num_relations:
        raise ValueError(
            f"state/graph mismatch: H has {h.shape[0]} rows for {graph.num_entities} entities, "
            f"Z has {z.shape[0]} rows for {graph.num_relations} relations")
    h_src = ad.gather_rows(h, graph.edge_src)
    z_rel = ad.gather_rows(z, graph.edge_rel)
    h_tgt = ad.gather_rows(h, graph.edge_tgt)
    message = h_src * z_rel
    alpha = ad.tanh(ad.row_sum(message * (h_tgt * z_rel)))
    weighted = message * (alpha * graph.norm_coeff[:, None])
    h_next = ad.scatter_add_rows(weighted, graph.edge_tgt, graph.num_entities)
    return h_next, alpha.data[:, 0].copy()
