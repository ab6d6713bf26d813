"""Undirected graphs and the normalized propagation operator.

The propagation operator is the smoothing matrix of a first-order graph
convolution: half the identity plus half the symmetrically normalized
adjacency. It is symmetric with spectrum contained in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

# Graphs at or below this node count get a dense operator; larger graphs
# are stored sparse and must use the truncated eigensolver.
DENSE_THRESHOLD = 5000


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted graph with a canonical edge list.

    Edges are stored as an (M, 2) int array with each pair sorted
    (u <= v), deduplicated and sorted lexicographically. Self-loops are
    kept if present in the input and count once toward the degree.
    """

    num_nodes: int
    edges: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        self.edges.setflags(write=False)
        self.degrees.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def adjacency(self, dense: bool | None = None):
        """Adjacency matrix, dense ndarray or CSR depending on size."""
        n = self.num_nodes
        if dense is None:
            dense = n <= DENSE_THRESHOLD
        u, v = self.edges[:, 0], self.edges[:, 1]
        if dense:
            a = np.zeros((n, n))
            a[u, v] = 1.0
            a[v, u] = 1.0
            return a
        off = u != v
        rows = np.concatenate([u, v[off]])
        cols = np.concatenate([v, u[off]])
        data = np.ones(rows.shape[0])
        return sp.csr_array((data, (rows, cols)), shape=(n, n))


def from_edge_list(n: int, pairs) -> Graph:
    """Build a Graph from unordered index pairs.

    Duplicate edges (including reversed duplicates) are silently merged.
    Raises ValueError if any endpoint is outside [0, n).
    """
    if n < 0:
        raise ValueError(f"node count must be nonnegative, got {n}")
    arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
        raise ValueError(f"edge {tuple(bad)} out of range for {n} nodes")
    arr = np.sort(arr, axis=1)
    if arr.size:
        arr = np.unique(arr, axis=0)
    degrees = np.zeros(n, dtype=np.int64)
    if arr.size:
        u, v = arr[:, 0], arr[:, 1]
        np.add.at(degrees, u, 1)
        # self-loops count once, so only the second endpoint of proper edges
        np.add.at(degrees, v[u != v], 1)
    return Graph(num_nodes=n, edges=arr, degrees=degrees)


@dataclass(frozen=True, eq=False)
class PropagationOperator:
    """Symmetric smoothing operator with spectrum in [0, 1].

    Holds 0.5 * (I + D^{-1/2} A D^{-1/2}). Rows/columns of isolated
    nodes reduce to 0.5 * e_i since their inverse square-root degree is
    defined as zero.
    """

    matrix: object  # ndarray (dense) or scipy CSR (sparse)
    n: int

    @property
    def is_dense(self) -> bool:
        return isinstance(self.matrix, np.ndarray)

    def dense(self) -> np.ndarray:
        if self.is_dense:
            return self.matrix
        return self.matrix.toarray()

    def matmul(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector or a matrix of column signals."""
        return self.matrix @ x

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x


def normalized_operator(g: Graph) -> PropagationOperator:
    """Normalized propagation operator 0.5 * (I + D^{-1/2} A D^{-1/2})."""
    n = g.num_nodes
    with np.errstate(divide="ignore"):
        dinv_sqrt = np.where(g.degrees > 0, g.degrees.astype(np.float64) ** -0.5, 0.0)
    if n <= DENSE_THRESHOLD:
        a = g.adjacency(dense=True)
        m = 0.5 * (np.eye(n) + dinv_sqrt[:, None] * a * dinv_sqrt[None, :])
        # exact symmetry: (i, j) and (j, i) come from the same product up
        # to multiplication order, force bit equality
        m = np.triu(m) + np.triu(m, 1).T
        m.setflags(write=False)
        return PropagationOperator(matrix=m, n=n)
    a = g.adjacency(dense=False).tocoo()
    # grouping matters: 0.5 * (d_i * d_j) is bit-symmetric in (i, j), a
    # left-to-right product is not
    data = 0.5 * (dinv_sqrt[a.row] * dinv_sqrt[a.col])
    half_norm = sp.coo_array((data, (a.row, a.col)), shape=(n, n))
    m = (half_norm + sp.eye_array(n, format="coo") * 0.5).tocsr()
    return PropagationOperator(matrix=m, n=n)
