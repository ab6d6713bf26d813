"""Stochastic block model sampling and its closed-form expectations.

The two-community planted-partition case has an expected adjacency whose
two dominant eigenvectors are the all-ones direction and the signed
community indicator; the ratio of their eigenvalues, (p - q) / (p + q),
measures how easy the communities are to identify.

Randomness: all sampling uses ``numpy.random.default_rng`` (PCG64) with
explicit seed sequences, so identical specs reproduce identical graphs on
any platform. Edges are drawn block-pair by block-pair in row-major order
over the upper triangle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, from_edge_list

# Distance between community feature means giving a two-class Bayes
# accuracy of about 0.85 under unit-variance Gaussian features:
# Phi(separation / 2) = 0.85.
DEFAULT_SEPARATION = 2.0728667789875796
DEFAULT_FEATURE_DIM = 8


@dataclass(frozen=True)
class SbmSpec:
    """Block sizes, symmetric edge-probability matrix and a seed."""

    block_sizes: tuple[int, ...]
    prob_matrix: np.ndarray = field(compare=False)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        p = np.asarray(self.prob_matrix, dtype=np.float64)
        object.__setattr__(self, "prob_matrix", p)
        r = len(self.block_sizes)
        if any(b <= 0 for b in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if p.shape != (r, r):
            raise ValueError(f"prob_matrix must be {r}x{r}, got {p.shape}")
        if not np.array_equal(p, p.T):
            raise ValueError("prob_matrix must be symmetric")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        p.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return sum(self.block_sizes)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)


def planted_two_block(
    size: int, p: float, q: float, seed: int = 0
) -> SbmSpec:
    """Convenience spec for two equal communities, intra p, inter q < p."""
    if not q < p:
        raise ValueError(f"planted partition needs q < p, got p={p}, q={q}")
    return SbmSpec((size, size), np.array([[p, q], [q, p]]), seed=seed)


def community_labels(spec: SbmSpec) -> np.ndarray:
    """Block index of every node, nodes grouped by block."""
    return np.repeat(np.arange(spec.num_blocks), spec.block_sizes)


def sample_sbm(spec: SbmSpec) -> tuple[Graph, np.ndarray]:
    """Sample a graph: each pair i < j carries an edge independently with
    probability prob_matrix[c_i][c_j]. No self-loops are drawn."""
    labels = community_labels(spec)
    starts = np.concatenate([[0], np.cumsum(spec.block_sizes)])
    rng = np.random.default_rng([spec.seed, 0x5B])
    pairs = []
    r = spec.num_blocks
    for a in range(r):
        ia = np.arange(starts[a], starts[a + 1])
        for b in range(a, r):
            prob = spec.prob_matrix[a, b]
            jb = np.arange(starts[b], starts[b + 1])
            draw = rng.random((ia.size, jb.size))
            if a == b:
                hit = np.triu(draw < prob, k=1)
            else:
                hit = draw < prob
            rows, cols = np.nonzero(hit)
            if rows.size:
                pairs.append(np.column_stack([ia[rows], jb[cols]]))
    edges = np.vstack(pairs) if pairs else np.empty((0, 2), dtype=np.int64)
    return from_edge_list(spec.num_nodes, edges), labels


def expected_adjacency(spec: SbmSpec) -> np.ndarray:
    """Block-constant expectation matrix, diagonal included."""
    labels = community_labels(spec)
    return np.ascontiguousarray(spec.prob_matrix[np.ix_(labels, labels)])


def spectral_gap(p: float, q: float) -> float:
    """(p - q) / (p + q), the dominant-eigenvalue ratio of the two-block
    expectation. Larger is easier; raises on q >= p or out-of-range input."""
    if not (0.0 <= q < p <= 1.0):
        raise ValueError(f"need 0 <= q < p <= 1, got p={p}, q={q}")
    return (p - q) / (p + q)


def community_features(
    labels: np.ndarray,
    feature_dim: int = DEFAULT_FEATURE_DIM,
    separation: float = DEFAULT_SEPARATION,
    seed: int = 0,
) -> np.ndarray:
    """Gaussian node features with community-dependent means.

    Community c gets mean (separation / sqrt(2)) * e_c, so every pair of
    means is ``separation`` apart and the pairwise Bayes accuracy is
    Phi(separation / 2) -- about 0.85 at the default. Unit covariance.
    """
    num_comms = int(labels.max()) + 1 if labels.size else 0
    if feature_dim < num_comms:
        raise ValueError(
            f"feature_dim={feature_dim} cannot embed {num_comms} community means"
        )
    rng = np.random.default_rng([seed, 0xFE])
    means = np.zeros((num_comms, feature_dim))
    means[np.arange(num_comms), np.arange(num_comms)] = separation / np.sqrt(2.0)
    return means[labels] + rng.standard_normal((labels.shape[0], feature_dim))


def stratified_splits(
    labels: np.ndarray,
    fractions: tuple[float, float, float] = (0.3, 0.2, 0.5),
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint train/val/test index sets, stratified by label."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    rng = np.random.default_rng([seed, 0x57])
    train, val, test = [], [], []
    for c in np.unique(labels):
        idx = np.nonzero(labels == c)[0]
        idx = rng.permutation(idx)
        n_tr = int(round(fractions[0] * idx.size))
        n_va = int(round(fractions[1] * idx.size))
        train.append(idx[:n_tr])
        val.append(idx[n_tr : n_tr + n_va])
        test.append(idx[n_tr + n_va :])
    return (
        np.sort(np.concatenate(train)),
        np.sort(np.concatenate(val)),
        np.sort(np.concatenate(test)),
    )


def make_sbm_bundle(
    spec: SbmSpec,
    feature_dim: int = DEFAULT_FEATURE_DIM,
    separation: float = DEFAULT_SEPARATION,
    split_fractions: tuple[float, float, float] = (0.3, 0.2, 0.5),
    name: str = "sbm",
):
    """Sampled SBM graph packaged with synthetic features and splits.

    Features, graph and splits each use an independent stream derived from
    spec.seed, so the bundle is reproducible as a whole.
    """
    from .bundle import GraphBundle

    graph, labels = sample_sbm(spec)
    features = community_features(labels, feature_dim, separation, seed=spec.seed)
    train, val, test = stratified_splits(labels, split_fractions, seed=spec.seed)
    return GraphBundle(
        graph=graph,
        features=features,
        labels=labels.astype(np.int64),
        train_idx=train,
        val_idx=val,
        test_idx=test,
        num_classes=spec.num_blocks,
        name=name,
    )
