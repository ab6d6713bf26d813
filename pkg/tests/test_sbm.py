import numpy as np
import pytest
from scipy.cluster.vq import kmeans2
from scipy.optimize import linear_sum_assignment

from graphband.graph import normalized_operator
from graphband.sbm import (
    SbmSpec,
    community_features,
    community_labels,
    expected_adjacency,
    make_sbm_bundle,
    planted_two_block,
    sample_sbm,
    spectral_gap,
    stratified_splits,
)
from graphband.spectral import band_project, eig_full


def test_all_zero_probabilities_give_empty_graph():
    g, _ = sample_sbm(SbmSpec((3, 4), np.zeros((2, 2)), seed=0))
    assert g.num_edges == 0


def test_all_one_probability_gives_complete_graph():
    g, _ = sample_sbm(SbmSpec((3,), np.ones((1, 1)), seed=0))
    assert g.num_edges == 3
    assert g.degrees.tolist() == [2, 2, 2]


def test_no_self_loops_sampled():
    g, _ = sample_sbm(SbmSpec((20,), np.ones((1, 1)), seed=1))
    assert not np.any(g.edges[:, 0] == g.edges[:, 1])


def test_sampling_reproducible():
    spec = planted_two_block(40, 0.4, 0.1, seed=42)
    g1, _ = sample_sbm(spec)
    g2, _ = sample_sbm(spec)
    assert np.array_equal(g1.edges, g2.edges)


def test_empirical_edge_frequencies_within_3_sigma():
    spec = planted_two_block(100, 0.5, 0.05, seed=7)
    g, labels = sample_sbm(spec)
    intra_pairs = 2 * (100 * 99) // 2
    inter_pairs = 100 * 100
    u, v = g.edges[:, 0], g.edges[:, 1]
    intra = int(np.sum(labels[u] == labels[v]))
    inter = g.num_edges - intra
    for count, pairs, p in ((intra, intra_pairs, 0.5), (inter, inter_pairs, 0.05)):
        sigma = np.sqrt(pairs * p * (1 - p))
        assert abs(count - pairs * p) < 3 * sigma


def test_spec_validation():
    with pytest.raises(ValueError, match="symmetric"):
        SbmSpec((2, 2), np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError, match="positive"):
        SbmSpec((0, 2), np.full((2, 2), 0.5))
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        SbmSpec((2,), np.array([[1.5]]))
    with pytest.raises(ValueError, match="q < p"):
        planted_two_block(5, 0.3, 0.3)


def test_expected_adjacency_two_block_eigenvalues():
    c, p, q = 6, 0.5, 0.05
    m = expected_adjacency(planted_two_block(c, p, q))
    lam = np.sort(np.linalg.eigvalsh(m))[::-1]
    assert np.allclose(lam[:2], [c * (p + q), c * (p - q)])
    assert np.allclose(lam[2:], 0.0, atol=1e-12)


def test_expected_adjacency_two_block_eigenvectors():
    c = 5
    m = expected_adjacency(planted_two_block(c, 0.5, 0.05))
    lam, vecs = np.linalg.eigh(m)
    ones = np.ones(2 * c) / np.sqrt(2 * c)
    signed = np.concatenate([np.ones(c), -np.ones(c)]) / np.sqrt(2 * c)
    assert abs(abs(vecs[:, -1] @ ones) - 1.0) < 1e-12
    assert abs(abs(vecs[:, -2] @ signed) - 1.0) < 1e-12


def test_expected_adjacency_one_block():
    m = expected_adjacency(SbmSpec((4,), np.array([[0.3]])))
    assert np.allclose(m, 0.3 * np.ones((4, 4)))


def test_spectral_gap_values():
    assert abs(spectral_gap(0.5, 0.05) - 0.45 / 0.55) < 1e-12
    assert spectral_gap(0.5, 0.0) == 1.0
    assert spectral_gap(0.5, 0.5 - 1e-6) < 2e-6


def test_spectral_gap_domain():
    with pytest.raises(ValueError):
        spectral_gap(0.3, 0.3)
    with pytest.raises(ValueError):
        spectral_gap(0.3, 0.5)
    with pytest.raises(ValueError):
        spectral_gap(1.2, 0.1)


def test_expected_second_eigenvector_sign_partitions():
    spec = planted_two_block(8, 0.6, 0.1)
    m = expected_adjacency(spec)
    lam, vecs = np.linalg.eigh(m)
    u2 = vecs[:, -2]
    labels = community_labels(spec)
    signs = np.sign(u2)
    assert len(np.unique(signs)) == 2
    agree = (signs == signs[0]) == (labels == labels[0])
    assert agree.all()


def test_sampled_second_eigenvector_recovers_communities():
    hits = []
    for seed in range(5):
        spec = planted_two_block(100, 0.5, 0.05, seed=seed)
        g, labels = sample_sbm(spec)
        d = eig_full(normalized_operator(g))
        u1 = d.eigenvectors[:, 1]
        pred = (u1 > 0).astype(int)
        agree = np.mean(pred == labels)
        hits.append(max(agree, 1 - agree))
    assert np.mean(hits) >= 0.95


def test_rank4_band_preserves_four_communities():
    prob = np.full((4, 4), 0.05)
    np.fill_diagonal(prob, 0.5)
    spec = SbmSpec((50, 50, 50, 50), prob, seed=4)
    g, labels = sample_sbm(spec)
    d = eig_full(normalized_operator(g))
    band = band_project(d, 0, 3)
    rows = band.eigenvectors
    _, assign = kmeans2(rows, 4, minit="++", seed=12, iter=40)
    agreement = np.zeros((4, 4), dtype=int)
    for a, b in zip(assign, labels):
        agreement[a, b] += 1
    r, c = linear_sum_assignment(-agreement)
    assert agreement[r, c].sum() / labels.size >= 0.95


def test_community_features_separation():
    labels = np.repeat([0, 1], 2000)
    x = community_features(labels, feature_dim=4, seed=0)
    mu0 = x[labels == 0].mean(axis=0)
    mu1 = x[labels == 1].mean(axis=0)
    # default separation targets ~85% pairwise Bayes accuracy
    assert abs(np.linalg.norm(mu0 - mu1) - 2.0729) < 0.15


def test_community_features_dim_check():
    with pytest.raises(ValueError, match="feature_dim"):
        community_features(np.array([0, 1, 2]), feature_dim=2)


def test_stratified_splits_disjoint_and_stratified():
    labels = np.repeat([0, 1, 2], 50)
    train, val, test = stratified_splits(labels, (0.3, 0.2, 0.5), seed=3)
    assert len(set(train) & set(val)) == 0
    assert len(set(train) & set(test)) == 0
    assert len(set(val) & set(test)) == 0
    assert len(train) + len(val) + len(test) == 150
    for c in range(3):
        assert np.sum(labels[train] == c) == 15


def test_make_sbm_bundle_valid():
    bundle = make_sbm_bundle(planted_two_block(25, 0.5, 0.1, seed=9), name="toy")
    assert bundle.num_nodes == 50
    assert bundle.num_classes == 2
    assert bundle.name == "toy"
    assert bundle.features.shape == (50, 8)
