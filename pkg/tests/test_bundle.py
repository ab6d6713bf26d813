import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphband.bundle import (
    BundleValidationError,
    GraphBundle,
    format_float,
    read_bundle,
    write_bundle,
    write_csv,
)
from graphband.graph import from_edge_list
from graphband.sbm import make_sbm_bundle, planted_two_block


def toy_bundle(name="toy"):
    graph = from_edge_list(3, [(0, 1), (1, 2)])
    return GraphBundle(
        graph=graph,
        features=np.array([[1.0, -0.5], [0.25, 1e-17], [3.0, 0.1]]),
        labels=np.array([0, 1, 0]),
        train_idx=np.array([0]),
        val_idx=np.array([1]),
        test_idx=np.array([2]),
        num_classes=2,
        name=name,
    )


def bundles_equal(a: GraphBundle, b: GraphBundle) -> bool:
    return (
        a.graph.num_nodes == b.graph.num_nodes
        and np.array_equal(a.graph.edges, b.graph.edges)
        and np.array_equal(a.features, b.features)
        and np.array_equal(a.labels, b.labels)
        and np.array_equal(a.train_idx, b.train_idx)
        and np.array_equal(a.val_idx, b.val_idx)
        and np.array_equal(a.test_idx, b.test_idx)
        and a.num_classes == b.num_classes
        and a.name == b.name
    )


def test_roundtrip_toy(tmp_path):
    b = toy_bundle()
    write_bundle(b, tmp_path / "b")
    assert bundles_equal(read_bundle(tmp_path / "b"), b)


def test_roundtrip_byte_identical(tmp_path):
    b = toy_bundle()
    write_bundle(b, tmp_path / "one")
    again = read_bundle(tmp_path / "one")
    write_bundle(again, tmp_path / "two")
    for f in sorted((tmp_path / "one").iterdir()):
        assert (tmp_path / "two" / f.name).read_bytes() == f.read_bytes(), f.name


def test_roundtrip_sbm_bundle(tmp_path):
    b = make_sbm_bundle(planted_two_block(10, 0.5, 0.1, seed=0), name="s")
    write_bundle(b, tmp_path / "s")
    assert bundles_equal(read_bundle(tmp_path / "s"), b)


def test_missing_file_named(tmp_path):
    b = toy_bundle()
    write_bundle(b, tmp_path / "b")
    (tmp_path / "b" / "labels.txt").unlink()
    with pytest.raises(FileNotFoundError, match="labels.txt"):
        read_bundle(tmp_path / "b")


def test_out_of_range_label_rejected(tmp_path):
    write_bundle(toy_bundle(), tmp_path / "b")
    (tmp_path / "b" / "labels.txt").write_text("0\n5\n0\n")
    with pytest.raises(BundleValidationError, match=r"labels.txt:2"):
        read_bundle(tmp_path / "b")


def test_overlapping_splits_rejected(tmp_path):
    write_bundle(toy_bundle(), tmp_path / "b")
    (tmp_path / "b" / "split_val.txt").write_text("0\n")
    with pytest.raises(BundleValidationError, match="overlap"):
        read_bundle(tmp_path / "b")


def test_edge_endpoint_out_of_range_rejected(tmp_path):
    write_bundle(toy_bundle(), tmp_path / "b")
    (tmp_path / "b" / "graph.txt").write_text("3 1\n0 7\n")
    with pytest.raises(BundleValidationError, match=r"graph.txt:2"):
        read_bundle(tmp_path / "b")


def test_bad_feature_value_rejected(tmp_path):
    write_bundle(toy_bundle(), tmp_path / "b")
    text = (tmp_path / "b" / "features.txt").read_text().replace("3.0", "zebra")
    (tmp_path / "b" / "features.txt").write_text(text)
    with pytest.raises(BundleValidationError, match="features.txt:4"):
        read_bundle(tmp_path / "b")


def test_constructor_validates():
    graph = from_edge_list(3, [(0, 1)])
    with pytest.raises(BundleValidationError, match="label"):
        GraphBundle(
            graph=graph,
            features=np.zeros((3, 1)),
            labels=np.array([0, 9, 0]),
            train_idx=np.array([0]),
            val_idx=np.array([1]),
            test_idx=np.array([2]),
            num_classes=2,
            name="x",
        )
    with pytest.raises(BundleValidationError, match="overlap"):
        GraphBundle(
            graph=graph,
            features=np.zeros((3, 1)),
            labels=np.zeros(3, dtype=int),
            train_idx=np.array([0, 1]),
            val_idx=np.array([1]),
            test_idx=np.array([2]),
            num_classes=1,
            name="x",
        )
    with pytest.raises(BundleValidationError, match="feature rows"):
        GraphBundle(
            graph=graph,
            features=np.zeros((2, 1)),
            labels=np.zeros(3, dtype=int),
            train_idx=np.array([0]),
            val_idx=np.array([1]),
            test_idx=np.array([2]),
            num_classes=1,
            name="x",
        )


def test_format_float_shortest_roundtrip():
    for x in (0.1, 1 / 3, 1e-300, -0.0, 2.0729, np.pi, 1e17 + 1):
        assert float(format_float(x)) == float(x)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.floats(allow_nan=False, allow_infinity=False, width=64),
        min_size=1,
        max_size=8,
    )
)
def test_float_serialization_fixpoint(values):
    for v in values:
        assert float(format_float(v)) == v


def test_write_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(["a", "b"], [[1, 0.5], ["x", 1 / 3]], path)
    text = path.read_text()
    assert text == "a,b\n1,0.5\nx,0.3333333333333333\n"
    assert "\r" not in text


def test_write_csv_empty_table(tmp_path):
    path = tmp_path / "e.csv"
    write_csv(["only", "header"], [], path)
    assert path.read_text() == "only,header\n"


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    n=st.integers(min_value=3, max_value=12),
)
def test_roundtrip_random_bundles(tmp_path_factory, seed, n):
    rng = np.random.default_rng(seed)
    edges = [(int(a), int(b)) for a, b in rng.integers(0, n, size=(6, 2))]
    graph = from_edge_list(n, edges)
    classes = int(rng.integers(1, 4))
    idx = rng.permutation(n)
    bundle = GraphBundle(
        graph=graph,
        features=rng.standard_normal((n, 3)) * 10.0 ** float(rng.integers(-12, 12)),
        labels=rng.integers(0, classes, size=n),
        train_idx=np.sort(idx[: n // 3]),
        val_idx=np.sort(idx[n // 3 : 2 * n // 3]),
        test_idx=np.sort(idx[2 * n // 3 :]),
        num_classes=classes,
        name=f"rand{seed}",
    )
    root = tmp_path_factory.mktemp("bundles")
    write_bundle(bundle, root / "b")
    assert bundles_equal(read_bundle(root / "b"), bundle)
