"""Convert raw citation-network release files to a portable text bundle.

A raw release is eight files per dataset (prefix ``ind.<name>.``):

    x          pickled CSR matrix, features of the labeled training nodes
    y          pickled one-hot array, their labels
    tx, ty     features/labels of the test nodes, rows in test.index order
    allx, ally features/labels of all non-test nodes (labeled + unlabeled)
    graph      pickled {node: [neighbor, ...]} adjacency dict
    test.index text file, one permuted test node id per line

Node ids are global: allx covers [0, len(allx)) and the test ids occupy
the tail. Some releases (citeseer) omit isolated test nodes from tx/ty
while their ids still appear in the graph; those get zero feature rows at
their released positions and belong to no split.

The fully-supervised split is: test = the released test ids, validation =
the last 500 ids of the allx range, train = everything before that. This
is the only assignment consistent with the published per-dataset split
sizes.

The output bundle is a directory of whitespace-delimited text files
(meta.txt, graph.txt, features.txt, labels.txt, split_*.txt) with LF
endings and shortest round-trip float formatting, written in a canonical
order so repeat conversions are byte-identical. Feature rows are
normalized to unit sum (zero rows stay zero), matching the standard
preprocessing of the models consuming these bundles.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

RAW_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")

VAL_SIZE = 500


@dataclass(frozen=True)
class DatasetStats:
    """Published reference statistics used to validate a conversion."""

    nodes: int
    edges: int
    classes: int
    features: int
    train: int
    val: int
    test: int


KNOWN_STATS = {
    "cora": DatasetStats(2708, 5429, 7, 1433, 1208, 500, 1000),
    "citeseer": DatasetStats(3327, 4732, 6, 3703, 1812, 500, 1000),
    "pubmed": DatasetStats(19717, 44338, 3, 500, 18217, 500, 1000),
}

EDGE_TOLERANCE = 0.05


class ConversionError(ValueError):
    pass


@dataclass(frozen=True)
class RawRelease:
    """Paths to the eight release files of one dataset."""

    directory: Path
    name: str

    def path(self, part: str) -> Path:
        return self.directory / f"ind.{self.name}.{part}"

    def check_files(self) -> None:
        missing = [str(self.path(p)) for p in RAW_PARTS if not self.path(p).is_file()]
        if missing:
            raise FileNotFoundError(f"missing release files: {', '.join(missing)}")


def _load_pickle(path: Path):
    with open(path, "rb") as fh:
        try:
            return pickle.load(fh, encoding="latin1")
        except Exception as exc:
            raise ConversionError(f"cannot unpickle {path}: {exc}") from exc


def _load_test_index(path: Path) -> np.ndarray:
    try:
        lines = path.read_text().split()
        return np.array([int(v) for v in lines], dtype=np.int64)
    except ValueError as exc:
        raise ConversionError(f"cannot parse {path}: {exc}") from exc


@dataclass
class ConvertedData:
    features: np.ndarray
    labels: np.ndarray
    edges: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    num_classes: int


def load_release(raw: RawRelease, val_size: int = VAL_SIZE) -> ConvertedData:
    """Parse, reassemble and split one raw release."""
    raw.check_files()
    allx = _load_pickle(raw.path("allx"))
    ally = np.asarray(_load_pickle(raw.path("ally")))
    tx = _load_pickle(raw.path("tx"))
    ty = np.asarray(_load_pickle(raw.path("ty")))
    graph = _load_pickle(raw.path("graph"))
    test_reorder = _load_test_index(raw.path("test.index"))

    if not sp.issparse(allx) or not sp.issparse(tx):
        raise ConversionError("allx/tx must be pickled sparse matrices")
    test_range = np.sort(test_reorder)
    lo, hi = int(test_range[0]), int(test_range[-1])
    if lo != allx.shape[0]:
        raise ConversionError(
            f"test ids must start right after allx rows ({allx.shape[0]}), got {lo}"
        )

    full = np.arange(lo, hi + 1)
    isolated = np.setdiff1d(full, test_range)
    if isolated.size:
        # releases with isolated test nodes: insert zero feature/label rows
        # at their ids; they stay out of every split
        tx_ext = sp.lil_matrix((full.size, tx.shape[1]), dtype=tx.dtype)
        tx_ext[test_range - lo, :] = tx
        tx = tx_ext.tocsr()
        ty_ext = np.zeros((full.size, ty.shape[1]), dtype=ty.dtype)
        ty_ext[test_range - lo, :] = ty
        ty = ty_ext

    features = sp.vstack([allx, tx]).tolil()
    features[test_reorder, :] = features[test_range, :]
    features = np.asarray(features.todense(), dtype=np.float64)
    labels_onehot = np.vstack([ally, ty]).astype(np.float64)
    labels_onehot[test_reorder, :] = labels_onehot[test_range, :]
    labels = labels_onehot.argmax(axis=1).astype(np.int64)

    n = features.shape[0]
    pairs = set()
    for node, neighbors in graph.items():
        for other in neighbors:
            if node >= n or other >= n:
                raise ConversionError(f"graph references node {max(node, other)} >= {n}")
            pairs.add((min(node, other), max(node, other)))
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    # unit-sum row normalization, standard for these bag-of-words features
    sums = features.sum(axis=1, keepdims=True)
    features = np.divide(features, sums, out=np.zeros_like(features), where=sums > 0)

    n_all = ally.shape[0]
    if val_size >= n_all:
        raise ConversionError(f"val size {val_size} >= labeled pool {n_all}")
    return ConvertedData(
        features=features,
        labels=labels,
        edges=edges,
        train_idx=np.arange(0, n_all - val_size, dtype=np.int64),
        val_idx=np.arange(n_all - val_size, n_all, dtype=np.int64),
        test_idx=test_range,
        num_classes=labels_onehot.shape[1],
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def write_bundle_dir(data: ConvertedData, name: str, out_dir: Path) -> None:
    """Write the bundle text files (see module docstring for the grammar)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n, f = data.features.shape

    def dump(file: str, text: str) -> None:
        (out_dir / file).write_text(text, encoding="utf-8", newline="\n")

    dump("meta.txt", f"n={n}\nf={f}\nclasses={data.num_classes}\nname={name}\n")
    lines = [f"{n} {data.edges.shape[0]}"]
    lines += [f"{u} {v}" for u, v in data.edges]
    dump("graph.txt", "\n".join(lines) + "\n")
    rows = [f"{n} {f}"]
    rows += [" ".join(_fmt(x) for x in row) for row in data.features]
    dump("features.txt", "\n".join(rows) + "\n")
    dump("labels.txt", "".join(f"{int(x)}\n" for x in data.labels))
    dump("split_train.txt", "".join(f"{int(x)}\n" for x in data.train_idx))
    dump("split_val.txt", "".join(f"{int(x)}\n" for x in data.val_idx))
    dump("split_test.txt", "".join(f"{int(x)}\n" for x in data.test_idx))


def validate_stats(data: ConvertedData, stats: DatasetStats) -> list[str]:
    """Compare against published statistics.

    Exact-match failures raise; the edge count only warns inside the
    documented tolerance band (published counts vary with dedup and
    self-loop conventions). Returns warning strings.
    """
    n = data.features.shape[0]
    checks = [
        ("nodes", n, stats.nodes),
        ("features", data.features.shape[1], stats.features),
        ("classes", data.num_classes, stats.classes),
        ("train size", data.train_idx.size, stats.train),
        ("val size", data.val_idx.size, stats.val),
        ("test size", data.test_idx.size, stats.test),
    ]
    for label, actual, expected in checks:
        if actual != expected:
            raise ConversionError(f"{label} mismatch: expected {expected}, got {actual}")
    warnings = []
    edges = data.edges.shape[0]
    rel = abs(edges - stats.edges) / stats.edges
    if rel > EDGE_TOLERANCE:
        raise ConversionError(
            f"edge count mismatch beyond {EDGE_TOLERANCE:.0%}: "
            f"expected {stats.edges}, got {edges}"
        )
    if edges != stats.edges:
        warnings.append(
            f"edge count {edges} differs from published {stats.edges} "
            f"({rel:.1%}, within tolerance; counting conventions vary)"
        )
    return warnings


def check_train_class_coverage(data: ConvertedData) -> None:
    """Every class must occur in the training split."""
    missing_classes = set(range(data.num_classes)) - set(
        np.unique(data.labels[data.train_idx]).tolist()
    )
    if missing_classes:
        raise ConversionError(f"classes {sorted(missing_classes)} absent from train split")


def convert(
    raw: RawRelease,
    out_dir: Path,
    stats: DatasetStats | None = None,
    val_size: int = VAL_SIZE,
) -> list[str]:
    """Full conversion: parse, validate, write. Returns warnings."""
    data = load_release(raw, val_size=val_size)
    check_train_class_coverage(data)
    if stats is None:
        stats = KNOWN_STATS.get(raw.name)
    warnings = validate_stats(data, stats) if stats is not None else []
    write_bundle_dir(data, raw.name, out_dir)
    return warnings
