"""On-disk bundle format for graph learning datasets, plus CSV writing.

A bundle is a directory of UTF-8, whitespace-delimited text files:

    meta.txt         key=value lines: n, f, classes, name (fixed order)
    graph.txt        first line "N M", then M lines "u v" with u <= v
    features.txt     first line "N F", then N rows of F reals
    labels.txt       N lines, one class index per line
    split_train.txt  one node index per line
    split_val.txt    one node index per line
    split_test.txt   one node index per line

Floats are written with shortest round-trip formatting and '.' decimal
separator; all files end with LF line endings. Reading back a written
bundle reproduces every 64-bit value exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .graph import Graph, from_edge_list

BUNDLE_FILES = (
    "meta.txt",
    "graph.txt",
    "features.txt",
    "labels.txt",
    "split_train.txt",
    "split_val.txt",
    "split_test.txt",
)


class BundleValidationError(ValueError):
    """Invariant violation in a bundle, pointing at the offending line."""

    def __init__(self, msg: str, file: str = "", line: int = 0):
        loc = f"{file}:{line}: " if file else ""
        super().__init__(f"{loc}{msg}")
        self.file = file
        self.line = line


@dataclass(frozen=True, eq=False)
class GraphBundle:
    """Graph, node features, labels and disjoint train/val/test splits."""

    graph: Graph
    features: np.ndarray  # (N, F)
    labels: np.ndarray  # (N,) ints in [0, num_classes)
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    num_classes: int
    name: str

    def __post_init__(self):
        for arr in (self.features, self.labels, self.train_idx, self.val_idx, self.test_idx):
            arr.setflags(write=False)
        validate_bundle(self)

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray) -> "GraphBundle":
        return replace(self, features=np.ascontiguousarray(features, dtype=np.float64))


def validate_bundle(b: GraphBundle) -> None:
    n = b.graph.num_nodes
    if b.features.shape[0] != n:
        raise BundleValidationError(
            f"feature rows ({b.features.shape[0]}) != node count ({n})"
        )
    if b.labels.shape[0] != n:
        raise BundleValidationError(f"label count ({b.labels.shape[0]}) != node count ({n})")
    if b.labels.size and (b.labels.min() < 0 or b.labels.max() >= b.num_classes):
        bad = int(np.argmax((b.labels < 0) | (b.labels >= b.num_classes)))
        raise BundleValidationError(
            f"label {int(b.labels[bad])} at node {bad} outside [0, {b.num_classes})"
        )
    splits = {"train": b.train_idx, "val": b.val_idx, "test": b.test_idx}
    for split_name, idx in splits.items():
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise BundleValidationError(f"{split_name} split index out of range [0, {n})")
        if np.unique(idx).size != idx.size:
            raise BundleValidationError(f"{split_name} split contains duplicate indices")
    names = list(splits)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            overlap = np.intersect1d(splits[names[i]], splits[names[j]])
            if overlap.size:
                raise BundleValidationError(
                    f"splits {names[i]} and {names[j]} overlap at node {int(overlap[0])}"
                )


def format_float(x: float) -> str:
    """Shortest decimal string that parses back to the same 64-bit value."""
    return repr(float(x))


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise FileNotFoundError(f"bundle file missing: {path}")
    return path.read_text(encoding="utf-8").splitlines()


def read_bundle(directory: str | os.PathLike) -> GraphBundle:
    """Load and validate a bundle directory."""
    root = Path(directory)

    meta_lines = _read_lines(root / "meta.txt")
    meta: dict[str, str] = {}
    for lineno, line in enumerate(meta_lines, start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise BundleValidationError("expected key=value", "meta.txt", lineno)
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    for key in ("n", "f", "classes", "name"):
        if key not in meta:
            raise BundleValidationError(f"missing meta key {key!r}", "meta.txt", 0)
    n, f, classes = int(meta["n"]), int(meta["f"]), int(meta["classes"])

    graph_lines = _read_lines(root / "graph.txt")
    if not graph_lines:
        raise BundleValidationError("empty file", "graph.txt", 0)
    head = graph_lines[0].split()
    if len(head) != 2:
        raise BundleValidationError("header must be 'N M'", "graph.txt", 1)
    gn, gm = int(head[0]), int(head[1])
    if gn != n:
        raise BundleValidationError(f"node count {gn} != meta n={n}", "graph.txt", 1)
    pairs = np.empty((gm, 2), dtype=np.int64)
    for i in range(gm):
        lineno = i + 2
        try:
            u, v = graph_lines[i + 1].split()
        except (IndexError, ValueError):
            raise BundleValidationError("expected 'u v'", "graph.txt", lineno) from None
        pairs[i] = (int(u), int(v))
        if pairs[i].max() >= n or pairs[i].min() < 0:
            raise BundleValidationError(
                f"edge endpoint {int(pairs[i].max())} >= n={n}", "graph.txt", lineno
            )
    graph = from_edge_list(n, pairs)

    feat_lines = _read_lines(root / "features.txt")
    head = feat_lines[0].split() if feat_lines else []
    if len(head) != 2 or int(head[0]) != n or int(head[1]) != f:
        raise BundleValidationError(f"header must be '{n} {f}'", "features.txt", 1)
    features = np.empty((n, f))
    for i in range(n):
        lineno = i + 2
        try:
            row = feat_lines[i + 1].split()
        except IndexError:
            raise BundleValidationError("missing feature row", "features.txt", lineno) from None
        if len(row) != f:
            raise BundleValidationError(
                f"expected {f} values, got {len(row)}", "features.txt", lineno
            )
        try:
            features[i] = np.array(row, dtype=np.float64)
        except ValueError:
            raise BundleValidationError("unparseable real value", "features.txt", lineno) from None

    label_lines = _read_lines(root / "labels.txt")
    if len([ln for ln in label_lines if ln.strip()]) != n:
        raise BundleValidationError(f"expected {n} labels", "labels.txt", 0)
    labels = np.array([int(ln) for ln in label_lines if ln.strip()], dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab < 0 or lab >= classes:
            raise BundleValidationError(
                f"label {int(lab)} outside [0, {classes})", "labels.txt", i + 1
            )

    def read_split(file: str) -> np.ndarray:
        lines = _read_lines(root / file)
        idx = np.array([int(ln) for ln in lines if ln.strip()], dtype=np.int64)
        for i, node in enumerate(idx):
            if node < 0 or node >= n:
                raise BundleValidationError(
                    f"split index {int(node)} outside [0, {n})", file, i + 1
                )
        return idx

    return GraphBundle(
        graph=graph,
        features=features,
        labels=labels,
        train_idx=read_split("split_train.txt"),
        val_idx=read_split("split_val.txt"),
        test_idx=read_split("split_test.txt"),
        num_classes=classes,
        name=meta["name"],
    )


def write_bundle(bundle: GraphBundle, directory: str | os.PathLike) -> None:
    """Write a bundle directory in canonical form (see module docstring)."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    n, f = bundle.num_nodes, bundle.num_features

    def dump(file: str, text: str) -> None:
        (root / file).write_text(text, encoding="utf-8", newline="\n")

    dump(
        "meta.txt",
        f"n={n}\nf={f}\nclasses={bundle.num_classes}\nname={bundle.name}\n",
    )
    edges = bundle.graph.edges
    lines = [f"{n} {edges.shape[0]}"]
    lines += [f"{u} {v}" for u, v in edges]
    dump("graph.txt", "\n".join(lines) + "\n")
    rows = [f"{n} {f}"]
    rows += [" ".join(format_float(x) for x in row) for row in bundle.features]
    dump("features.txt", "\n".join(rows) + "\n")
    dump("labels.txt", "".join(f"{int(x)}\n" for x in bundle.labels))
    dump("split_train.txt", "".join(f"{int(x)}\n" for x in bundle.train_idx))
    dump("split_val.txt", "".join(f"{int(x)}\n" for x in bundle.val_idx))
    dump("split_test.txt", "".join(f"{int(x)}\n" for x in bundle.test_idx))


def write_csv(header: list[str], rows: list[list], path: str | os.PathLike) -> None:
    """Write a CSV table with canonical number formatting and LF endings."""
    out = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(format_float(cell))
            else:
                cells.append(str(cell))
        out.append(",".join(cells))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")
