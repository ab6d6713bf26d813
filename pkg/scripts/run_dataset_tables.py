#!/usr/bin/env python3
"""Model-comparison rows on converted citation bundles.

For each available dataset bundle this trains, over three seeds, the
depth-2 graph convolution, the plain MLP, and the MLP on eigenvector-
augmented features at the dataset's published best spectrum fraction,
then prints the three mean test accuracies.

Bundles are looked up under $GRAPHBAND_DATA (default ./data), one
directory per dataset, as produced by the converter tool.

Usage: python scripts/run_dataset_tables.py [cora citeseer pubmed]
"""

import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from graphband import (
    ModelConfig,
    augment_features,
    eig_full,
    eig_truncated,
    normalized_operator,
    read_bundle,
    train,
)
from graphband.models import fraction_to_count

AUGMENT_FRACTION = {"cora": 0.06, "citeseer": 0.15, "pubmed": 0.007}
SEEDS = (0, 1, 2)


def table_row(name: str, root: Path):
    bundle = read_bundle(root / name)
    op = normalized_operator(bundle.graph)
    k = fraction_to_count(AUGMENT_FRACTION[name], bundle.num_nodes)
    if op.is_dense:
        decomposition = eig_full(op)
    else:
        decomposition = eig_truncated(op, k + 1, side="top")
    gcn_cfg = ModelConfig(kind="gcn", hidden_layers=2)
    mlp_cfg = ModelConfig(kind="mlp", propagation="identity")

    gcn = np.mean([
        train(bundle, replace(gcn_cfg, seed=s)).test_accuracy for s in SEEDS
    ])
    mlp = np.mean([
        train(bundle, replace(mlp_cfg, seed=s)).test_accuracy for s in SEEDS
    ])
    xk = augment_features(bundle.features, decomposition, min(k, decomposition.num_pairs - 1))
    aug = np.mean([
        train(bundle.with_features(xk), replace(mlp_cfg, seed=s)).test_accuracy
        for s in SEEDS
    ])
    print(f"{name:10s} GCN {100*gcn:5.1f}   MLP {100*mlp:5.1f}   "
          f"MLP-augmented(k={k}) {100*aug:5.1f}")


def main():
    root = Path(os.environ.get("GRAPHBAND_DATA", "data"))
    names = sys.argv[1:] or ["cora", "citeseer", "pubmed"]
    ran = 0
    for name in names:
        if not (root / name / "meta.txt").is_file():
            print(f"{name:10s} no bundle under {root / name}, skipping")
            continue
        table_row(name, root)
        ran += 1
    if not ran:
        print("no bundles found; convert the raw releases first")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
