"""GCN and MLP models, feature augmentation, training and grid search.

The GCN layer iterates: propagate with the smoothing operator, apply an
affine map, then ReLU (dropout between layers); the final layer emits raw
logits. With the identity in place of the smoothing operator the network
reduces exactly to an MLP, which is how the MLP path is implemented.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .bundle import GraphBundle
from .graph import normalized_operator
from .nn import AdamState, LayerParams, Tensor, adam_step, glorot_init
from .spectral import SpectralDecomposition, band_project, eig_full

# Table of low-frequency percentages swept in the hyper-parameter search,
# expressed as fractions of the spectrum.
FREQUENCY_FRACTIONS = (
    0.001, 0.002, 0.004, 0.007, 0.01, 0.02, 0.03,
    0.06, 0.10, 0.15, 0.20, 0.30, 0.50, 0.80, 1.0,
)


def fraction_to_count(fraction: float, n: int) -> int:
    """Number of eigenpairs for a spectrum fraction: max(1, round(f * n))."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    return max(1, int(round(fraction * n)))


@dataclass(frozen=True)
class ModelConfig:
    """Hyper-parameters of one training run."""

    kind: str = "gcn"  # gcn | mlp
    hidden_layers: int = 2
    hidden_size: int = 128
    dropout: float = 0.5
    lr: float = 0.01
    weight_decay: float = 0.001
    epochs: int = 800
    patience: int = 400
    propagation: str = "full"  # full | band | identity
    band: tuple[int, int] | None = None
    feature_normalization: str = "none"  # none | per-node | per-feature
    input_dropout: bool = True
    decoupled_weight_decay: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gcn", "mlp"):
            raise ValueError(f"kind must be gcn or mlp, got {self.kind!r}")
        if self.hidden_layers < 1:
            raise ValueError("hidden_layers must be >= 1")
        if self.patience > self.epochs:
            raise ValueError("patience must not exceed epochs")
        if self.propagation not in ("full", "band", "identity"):
            raise ValueError(f"unknown propagation {self.propagation!r}")
        if self.propagation == "band" and self.band is None:
            raise ValueError("propagation='band' requires band=(k1, k2)")


@dataclass
class TrainReport:
    """Per-epoch curves plus the snapshot-based final metrics.

    ``wall_clock_sec`` is the only field that varies between identical
    reruns; everything else is a deterministic function of config + data.
    """

    history: list[tuple[int, float, float, float, float]]  # epoch, tr_loss, tr_acc, va_loss, va_acc
    best_epoch: int
    best_val_accuracy: float
    test_accuracy: float
    epochs_run: int
    wall_clock_sec: float
    params: list[LayerParams] = field(repr=False, default_factory=list)
    init_params: list[LayerParams] = field(repr=False, default_factory=list)

    CSV_HEADER = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")

    def rows(self) -> list[list]:
        return [list(r) for r in self.history]


def init_layers(dims: list[int], rng: np.random.Generator) -> list[LayerParams]:
    return [glorot_init(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]


def _clone_layers(layers: list[LayerParams]) -> list[LayerParams]:
    return [LayerParams(p.weight.copy(), p.bias.copy()) for p in layers]


def gcn_forward(
    x: np.ndarray,
    prop,
    layers: list[LayerParams],
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
    input_dropout: bool = True,
    layer_tensors: list[tuple[Tensor, Tensor]] | None = None,
    x_tensor: Tensor | None = None,
) -> Tensor:
    """Logits of the graph convolution cascade.

    ``prop`` is a propagation operator, a Tensor holding a dense operator
    matrix, or None for the identity (the MLP case). ``layer_tensors`` lets
    the training loop reuse Tensors so parameter gradients can be read back.
    """
    h = x_tensor if x_tensor is not None else Tensor(x)
    if training and dropout_rate > 0.0 and rng is None:
        raise ValueError("training-mode dropout needs an rng")
    if training and input_dropout and dropout_rate > 0.0:
        h = nn.dropout(h, dropout_rate, training, rng)
    last = len(layers) - 1
    for i, params in enumerate(layers):
        if prop is not None:
            h = nn.propagate(prop, h)
        if layer_tensors is not None:
            w, b = layer_tensors[i]
            h = nn.affine(h, params, weight=w, bias=b)
        else:
            h = nn.affine(h, params)
        if i < last:
            h = nn.relu(h)
            if training and dropout_rate > 0.0:
                h = nn.dropout(h, dropout_rate, training, rng)
    return h


def mlp_forward(x, layers, **kwargs) -> Tensor:
    """MLP logits: the graph cascade with the identity operator."""
    return gcn_forward(x, None, layers, **kwargs)


def evaluate_accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Fraction of masked nodes whose argmax logit matches the label.

    Argmax ties resolve to the lowest class index.
    """
    mask = np.asarray(mask)
    if mask.size == 0:
        raise ValueError("mask must select at least one node")
    pred = np.argmax(logits[mask], axis=1)
    return float(np.mean(pred == np.asarray(labels)[mask]))


def augment_features(
    x: np.ndarray,
    d: SpectralDecomposition,
    k: int,
    normalization: str = "none",
    include_dominant: bool = False,
) -> np.ndarray:
    """Concatenate the first k eigenvectors as extra feature columns.

    Indexing starts at the second-dominant eigenvector by default: the
    dominant one only encodes degrees. ``include_dominant`` starts at the
    top instead. Normalization applies to the appended block only.
    """
    if d.offset != 0:
        raise ValueError("augmentation needs a top or complete decomposition")
    start = 0 if include_dominant else 1
    if k < 0 or start + k > d.num_pairs:
        raise ValueError(
            f"k={k} exceeds available eigenvectors ({d.num_pairs - start} from index {start})"
        )
    if k == 0:
        return x
    block = np.array(d.eigenvectors[:, start : start + k])
    if normalization == "per-node":
        norms = np.linalg.norm(block, axis=1, keepdims=True)
        block = np.divide(block, norms, out=np.zeros_like(block), where=norms > 0)
    elif normalization == "per-feature":
        mean = block.mean(axis=0, keepdims=True)
        std = block.std(axis=0, keepdims=True)
        block = (block - mean) / np.maximum(std, 1e-12)
    elif normalization != "none":
        raise ValueError(f"unknown normalization {normalization!r}")
    return np.hstack([x, block])


def _resolve_operator(bundle: GraphBundle, cfg: ModelConfig, decomposition):
    if cfg.kind == "mlp" or cfg.propagation == "identity":
        return None
    if cfg.propagation == "full":
        return normalized_operator(bundle.graph)
    if decomposition is None:
        decomposition = eig_full(normalized_operator(bundle.graph))
    return band_project(decomposition, cfg.band[0], cfg.band[1])


def train(
    bundle: GraphBundle,
    cfg: ModelConfig,
    decomposition: SpectralDecomposition | None = None,
) -> TrainReport:
    """Full-batch training with validation-based snapshotting.

    The model snapshot with the best validation accuracy (ties broken by
    lower validation loss) is restored for the reported test accuracy.
    Training stops early once ``patience`` epochs pass without improvement.
    Identical config and data give a bit-identical report apart from the
    wall clock.
    """
    for split_name, idx in (("train", bundle.train_idx), ("val", bundle.val_idx), ("test", bundle.test_idx)):
        if idx.size == 0:
            raise ValueError(f"{split_name} split is empty")
    t_start = time.perf_counter()
    operator = _resolve_operator(bundle, cfg, decomposition)
    x = np.ascontiguousarray(bundle.features, dtype=np.float64)
    labels = bundle.labels

    init_rng = np.random.default_rng([cfg.seed, 0xA1])
    drop_rng = np.random.default_rng([cfg.seed, 0xD0])
    dims = [x.shape[1]] + [cfg.hidden_size] * cfg.hidden_layers + [bundle.num_classes]
    layers = init_layers(dims, init_rng)
    init_params = _clone_layers(layers)
    opt = AdamState(
        lr=cfg.lr,
        weight_decay=cfg.weight_decay,
        decoupled=cfg.decoupled_weight_decay,
    )

    history = []
    best = (-1.0, np.inf)  # (val_acc, val_loss) with loss minimized
    best_epoch = 0
    best_params = _clone_layers(layers)
    epochs_run = 0
    for epoch in range(1, cfg.epochs + 1):
        epochs_run = epoch
        tensors = [(Tensor(p.weight), Tensor(p.bias)) for p in layers]
        logits = gcn_forward(
            x, operator, layers,
            dropout_rate=cfg.dropout, training=True, rng=drop_rng,
            input_dropout=cfg.input_dropout, layer_tensors=tensors,
        )
        loss = nn.masked_softmax_xent(logits, labels, bundle.train_idx)
        loss.backward()
        flat_params, flat_grads = [], []
        for (w, b), params in zip(tensors, layers):
            flat_params += [params.weight, params.bias]
            flat_grads += [
                w.grad if w.grad is not None else np.zeros_like(params.weight),
                b.grad if b.grad is not None else np.zeros_like(params.bias),
            ]
        adam_step(flat_params, flat_grads, opt)

        eval_logits = gcn_forward(x, operator, layers, training=False)
        train_loss = float(nn.masked_softmax_xent(eval_logits, labels, bundle.train_idx).data)
        val_loss = float(nn.masked_softmax_xent(eval_logits, labels, bundle.val_idx).data)
        train_acc = evaluate_accuracy(eval_logits.data, labels, bundle.train_idx)
        val_acc = evaluate_accuracy(eval_logits.data, labels, bundle.val_idx)
        history.append((epoch, train_loss, train_acc, val_loss, val_acc))

        if val_acc > best[0] or (val_acc == best[0] and val_loss < best[1]):
            best = (val_acc, val_loss)
            best_epoch = epoch
            best_params = _clone_layers(layers)
        if epoch - best_epoch >= cfg.patience:
            break

    test_logits = gcn_forward(x, operator, best_params, training=False)
    test_acc = evaluate_accuracy(test_logits.data, labels, bundle.test_idx)
    return TrainReport(
        history=history,
        best_epoch=best_epoch,
        best_val_accuracy=best[0],
        test_accuracy=test_acc,
        epochs_run=epochs_run,
        wall_clock_sec=time.perf_counter() - t_start,
        params=best_params,
        init_params=init_params,
    )


@dataclass(frozen=True)
class GridSpec:
    """Axes of the exhaustive hyper-parameter search."""

    base: ModelConfig
    lrs: tuple[float, ...] = (0.01, 0.001)
    hidden_layer_counts: tuple[int, ...] = (1, 2, 3, 4)
    dropouts: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8)
    frequency_fractions: tuple[float, ...] = FREQUENCY_FRACTIONS
    normalizations: tuple[str, ...] = ("none", "per-node")

    def points(self):
        """Deterministic enumeration of (lr, layers, dropout, fraction, norm)."""
        return itertools.product(
            self.lrs,
            self.hidden_layer_counts,
            self.dropouts,
            self.frequency_fractions,
            self.normalizations,
        )

    def size(self) -> int:
        return (
            len(self.lrs)
            * len(self.hidden_layer_counts)
            * len(self.dropouts)
            * len(self.frequency_fractions)
            * len(self.normalizations)
        )


GRID_CSV_HEADER = (
    "lr", "hidden_layers", "dropout", "fraction", "k", "normalization",
    "val_acc", "test_acc", "best_epoch", "error",
)


@dataclass(frozen=True)
class GridPoint:
    """One evaluated grid point, including the resolved run config."""

    lr: float
    hidden_layers: int
    dropout: float
    fraction: float
    k: int
    normalization: str
    val_acc: float
    test_acc: float
    best_epoch: int
    config: ModelConfig


def _grid_point_worker(args):
    bundle, cfg, decomposition = args
    try:
        report = train(bundle, cfg, decomposition)
        return (report.best_val_accuracy, report.test_accuracy, report.best_epoch, "")
    except Exception as exc:
        return (None, None, None, f"error:{exc}")


def grid_search(
    bundle: GraphBundle,
    grid: GridSpec,
    decomposition: SpectralDecomposition | None = None,
    workers: int = 1,
) -> tuple[GridPoint, list[list]]:
    """Exhaustive search over the grid, selected by validation accuracy.

    Ties prefer the smaller frequency fraction, then the smaller model.
    For MLP configs the fraction selects how many eigenvectors augment the
    features (capped at the available non-dominant count); for GCN configs
    it selects the retained low-frequency band. Points run independently
    (optionally on a process pool); rows follow the deterministic grid
    enumeration regardless of completion order. Returns the winning point
    and the full result table.
    """
    if grid.size() == 0:
        raise ValueError("empty grid")
    n = bundle.num_nodes
    if decomposition is None:
        decomposition = eig_full(normalized_operator(bundle.graph))

    feature_cache: dict[tuple[int, str], np.ndarray] = {}
    tasks, metas = [], []
    for lr, layers, rate, fraction, norm in grid.points():
        k = fraction_to_count(fraction, n)
        cfg = replace(
            grid.base,
            lr=lr,
            hidden_layers=layers,
            dropout=rate,
            feature_normalization=norm,
        )
        if cfg.kind == "mlp":
            k = min(k, decomposition.num_pairs - 1)
            key = (k, norm)
            if key not in feature_cache:
                feature_cache[key] = augment_features(
                    bundle.features, decomposition, k, normalization=norm
                )
            cfg = replace(cfg, propagation="identity")
            tasks.append((bundle.with_features(feature_cache[key]), cfg, None))
        else:
            cfg = replace(cfg, propagation="band", band=(0, k - 1))
            tasks.append((bundle, cfg, decomposition))
        metas.append((lr, layers, rate, fraction, k, norm, cfg))

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_grid_point_worker, tasks))
    else:
        results = [_grid_point_worker(t) for t in tasks]

    rows = []
    best = None
    best_key = None
    for (lr, layers, rate, fraction, k, norm, cfg), (val, tst, epoch, err) in zip(
        metas, results
    ):
        if err:
            rows.append([lr, layers, rate, fraction, k, norm, "", "", "", err])
            continue
        rows.append([lr, layers, rate, fraction, k, norm, val, tst, epoch, ""])
        key_tuple = (val, -fraction, -layers)
        if best_key is None or key_tuple > best_key:
            best_key = key_tuple
            best = GridPoint(
                lr=lr, hidden_layers=layers, dropout=rate, fraction=fraction,
                k=k, normalization=norm, val_acc=val, test_acc=tst,
                best_epoch=epoch, config=cfg,
            )
    if best is None:
        raise RuntimeError("every grid point failed")
    return best, rows
