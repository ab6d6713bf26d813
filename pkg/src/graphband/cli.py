"""Command-line front end.

Subcommands: spectrum, ablate-low, ablate-high, augment, train,
grid-search, sensitivity, sbm-gen, plot. Model hyper-parameters come from
built-in defaults, overridden by a ``--config`` key=value file, overridden
in turn by explicit command-line flags. All CSV and SVG outputs are
byte-identical across reruns with the same flags and seeds.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .bundle import read_bundle, write_bundle, write_csv
from .experiments import (
    AUGMENT_HEADER,
    DEFAULT_SEEDS,
    HIGHPASS_HEADER,
    LOWPASS_HEADER,
    SENSITIVITY_HEADER,
    SweepSpec,
    run_augment_sweep,
    run_highpass_sweep,
    run_lowpass_sweep,
    run_sensitivity,
)
from .graph import DENSE_THRESHOLD, normalized_operator
from .models import (
    FREQUENCY_FRACTIONS,
    GRID_CSV_HEADER,
    GridSpec,
    ModelConfig,
    train,
    grid_search,
)
from .sbm import (
    DEFAULT_FEATURE_DIM,
    DEFAULT_SEPARATION,
    SbmSpec,
    make_sbm_bundle,
)
from .spectral import eig_full, eig_truncated, spectrum_report
from .svgplot import line_plot

_CONFIG_FIELDS = {f.name: f.type for f in fields(ModelConfig)}


def _parse_config_file(path: str) -> dict:
    """key=value lines; '#' starts a comment; unknown keys are rejected."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value
    return out


def _coerce(name: str, value: str):
    if name in ("kind", "propagation", "feature_normalization"):
        return value
    if name in ("input_dropout", "decoupled_weight_decay"):
        return value.lower() in ("1", "true", "yes")
    if name == "band":
        k1, k2 = value.split(",")
        return (int(k1), int(k2))
    if name in ("hidden_layers", "hidden_size", "epochs", "patience", "seed"):
        return int(value)
    return float(value)


def _build_config(args) -> ModelConfig:
    cfg = ModelConfig()
    if getattr(args, "config", None):
        file_values = _parse_config_file(args.config)
        cfg = replace(cfg, **{k: _coerce(k, v) for k, v in file_values.items()})
    overrides = {}
    for name in ("kind", "hidden_layers", "hidden_size", "dropout", "lr",
                 "weight_decay", "epochs", "patience", "feature_normalization"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--kind", choices=("gcn", "mlp"))
    p.add_argument("--hidden-layers", dest="hidden_layers", type=int)
    p.add_argument("--hidden-size", dest="hidden_size", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--feature-normalization", dest="feature_normalization",
                   choices=("none", "per-node", "per-feature"))


def _add_sweep_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", default=",".join(str(s) for s in DEFAULT_SEEDS),
                   help="comma-separated seed list")
    p.add_argument("--workers", type=int, default=1)
    _add_model_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphband",
        description="Spectral band-pass experiments on graph networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalue table of the propagation operator")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truncated", type=int, default=0,
                   help="keep only this many extremal eigenvalues (Lanczos)")
    p.add_argument("--side", choices=("top", "bottom"), default="top")

    p = sub.add_parser("ablate-low", help="GCN accuracy vs retained low-frequency band")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default=",".join(str(f) for f in FREQUENCY_FRACTIONS))
    p.add_argument("--depths", default="2,4,8")
    _add_sweep_flags(p)

    p = sub.add_parser("ablate-high", help="depth-2 GCN accuracy vs retained high band")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default=",".join(str(f) for f in FREQUENCY_FRACTIONS))
    _add_sweep_flags(p)

    p = sub.add_parser("augment", help="MLP accuracy on eigenvector-augmented features")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default=",".join(str(f) for f in FREQUENCY_FRACTIONS))
    _add_sweep_flags(p)

    p = sub.add_parser("train", help="single training run, per-epoch CSV")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=None)
    _add_model_flags(p)

    p = sub.add_parser("grid-search", help="exhaustive hyper-parameter search")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid-lrs", default="0.01,0.001")
    p.add_argument("--grid-hidden-layers", default="1,2,3,4")
    p.add_argument("--grid-dropouts", default="0,0.2,0.4,0.6,0.8")
    p.add_argument("--grid-fractions",
                   default=",".join(str(f) for f in FREQUENCY_FRACTIONS))
    p.add_argument("--grid-normalizations", default="none,per-node")
    p.add_argument("--seed", default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_model_flags(p)

    p = sub.add_parser("sensitivity", help="loss gradient magnitude per eigenvalue")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=None)
    _add_model_flags(p)

    p = sub.add_parser("sbm-gen", help="generate a synthetic block-model bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--blocks", default="100,100", help="comma-separated block sizes")
    p.add_argument("--p", type=float, default=0.5, help="intra-community probability")
    p.add_argument("--q", type=float, default=0.05, help="inter-community probability")
    p.add_argument("--feature-dim", type=int, default=DEFAULT_FEATURE_DIM)
    p.add_argument("--separation", type=float, default=DEFAULT_SEPARATION)
    p.add_argument("--splits", default="0.3,0.2,0.5")
    p.add_argument("--name", default="sbm")
    p.add_argument("--seed", default="0")

    p = sub.add_parser("plot", help="render a result CSV as an SVG figure")
    p.add_argument("--csv", required=True)
    p.add_argument("--kind", required=True,
                   choices=("lowpass", "highpass", "augment", "spectrum", "sensitivity"))
    p.add_argument("--out", required=True)

    return parser


def _seeds(args) -> tuple[int, ...]:
    return _parse_int_list(args.seed)


def cmd_spectrum(args) -> int:
    bundle = read_bundle(args.bundle)
    op = normalized_operator(bundle.graph)
    if args.truncated > 0:
        d = eig_truncated(op, args.truncated, side=args.side)
    elif op.is_dense:
        d = eig_full(op)
    else:
        raise ValueError(
            f"graph has {op.n} > {DENSE_THRESHOLD} nodes; pass --truncated K"
        )
    rows = [[i, v] for i, v in spectrum_report(d)]
    write_csv(["index", "eigenvalue"], rows, args.out)
    print(f"wrote {len(rows)} eigenvalues to {args.out}")
    return 0


def cmd_ablate_low(args) -> int:
    bundle = read_bundle(args.bundle)
    spec = SweepSpec(
        variable="low-band",
        values=_parse_float_list(args.fractions),
        seeds=_seeds(args),
        depths=_parse_int_list(args.depths),
        base=_build_config(args),
        workers=args.workers,
    )
    rows = run_lowpass_sweep(bundle, spec)
    write_csv(list(LOWPASS_HEADER), rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_ablate_high(args) -> int:
    bundle = read_bundle(args.bundle)
    spec = SweepSpec(
        variable="high-band",
        values=_parse_float_list(args.fractions),
        seeds=_seeds(args),
        base=_build_config(args),
        workers=args.workers,
    )
    rows = run_highpass_sweep(bundle, spec)
    write_csv(list(HIGHPASS_HEADER), rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_augment(args) -> int:
    bundle = read_bundle(args.bundle)
    spec = SweepSpec(
        variable="augment-k",
        values=_parse_float_list(args.fractions),
        seeds=_seeds(args),
        base=_build_config(args),
        workers=args.workers,
    )
    rows = run_augment_sweep(bundle, spec)
    write_csv(list(AUGMENT_HEADER), rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_train(args) -> int:
    bundle = read_bundle(args.bundle)
    cfg = _build_config(args)
    if args.seed is not None:
        cfg = replace(cfg, seed=_seeds(args)[0])
    report = train(bundle, cfg)
    write_csv(list(report.CSV_HEADER), report.rows(), args.out)
    print(
        f"test_acc={report.test_accuracy:.4f} best_epoch={report.best_epoch} "
        f"val_acc={report.best_val_accuracy:.4f} epochs_run={report.epochs_run}"
    )
    return 0


def cmd_grid_search(args) -> int:
    bundle = read_bundle(args.bundle)
    base = _build_config(args)
    if args.seed is not None:
        base = replace(base, seed=_seeds(args)[0])
    grid = GridSpec(
        base=base,
        lrs=_parse_float_list(args.grid_lrs),
        hidden_layer_counts=_parse_int_list(args.grid_hidden_layers),
        dropouts=_parse_float_list(args.grid_dropouts),
        frequency_fractions=_parse_float_list(args.grid_fractions),
        normalizations=tuple(args.grid_normalizations.split(",")),
    )
    best, rows = grid_search(bundle, grid, workers=args.workers)
    write_csv(list(GRID_CSV_HEADER), rows, args.out)
    print(
        f"evaluated {len(rows)} configs; best: lr={best.lr} "
        f"hidden_layers={best.hidden_layers} dropout={best.dropout} "
        f"fraction={best.fraction} k={best.k} normalization={best.normalization} "
        f"val_acc={best.val_acc:.4f} test_acc={best.test_acc:.4f}"
    )
    return 0


def cmd_sensitivity(args) -> int:
    bundle = read_bundle(args.bundle)
    cfg = _build_config(args)
    if args.seed is not None:
        cfg = replace(cfg, seed=_seeds(args)[0])
    rows = run_sensitivity(bundle, cfg)
    write_csv(list(SENSITIVITY_HEADER), rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_sbm_gen(args) -> int:
    blocks = _parse_int_list(args.blocks)
    r = len(blocks)
    prob = np.full((r, r), args.q)
    np.fill_diagonal(prob, args.p)
    spec = SbmSpec(blocks, prob, seed=_seeds(args)[0])
    fractions = _parse_float_list(args.splits)
    bundle = make_sbm_bundle(
        spec,
        feature_dim=args.feature_dim,
        separation=args.separation,
        split_fractions=fractions,
        name=args.name,
    )
    write_bundle(bundle, args.out)
    print(
        f"wrote bundle '{bundle.name}': n={bundle.num_nodes} "
        f"edges={bundle.graph.num_edges} classes={bundle.num_classes} to {args.out}"
    )
    return 0


def _read_csv_rows(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or len(rows) < 2:
        raise ValueError(f"{path}: empty table, nothing to plot")
    return rows[0], rows[1:]


def _mean_by(rows, key_cols, val_col):
    acc: dict[tuple, list[float]] = {}
    for row in rows:
        key = tuple(float(row[c]) for c in key_cols)
        acc.setdefault(key, []).append(float(row[val_col]))
    return {k: sum(v) / len(v) for k, v in acc.items()}


def cmd_plot(args) -> int:
    header, rows = _read_csv_rows(args.csv)
    col = {name: i for i, name in enumerate(header)}

    def require(*names):
        missing = [n for n in names if n not in col]
        if missing:
            raise ValueError(
                f"{args.csv}: schema mismatch for kind={args.kind}, missing {missing}"
            )

    if args.kind == "lowpass":
        require("fraction", "depth", "test_acc")
        means = _mean_by(rows, (col["fraction"], col["depth"]), col["test_acc"])
        depths = sorted({d for _, d in means})
        series = [
            (f"depth={int(d)}",
             sorted((f, m) for (f, dd), m in means.items() if dd == d))
            for d in depths
        ]
        svg = line_plot(series, "Accuracy vs retained low-frequency band",
                        "fraction of spectrum", "test accuracy")
    elif args.kind == "highpass":
        require("fraction", "test_acc")
        means = _mean_by(rows, (col["fraction"],), col["test_acc"])
        series = [("depth=2", sorted((k[0], m) for k, m in means.items()))]
        svg = line_plot(series, "Accuracy vs retained high-frequency band",
                        "fraction of spectrum", "test accuracy")
    elif args.kind == "augment":
        require("fraction", "test_acc")
        means = _mean_by(rows, (col["fraction"],), col["test_acc"])
        series = [("mlp", sorted((k[0], m) for k, m in means.items()))]
        svg = line_plot(series, "MLP accuracy vs augmented eigenvector count",
                        "fraction of spectrum", "test accuracy")
    elif args.kind == "spectrum":
        require("index", "eigenvalue")
        pts = sorted((float(r[col["index"]]), float(r[col["eigenvalue"]])) for r in rows)
        svg = line_plot([("eigenvalues", pts)], "Operator spectrum",
                        "index", "eigenvalue")
    elif args.kind == "sensitivity":
        require("index", "grad_init", "grad_trained")
        init_pts = sorted((float(r[col["index"]]), float(r[col["grad_init"]])) for r in rows)
        tr_pts = sorted((float(r[col["index"]]), float(r[col["grad_trained"]])) for r in rows)
        svg = line_plot([("init", init_pts), ("trained", tr_pts)],
                        "Loss sensitivity per eigenvalue", "index", "|gradient|")
    else:
        raise ValueError(f"unknown plot kind {args.kind!r}")
    Path(args.out).write_text(svg, encoding="utf-8", newline="\n")
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "ablate-low": cmd_ablate_low,
    "ablate-high": cmd_ablate_high,
    "augment": cmd_augment,
    "train": cmd_train,
    "grid-search": cmd_grid_search,
    "sensitivity": cmd_sensitivity,
    "sbm-gen": cmd_sbm_gen,
    "plot": cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"graphband {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
