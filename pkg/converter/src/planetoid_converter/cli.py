"""Command line: convert --dataset <name> --in <dir> --out <dir>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .convert import KNOWN_STATS, ConversionError, RawRelease, convert


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="convert",
        description="Convert a raw citation-network release into a portable text bundle",
    )
    parser.add_argument("--dataset", required=True,
                        help=f"dataset name; known: {', '.join(sorted(KNOWN_STATS))}")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the ind.<name>.* release files")
    parser.add_argument("--out", required=True, help="bundle output directory")
    args = parser.parse_args(argv)

    raw = RawRelease(directory=Path(args.in_dir), name=args.dataset)
    try:
        warnings = convert(raw, Path(args.out))
    except (ConversionError, FileNotFoundError) as exc:
        print(f"convert: {exc}", file=sys.stderr)
        return 1
    for w in warnings:
        print(f"warning: {w}")
    print(f"converted {args.dataset} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
