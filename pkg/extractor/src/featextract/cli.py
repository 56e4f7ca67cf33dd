"""CLI: featextract extract --input-dir ... --output ... [--batch-size N]."""

from __future__ import annotations

import argparse
import logging
import sys

from .extractor import ExtractSpec, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featextract",
        description="Extract 256-dim image features into a FEAT binary file",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--weights", default="auto",
                   help="auto | pretrained | random | path to a state dict")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    spec = ExtractSpec(
        image_dir=args.input_dir,
        output=args.output,
        weights=args.weights,
        batch_size=args.batch_size,
    )
    try:
        result = extract(spec)
    except (FileNotFoundError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {result.count} rows to {result.output} "
        f"(weights: {result.weights_used}, {len(result.failures)} failures)"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
