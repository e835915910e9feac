"""Standalone entry point: run an extraction or synthesize a demo checkpoint."""

from __future__ import annotations

import argparse
import sys

from .encoder import EncoderConfig, make_demo_checkpoint
from .extract import run_extraction
from .manifest import load_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-extract", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("run", help="extract embeddings per a manifest")
    p.add_argument("--manifest", required=True)

    p = commands.add_parser("make-demo-checkpoint", help="write a fixed-seed stand-in checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--patch-size", type=int, default=8)
    p.add_argument("--width", type=int, default=48)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            result = run_extraction(load_manifest(args.manifest))
            print(
                f"embedded {len(result.ids)} image(s) "
                f"({len(result.skipped)} skipped) -> {result.output_path}",
                file=sys.stderr,
            )
        else:
            cfg = EncoderConfig(
                image_size=args.image_size,
                patch_size=args.patch_size,
                width=args.width,
                depth=args.depth,
                heads=args.heads,
            )
            make_demo_checkpoint(args.out, seed=args.seed, cfg=cfg)
            print(f"wrote demo checkpoint (width {cfg.width}) -> {args.out}", file=sys.stderr)
        return 0
    except (ValueError, OSError) as exc:
        print(f"embed-extract: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
