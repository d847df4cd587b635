"""Command line for the export jobs.

Exit codes: 0 success, 1 job/data failure, 2 usage error, 3 environment
error (model backend unavailable).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .encoders import BackendError, load_encoder
from .jobs import BridgeJob, DataError, UsageError, export_images, export_text, load_class_texts


def _cmd_export_text(args: argparse.Namespace) -> int:
    classes = load_class_texts(args.input)
    encoder = load_encoder(args.model)
    result = export_text(classes, encoder, args.out)
    print(
        f"encoded {result['rows']} text rows ({len(classes)} classes) "
        f"with {encoder.name} -> {args.out}"
    )
    return 0


def _cmd_export_images(args: argparse.Namespace) -> int:
    classes = load_class_texts(args.descriptions) if args.descriptions else None
    encoder = load_encoder(args.model)
    job = BridgeJob(
        model=args.model,
        dataset_root=Path(args.dataset),
        crop_count=args.crops,
        alpha=args.alpha,
        beta=args.beta,
        seed=args.seed,
        out=Path(args.out),
    )
    result = export_images(job, encoder, classes)
    skipped = len(result["diagnostics"])
    print(
        f"encoded {result['images']} images ({result['image_rows']} image rows, "
        f"{result['text_rows']} text rows, {skipped} skipped) "
        f"with {encoder.name} -> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="Export embeddings into f32 archive + dataset manifest form.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("export-text", help="encode label prompts and description texts")
    p.add_argument("--input", required=True, help="descriptions JSON file")
    p.add_argument("--model", default="stub:32", help="model id; stub:<dim> needs no weights")
    p.add_argument("--out", required=True, help="archive directory to write")
    p.set_defaults(func=_cmd_export_text)

    p = sub.add_parser("export-images", help="encode full frames plus sampled crop pools")
    p.add_argument("--dataset", required=True, help="root with one directory per class")
    p.add_argument("--model", default="stub:32", help="model id; stub:<dim> needs no weights")
    p.add_argument("--crops", type=int, default=60, help="candidate crops per image")
    p.add_argument("--alpha", type=float, default=0.5, help="minimum crop side fraction")
    p.add_argument("--beta", type=float, default=0.9, help="maximum crop side fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--descriptions", help="descriptions JSON to embed alongside prompts")
    p.add_argument("--out", required=True, help="directory for dataset.json and archives")
    p.set_defaults(func=_cmd_export_images)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError) as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"environment error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
