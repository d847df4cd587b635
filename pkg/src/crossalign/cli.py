"""Command-line entry points.

Subcommands: ``synth`` (generate a synthetic dataset), ``refine-text`` (run
description refinement standalone), ``crop-sim`` (run view sampling and the
overlap filter standalone), ``classify`` (full run with a report),
``sweep`` (grid of runs to CSV), ``bench`` (crop/filter latency), and
``validate`` (check a dataset or archive on disk).

Exit codes: 0 on success, 1 when inputs fail validation, 2 on usage errors
such as missing files or malformed flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .descriptions import (
    DescriptionCandidate,
    EmptyRefinedSetError,
    LabelPrompt,
    dump_refined_pool,
    load_description_pool,
    refine_descriptions,
)
from .geometry import CropWindow, fill_view_queue
from .harness import (
    ExperimentConfig,
    bench,
    run_experiment,
    sweep,
    write_sweep_csv,
)
from .rng import derive_seed
from .store import (
    ArchiveValidationError,
    CorruptArchiveError,
    load_dataset,
    read_archive,
    text_row_name,
    validate_manifest,
    write_archive,
)
from .synth import build_dataset, gen_world


class UsageError(Exception):
    """Bad invocation: missing inputs or malformed flag values."""


def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        with open(p, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"unparseable JSON in {path}: {exc}") from exc


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError as exc:
        raise UsageError(f"bad seed list {text!r}") from exc


_CONFIG_FLAGS = (
    "mode", "alpha", "beta", "eta", "capacity", "s_th", "k", "tau",
    "vr_strategy", "dr_strategy", "include_full_view", "max_attempts",
    "desc_source", "inject_redundant_crops", "inject_jitter",
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file of run configuration fields")
    parser.add_argument("--mode", choices=("bifta", "wca", "bifta_no_vr", "bifta_no_dr", "clip", "clip_e", "desc_avg"))
    parser.add_argument("--alpha", type=float, help="minimum crop side fraction")
    parser.add_argument("--beta", type=float, help="maximum crop side fraction")
    parser.add_argument("--eta", type=float, help="view overlap threshold")
    parser.add_argument("--capacity", type=int, help="views per image")
    parser.add_argument("--s-th", dest="s_th", type=float, help="description redundancy threshold")
    parser.add_argument("--k", type=int, help="descriptions kept per class")
    parser.add_argument("--tau", type=float, help="similarity temperature")
    parser.add_argument("--vr", dest="vr_strategy", help="iou, embed_cosine, or grid:<g>")
    parser.add_argument("--dr", dest="dr_strategy", choices=("embed_cosine", "tfidf", "none"))
    parser.add_argument("--include-full-view", dest="include_full_view", action="store_true", default=None)
    parser.add_argument("--max-attempts", dest="max_attempts", type=int)
    parser.add_argument("--desc-source", dest="desc_source", choices=("cupl", "des_attr", "dist_attr", "other"))
    parser.add_argument("--inject-dups", dest="inject_redundant_crops", type=int,
                        help="lead each crop stream with this many near-duplicates")
    parser.add_argument("--inject-jitter", dest="inject_jitter", type=float)
    parser.add_argument("--seeds", help="comma- or space-separated seed list")
    parser.add_argument("--seed", type=int, help="single seed (shorthand for --seeds)")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    fields = {}
    if getattr(args, "config", None):
        fields.update(_load_json(args.config))
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if getattr(args, "seeds", None) is not None:
        fields["seeds"] = _parse_seeds(args.seeds)
    elif getattr(args, "seed", None) is not None:
        fields["seeds"] = (args.seed,)
    try:
        return ExperimentConfig.from_dict(fields)
    except TypeError as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _load_dataset_arg(args: argparse.Namespace):
    path = Path(args.manifest)
    if not path.is_file():
        raise UsageError(f"no such manifest: {path}")
    return load_dataset(path)


def _cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    world = gen_world(
        num_classes=args.classes,
        parts_per_class=args.parts,
        dim=args.dim,
        noise_sigma=args.noise,
        seed=args.seed,
        g_img=args.g_img,
    )
    manifest, archives = build_dataset(
        world,
        images_per_class=args.images_per_class,
        m_true=args.m_true,
        dup_factor=args.dup_factor,
        distractor_count=args.distractors,
        desc_noise=args.desc_noise,
        pool_size=args.pool,
        pool_window=CropWindow(args.alpha, args.beta),
        pool_seed=args.pool_seed,
    )
    out.mkdir(parents=True, exist_ok=True)
    write_archive(archives["image"], out / manifest.image_archive)
    write_archive(archives["text"], out / manifest.text_archive)
    manifest.save(out / "dataset.json")
    print(
        f"wrote {len(manifest.images)} images across {len(manifest.classes)} classes "
        f"to {out} (image rows: {archives['image'].count}, text rows: {archives['text'].count})"
    )
    return 0


def _cmd_refine_text(args: argparse.Namespace) -> int:
    doc = load_description_pool(_require_file(args.pool, "pool"))
    archive = read_archive(_require_dir(args.archive, "archive"))
    index = archive.row_index()

    def lookup(text: str, what: str) -> np.ndarray:
        name = text_row_name(text)
        if name not in index:
            raise ArchiveValidationError(
                f"{what} {text!r} has no row in the archive (expected name {name})"
            )
        return archive.data[index[name]].astype(np.float64)

    label = LabelPrompt(doc["label"], doc["prompt"], lookup(doc["prompt"], "prompt"))
    merged = [
        DescriptionCandidate(e["text"], e.get("source", "other"), lookup(e["text"], "description"))
        for e in doc["descriptions"]
    ]
    refined = refine_descriptions(merged, label, args.s_th, args.k, args.dr)
    dump_refined_pool(args.out, doc, merged, refined, label)
    print(
        f"kept {len(refined.members)} of {len(merged)} descriptions for "
        f"{label.label!r} (s_th={args.s_th}, k={args.k}, mode={args.dr}) -> {args.out}"
    )
    return 0


def _cmd_crop_sim(args: argparse.Namespace) -> int:
    window = CropWindow(args.alpha, args.beta)
    queues = []
    for i in range(args.count):
        queue = fill_view_queue(
            derive_seed(args.seed, i), window, args.eta, args.capacity, args.max_attempts
        )
        queues.append(queue.to_json_dict())
    doc = {
        "format_version": 1,
        "seed": args.seed,
        "alpha": args.alpha,
        "beta": args.beta,
        "queues": queues,
    }
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    total_fallback = sum(q["fallback_count"] for q in queues)
    print(
        f"filled {len(queues)} queues (capacity {args.capacity}, eta {args.eta}); "
        f"total fallback copies: {total_fallback}",
        file=sys.stderr,
    )
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    manifest, archives = _load_dataset_arg(args)
    report, records = run_experiment(config, manifest, archives, collect_records=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        with open(out / "results.jsonl", "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        print(
            f"mode={config.mode} mean_accuracy={report.mean_accuracy:.4f} "
            f"std={report.std_accuracy:.4f} -> {out}"
        )
    else:
        sys.stdout.write(report.to_json())
    return 0


def _parse_grid(entries: list[str]) -> dict:
    grid: dict = {}
    for entry in entries:
        if "=" not in entry:
            raise UsageError(f"bad grid entry {entry!r}, expected key=v1,v2,...")
        key, _, values = entry.partition("=")
        key = key.strip()
        toks = [tok for tok in values.split(",") if tok != ""]
        if not toks:
            raise UsageError(f"grid entry {entry!r} lists no values")
        if key == "s_th,k":
            raise UsageError("paired threshold grids use --grid-pair s_th,k=0.9:10,0.95:20")
        parsed = []
        for tok in toks:
            parsed.append(_parse_scalar(tok))
        grid[key] = parsed
    return grid


def _parse_scalar(tok: str):
    for cast in (int, float):
        try:
            return cast(tok)
        except ValueError:
            continue
    return tok


def _parse_grid_pairs(entries: list[str], grid: dict) -> None:
    for entry in entries:
        if "=" not in entry:
            raise UsageError(f"bad paired grid entry {entry!r}")
        key, _, values = entry.partition("=")
        key = key.strip()
        pairs = []
        for tok in values.split(","):
            parts = tok.split(":")
            if len(parts) != len(key.split(",")):
                raise UsageError(
                    f"paired grid value {tok!r} does not match key {key!r}"
                )
            pairs.append(tuple(_parse_scalar(p) for p in parts))
        grid[key] = pairs


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    manifest, archives = _load_dataset_arg(args)
    grid = _parse_grid(args.grid or [])
    _parse_grid_pairs(args.grid_pair or [], grid)
    if not grid:
        raise UsageError("sweep needs at least one --grid or --grid-pair axis")
    cells = sweep(config, grid, manifest, archives)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    write_sweep_csv(cells, csv_path)
    ok = sum(1 for c in cells if c.report is not None)
    print(f"swept {len(cells)} cells ({ok} ok, {len(cells) - ok} failed) -> {csv_path}")
    for cell in cells:
        summary = (
            f"mean_accuracy={cell.report.mean_accuracy:.4f}"
            if cell.report is not None
            else f"error: {cell.error}"
        )
        print(f"  {cell.assignment} {summary}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = bench(config, repetitions=args.repetitions, candidates=args.candidates)
    payload = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    print(
        f"median generate+encode {result['generate_encode_ms']['median']:.2f} ms, "
        f"median filter {result['filter_ms']['median']:.2f} ms "
        f"(filter share {result['filter_share']:.3f})",
        file=sys.stderr,
    )
    return 0


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such {what} file: {path}")
    return p


def _require_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"no such {what} directory: {path}")
    return p


def _cmd_validate(args: argparse.Namespace) -> int:
    if not args.manifest and not args.archive:
        raise UsageError("validate needs --manifest or --archive")
    problems: list[str] = []
    if args.archive:
        try:
            archive = read_archive(_require_dir(args.archive, "archive"))
            print(f"archive ok: {archive.count} rows, dim {archive.dim}")
        except (CorruptArchiveError, ArchiveValidationError) as exc:
            problems.append(str(exc))
    if args.manifest:
        try:
            manifest, archives = load_dataset(_require_file(args.manifest, "manifest"))
            problems.extend(validate_manifest(manifest, archives))
            if not problems:
                print(
                    f"manifest ok: {len(manifest.images)} images, "
                    f"{len(manifest.classes)} classes"
                )
        except (CorruptArchiveError, ArchiveValidationError, KeyError, ValueError) as exc:
            problems.append(str(exc))
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossalign",
        description="Cross-alignment classification with crop-view and description refinement.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a synthetic dataset with oracle embeddings")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--parts", type=int, default=4)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--g-img", dest="g_img", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images-per-class", dest="images_per_class", type=int, default=5)
    p.add_argument("--m-true", dest="m_true", type=int, default=6)
    p.add_argument("--dup-factor", dest="dup_factor", type=int, default=1)
    p.add_argument("--distractors", type=int, default=0)
    p.add_argument("--desc-noise", dest="desc_noise", type=float, default=0.05)
    p.add_argument("--pool", type=int, default=0, help="pre-encoded crops per image")
    p.add_argument("--pool-seed", dest="pool_seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.9)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("refine-text", help="refine one class's description pool")
    p.add_argument("--pool", required=True, help="description pool JSON")
    p.add_argument("--archive", required=True, help="text embedding archive directory")
    p.add_argument("--out", required=True)
    p.add_argument("--s-th", dest="s_th", type=float, default=0.99)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--dr", choices=("embed_cosine", "tfidf"), default="embed_cosine")
    p.set_defaults(func=_cmd_refine_text)

    p = sub.add_parser("crop-sim", help="sample crops through the overlap filter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1, help="number of queues to fill")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--eta", type=float, default=0.80)
    p.add_argument("--capacity", type=int, default=60)
    p.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_crop_sim)

    p = sub.add_parser("classify", help="run a configuration over a dataset")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    _add_config_flags(p)
    p.add_argument("--out", help="directory for report.json and results.jsonl")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("sweep", help="grid of runs, summarized to CSV")
    p.add_argument("--manifest", required=True)
    _add_config_flags(p)
    p.add_argument("--grid", action="append", help="key=v1,v2,... (repeatable; key 'g' sweeps grid views)")
    p.add_argument("--grid-pair", dest="grid_pair", action="append",
                   help="paired sweep, e.g. s_th,k=0.90:10,0.99:50")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="crop generation/encoding vs filter latency")
    _add_config_flags(p)
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--candidates", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("validate", help="check a dataset manifest or archive")
    p.add_argument("--manifest")
    p.add_argument("--archive")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (
        CorruptArchiveError,
        ArchiveValidationError,
        EmptyRefinedSetError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
