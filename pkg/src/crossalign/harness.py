"""Experiment harness: seeded classification runs, grid sweeps, and the
latency micro-benchmark.

A run walks every manifest image once per seed: build the image's crop
views (random crops through the configured refinement, or a deterministic
grid), refine each class's description pool, score every class, and tally
top-1 accuracy.  Both the crop stream and the description pool order are
re-randomized per seed, so the per-seed spread reflects the pipeline's full
sampling variance.

Reports carry deterministic work counters (candidates drawn, IoU
comparisons, descriptions kept) rather than wall-clock times, so a report
for a given config and dataset is byte-identical across runs; wall-clock
timing lives in the benchmark, which exists to measure it.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import statistics
import time
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .descriptions import DescriptionCandidate, LabelPrompt, refine_descriptions
from .geometry import (
    BoundingBox,
    CropWindow,
    admit_stream,
    fill_from_candidates,
    grid_boxes,
    sample_crop,
)
from .rng import SplitMix64, derive_seed
from .scoring import (
    ClassDescriptors,
    ClassScore,
    classify_clip,
    classify_desc_avg,
    classify_ensemble,
    classify_wca,
    clip_vr_accept,
)
from .store import DatasetManifest, EmbeddingArchive, validate_manifest
from .synth import SynthImage, SynthWorld, gen_image, gen_world, oracle_encode_box

FORMAT_VERSION = 1

MODES = ("bifta", "wca", "bifta_no_vr", "bifta_no_dr", "clip", "clip_e", "desc_avg")
DR_STRATEGIES = ("embed_cosine", "tfidf", "none")

_DR_SHUFFLE_TAG = 11
_POOL_ORDER_TAG = 12


@dataclass
class ExperimentConfig:
    """Everything a run depends on besides the dataset itself."""

    mode: str = "bifta"
    alpha: float = 0.5
    beta: float = 0.9
    eta: float = 0.80
    capacity: int = 60
    s_th: float = 0.99
    k: int = 50
    tau: float = 0.01
    vr_strategy: str = "iou"
    dr_strategy: str = "embed_cosine"
    seeds: tuple[int, ...] = (0,)
    include_full_view: bool = False
    max_attempts: int | None = None
    desc_source: str | None = None
    inject_redundant_crops: int = 0
    inject_jitter: float = 0.02

    def __post_init__(self) -> None:
        self.seeds = tuple(int(s) for s in self.seeds)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if not (0.0 < self.alpha <= self.beta <= 1.0):
            raise ValueError(
                f"crop window needs 0 < alpha <= beta <= 1, got alpha={self.alpha} beta={self.beta}"
            )
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if not (0.0 < self.s_th <= 1.0):
            raise ValueError(f"s_th must be in (0, 1], got {self.s_th}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.dr_strategy not in DR_STRATEGIES:
            raise ValueError(
                f"unknown dr_strategy {self.dr_strategy!r}, expected one of {DR_STRATEGIES}"
            )
        if self.vr_strategy not in ("iou", "embed_cosine") and self.grid_g() is None:
            raise ValueError(
                f"unknown vr_strategy {self.vr_strategy!r}, expected iou, embed_cosine, or grid:<g>"
            )
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.max_attempts is not None and self.max_attempts < self.capacity:
            raise ValueError(
                f"max_attempts ({self.max_attempts}) must be at least capacity ({self.capacity})"
            )
        if self.inject_redundant_crops < 0:
            raise ValueError("inject_redundant_crops must be >= 0")
        if self.inject_jitter < 0.0:
            raise ValueError("inject_jitter must be >= 0")

    def grid_g(self) -> int | None:
        if not self.vr_strategy.startswith("grid:"):
            return None
        try:
            g = int(self.vr_strategy.split(":", 1)[1])
        except ValueError:
            return None
        return g if g >= 1 else None

    def vr_enabled(self) -> bool:
        """View refinement runs only in the full pipeline and its no-DR ablation."""
        return self.mode in ("bifta", "bifta_no_dr")

    def dr_enabled(self) -> bool:
        return self.mode in ("bifta", "bifta_no_vr") and self.dr_strategy != "none"

    def needs_views(self) -> bool:
        return self.mode in ("bifta", "wca", "bifta_no_vr", "bifta_no_dr")

    def effective_max_attempts(self) -> int:
        return self.max_attempts if self.max_attempts is not None else 10 * self.capacity

    def window(self) -> CropWindow:
        return CropWindow(self.alpha, self.beta)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(d))


@dataclass
class Report:
    """Run summary; serializes to deterministic JSON."""

    config: dict
    per_seed_accuracy: list[float]
    mean_accuracy: float
    std_accuracy: float
    per_class_accuracy: dict[str, float]
    fallback: dict
    work: dict
    format_version: int = FORMAT_VERSION

    def to_json_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "config": self.config,
            "per_seed_accuracy": self.per_seed_accuracy,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "fallback": self.fallback,
            "work": self.work,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


@dataclass
class _ClassPool:
    """Static per-class data resolved from the manifest and text archive."""

    label: str
    label_embedding: np.ndarray
    candidates: list[DescriptionCandidate]
    ensemble_embeddings: np.ndarray  # (p, d); falls back to the label prompt row


def _resolve_class_pools(
    manifest: DatasetManifest,
    text_data: np.ndarray,
    config: ExperimentConfig,
) -> list[_ClassPool]:
    pools = []
    for cls in manifest.classes:
        label_emb = text_data[cls.prompt_row]
        cands = []
        texts = cls.description_texts
        sources = cls.description_sources
        if config.dr_strategy == "tfidf" and config.dr_enabled() and texts is None:
            raise ValueError(
                f"class {cls.label!r} has no description texts; TF-IDF refinement needs them"
            )
        for j, row in enumerate(cls.description_rows):
            text = texts[j] if texts is not None else f"{cls.label} description {row}"
            source = sources[j] if sources is not None else "other"
            cands.append(DescriptionCandidate(text, source, text_data[row]))
        if config.desc_source is not None:
            if sources is None:
                raise ValueError(
                    f"config filters descriptions by source {config.desc_source!r} "
                    f"but class {cls.label!r} has no source tags"
                )
            cands = [c for c in cands if c.source == config.desc_source]
        if not cands:
            raise ValueError(f"class {cls.label!r} has no usable descriptions")
        if cls.ensemble_prompt_rows:
            ens = text_data[cls.ensemble_prompt_rows]
        else:
            ens = label_emb[None, :]
        pools.append(_ClassPool(cls.label, label_emb, cands, ens))
    return pools


def _descriptor_bank(
    pools: Sequence[_ClassPool],
    config: ExperimentConfig,
    seed: int,
    work: dict,
) -> list[ClassDescriptors]:
    """Per-seed description sets: shuffled then refined when DR is on."""
    bank = []
    for ci, pool in enumerate(pools):
        cands = pool.candidates
        work["descriptions_in"] += len(cands)
        if config.dr_enabled():
            rng = np.random.default_rng(np.random.SeedSequence([seed, _DR_SHUFFLE_TAG, ci]))
            order = rng.permutation(len(cands))
            shuffled = [cands[i] for i in order]
            prompt = LabelPrompt(pool.label, pool.label, pool.label_embedding)
            refined = refine_descriptions(
                shuffled, prompt, config.s_th, config.k, config.dr_strategy
            )
            kept = refined.members
        else:
            kept = list(cands)
        work["descriptions_kept"] += len(kept)
        embs = np.stack([c.embedding for c in kept])
        bank.append(ClassDescriptors(pool.label, pool.label_embedding, embs))
    return bank


def _jitter_box(box: BoundingBox, gen: SplitMix64, jitter: float) -> BoundingBox:
    """Shift a box by up to +/- jitter per axis, keeping size and bounds."""
    dx = gen.uniform(-jitter, jitter)
    dy = gen.uniform(-jitter, jitter)
    w = box.x1 - box.x0
    h = box.y1 - box.y0
    x0 = min(max(box.x0 + dx, 0.0), 1.0 - w)
    y0 = min(max(box.y0 + dy, 0.0), 1.0 - h)
    return BoundingBox(x0, y0, min(x0 + w, 1.0), min(y0 + h, 1.0))


def _live_stream(
    gen: SplitMix64, window: CropWindow, inject: int, jitter: float
) -> Iterator[BoundingBox]:
    """Random crop stream; optionally leads with a clump of near-duplicates
    of the first crop, which an overlap filter should collapse to one."""
    base = sample_crop(gen, window)
    yield base
    for _ in range(inject):
        yield _jitter_box(base, gen, jitter)
    while True:
        yield sample_crop(gen, window)


@dataclass
class _ViewSet:
    boxes: list[BoundingBox]
    embeddings: np.ndarray  # (n, d)
    attempts: int
    fallback: int
    iou_comparisons: int
    embed_checks: int


def _views_for_image(
    config: ExperimentConfig,
    world: SynthWorld | None,
    image: SynthImage | None,
    manifest_image,
    image_data: np.ndarray,
    seed: int,
) -> _ViewSet:
    live = world is not None and image is not None
    cap = config.capacity
    max_attempts = config.effective_max_attempts()
    g = config.grid_g()

    if config.vr_enabled() and g is not None:
        if not live:
            raise ValueError(
                "grid views need a manifest with an embedded synthetic world; "
                "pre-encoded crop pools cannot cover arbitrary grid cells"
            )
        boxes = grid_boxes(g)
        embs = np.stack([oracle_encode_box(world, image, b) for b in boxes])
        return _ViewSet(boxes, embs, attempts=len(boxes), fallback=0, iou_comparisons=0, embed_checks=0)

    if live:
        gen = SplitMix64(derive_seed(seed, image.seed))
        stream = _live_stream(
            gen, config.window(), config.inject_redundant_crops, config.inject_jitter
        )
        if not config.vr_enabled():
            boxes = [next(stream) for _ in range(cap)]
            embs = np.stack([oracle_encode_box(world, image, b) for b in boxes])
            return _ViewSet(boxes, embs, cap, 0, 0, 0)
        if config.vr_strategy == "iou":
            queue = fill_from_candidates(stream, config.eta, cap, max_attempts)
            embs = np.stack([oracle_encode_box(world, image, b) for b in queue.boxes])
            return _ViewSet(
                list(queue.boxes), embs, queue.attempts_used, queue.fallback_count,
                queue.iou_comparisons, 0,
            )
        # embed_cosine: the filter needs each candidate's embedding up front.
        boxes: list[BoundingBox] = []
        embs_list: list[np.ndarray] = []
        attempts = 0
        checks = 0
        while len(boxes) < cap and attempts < max_attempts:
            box = next(stream)
            attempts += 1
            emb = oracle_encode_box(world, image, box)
            checks += len(embs_list)
            if clip_vr_accept(emb, np.array(embs_list), config.eta):
                boxes.append(box)
                embs_list.append(emb)
        admitted = len(boxes)
        fallback = 0
        i = 0
        while len(boxes) < cap:
            boxes.append(boxes[i % admitted])
            embs_list.append(embs_list[i % admitted])
            fallback += 1
            i += 1
        return _ViewSet(boxes, np.stack(embs_list), attempts, fallback, 0, checks)

    # Pool-backed image: candidates are the manifest's pre-encoded crops,
    # visited in a per-seed order.
    pool = manifest_image.patch_rows
    if not pool:
        raise ValueError(
            f"image {manifest_image.image_id!r} has no crop pool and the manifest "
            "embeds no synthetic world to encode crops with"
        )
    rng = np.random.default_rng(
        np.random.SeedSequence([seed, _POOL_ORDER_TAG, manifest_image.full_row])
    )
    order = rng.permutation(len(pool))
    items = [pool[i] for i in order]
    if not config.vr_enabled():
        picked = [items[i % len(items)] for i in range(cap)]
        fallback = max(0, cap - len(items))
        boxes = [b for b, _ in picked]
        embs = image_data[[r for _, r in picked]]
        return _ViewSet(boxes, embs, min(cap, len(items)), fallback, 0, 0)
    if config.vr_strategy == "iou":
        queue, payloads = admit_stream(
            items, lambda item: item[0], config.eta, cap, max_attempts
        )
        boxes = [b for b, _ in payloads]
        embs = image_data[[r for _, r in payloads]]
        return _ViewSet(
            boxes, embs, queue.attempts_used, queue.fallback_count, queue.iou_comparisons, 0
        )
    boxes = []
    rows: list[int] = []
    attempts = 0
    checks = 0
    for box, row in items:
        if len(boxes) >= cap or attempts >= max_attempts:
            break
        attempts += 1
        emb = image_data[row]
        checks += len(rows)
        if clip_vr_accept(emb, image_data[rows] if rows else np.empty((0,)), config.eta):
            boxes.append(box)
            rows.append(row)
    admitted = len(boxes)
    if admitted == 0:
        raise ValueError("no pool crop passed the embedding-similarity filter")
    fallback = 0
    i = 0
    while len(boxes) < cap:
        boxes.append(boxes[i % admitted])
        rows.append(rows[i % admitted])
        fallback += 1
        i += 1
    return _ViewSet(boxes, image_data[rows], attempts, fallback, 0, checks)


def run_experiment(
    config: ExperimentConfig,
    manifest: DatasetManifest,
    archives: Mapping[str, EmbeddingArchive],
    collect_records: bool = False,
) -> Report | tuple[Report, list[dict]]:
    """Execute one configuration over a dataset and summarize accuracy.

    With ``collect_records`` the per-image ranked scores come back alongside
    the report, one record per (seed, image).
    """
    config.validate()
    problems = validate_manifest(manifest, archives)
    if problems:
        raise ValueError("invalid manifest: " + "; ".join(problems))
    if not manifest.images:
        raise ValueError("manifest has no images")

    world = None
    world_class_by_label: dict[str, int] = {}
    if manifest.synth is not None and "world" in manifest.synth:
        world = SynthWorld.from_params(manifest.synth["world"])
        world_class_by_label = {lab: i for i, lab in enumerate(world.labels)}
    text_data = archives["text"].data.astype(np.float64)
    image_data = archives["image"].data.astype(np.float64)
    pools = _resolve_class_pools(manifest, text_data, config)
    labels = [p.label for p in pools]

    work = {
        "candidates_drawn": 0,
        "iou_comparisons": 0,
        "embed_similarity_checks": 0,
        "descriptions_in": 0,
        "descriptions_kept": 0,
        "images_scored": 0,
    }
    fallback = {"fallback_total": 0, "queues_with_fallback": 0, "attempts_total": 0}
    per_seed_acc: list[float] = []
    class_total: dict[str, int] = {l: 0 for l in labels}
    class_correct: dict[str, int] = {l: 0 for l in labels}
    records: list[dict] = []

    clip_entries = [(p.label, p.label_embedding) for p in pools]
    ensemble_entries = [(p.label, p.ensemble_embeddings) for p in pools]
    raw_desc_entries = [
        (p.label, np.stack([c.embedding for c in p.candidates])) for p in pools
    ]

    for seed in config.seeds:
        bank = (
            _descriptor_bank(pools, config, seed, work) if config.needs_views() else []
        )
        correct = 0
        for manifest_image in manifest.images:
            full_emb = image_data[manifest_image.full_row]
            if config.needs_views():
                image = (
                    gen_image(
                        world,
                        world_class_by_label[manifest_image.truth_label],
                        manifest_image.synth_seed,
                    )
                    if world is not None and manifest_image.synth_seed is not None
                    else None
                )
                views = _views_for_image(
                    config, world, image, manifest_image, image_data, seed
                )
                view_embs = views.embeddings
                if config.include_full_view:
                    view_embs = np.vstack([full_emb[None, :], view_embs])
                work["candidates_drawn"] += views.attempts
                work["iou_comparisons"] += views.iou_comparisons
                work["embed_similarity_checks"] += views.embed_checks
                fallback["fallback_total"] += views.fallback
                fallback["queues_with_fallback"] += 1 if views.fallback else 0
                fallback["attempts_total"] += views.attempts
                ranked = classify_wca(view_embs, full_emb, bank, config.tau)
            elif config.mode == "clip":
                ranked = classify_clip(full_emb, clip_entries, config.tau)
            elif config.mode == "clip_e":
                ranked = classify_ensemble(full_emb, ensemble_entries, config.tau)
            else:  # desc_avg
                ranked = classify_desc_avg(full_emb, raw_desc_entries, config.tau)
            work["images_scored"] += 1
            predicted = ranked[0].label
            truth = manifest_image.truth_label
            class_total[truth] += 1
            if predicted == truth:
                correct += 1
                class_correct[truth] += 1
            if collect_records:
                records.append(_record(seed, manifest_image.image_id, truth, ranked))
        per_seed_acc.append(correct / len(manifest.images))

    mean = float(np.mean(per_seed_acc))
    std = float(np.std(per_seed_acc))
    per_class = {
        label: (class_correct[label] / class_total[label]) if class_total[label] else 0.0
        for label in labels
    }
    report = Report(
        config=config.to_dict(),
        per_seed_accuracy=[float(a) for a in per_seed_acc],
        mean_accuracy=mean,
        std_accuracy=std,
        per_class_accuracy=per_class,
        fallback=fallback,
        work=work,
    )
    if collect_records:
        return report, records
    return report


def _record(seed: int, image_id: str, truth: str, ranked: list[ClassScore]) -> dict:
    return {
        "seed": seed,
        "image": image_id,
        "truth": truth,
        "predicted": ranked[0].label,
        "ranked": [
            {"label": r.label, "wca": r.score, "prob": r.prob} for r in ranked
        ],
        "top10": [
            {"label": r.label, "prob": r.prob} for r in ranked[:10]
        ],
    }


@dataclass
class SweepCell:
    """One grid assignment with its outcome: a report or an error string."""

    assignment: dict
    report: Report | None = None
    error: str | None = None


def _columns_for(key: str, value) -> dict:
    """Normalize one grid assignment into flat CSV columns."""
    try:
        if key == "g":
            return {"g": int(value)}
        if key == "s_th,k":
            s_th, k = value
            return {"s_th": float(s_th), "k": int(k)}
    except (TypeError, ValueError):
        return {key: repr(value)}
    return {key: value}


def _apply_assignment(base: ExperimentConfig, key: str, value) -> ExperimentConfig:
    if key == "g":
        return dataclasses.replace(base, vr_strategy=f"grid:{int(value)}")
    if key == "s_th,k":
        s_th, k = value
        return dataclasses.replace(base, s_th=float(s_th), k=int(k))
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    if key not in names:
        raise ValueError(f"unknown sweep key {key!r}")
    return dataclasses.replace(base, **{key: value})


def _sort_token(value) -> tuple:
    if value is None:
        return (0, 0.0, "")
    if isinstance(value, bool):
        return (1, float(value), "")
    if isinstance(value, (int, float)):
        return (1, float(value), "")
    return (2, 0.0, str(value))


def sweep(
    base_config: ExperimentConfig,
    grid: Mapping[str, Sequence],
    manifest: DatasetManifest,
    archives: Mapping[str, EmbeddingArchive],
) -> list[SweepCell]:
    """Cross product over the grid; per-cell failures are recorded, not fatal.

    An empty grid degenerates to a single cell running the base config.
    Rows come back sorted by their assignments, keys first.
    """
    keys = sorted(grid.keys())
    cells: list[SweepCell] = []
    combos = itertools.product(*(grid[k] for k in keys)) if keys else [()]
    for combo in combos:
        columns: dict = {}
        for key, value in zip(keys, combo):
            columns.update(_columns_for(key, value))
        try:
            cfg = base_config
            for key, value in zip(keys, combo):
                cfg = _apply_assignment(cfg, key, value)
            report = run_experiment(cfg, manifest, archives)
            cells.append(SweepCell(columns, report=report))
        except (ValueError, TypeError) as exc:
            cells.append(SweepCell(columns, error=str(exc)))
    all_keys = sorted({k for cell in cells for k in cell.assignment})
    cells.sort(key=lambda c: tuple(_sort_token(c.assignment.get(k)) for k in all_keys))
    return cells


def sweep_csv_rows(cells: Sequence[SweepCell]) -> tuple[list[str], list[list]]:
    """Flatten sweep cells to CSV header + rows."""
    keys = sorted({k for cell in cells for k in cell.assignment})
    header = ["format_version", *keys, "mean_accuracy", "std_accuracy", "per_seed_accuracy",
              "fallback_total", "error"]
    rows = []
    for cell in cells:
        row: list = [FORMAT_VERSION]
        row.extend(cell.assignment.get(k, "") for k in keys)
        if cell.report is not None:
            row.extend(
                [
                    cell.report.mean_accuracy,
                    cell.report.std_accuracy,
                    "|".join(repr(a) for a in cell.report.per_seed_accuracy),
                    cell.report.fallback["fallback_total"],
                    "",
                ]
            )
        else:
            row.extend(["", "", "", "", cell.error or "unknown error"])
        rows.append(row)
    return header, rows


def write_sweep_csv(cells: Sequence[SweepCell], path) -> None:
    header, rows = sweep_csv_rows(cells)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def bench(
    config: ExperimentConfig,
    repetitions: int,
    candidates: int = 100,
    world: SynthWorld | None = None,
) -> dict:
    """Time crop generation + encoding against the IoU filter pass alone.

    Each repetition draws ``candidates`` crops on a fresh synthetic image and
    (a) encodes them all, (b) runs the overlap filter over the pre-built
    candidate list.  Medians, quartiles, and the filter's share of the
    median total come back alongside counted IoU comparisons, which is the
    machine-independent size of the filtering work.
    """
    if repetitions < 10:
        raise ValueError(f"need at least 10 repetitions for stable medians, got {repetitions}")
    if candidates < 1:
        raise ValueError(f"need at least one candidate per repetition, got {candidates}")
    config.validate()
    if world is None:
        world = gen_world(
            num_classes=4, parts_per_class=4, dim=32, noise_sigma=0.05,
            seed=config.seeds[0], g_img=4,
        )
    window = config.window()
    max_attempts = max(config.effective_max_attempts(), candidates, config.capacity)
    gen_ms: list[float] = []
    filter_ms: list[float] = []
    comparisons: list[int] = []
    admitted: list[int] = []
    for rep in range(repetitions):
        image = gen_image(world, rep % world.num_classes, rep)
        gen = SplitMix64(derive_seed(config.seeds[0], rep))
        t0 = time.perf_counter()
        boxes = [sample_crop(gen, window) for _ in range(candidates)]
        for box in boxes:
            oracle_encode_box(world, image, box)
        t1 = time.perf_counter()
        queue = fill_from_candidates(boxes, config.eta, config.capacity, max_attempts)
        t2 = time.perf_counter()
        gen_ms.append((t1 - t0) * 1e3)
        filter_ms.append((t2 - t1) * 1e3)
        comparisons.append(queue.iou_comparisons)
        admitted.append(queue.admitted_count)

    def stats(xs: list[float]) -> dict:
        qs = statistics.quantiles(xs, n=4)
        return {
            "median": statistics.median(xs),
            "p25": qs[0],
            "p75": qs[2],
            "mean": statistics.fmean(xs),
            "std": statistics.pstdev(xs),
        }

    g_med = statistics.median(gen_ms)
    f_med = statistics.median(filter_ms)
    return {
        "format_version": FORMAT_VERSION,
        "repetitions": repetitions,
        "candidates": candidates,
        "capacity": config.capacity,
        "eta": config.eta,
        "generate_encode_ms": stats(gen_ms),
        "filter_ms": stats(filter_ms),
        "filter_share": f_med / (g_med + f_med),
        "iou_comparisons": {
            "median": statistics.median(comparisons),
            "mean": statistics.fmean(comparisons),
        },
        "admitted": {
            "median": statistics.median(admitted),
            "mean": statistics.fmean(admitted),
        },
    }
