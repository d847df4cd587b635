"""Export jobs: encode texts and image crop pools into archive + manifest.

The exporter encodes a superset pool of candidate crops per image; the
consuming experiment runner applies its overlap filtering at run time, so
one expensive encoding pass serves every threshold and capacity setting.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .archive import (
    class_entry,
    image_entry,
    text_row_name,
    unique_names,
    write_archive,
    write_dataset_manifest,
)
from .rng import FULL_FRAME, Box, SplitMix64, derive_seed, sample_crop

PROMPT_TEMPLATE = "This is a photo of a/an {label}"

IMAGE_SUFFIXES = {
    ".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp", ".ppm", ".pgm", ".tif", ".tiff",
}

KNOWN_SOURCES = ("cupl", "des_attr", "dist_attr", "other")


class UsageError(Exception):
    """Bad invocation: missing or malformed inputs."""


class DataError(Exception):
    """Inputs were readable but the job could not produce a valid export."""


@dataclass(frozen=True)
class ClassTexts:
    """Description texts for one class label, each tagged with a source."""

    label: str
    descriptions: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class BridgeJob:
    """One image-export invocation; crop parameters must match the consumer's."""

    model: str
    dataset_root: Path
    crop_count: int
    alpha: float
    beta: float
    seed: int
    out: Path

    def __post_init__(self) -> None:
        if self.crop_count < 0:
            raise UsageError(f"crop count must be >= 0, got {self.crop_count}")
        if not (0.0 < self.alpha <= self.beta <= 1.0):
            raise UsageError(
                f"crop window needs 0 < alpha <= beta <= 1, got ({self.alpha}, {self.beta})"
            )


def load_class_texts(path: str | Path) -> list[ClassTexts]:
    """Parse the descriptions JSON: {"classes": [{label, descriptions: [...]}]}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read descriptions file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"descriptions file is not valid JSON: {exc}") from exc
    entries = doc.get("classes") if isinstance(doc, dict) else None
    if not isinstance(entries, list):
        raise UsageError('descriptions file must contain a "classes" list')
    out: list[ClassTexts] = []
    for entry in entries:
        label = entry.get("label")
        if not label or not isinstance(label, str):
            raise UsageError(f"class entry without a label: {entry!r}")
        descs: list[tuple[str, str]] = []
        for d in entry.get("descriptions", []):
            if isinstance(d, str):
                text, source = d, "other"
            else:
                text, source = d.get("text"), d.get("source", "other")
            if not text or not isinstance(text, str):
                raise UsageError(f"class {label!r} has a description without text: {d!r}")
            if source not in KNOWN_SOURCES:
                raise UsageError(
                    f"class {label!r} description has unknown source {source!r}; "
                    f"expected one of {KNOWN_SOURCES}"
                )
            descs.append((text, source))
        out.append(ClassTexts(label, descs))
    labels = [c.label for c in out]
    if len(set(labels)) != len(labels):
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        raise UsageError(f"duplicate class labels in descriptions file: {dupes}")
    return out


def _encode_texts(classes: Sequence[ClassTexts], encoder) -> tuple[list[str], np.ndarray, dict]:
    """Encode prompts then descriptions; returns names, rows, and row layout.

    Layout: {"prompt": {label: row}, "descriptions": {label: [rows]}}.
    Prompts come first so the archive starts with one anchor row per class.
    """
    texts: list[str] = []
    layout: dict = {"prompt": {}, "descriptions": {}}
    for cls in classes:
        layout["prompt"][cls.label] = len(texts)
        texts.append(PROMPT_TEMPLATE.format(label=cls.label))
    for cls in classes:
        rows = []
        for text, _ in cls.descriptions:
            rows.append(len(texts))
            texts.append(text)
        layout["descriptions"][cls.label] = rows
    rows_arr = np.stack([encoder.encode_text(t) for t in texts]) if texts else np.zeros((0, 0))
    names = unique_names([text_row_name(t) for t in texts])
    return names, rows_arr, layout


def export_text(classes: Sequence[ClassTexts], encoder, out: str | Path) -> dict:
    """Encode label prompts and description texts into one archive.

    Returns the row layout so callers can build manifests without
    re-deriving content-hash names.
    """
    if not classes:
        raise UsageError("no classes to export")
    if all(not cls.descriptions for cls in classes):
        raise UsageError("no description texts to export")
    names, rows, layout = _encode_texts(classes, encoder)
    write_archive(out, names, rows)
    return {"rows": len(names), "layout": layout}


def _discover_images(root: Path) -> tuple[list[str], list[tuple[str, str, Path]]]:
    """Directory-per-class layout: returns labels and (id, label, path) triples.

    Enumeration order is sorted labels then sorted file names, so image ids,
    per-image seeds, and archive rows are stable across runs and machines.
    """
    if not root.is_dir():
        raise UsageError(f"dataset root {root} is not a directory")
    labels = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not labels:
        raise UsageError(f"dataset root {root} contains no class directories")
    found: list[tuple[str, str, Path]] = []
    for label in labels:
        for entry in sorted((root / label).iterdir(), key=lambda p: p.name):
            if entry.suffix.lower() in IMAGE_SUFFIXES:
                found.append((f"{label}/{entry.name}", label, entry))
    if not found:
        raise UsageError(f"no image files under {root}")
    return labels, found


def export_images(
    job: BridgeJob,
    encoder,
    classes: Sequence[ClassTexts] | None = None,
    diagnostics_out=sys.stderr,
) -> dict:
    """Encode full frames plus a sampled crop pool per image.

    Writes <out>/images, <out>/texts, and <out>/dataset.json.  Unreadable
    images are reported and skipped; the job fails only when nothing could
    be exported.
    """
    labels, found = _discover_images(job.dataset_root)

    class_list = list(classes) if classes else []
    known = {cls.label for cls in class_list}
    stray = sorted(known - set(labels))
    if stray:
        raise UsageError(f"descriptions name classes missing from the dataset: {stray}")
    by_label = {cls.label: cls for cls in class_list}
    merged = [by_label.get(label, ClassTexts(label)) for label in labels]

    text_names, text_rows, layout = _encode_texts(merged, encoder)

    image_names: list[str] = []
    image_rows: list[np.ndarray] = []
    images: list[dict] = []
    diagnostics: list[str] = []
    for index, (image_id, label, path) in enumerate(found):
        rng = SplitMix64(derive_seed(job.seed, index))
        boxes: list[Box] = [sample_crop(rng, job.alpha, job.beta) for _ in range(job.crop_count)]
        try:
            full = encoder.encode_image(path, FULL_FRAME)
            patches = [encoder.encode_image(path, box) for box in boxes]
        except OSError as exc:
            message = f"skipped {image_id}: {exc}"
            diagnostics.append(message)
            print(message, file=diagnostics_out)
            continue
        full_row = len(image_names)
        image_names.append(f"{image_id}#full")
        image_rows.append(full)
        patch_rows: list[tuple[Box, int]] = []
        for j, (box, vec) in enumerate(zip(boxes, patches)):
            patch_rows.append((box, len(image_names)))
            image_names.append(f"{image_id}#p{j:03d}")
            image_rows.append(vec)
        images.append(image_entry(image_id, label, full_row, patch_rows))

    if not images:
        raise DataError(
            f"no images could be exported from {job.dataset_root} "
            f"({len(diagnostics)} failures)"
        )

    class_entries = [
        class_entry(
            cls.label,
            layout["prompt"][cls.label],
            layout["descriptions"][cls.label],
            [text for text, _ in cls.descriptions],
            [source for _, source in cls.descriptions],
        )
        for cls in merged
    ]

    out = Path(job.out)
    write_archive(out / "images", image_names, np.stack(image_rows))
    write_archive(out / "texts", text_names, text_rows)
    write_dataset_manifest(out / "dataset.json", images, class_entries, "images", "texts")
    return {
        "images": len(images),
        "image_rows": len(image_names),
        "text_rows": len(text_names),
        "diagnostics": diagnostics,
    }
