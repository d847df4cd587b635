"""Embedding archives and dataset manifests.

An archive is a directory holding ``manifest.json`` (dim, count, dtype,
normalization flag, row names) next to ``data.f32``, the raw row-major
little-endian float32 matrix.  Rows round-trip bit-exactly; this is what
lets crop embeddings be computed once and reused across runs.  A dataset
manifest is a separate JSON document tying image rows, crop boxes, class
prompts, and description rows together for the experiment harness.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .geometry import BoundingBox

ARCHIVE_MANIFEST_NAME = "manifest.json"
ARCHIVE_DATA_NAME = "data.f32"
FORMAT_VERSION = 1

NORM_TOLERANCE = 1e-3


class CorruptArchiveError(Exception):
    """Archive bytes do not match their manifest."""


class ArchiveValidationError(Exception):
    """Archive is structurally readable but violates an invariant."""


def text_row_name(text: str) -> str:
    """Stable content-derived row name for a text embedding."""
    return "txt-" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def unique_names(names: Sequence[str]) -> list[str]:
    """Disambiguate repeated names with -2, -3, ... suffixes, keeping order."""
    seen: dict[str, int] = {}
    out = []
    for name in names:
        n = seen.get(name, 0) + 1
        seen[name] = n
        out.append(name if n == 1 else f"{name}-{n}")
    return out


@dataclass
class EmbeddingArchive:
    """In-memory archive: named float32 rows, optionally unit-normalized."""

    dim: int
    names: list[str]
    data: np.ndarray
    l2_normalized: bool = True
    dtype: str = "f32le"

    @property
    def count(self) -> int:
        return len(self.names)

    @classmethod
    def from_rows(
        cls,
        names: Sequence[str],
        rows: np.ndarray,
        l2_normalized: bool = True,
    ) -> "EmbeddingArchive":
        rows = np.ascontiguousarray(rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-d, got shape {rows.shape}")
        return cls(dim=rows.shape[1], names=list(names), data=rows, l2_normalized=l2_normalized)

    def validate(self) -> None:
        if self.dtype != "f32le":
            raise ArchiveValidationError(f"unsupported dtype {self.dtype!r}")
        if self.data.ndim != 2 or self.data.dtype != np.float32:
            raise ArchiveValidationError(
                f"data must be a 2-d float32 array, got {self.data.dtype} shape {self.data.shape}"
            )
        if self.data.shape != (len(self.names), self.dim):
            raise ArchiveValidationError(
                f"data shape {self.data.shape} does not match "
                f"{len(self.names)} names x dim {self.dim}"
            )
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ArchiveValidationError(f"duplicate row names: {dupes}")
        if self.count and not np.all(np.isfinite(self.data)):
            bad = np.where(~np.isfinite(self.data).all(axis=1))[0]
            raise ArchiveValidationError(f"non-finite values in rows {bad.tolist()}")
        if self.l2_normalized and self.count:
            norms = np.linalg.norm(self.data.astype(np.float64), axis=1)
            off = np.where(np.abs(norms - 1.0) > NORM_TOLERANCE)[0]
            if off.size:
                listing = ", ".join(
                    f"{i}:{norms[i]:.6f}" for i in off.tolist()[:10]
                )
                raise ArchiveValidationError(
                    f"{off.size} rows violate unit norm (tolerance {NORM_TOLERANCE}): {listing}"
                )

    def row(self, index: int) -> np.ndarray:
        return self.data[index]

    def row_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}


def _write_atomic(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_archive(archive: EmbeddingArchive, path: str | Path) -> None:
    """Persist an archive directory; refuses to write an invalid archive.

    Both files go through a temp-file rename so a crash cannot leave a
    half-written archive in place of a good one.
    """
    archive.validate()
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "dim": archive.dim,
        "count": archive.count,
        "dtype": archive.dtype,
        "l2_normalized": archive.l2_normalized,
        "names": archive.names,
    }
    data = np.ascontiguousarray(archive.data, dtype="<f4")
    _write_atomic(path / ARCHIVE_DATA_NAME, data.tobytes())
    _write_atomic(
        path / ARCHIVE_MANIFEST_NAME,
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"),
    )


def read_archive(path: str | Path) -> EmbeddingArchive:
    """Load an archive directory, checking byte length, finiteness, and norms."""
    path = Path(path)
    manifest_path = path / ARCHIVE_MANIFEST_NAME
    data_path = path / ARCHIVE_DATA_NAME
    if not manifest_path.is_file():
        raise CorruptArchiveError(f"missing {manifest_path}")
    if not data_path.is_file():
        raise CorruptArchiveError(f"missing {data_path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptArchiveError(f"unparseable archive manifest: {exc}") from exc
    for key in ("dim", "count", "dtype", "l2_normalized", "names"):
        if key not in manifest:
            raise CorruptArchiveError(f"archive manifest is missing {key!r}")
    if manifest["dtype"] != "f32le":
        raise CorruptArchiveError(f"unsupported dtype {manifest['dtype']!r}")
    dim = int(manifest["dim"])
    count = int(manifest["count"])
    names = list(manifest["names"])
    if len(names) != count:
        raise CorruptArchiveError(
            f"manifest count {count} does not match {len(names)} names"
        )
    raw = data_path.read_bytes()
    expected = count * dim * 4
    if len(raw) != expected:
        raise CorruptArchiveError(
            f"data length mismatch: manifest implies {expected} bytes, file has {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(count, dim).copy()
    if count and not np.all(np.isfinite(data)):
        bad = np.where(~np.isfinite(data).all(axis=1))[0]
        raise CorruptArchiveError(f"non-finite values in rows {bad.tolist()}")
    archive = EmbeddingArchive(
        dim=dim,
        names=names,
        data=data,
        l2_normalized=bool(manifest["l2_normalized"]),
    )
    archive.validate()
    return archive


@dataclass
class ManifestImage:
    """One dataset image: its truth label, full-frame row, and crop pool."""

    image_id: str
    truth_label: str
    full_row: int
    patch_rows: list[tuple[BoundingBox, int]] = field(default_factory=list)
    synth_seed: int | None = None

    def to_json_dict(self) -> dict:
        d = {
            "id": self.image_id,
            "truth_label": self.truth_label,
            "full_row": self.full_row,
            "patch_rows": [[box.to_json(), row] for box, row in self.patch_rows],
        }
        if self.synth_seed is not None:
            d["synth_seed"] = self.synth_seed
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ManifestImage":
        return cls(
            image_id=d["id"],
            truth_label=d["truth_label"],
            full_row=int(d["full_row"]),
            patch_rows=[
                (BoundingBox.from_json(box), int(row)) for box, row in d.get("patch_rows", [])
            ],
            synth_seed=d.get("synth_seed"),
        )


@dataclass
class ManifestClass:
    """One class: its label prompt row and description rows, with optional
    raw texts/sources (needed to run TF-IDF dedup) and extra prompt rows for
    ensembling."""

    label: str
    prompt_row: int
    description_rows: list[int] = field(default_factory=list)
    description_texts: list[str] | None = None
    description_sources: list[str] | None = None
    ensemble_prompt_rows: list[int] | None = None

    def to_json_dict(self) -> dict:
        d: dict = {
            "label": self.label,
            "prompt_row": self.prompt_row,
            "description_rows": self.description_rows,
        }
        if self.description_texts is not None:
            d["description_texts"] = self.description_texts
        if self.description_sources is not None:
            d["description_sources"] = self.description_sources
        if self.ensemble_prompt_rows is not None:
            d["ensemble_prompt_rows"] = self.ensemble_prompt_rows
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ManifestClass":
        return cls(
            label=d["label"],
            prompt_row=int(d["prompt_row"]),
            description_rows=[int(r) for r in d.get("description_rows", [])],
            description_texts=d.get("description_texts"),
            description_sources=d.get("description_sources"),
            ensemble_prompt_rows=d.get("ensemble_prompt_rows"),
        )


@dataclass
class DatasetManifest:
    """Ties images, classes, and their archive rows into one experiment input."""

    images: list[ManifestImage]
    classes: list[ManifestClass]
    image_archive: str
    text_archive: str
    synth: dict | None = None
    format_version: int = FORMAT_VERSION

    def to_json_dict(self) -> dict:
        d: dict = {
            "format_version": self.format_version,
            "archives": {"image": self.image_archive, "text": self.text_archive},
            "images": [img.to_json_dict() for img in self.images],
            "classes": [cls_.to_json_dict() for cls_ in self.classes],
        }
        if self.synth is not None:
            d["synth"] = self.synth
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            images=[ManifestImage.from_json_dict(i) for i in d["images"]],
            classes=[ManifestClass.from_json_dict(c) for c in d["classes"]],
            image_archive=d["archives"]["image"],
            text_archive=d["archives"]["text"],
            synth=d.get("synth"),
            format_version=int(d.get("format_version", FORMAT_VERSION)),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        _write_atomic(
            path,
            (json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def load_dataset(manifest_path: str | Path) -> tuple[DatasetManifest, dict[str, EmbeddingArchive]]:
    """Load a dataset manifest plus its archives, resolved relative to it."""
    manifest_path = Path(manifest_path)
    manifest = DatasetManifest.load(manifest_path)
    base = manifest_path.parent
    archives = {
        "image": read_archive(base / manifest.image_archive),
        "text": read_archive(base / manifest.text_archive),
    }
    return manifest, archives


def validate_manifest(
    manifest: DatasetManifest,
    archives: Mapping[str, EmbeddingArchive],
) -> list[str]:
    """Cross-check a dataset manifest against its archives.

    Returns a list of human-readable diagnostics; empty means valid.
    """
    problems: list[str] = []
    image_arch = archives.get("image")
    text_arch = archives.get("text")
    if image_arch is None:
        problems.append("no image archive supplied")
    if text_arch is None:
        problems.append("no text archive supplied")
    if image_arch is None or text_arch is None:
        return problems

    labels = [c.label for c in manifest.classes]
    if len(set(labels)) != len(labels):
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        problems.append(f"duplicate class labels: {dupes}")
    ids = [img.image_id for img in manifest.images]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        problems.append(f"duplicate image ids: {dupes}")

    label_set = set(labels)
    for img in manifest.images:
        if img.truth_label not in label_set:
            problems.append(f"image {img.image_id!r} has unknown truth label {img.truth_label!r}")
        if not (0 <= img.full_row < image_arch.count):
            problems.append(
                f"image {img.image_id!r} full_row {img.full_row} is outside "
                f"the image archive (count {image_arch.count})"
            )
        for _, row in img.patch_rows:
            if not (0 <= row < image_arch.count):
                problems.append(
                    f"image {img.image_id!r} patch row {row} is outside "
                    f"the image archive (count {image_arch.count})"
                )
    for cls_ in manifest.classes:
        if not (0 <= cls_.prompt_row < text_arch.count):
            problems.append(
                f"class {cls_.label!r} prompt_row {cls_.prompt_row} is outside "
                f"the text archive (count {text_arch.count})"
            )
        for row in cls_.description_rows:
            if not (0 <= row < text_arch.count):
                problems.append(
                    f"class {cls_.label!r} description row {row} is outside "
                    f"the text archive (count {text_arch.count})"
                )
        if cls_.description_texts is not None and len(cls_.description_texts) != len(
            cls_.description_rows
        ):
            problems.append(
                f"class {cls_.label!r} has {len(cls_.description_texts)} texts for "
                f"{len(cls_.description_rows)} description rows"
            )
        if cls_.description_sources is not None and len(cls_.description_sources) != len(
            cls_.description_rows
        ):
            problems.append(
                f"class {cls_.label!r} has {len(cls_.description_sources)} sources for "
                f"{len(cls_.description_rows)} description rows"
            )
        for row in cls_.ensemble_prompt_rows or []:
            if not (0 <= row < text_arch.count):
                problems.append(
                    f"class {cls_.label!r} ensemble prompt row {row} is outside "
                    f"the text archive (count {text_arch.count})"
                )
    if not manifest.classes:
        problems.append("manifest declares no classes")
    return problems
