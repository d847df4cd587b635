"""Writers for the f32 embedding archive and dataset manifest formats.

An archive directory holds ``manifest.json`` (dim, count, dtype, norm flag,
row names) next to ``data.f32``, the row-major little-endian float32 matrix.
The dataset manifest is a single JSON document tying image rows, crop boxes,
class prompt rows, and description rows together.  Both are written with
sorted keys through a temp-file rename, so re-running an export either
reproduces the previous bytes or replaces them atomically.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import Box

ARCHIVE_MANIFEST_NAME = "manifest.json"
ARCHIVE_DATA_NAME = "data.f32"
FORMAT_VERSION = 1


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


def _dump_json(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_archive(path: str | Path, names: Sequence[str], rows: np.ndarray) -> None:
    """Write one l2-normalized archive directory.

    Row count/dim/uniqueness/norms are checked before anything touches disk;
    a failed export must not leave a plausible-looking archive behind.
    """
    path = Path(path)
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-d, got shape {rows.shape}")
    if rows.shape[0] != len(names):
        raise ValueError(f"{len(names)} names for {rows.shape[0]} rows")
    if len(set(names)) != len(names):
        raise ValueError("row names must be unique; pass them through unique_names")
    if rows.size and not np.all(np.isfinite(rows)):
        raise ValueError("non-finite embedding values")
    if rows.size:
        norms = np.linalg.norm(rows.astype(np.float64), axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-3):
            raise ValueError("rows of an l2_normalized archive must have unit norm")

    manifest = {
        "format_version": FORMAT_VERSION,
        "dim": int(rows.shape[1]),
        "count": int(rows.shape[0]),
        "dtype": "f32le",
        "l2_normalized": True,
        "names": list(names),
    }
    path.mkdir(parents=True, exist_ok=True)
    _write_atomic(path / ARCHIVE_DATA_NAME, rows.tobytes())
    _write_atomic(path / ARCHIVE_MANIFEST_NAME, _dump_json(manifest))


def read_archive_names(path: str | Path) -> list[str]:
    """Row names of an existing archive, for row lookups by content hash."""
    with open(Path(path) / ARCHIVE_MANIFEST_NAME, "r", encoding="utf-8") as fh:
        return list(json.load(fh)["names"])


def image_entry(
    image_id: str,
    truth_label: str,
    full_row: int,
    patch_rows: Sequence[tuple[Box, int]],
) -> dict:
    return {
        "id": image_id,
        "truth_label": truth_label,
        "full_row": full_row,
        "patch_rows": [[box.to_json(), row] for box, row in patch_rows],
    }


def class_entry(
    label: str,
    prompt_row: int,
    description_rows: Sequence[int],
    description_texts: Sequence[str],
    description_sources: Sequence[str],
) -> dict:
    return {
        "label": label,
        "prompt_row": prompt_row,
        "description_rows": list(description_rows),
        "description_texts": list(description_texts),
        "description_sources": list(description_sources),
    }


def write_dataset_manifest(
    path: str | Path,
    images: Sequence[dict],
    classes: Sequence[dict],
    image_archive: str,
    text_archive: str,
) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "archives": {"image": image_archive, "text": text_archive},
        "images": list(images),
        "classes": list(classes),
    }
    _write_atomic(Path(path), _dump_json(doc))
