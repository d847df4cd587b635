"""Embedding exporter producing f32 archives and dataset manifests.

Encodes label prompts, class descriptions, full images, and sampled crop
candidate pools into the archive + manifest formats the experiment runner
consumes, with a deterministic stub backend for weight-free testing and an
optional real-model backend.
"""

from .archive import (
    read_archive_names,
    text_row_name,
    unique_names,
    write_archive,
    write_dataset_manifest,
)
from .encoders import BackendError, ClipEncoder, StubEncoder, load_encoder
from .jobs import (
    BridgeJob,
    ClassTexts,
    DataError,
    UsageError,
    export_images,
    export_text,
    load_class_texts,
)
from .rng import FULL_FRAME, Box, SplitMix64, derive_seed, sample_crop

__all__ = [
    "BackendError",
    "Box",
    "BridgeJob",
    "ClassTexts",
    "ClipEncoder",
    "DataError",
    "FULL_FRAME",
    "SplitMix64",
    "StubEncoder",
    "UsageError",
    "derive_seed",
    "export_images",
    "export_text",
    "load_class_texts",
    "load_encoder",
    "read_archive_names",
    "sample_crop",
    "text_row_name",
    "unique_names",
    "write_archive",
    "write_dataset_manifest",
]
