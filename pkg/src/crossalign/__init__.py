"""Cross-alignment zero-shot classification with redundancy-filtered crop
views and description pools."""

from .descriptions import (
    DescriptionCandidate,
    DescriptionSet,
    EmptyRefinedSetError,
    LabelPrompt,
    cosine,
    cs_accept,
    dedup_descriptions,
    refine_descriptions,
    tfidf_vectors,
    topk_by_label,
)
from .geometry import (
    FULL_FRAME,
    BoundingBox,
    CropWindow,
    ViewQueue,
    fill_from_candidates,
    fill_view_queue,
    grid_boxes,
    iou,
    sample_crop,
    vr_accept,
)
from .harness import ExperimentConfig, Report, bench, run_experiment, sweep, write_sweep_csv
from .rng import SplitMix64, derive_seed
from .scoring import (
    ClassDescriptors,
    ClassScore,
    classify_clip,
    classify_desc_avg,
    classify_ensemble,
    classify_wca,
    clip_sim,
    clip_vr_accept,
    desc_weights,
    softmax,
    view_weights,
    wca_score,
)
from .store import (
    ArchiveValidationError,
    CorruptArchiveError,
    DatasetManifest,
    EmbeddingArchive,
    read_archive,
    validate_manifest,
    write_archive,
)
from .synth import (
    SynthImage,
    SynthWorld,
    build_dataset,
    gen_descriptions,
    gen_image,
    gen_world,
    label_embedding,
    oracle_encode_box,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
