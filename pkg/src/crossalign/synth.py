"""Synthetic world with a closed-form embedding oracle.

Each class owns a few mutually orthonormal part prototypes; an image is a
grid of cells, each showing one part.  The oracle embedding of any crop box
is the overlap-area-weighted mean of the prototypes under the box, plus
seeded gaussian noise, renormalized.  Because every embedding has a known
construction, pipeline-level claims (separability at zero noise, the value
of removing redundant crops and descriptions) can be tested against ground
truth instead of against a real encoder.

Everything is deterministic given the world seed plus the per-image seed;
crop-level noise is keyed by the box coordinates as well, so the same box
always encodes to the same vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptions import DescriptionCandidate, LabelPrompt
from .geometry import FULL_FRAME, BoundingBox, CropWindow, sample_crop
from .rng import SplitMix64, derive_seed
from .store import (
    DatasetManifest,
    EmbeddingArchive,
    ManifestClass,
    ManifestImage,
    text_row_name,
    unique_names,
)

# Stream tags keep the per-purpose RNG draws independent of each other.
_FIELD_TAG = 1
_NOISE_TAG = 2
_DESC_TAG = 3
_PROMPT_TAG = 4

_DUP_JITTER = 1e-3  # keeps near-duplicate description cosines above 0.999


@dataclass
class SynthWorld:
    """Class/part prototype bank plus the noise model and grid resolution."""

    num_classes: int
    parts_per_class: int
    dim: int
    noise_sigma: float
    seed: int
    g_img: int
    prototypes: np.ndarray  # (num_classes, parts_per_class, dim), orthonormal rows
    max_offdiag_cos: float  # construction bound reported by gen_world

    @property
    def labels(self) -> list[str]:
        return [f"class_{c:02d}" for c in range(self.num_classes)]

    def prompt_text(self, class_id: int) -> str:
        return f"This is a photo of a/an {self.labels[class_id]}"

    def params_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "parts_per_class": self.parts_per_class,
            "dim": self.dim,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "g_img": self.g_img,
        }

    @classmethod
    def from_params(cls, params: dict) -> "SynthWorld":
        return gen_world(
            num_classes=int(params["num_classes"]),
            parts_per_class=int(params["parts_per_class"]),
            dim=int(params["dim"]),
            noise_sigma=float(params["noise_sigma"]),
            seed=int(params["seed"]),
            g_img=int(params["g_img"]),
        )


@dataclass
class SynthImage:
    """One synthetic image: a g x g field of part indices for its class, plus
    a matching per-cell noise field.

    Noise lives on the cells, not on the crop, so the oracle is continuous
    in the box: overlapping crops share the noise of their shared cells the
    same way a real encoder gives nearly identical embeddings to nearly
    identical crops.  Larger crops average more cells and so come out
    cleaner, exactly like added context."""

    class_id: int
    seed: int
    part_field: np.ndarray  # (g_img, g_img) ints in [0, parts_per_class)
    noise_field: np.ndarray  # (g_img, g_img, dim)


def gen_world(
    num_classes: int,
    parts_per_class: int,
    dim: int,
    noise_sigma: float,
    seed: int,
    g_img: int = 4,
) -> SynthWorld:
    """Build a world whose num_classes * parts_per_class prototypes are
    exactly orthonormal (QR of a seeded gaussian matrix)."""
    if num_classes < 1 or parts_per_class < 1:
        raise ValueError("need at least one class and one part per class")
    if g_img < 1:
        raise ValueError(f"g_img must be >= 1, got {g_img}")
    if noise_sigma < 0.0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    total = num_classes * parts_per_class
    if dim < total:
        raise ValueError(
            f"dim ({dim}) must be at least num_classes * parts_per_class ({total}) "
            "for orthonormal prototypes"
        )
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    raw = rng.standard_normal((dim, total))
    q, r = np.linalg.qr(raw, mode="reduced")
    # Fix column signs so the decomposition (hence the world) is unique.
    q = q * np.sign(np.diag(r))
    protos = np.ascontiguousarray(q.T).reshape(num_classes, parts_per_class, dim)
    gram = q.T @ q
    max_off = float(np.max(np.abs(gram - np.eye(total))))
    return SynthWorld(
        num_classes=num_classes,
        parts_per_class=parts_per_class,
        dim=dim,
        noise_sigma=noise_sigma,
        seed=seed,
        g_img=g_img,
        prototypes=protos,
        max_offdiag_cos=max_off,
    )


def gen_image(world: SynthWorld, class_id: int, image_seed: int) -> SynthImage:
    """Deterministic image for (world.seed, image_seed): each grid cell draws
    a uniform part of the class and one gaussian noise vector."""
    if not (0 <= class_id < world.num_classes):
        raise ValueError(f"class_id {class_id} out of range")
    g = world.g_img
    rng = np.random.default_rng(np.random.SeedSequence([world.seed, _FIELD_TAG, image_seed]))
    field = rng.integers(0, world.parts_per_class, size=(g, g))
    noise_rng = np.random.default_rng(
        np.random.SeedSequence([world.seed, _NOISE_TAG, image_seed])
    )
    noise = noise_rng.standard_normal((g, g, world.dim))
    return SynthImage(class_id=class_id, seed=image_seed, part_field=field, noise_field=noise)


def _cell_overlap_weights(world: SynthWorld, box: BoundingBox) -> np.ndarray:
    """(g, g) matrix of box-cell overlap areas."""
    g = world.g_img
    edges = np.arange(g + 1) / g
    wx = np.clip(np.minimum(edges[1:], box.x1) - np.maximum(edges[:-1], box.x0), 0.0, None)
    wy = np.clip(np.minimum(edges[1:], box.y1) - np.maximum(edges[:-1], box.y0), 0.0, None)
    return np.outer(wy, wx)  # rows follow y, columns follow x


def oracle_encode_box(world: SynthWorld, image: SynthImage, box: BoundingBox) -> np.ndarray:
    """Closed-form unit embedding of a crop: the area-weighted mean of the
    part prototypes under the box plus the identically weighted mean of the
    image's per-cell noise field, renormalized.

    Deterministic given (world.seed, image.seed, box), and continuous in the
    box: nearly identical crops encode to nearly identical vectors.
    """
    areas = _cell_overlap_weights(world, box)
    total = float(areas.sum())
    if total <= 0.0:
        raise ValueError("box does not overlap the image grid")
    cell_protos = world.prototypes[image.class_id][image.part_field]  # (g, g, dim)
    vec = np.tensordot(areas, cell_protos, axes=2) / total
    if world.noise_sigma > 0.0:
        vec = vec + world.noise_sigma * (np.tensordot(areas, image.noise_field, axes=2) / total)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError("crop embedding collapsed to zero")
    return vec / norm


def label_embedding(world: SynthWorld, class_id: int) -> np.ndarray:
    """Unit embedding of a class label prompt: the normalized prototype mean,
    so each part prototype has cosine 1/sqrt(parts_per_class) to it."""
    mean = world.prototypes[class_id].mean(axis=0)
    return mean / np.linalg.norm(mean)


def label_prompt(world: SynthWorld, class_id: int) -> LabelPrompt:
    return LabelPrompt(
        label=world.labels[class_id],
        prompt_text=world.prompt_text(class_id),
        embedding=label_embedding(world, class_id),
    )


def ensemble_prompt_embeddings(
    world: SynthWorld, class_id: int, variants: int, jitter: float = 0.05
) -> np.ndarray:
    """A few noisy variants of the label embedding, for prompt ensembling."""
    rng = np.random.default_rng(np.random.SeedSequence([world.seed, _PROMPT_TAG, class_id]))
    base = label_embedding(world, class_id)
    rows = []
    for _ in range(variants):
        v = base + jitter * rng.standard_normal(world.dim)
        rows.append(v / np.linalg.norm(v))
    return np.stack(rows)


def gen_descriptions(
    world: SynthWorld,
    class_id: int,
    m_true: int,
    dup_factor: int = 1,
    distractor_count: int = 0,
    desc_noise: float = 0.05,
) -> list[DescriptionCandidate]:
    """Deterministic description pool for a class.

    m_true informative descriptions (noisy part prototypes, parts cycled)
    each appear dup_factor times: one original plus jittered near-duplicates
    whose cosine to it stays above 0.999 but whose text differs.  Distractors
    are random unit vectors.  The pool order is a seeded shuffle, so
    duplicates are interleaved rather than adjacent.
    """
    if m_true < 1:
        raise ValueError(f"m_true must be >= 1, got {m_true}")
    if dup_factor < 1 or distractor_count < 0 or desc_noise < 0:
        raise ValueError("dup_factor >= 1, distractor_count >= 0, desc_noise >= 0 required")
    rng = np.random.default_rng(np.random.SeedSequence([world.seed, _DESC_TAG, class_id]))
    label = world.labels[class_id]
    sources = ("cupl", "des_attr", "dist_attr")
    pool: list[DescriptionCandidate] = []
    for i in range(m_true):
        part = i % world.parts_per_class
        base = world.prototypes[class_id, part]
        emb = base + desc_noise * rng.standard_normal(world.dim)
        emb = emb / np.linalg.norm(emb)
        text = f"{label} trait {i}: facet of part {part}"
        pool.append(DescriptionCandidate(text, sources[i % 3], emb))
        for copy in range(2, dup_factor + 1):
            dup = emb + _DUP_JITTER * rng.standard_normal(world.dim)
            dup = dup / np.linalg.norm(dup)
            pool.append(DescriptionCandidate(f"{text} (restated {copy})", sources[i % 3], dup))
    for t in range(distractor_count):
        emb = rng.standard_normal(world.dim)
        emb = emb / np.linalg.norm(emb)
        pool.append(DescriptionCandidate(f"{label} unrelated remark {t}", "other", emb))
    order = rng.permutation(len(pool))
    return [pool[i] for i in order]


def build_images(world: SynthWorld, images_per_class: int) -> list[tuple[str, SynthImage]]:
    """Round-robin image roster: image i belongs to class i mod num_classes
    and uses synth seed i."""
    if images_per_class < 1:
        raise ValueError("images_per_class must be >= 1")
    out = []
    for i in range(images_per_class * world.num_classes):
        image = gen_image(world, i % world.num_classes, i)
        out.append((f"im{i:04d}", image))
    return out


def build_dataset(
    world: SynthWorld,
    images_per_class: int,
    m_true: int,
    dup_factor: int = 1,
    distractor_count: int = 0,
    desc_noise: float = 0.05,
    pool_size: int = 0,
    pool_window: CropWindow | None = None,
    pool_seed: int = 0,
    ensemble_variants: int = 3,
    image_archive_name: str = "images",
    text_archive_name: str = "texts",
) -> tuple[DatasetManifest, dict[str, EmbeddingArchive]]:
    """Assemble a full in-memory dataset: archives plus manifest.

    The manifest embeds the world parameters and per-image seeds, so a
    consumer can re-encode arbitrary crop boxes through the oracle.  With
    pool_size > 0, a fixed pool of pre-encoded crops per image is written
    out as well, which is the shape exporter tooling produces for real data.
    """
    images = build_images(world, images_per_class)
    window = pool_window or CropWindow()

    text_names: list[str] = []
    text_rows: list[np.ndarray] = []
    classes: list[ManifestClass] = []
    for c in range(world.num_classes):
        prompt_row = len(text_rows)
        prompt_txt = world.prompt_text(c)
        text_names.append(text_row_name(prompt_txt))
        text_rows.append(label_embedding(world, c))
        ens_rows: list[int] = []
        if ensemble_variants > 0:
            variants = ensemble_prompt_embeddings(world, c, ensemble_variants)
            for v, row in enumerate(variants):
                ens_rows.append(len(text_rows))
                text_names.append(text_row_name(f"{prompt_txt} (variant {v})"))
                text_rows.append(row)
        pool = gen_descriptions(world, c, m_true, dup_factor, distractor_count, desc_noise)
        desc_rows: list[int] = []
        for cand in pool:
            desc_rows.append(len(text_rows))
            text_names.append(text_row_name(cand.text))
            text_rows.append(cand.embedding)
        classes.append(
            ManifestClass(
                label=world.labels[c],
                prompt_row=prompt_row,
                description_rows=desc_rows,
                description_texts=[cand.text for cand in pool],
                description_sources=[cand.source for cand in pool],
                ensemble_prompt_rows=ens_rows or None,
            )
        )

    image_names: list[str] = []
    image_rows: list[np.ndarray] = []
    manifest_images: list[ManifestImage] = []
    for idx, (image_id, image) in enumerate(images):
        full_row = len(image_rows)
        image_names.append(f"img-{image_id}-full")
        image_rows.append(oracle_encode_box(world, image, FULL_FRAME))
        patch_rows: list[tuple[BoundingBox, int]] = []
        if pool_size > 0:
            gen = SplitMix64(derive_seed(pool_seed, idx))
            for j in range(pool_size):
                box = sample_crop(gen, window)
                patch_rows.append((box, len(image_rows)))
                image_names.append(f"img-{image_id}-p{j}")
                image_rows.append(oracle_encode_box(world, image, box))
        manifest_images.append(
            ManifestImage(
                image_id=image_id,
                truth_label=world.labels[image.class_id],
                full_row=full_row,
                patch_rows=patch_rows,
                synth_seed=image.seed,
            )
        )

    archives = {
        "image": EmbeddingArchive.from_rows(unique_names(image_names), np.stack(image_rows)),
        "text": EmbeddingArchive.from_rows(unique_names(text_names), np.stack(text_rows)),
    }
    manifest = DatasetManifest(
        images=manifest_images,
        classes=classes,
        image_archive=image_archive_name,
        text_archive=text_archive_name,
        synth={"world": world.params_dict()},
    )
    return manifest, archives
