"""Pinned synthetic fixtures shared by the test suite and the demos.

The redundancy fixture is a world where both failure modes the pipeline
targets are planted deliberately: every image's candidate crop stream leads
with a clump of near-identical crops, and every class's description pool
carries each informative description five times plus random distractors.
Refinement should strip both; the unrefined baseline inherits them.  The
parameters below were calibrated once so the refined-vs-unrefined gap is
stable across seeds, then frozen.
"""

from __future__ import annotations

from functools import lru_cache

from .harness import ExperimentConfig
from .store import DatasetManifest, EmbeddingArchive
from .synth import SynthWorld, build_dataset, gen_world

REDUNDANCY_WORLD = dict(
    num_classes=4,
    parts_per_class=4,
    dim=32,
    noise_sigma=1.0,
    seed=20250811,
    g_img=7,
)

REDUNDANCY_DATASET = dict(
    images_per_class=16,
    m_true=6,
    dup_factor=5,
    distractor_count=12,
    desc_noise=0.1,
)

REDUNDANCY_CONFIG = dict(
    alpha=0.5,
    beta=0.9,
    eta=0.80,
    capacity=24,
    s_th=0.99,
    k=8,
    tau=0.01,
    seeds=tuple(range(10)),
    inject_redundant_crops=10,
    inject_jitter=0.01,
)


def redundancy_world() -> SynthWorld:
    return gen_world(**REDUNDANCY_WORLD)


@lru_cache(maxsize=1)
def _cached_fixture() -> tuple[DatasetManifest, dict[str, EmbeddingArchive]]:
    return build_dataset(redundancy_world(), **REDUNDANCY_DATASET)


def build_redundancy_fixture() -> tuple[DatasetManifest, dict[str, EmbeddingArchive]]:
    """The standard redundancy dataset (cached; treat it as read-only)."""
    return _cached_fixture()


def redundancy_config(mode: str, **overrides) -> ExperimentConfig:
    """The fixture's pinned run configuration for a given mode."""
    params = dict(REDUNDANCY_CONFIG)
    params.update(overrides)
    return ExperimentConfig(mode=mode, **params)
