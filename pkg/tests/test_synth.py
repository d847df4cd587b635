"""Synthetic oracle world: analytic encoder, descriptions, dataset builder."""

from __future__ import annotations

import math

import numpy as np
import pytest

from crossalign.descriptions import LabelPrompt, cosine, dedup_descriptions, topk_by_label
from crossalign.geometry import FULL_FRAME, BoundingBox, CropWindow
from crossalign.harness import ExperimentConfig, run_experiment
from crossalign.scoring import (
    ClassDescriptors,
    classify_clip,
    classify_desc_avg,
    classify_ensemble,
    classify_wca,
)
from crossalign.store import validate_manifest
from crossalign.synth import (
    build_dataset,
    build_images,
    ensemble_prompt_embeddings,
    gen_descriptions,
    gen_image,
    gen_world,
    label_embedding,
    label_prompt,
    oracle_encode_box,
)


@pytest.fixture(scope="module")
def world():
    return gen_world(num_classes=3, parts_per_class=4, dim=24, noise_sigma=0.0, seed=11, g_img=4)


@pytest.fixture(scope="module")
def noisy_world():
    return gen_world(num_classes=3, parts_per_class=4, dim=24, noise_sigma=0.4, seed=11, g_img=4)


class TestGenWorld:
    def test_prototypes_orthonormal(self, world):
        flat = world.prototypes.reshape(-1, world.dim)
        gram = flat @ flat.T
        assert gram == pytest.approx(np.eye(len(flat)), abs=1e-10)
        assert world.max_offdiag_cos == pytest.approx(0.0, abs=1e-10)

    def test_deterministic(self):
        a = gen_world(2, 3, 12, 0.1, seed=5)
        b = gen_world(2, 3, 12, 0.1, seed=5)
        assert np.array_equal(a.prototypes, b.prototypes)
        c = gen_world(2, 3, 12, 0.1, seed=6)
        assert not np.array_equal(a.prototypes, c.prototypes)

    def test_requires_enough_dimensions(self):
        with pytest.raises(ValueError):
            gen_world(4, 4, 15, 0.0, seed=0)

    def test_labels_and_prompts(self, world):
        assert world.labels == ["class_00", "class_01", "class_02"]
        assert "class_01" in world.prompt_text(1)

    def test_params_round_trip(self, world):
        from crossalign.synth import SynthWorld

        again = SynthWorld.from_params(world.params_dict())
        assert np.array_equal(again.prototypes, world.prototypes)


class TestGenImage:
    def test_field_shape_and_range(self, world):
        img = gen_image(world, class_id=1, image_seed=7)
        assert img.part_field.shape == (4, 4)
        assert img.part_field.min() >= 0
        assert img.part_field.max() < world.parts_per_class
        assert img.noise_field.shape == (4, 4, world.dim)

    def test_deterministic_per_seed(self, world):
        a = gen_image(world, 0, 3)
        b = gen_image(world, 0, 3)
        assert np.array_equal(a.part_field, b.part_field)
        assert np.array_equal(a.noise_field, b.noise_field)
        c = gen_image(world, 0, 4)
        assert not np.array_equal(a.noise_field, c.noise_field)

    def test_bad_class(self, world):
        with pytest.raises(ValueError):
            gen_image(world, 5, 0)


class TestOracleEncode:
    def test_single_cell_zero_noise_is_prototype(self, world):
        img = gen_image(world, 0, 0)
        # box inside cell (0, 0): g_img=4, so the cell spans [0, 0.25)^2
        box = BoundingBox(0.05, 0.05, 0.2, 0.2)
        emb = oracle_encode_box(world, img, box)
        part = int(img.part_field[0, 0])
        assert emb == pytest.approx(world.prototypes[0, part], abs=1e-12)

    def test_straddling_two_cells_equally(self, world):
        img = gen_image(world, 0, 0)
        # span cells (0,0) and (0,1) with equal area
        box = BoundingBox(0.125, 0.0, 0.375, 0.25)
        p0 = world.prototypes[0, int(img.part_field[0, 0])]
        p1 = world.prototypes[0, int(img.part_field[0, 1])]
        emb = oracle_encode_box(world, img, box)
        if np.array_equal(p0, p1):
            assert emb == pytest.approx(p0, abs=1e-12)
        else:
            # normalized mean of two orthonormal prototypes
            assert cosine(emb, p0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
            assert cosine(emb, p1) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_full_frame_matches_direct_mean(self, noisy_world):
        img = gen_image(noisy_world, 2, 5)
        g = noisy_world.g_img
        cell_area = 1.0 / (g * g)
        acc = np.zeros(noisy_world.dim)
        for r in range(g):
            for c in range(g):
                acc += cell_area * noisy_world.prototypes[2, int(img.part_field[r, c])]
                acc += cell_area * noisy_world.noise_sigma * img.noise_field[r, c]
        acc /= np.linalg.norm(acc)
        got = oracle_encode_box(noisy_world, img, FULL_FRAME)
        assert got == pytest.approx(acc, abs=1e-12)

    def test_unit_norm_output(self, noisy_world):
        img = gen_image(noisy_world, 1, 9)
        for box in (FULL_FRAME, BoundingBox(0.1, 0.2, 0.9, 0.7), BoundingBox(0.4, 0.4, 0.6, 0.6)):
            emb = oracle_encode_box(noisy_world, img, box)
            assert float(np.linalg.norm(emb)) == pytest.approx(1.0, abs=1e-12)

    def test_continuity_in_the_box(self, noisy_world):
        # near-identical boxes must embed near-identically
        img = gen_image(noisy_world, 0, 2)
        a = BoundingBox(0.2, 0.2, 0.8, 0.8)
        b = BoundingBox(0.201, 0.2, 0.801, 0.8)
        assert cosine(
            oracle_encode_box(noisy_world, img, a),
            oracle_encode_box(noisy_world, img, b),
        ) > 0.999

    def test_larger_boxes_average_noise_down(self, noisy_world):
        # full-frame embeddings stay closer to the class mean than single-cell ones
        full_cos, cell_cos = [], []
        for seed in range(30):
            img = gen_image(noisy_world, 0, seed + 100)
            lbl = label_embedding(noisy_world, 0)
            full_cos.append(cosine(oracle_encode_box(noisy_world, img, FULL_FRAME), lbl))
            part = int(img.part_field[0, 0])
            cell = oracle_encode_box(noisy_world, img, BoundingBox(0.01, 0.01, 0.24, 0.24))
            cell_cos.append(cosine(cell, noisy_world.prototypes[0, part]))
        assert float(np.mean(full_cos)) > float(np.mean(cell_cos))


class TestLabelEmbedding:
    def test_equidistant_from_parts(self, world):
        lbl = label_embedding(world, 0)
        assert float(np.linalg.norm(lbl)) == pytest.approx(1.0, abs=1e-12)
        for p in range(world.parts_per_class):
            assert cosine(lbl, world.prototypes[0, p]) == pytest.approx(
                1 / math.sqrt(world.parts_per_class), abs=1e-12
            )

    def test_prompt_wraps_embedding(self, world):
        prompt = label_prompt(world, 1)
        assert isinstance(prompt, LabelPrompt)
        assert prompt.label == "class_01"
        assert np.array_equal(prompt.embedding, label_embedding(world, 1))

    def test_ensemble_variants_near_prompt(self, world):
        variants = ensemble_prompt_embeddings(world, 0, variants=3)
        assert variants.shape == (3, world.dim)
        lbl = label_embedding(world, 0)
        for row in variants:
            assert float(np.linalg.norm(row)) == pytest.approx(1.0, abs=1e-12)
            assert cosine(row, lbl) > 0.9


class TestGenDescriptions:
    def test_pool_size_and_sources(self, world):
        pool = gen_descriptions(world, 0, m_true=4, dup_factor=3, distractor_count=5)
        assert len(pool) == 4 * 3 + 5
        assert sum(c.source == "other" for c in pool) == 5
        assert all(c.source in ("cupl", "des_attr", "dist_attr", "other") for c in pool)

    def test_deterministic(self, world):
        a = gen_descriptions(world, 1, 3, 2, 2)
        b = gen_descriptions(world, 1, 3, 2, 2)
        assert [c.text for c in a] == [c.text for c in b]
        assert all(np.array_equal(x.embedding, y.embedding) for x, y in zip(a, b))

    def test_duplicates_are_near_identical(self, world):
        pool = gen_descriptions(world, 0, m_true=2, dup_factor=4, distractor_count=0)
        by_base: dict[str, list] = {}
        for c in pool:
            base = c.text.split(" (restated")[0]
            by_base.setdefault(base, []).append(c)
        assert len(by_base) == 2
        for group in by_base.values():
            assert len(group) == 4
            for other in group[1:]:
                assert cosine(group[0].embedding, other.embedding) > 0.999

    def test_dedup_recovers_m_true(self, world):
        pool = gen_descriptions(world, 0, m_true=5, dup_factor=5, distractor_count=0)
        kept = dedup_descriptions(pool, s_th=0.99)
        assert len(kept) == 5

    def test_topk_removes_distractors(self, world):
        m_true = 4
        pool = gen_descriptions(
            world, 0, m_true=m_true, dup_factor=1, distractor_count=10, desc_noise=0.02
        )
        prompt = label_prompt(world, 0)
        kept = topk_by_label(pool, prompt, k=m_true)
        assert all("unrelated" not in c.text for c in kept)

    def test_validation(self, world):
        with pytest.raises(ValueError):
            gen_descriptions(world, 0, m_true=0)
        with pytest.raises(ValueError):
            gen_descriptions(world, 0, m_true=2, dup_factor=0)


class TestBuildDataset:
    def test_roster_round_robin(self, world):
        roster = build_images(world, images_per_class=2)
        assert len(roster) == 6
        ids = [image_id for image_id, _ in roster]
        assert ids == [f"im{i:04d}" for i in range(6)]
        classes = [img.class_id for _, img in roster]
        assert classes == [0, 1, 2, 0, 1, 2]

    def test_manifest_validates(self, world):
        manifest, archives = build_dataset(world, images_per_class=2, m_true=3)
        assert validate_manifest(manifest, archives) == []
        assert len(manifest.images) == 6
        assert len(manifest.classes) == 3
        assert manifest.synth is not None

    def test_patch_pool(self, world):
        manifest, archives = build_dataset(
            world, images_per_class=1, m_true=2, pool_size=4, pool_window=CropWindow(0.5, 0.9)
        )
        for img in manifest.images:
            assert len(img.patch_rows) == 4
            for box, row in img.patch_rows:
                stored = archives["image"].row(row)
                assert float(np.linalg.norm(stored)) == pytest.approx(1.0, abs=1e-3)

    def test_deterministic(self, world):
        a_manifest, a_arch = build_dataset(world, 2, 3, pool_size=2)
        b_manifest, b_arch = build_dataset(world, 2, 3, pool_size=2)
        assert a_manifest.to_json_dict() == b_manifest.to_json_dict()
        assert a_arch["image"].data.tobytes() == b_arch["image"].data.tobytes()
        assert a_arch["text"].data.tobytes() == b_arch["text"].data.tobytes()


class TestSeparableWorld:
    def test_zero_noise_world_is_perfectly_classified(self, world):
        manifest, archives = build_dataset(world, images_per_class=3, m_true=4, desc_noise=0.0)
        for mode in ("bifta", "wca", "bifta_no_vr", "bifta_no_dr", "clip", "clip_e", "desc_avg"):
            config = ExperimentConfig(mode=mode, capacity=8, k=4, seeds=(0,))
            report = run_experiment(config, manifest, archives)
            assert report.mean_accuracy == 1.0, mode

    def test_zero_noise_classifier_arithmetic(self, world):
        # direct classifier calls on oracle embeddings, bypassing the harness
        img = gen_image(world, 1, 0)
        full = oracle_encode_box(world, img, FULL_FRAME)
        prompts = [(lbl, label_embedding(world, c)) for c, lbl in enumerate(world.labels)]
        assert classify_clip(full, prompts, tau=0.01)[0].label == "class_01"
        ens = [
            (lbl, ensemble_prompt_embeddings(world, c, variants=3))
            for c, lbl in enumerate(world.labels)
        ]
        assert classify_ensemble(full, ens, tau=0.01)[0].label == "class_01"
        descs = [
            (lbl, np.stack([d.embedding for d in gen_descriptions(world, c, 3, desc_noise=0.0)]))
            for c, lbl in enumerate(world.labels)
        ]
        assert classify_desc_avg(full, descs, tau=0.01)[0].label == "class_01"
        classes = [
            ClassDescriptors(lbl, label_embedding(world, c), descs[c][1])
            for c, lbl in enumerate(world.labels)
        ]
        views = np.stack(
            [oracle_encode_box(world, img, b) for b in (FULL_FRAME, BoundingBox(0, 0, 0.5, 0.5))]
        )
        assert classify_wca(views, full, classes, tau=0.01)[0].label == "class_01"
