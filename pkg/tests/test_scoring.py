"""Weighted cross-alignment scoring and the baseline classifiers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from crossalign.scoring import (
    ClassDescriptors,
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


def unit(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    return a / np.linalg.norm(a)


def random_units(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    m = rng.normal(size=(n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


class TestSoftmax:
    def test_worked_example(self):
        got = softmax([1.0, 2.0, 3.0])
        # exact oracle via plain math.exp
        es = [math.exp(x) for x in (1.0, 2.0, 3.0)]
        want = [e / sum(es) for e in es]
        assert got == pytest.approx(want, abs=1e-15)
        assert got == pytest.approx([0.09003, 0.24473, 0.66524], abs=5e-6)

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            v = rng.normal(scale=10, size=rng.integers(1, 30))
            w = softmax(v)
            assert float(np.sum(w)) == pytest.approx(1.0, abs=1e-12)
            assert np.all(w > 0)

    def test_shift_invariance(self):
        v = np.array([0.3, -1.2, 4.0])
        assert softmax(v) == pytest.approx(softmax(v + 123.0), abs=1e-12)

    def test_large_values_stable(self):
        w = softmax([1000.0, 1001.0])
        assert np.isfinite(w).all()
        assert w[1] > w[0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            softmax([])


class TestClipSim:
    def test_scaled_cosine(self):
        z = unit([1.0, 1.0])
        t = unit([1.0, 0.0])
        assert clip_sim(z, t, tau=1.0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert clip_sim(z, t, tau=0.01) == pytest.approx(100 / math.sqrt(2), abs=1e-9)

    def test_off_unit_warns_and_renormalizes(self):
        with pytest.warns(UserWarning):
            got = clip_sim(np.array([2.0, 0.0]), np.array([1.0, 0.0]), tau=1.0)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_bad_tau(self):
        with pytest.raises(ValueError):
            clip_sim(unit([1, 0]), unit([1, 0]), tau=0.0)


class TestWeights:
    def test_view_weights_match_softmax_of_cosines(self):
        # views built in-plane so their cosines to the anchor are exact
        anchor = np.zeros(4)
        anchor[0] = 1.0
        cosines = [0.9, 0.5, 0.1]
        views = np.stack([
            [c, math.sqrt(1 - c * c), 0.0, 0.0] for c in cosines
        ])
        got = view_weights(anchor, views)
        assert got == pytest.approx(softmax(cosines), abs=1e-12)

    def test_desc_weights_equal_for_equal_cosines(self):
        label = np.zeros(3)
        label[0] = 1.0
        c = 0.8
        d1 = [c, math.sqrt(1 - c * c), 0.0]
        d2 = [c, 0.0, math.sqrt(1 - c * c)]
        d3 = [0.2, math.sqrt(1 - 0.04), 0.0]
        w = desc_weights(label, np.stack([d1, d2, d3]))
        assert w[0] == pytest.approx(w[1], abs=1e-12)
        assert w[0] > w[2]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            view_weights(unit([1, 0, 0]), random_units(np.random.default_rng(0), 2, 4))


class TestWcaScore:
    def test_worked_example(self):
        s = np.array([[1.0, 2.0], [3.0, 4.0]])
        w = np.array([0.25, 0.75])
        v = np.array([0.4, 0.6])
        # 0.25(0.4*1 + 0.6*2) + 0.75(0.4*3 + 0.6*4)
        assert wca_score(s, w, v) == pytest.approx(3.1, abs=1e-12)

    def test_matches_double_sum_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 65))
            m = int(rng.integers(1, 65))
            s = rng.normal(size=(n, m))
            w = softmax(rng.normal(size=n))
            v = softmax(rng.normal(size=m))
            brute = sum(w[i] * s[i, j] * v[j] for i in range(n) for j in range(m))
            got = wca_score(s, w, v)
            assert got == pytest.approx(brute, rel=1e-9, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            wca_score(np.ones((2, 3)), np.ones(3), np.ones(3))


class TestClassifiers:
    def make_classes(self, rng: np.random.Generator, c: int, m: int, d: int):
        return [
            ClassDescriptors(f"class{i}", random_units(rng, 1, d)[0], random_units(rng, m, d))
            for i in range(c)
        ]

    def test_single_view_single_desc_reduces_to_clip(self):
        # with n = m = 1 all softmax weights are 1, so the score is the
        # pairwise temperature-scaled cosine to the lone description
        rng = np.random.default_rng(4)
        d = 8
        img = random_units(rng, 1, d)[0]
        classes = self.make_classes(rng, 5, 1, d)
        got = classify_wca(img[None, :], img, classes, tau=0.01)
        clip_labels = [(c.label, c.description_embeddings[0]) for c in classes]
        want = classify_clip(img, clip_labels, tau=0.01)
        assert [g.label for g in got] == [w.label for w in want]
        for g, w in zip(got, want):
            assert g.score == pytest.approx(w.score, rel=1e-12)

    def test_ranking_tau_invariant(self):
        rng = np.random.default_rng(5)
        d = 16
        for _ in range(20):
            img = random_units(rng, 1, d)[0]
            views = random_units(rng, 6, d)
            classes = self.make_classes(rng, 4, 5, d)
            rankings = [
                [s.label for s in classify_wca(views, img, classes, tau=t)]
                for t in (0.01, 0.07, 1.0, 13.0)
            ]
            assert all(r == rankings[0] for r in rankings)

    def test_probs_are_softmax_of_scores(self):
        rng = np.random.default_rng(6)
        img = random_units(rng, 1, 8)[0]
        classes = self.make_classes(rng, 3, 4, 8)
        ranked = classify_wca(random_units(rng, 5, 8), img, classes, tau=0.5)
        probs = softmax([r.score for r in ranked])
        assert [r.prob for r in ranked] == pytest.approx(probs, abs=1e-12)
        assert [r.score for r in ranked] == sorted((r.score for r in ranked), reverse=True)

    def test_ensemble_mean_then_renormalize(self):
        img = unit([1.0, 1.0])
        prompts = np.array([[1.0, 0.0], [0.0, 1.0]])
        got = classify_ensemble(img, [("x", prompts)], tau=1.0)
        # pooled prompt is (1/sqrt 2, 1/sqrt 2), colinear with the image
        assert got[0].score == pytest.approx(1.0, abs=1e-12)

    def test_ensemble_zero_mean_rejected(self):
        prompts = np.array([[1.0, 0.0], [-1.0, 0.0]])
        with pytest.raises(ValueError):
            classify_ensemble(unit([1, 1]), [("x", prompts)], tau=1.0)

    def test_desc_avg_matches_mean_oracle(self):
        rng = np.random.default_rng(7)
        d = 8
        img = random_units(rng, 1, d)[0]
        labels = [(f"c{i}", random_units(rng, 3, d)) for i in range(2)]
        got = {s.label: s.score for s in classify_desc_avg(img, labels, tau=0.5)}
        for name, descs in labels:
            brute = float(np.mean([(img @ e) / 0.5 for e in descs]))
            assert got[name] == pytest.approx(brute, rel=1e-12)

    def test_tie_prefers_earlier_class(self):
        img = unit([1.0, 0.0])
        labels = [("first", unit([0.0, 1.0])), ("second", unit([0.0, 1.0]))]
        ranked = classify_clip(img, labels, tau=1.0)
        assert ranked[0].label == "first"

    def test_empty_classes_rejected(self):
        with pytest.raises(ValueError):
            classify_clip(unit([1, 0]), [], tau=1.0)
        with pytest.raises(ValueError):
            classify_wca(np.ones((1, 2)), unit([1, 0]), [], tau=1.0)


class TestClipVrAccept:
    def test_threshold_behavior(self):
        kept = np.stack([unit([1, 0]), unit([0, 1])])
        assert clip_vr_accept(unit([1, 1]), kept, threshold=0.8)
        assert not clip_vr_accept(unit([1, 0.05]), kept, threshold=0.8)
        assert clip_vr_accept(unit([1, 0]), [], threshold=0.1)
