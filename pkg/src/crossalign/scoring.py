"""Weighted cross-alignment scoring between crop views and descriptions.

The class score is a doubly weighted sum over a similarity matrix: rows are
crop views of the image, columns are the class's descriptions, each entry is
the temperature-scaled cosine of the two embeddings.  View weights come from
a softmax over each view's cosine to the full-image embedding, description
weights from a softmax over each description's cosine to the class label
prompt embedding.  The plain CLIP score, the prompt-ensemble score, and the
unweighted description average are provided as baselines; all classifiers
return the same ranked record shape.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class ClassScore:
    """One class's score and softmax probability, as ranked output."""

    label: str
    score: float
    prob: float


class ClassDescriptors(NamedTuple):
    """Per-class inputs to the weighted cross-alignment classifier."""

    label: str
    label_embedding: np.ndarray  # (d,)
    description_embeddings: np.ndarray  # (m, d)


def _check_tau(tau: float) -> None:
    if not tau > 0.0:
        raise ValueError(f"temperature must be positive, got {tau}")


def _as_unit(v: np.ndarray, what: str, warn: bool = False) -> np.ndarray:
    """Return v / ||v||; zero vectors are an error, off-unit inputs optionally warn."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError(f"{what} must be non-zero")
    if warn and abs(norm - 1.0) > 1e-3:
        warnings.warn(f"{what} is not unit norm (|v|={norm:.6g}); renormalizing")
    return v / norm


def _unit_rows(matrix: np.ndarray, what: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"{what} must be a 2-d array, got shape {matrix.shape}")
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError(f"{what} contains a zero row")
    return matrix / norms


def clip_sim(z_img: np.ndarray, z_txt: np.ndarray, tau: float) -> float:
    """Temperature-scaled cosine between an image and a text embedding.

    Inputs are expected unit norm; anything off by more than 1e-3 draws a
    warning and is renormalized rather than rejected.
    """
    _check_tau(tau)
    zi = _as_unit(z_img, "image embedding", warn=True)
    zt = _as_unit(z_txt, "text embedding", warn=True)
    if zi.shape != zt.shape:
        raise ValueError(f"dimension mismatch: {zi.shape} vs {zt.shape}")
    return float(zi @ zt) / tau


def softmax(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Numerically stable softmax; rejects empty input."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("softmax of an empty sequence is undefined")
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / np.sum(e)


def view_weights(orig_embedding: np.ndarray, view_embeddings: np.ndarray) -> np.ndarray:
    """Softmax over each view's cosine to the full-image embedding."""
    orig = _as_unit(orig_embedding, "full-image embedding")
    views = _unit_rows(view_embeddings, "view embeddings")
    if views.shape[1] != orig.shape[0]:
        raise ValueError(
            f"dimension mismatch: views have dim {views.shape[1]}, image has {orig.shape[0]}"
        )
    return softmax(views @ orig)


def desc_weights(label_embedding: np.ndarray, desc_embeddings: np.ndarray) -> np.ndarray:
    """Softmax over each description's cosine to the label prompt embedding."""
    label = _as_unit(label_embedding, "label embedding")
    descs = _unit_rows(desc_embeddings, "description embeddings")
    if descs.shape[1] != label.shape[0]:
        raise ValueError(
            f"dimension mismatch: descriptions have dim {descs.shape[1]}, label has {label.shape[0]}"
        )
    return softmax(descs @ label)


def wca_score(score_matrix: np.ndarray, view_w: np.ndarray, desc_w: np.ndarray) -> float:
    """Bilinear form w^T S v: the weighted cross-alignment class score."""
    s = np.asarray(score_matrix, dtype=np.float64)
    w = np.asarray(view_w, dtype=np.float64)
    v = np.asarray(desc_w, dtype=np.float64)
    if s.ndim != 2:
        raise ValueError(f"score matrix must be 2-d, got shape {s.shape}")
    if w.shape != (s.shape[0],) or v.shape != (s.shape[1],):
        raise ValueError(
            f"weight shapes {w.shape}/{v.shape} do not match matrix {s.shape}"
        )
    return float(w @ s @ v)


def _ranked(labels: Sequence[str], scores: np.ndarray) -> list[ClassScore]:
    """Rank descending by score; ties resolve toward the earlier class."""
    scores = np.asarray(scores, dtype=np.float64)
    probs = softmax(scores)
    order = np.argsort(-scores, kind="stable")
    return [ClassScore(labels[i], float(scores[i]), float(probs[i])) for i in order]


def classify_wca(
    view_embeddings: np.ndarray,
    orig_embedding: np.ndarray,
    classes: Sequence[ClassDescriptors],
    tau: float,
) -> list[ClassScore]:
    """Rank classes by weighted cross-alignment score.

    ``view_embeddings`` is the (n, d) stack of crop-view embeddings and
    ``orig_embedding`` the full image's.  Each class contributes its label
    prompt embedding and an (m, d) stack of description embeddings.
    """
    _check_tau(tau)
    if len(classes) == 0:
        raise ValueError("need at least one class")
    views = _unit_rows(view_embeddings, "view embeddings")
    w = view_weights(orig_embedding, views)
    scores = []
    for entry in classes:
        descs = _unit_rows(entry.description_embeddings, f"descriptions[{entry.label}]")
        v = desc_weights(entry.label_embedding, descs)
        s = (views @ descs.T) / tau
        scores.append(wca_score(s, w, v))
    return _ranked([c.label for c in classes], np.array(scores))


def classify_clip(
    img_embedding: np.ndarray,
    labels: Sequence[tuple[str, np.ndarray]],
    tau: float,
) -> list[ClassScore]:
    """Plain zero-shot baseline: rank by cosine to each label prompt."""
    _check_tau(tau)
    if len(labels) == 0:
        raise ValueError("need at least one class")
    img = _as_unit(img_embedding, "image embedding")
    mat = _unit_rows(np.stack([emb for _, emb in labels]), "label embeddings")
    scores = (mat @ img) / tau
    return _ranked([name for name, _ in labels], scores)


def classify_ensemble(
    img_embedding: np.ndarray,
    labels: Sequence[tuple[str, np.ndarray]],
    tau: float,
) -> list[ClassScore]:
    """Prompt-ensembling baseline: average each class's prompt embeddings,
    renormalize the mean, then score as the plain baseline does.  A class
    whose prompts cancel to the zero vector is rejected."""
    _check_tau(tau)
    if len(labels) == 0:
        raise ValueError("need at least one class")
    pooled = []
    for name, prompts in labels:
        mat = _unit_rows(np.asarray(prompts, dtype=np.float64), f"prompts[{name}]")
        mean = mat.mean(axis=0)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            raise ValueError(f"prompt embeddings for {name!r} average to the zero vector")
        pooled.append((name, mean / norm))
    return classify_clip(img_embedding, pooled, tau)


def classify_desc_avg(
    img_embedding: np.ndarray,
    labels: Sequence[tuple[str, np.ndarray]],
    tau: float,
) -> list[ClassScore]:
    """Unweighted description baseline: mean temperature-scaled cosine from
    the image to each class's descriptions."""
    _check_tau(tau)
    if len(labels) == 0:
        raise ValueError("need at least one class")
    img = _as_unit(img_embedding, "image embedding")
    scores = []
    for name, descs in labels:
        mat = _unit_rows(np.asarray(descs, dtype=np.float64), f"descriptions[{name}]")
        scores.append(float(np.mean(mat @ img)) / tau)
    return _ranked([name for name, _ in labels], np.array(scores))


def clip_vr_accept(
    candidate_embedding: np.ndarray,
    kept_embeddings: Sequence[np.ndarray] | np.ndarray,
    threshold: float,
) -> bool:
    """Embedding-space view admission: accept iff the candidate's cosine to
    every kept view embedding stays strictly below the threshold."""
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    kept = np.asarray(kept_embeddings, dtype=np.float64)
    if kept.size == 0:
        return True
    cand = _as_unit(candidate_embedding, "candidate embedding")
    sims = _unit_rows(kept, "kept view embeddings") @ cand
    return bool(np.all(sims < threshold))
