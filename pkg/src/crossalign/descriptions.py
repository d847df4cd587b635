"""Description pool refinement.

A class's candidate descriptions (typically merged from several generators)
are refined in two stages: a greedy forward pass drops any candidate whose
similarity to an already-kept one reaches the redundancy threshold, then the
survivors are cut down to the k candidates closest to the class label prompt
in embedding space.  Both stages preserve the input order of whatever they
keep, so refinement output is always an ordered sublist of the input.

Similarity for the dedup stage is either embedding cosine or TF-IDF cosine
over the raw texts; the greedy filter itself only ever looks at a similarity
matrix, so the two modes share one code path.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DESCRIPTION_SOURCES = ("cupl", "des_attr", "dist_attr", "other")
DEDUP_MODES = ("embed_cosine", "tfidf")

_TOKEN_RE = re.compile(r"[0-9a-z]+")


class EmptyRefinedSetError(ValueError):
    """Raised when refinement leaves a class with no descriptions."""


@dataclass(eq=False)
class DescriptionCandidate:
    """One candidate description with its text-encoder embedding."""

    text: str
    source: str = "other"
    embedding: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("description text must be non-empty")
        if self.source not in DESCRIPTION_SOURCES:
            raise ValueError(
                f"unknown source {self.source!r}, expected one of {DESCRIPTION_SOURCES}"
            )
        if self.embedding is not None:
            self.embedding = np.asarray(self.embedding, dtype=np.float64)


@dataclass(eq=False)
class LabelPrompt:
    """Class label with its prompt sentence and unit-norm text embedding."""

    label: str
    prompt_text: str
    embedding: np.ndarray

    def __post_init__(self) -> None:
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > 1e-3:
            raise ValueError(
                f"label prompt embedding for {self.label!r} must be unit norm "
                f"(within 1e-3), got norm {norm}"
            )


@dataclass(eq=False)
class DescriptionSet:
    """Refined descriptions for one class, with the thresholds that made it."""

    label: str
    members: list[DescriptionCandidate]
    dedup_threshold: float
    k: int
    dedup_mode: str = "embed_cosine"

    def __post_init__(self) -> None:
        if not (0.0 < self.dedup_threshold <= 1.0):
            raise ValueError(f"dedup threshold must be in (0, 1], got {self.dedup_threshold}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if len(self.members) > self.k:
            raise ValueError(f"{len(self.members)} members exceed k={self.k}")
        if self.dedup_mode not in DEDUP_MODES:
            raise ValueError(f"unknown dedup mode {self.dedup_mode!r}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1]; rejects zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for zero vectors")
    return min(1.0, max(-1.0, float(u @ v) / (nu * nv)))


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-normalize; all-zero rows stay zero (their cosines read as 0)."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return matrix / safe


def cs_accept(candidate: np.ndarray, kept: Sequence[np.ndarray] | np.ndarray, s_th: float) -> bool:
    """Redundancy test: keep the candidate iff its cosine to every already
    kept embedding stays strictly below ``s_th``.  Vacuously true when
    nothing is kept yet."""
    if not (0.0 < s_th <= 1.0):
        raise ValueError(f"similarity threshold must be in (0, 1], got {s_th}")
    kept = np.asarray(kept, dtype=np.float64)
    if kept.size == 0:
        return True
    c = np.asarray(candidate, dtype=np.float64)
    sims = _unit_rows(kept) @ (c / np.linalg.norm(c))
    return bool(np.all(sims < s_th))


def greedy_keep_indices(similarity: np.ndarray, s_th: float) -> list[int]:
    """Forward greedy pass over a symmetric similarity matrix.

    Index i survives iff similarity[i, j] < s_th for every previously kept
    j < i.  The first row always survives.
    """
    if not (0.0 < s_th <= 1.0):
        raise ValueError(f"similarity threshold must be in (0, 1], got {s_th}")
    sim = np.asarray(similarity, dtype=np.float64)
    n = sim.shape[0]
    kept: list[int] = []
    for i in range(n):
        if all(sim[i, j] < s_th for j in kept):
            kept.append(i)
    return kept


def tfidf_vectors(texts: Sequence[str]) -> np.ndarray:
    """L2-normalized TF-IDF rows for a small corpus.

    Tokens are lowercase alphanumeric runs; the vocabulary is ordered by
    first appearance; tf is the in-document frequency and
    idf = ln((1 + D) / (1 + df)) + 1.  Documents with no tokens yield a zero
    row and a warning; a corpus with no tokens at all is an error.
    """
    if len(texts) == 0:
        raise ValueError("cannot vectorize an empty corpus")
    token_lists = [_TOKEN_RE.findall(t.lower()) for t in texts]
    vocab: dict[str, int] = {}
    for tokens in token_lists:
        for tok in tokens:
            if tok not in vocab:
                vocab[tok] = len(vocab)
    if not vocab:
        raise ValueError("no tokens in corpus; TF-IDF similarity is undefined")
    df = np.zeros(len(vocab), dtype=np.float64)
    for tokens in token_lists:
        for tok in set(tokens):
            df[vocab[tok]] += 1.0
    n_docs = len(texts)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    rows = np.zeros((n_docs, len(vocab)), dtype=np.float64)
    empty: list[int] = []
    for i, tokens in enumerate(token_lists):
        if not tokens:
            empty.append(i)
            continue
        for tok in tokens:
            rows[i, vocab[tok]] += 1.0
        rows[i] *= idf / len(tokens)
    if empty:
        warnings.warn(f"documents with no tokens get zero vectors: indices {empty}")
    return _unit_rows(rows)


def _similarity_matrix(candidates: Sequence[DescriptionCandidate], mode: str) -> np.ndarray:
    if mode == "embed_cosine":
        for c in candidates:
            if c.embedding is None:
                raise ValueError(f"candidate {c.text!r} has no embedding")
            if not np.any(c.embedding):
                raise ValueError(f"candidate {c.text!r} has a zero embedding")
        vecs = _unit_rows(np.stack([c.embedding for c in candidates]))
    elif mode == "tfidf":
        vecs = tfidf_vectors([c.text for c in candidates])
    else:
        raise ValueError(f"unknown dedup mode {mode!r}, expected one of {DEDUP_MODES}")
    return np.clip(vecs @ vecs.T, -1.0, 1.0)


def dedup_descriptions(
    candidates: Sequence[DescriptionCandidate],
    s_th: float,
    mode: str = "embed_cosine",
) -> list[DescriptionCandidate]:
    """Drop near-duplicates with a greedy forward pass, preserving order."""
    if len(candidates) == 0:
        return []
    sim = _similarity_matrix(candidates, mode)
    kept = greedy_keep_indices(sim, s_th)
    return [candidates[i] for i in kept]


def topk_by_label(
    pool: Sequence[DescriptionCandidate],
    label: LabelPrompt,
    k: int,
) -> list[DescriptionCandidate]:
    """Keep the k candidates whose embeddings are closest (by cosine) to the
    label prompt embedding, returned in their original pool order.  Ties are
    broken toward the earlier candidate; a pool of at most k is returned
    unchanged."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(pool) == 0:
        return []
    if len(pool) <= k:
        return list(pool)
    sims = np.array([cosine(c.embedding, label.embedding) for c in pool])
    ranked = np.argsort(-sims, kind="stable")[:k]
    return [pool[i] for i in sorted(ranked)]


def label_cosines(pool: Sequence[DescriptionCandidate], label: LabelPrompt) -> list[float]:
    """Cosine of each candidate embedding to the label prompt embedding."""
    return [cosine(c.embedding, label.embedding) for c in pool]


def refine_descriptions(
    merged: Sequence[DescriptionCandidate],
    label: LabelPrompt,
    s_th: float,
    k: int,
    mode: str = "embed_cosine",
) -> DescriptionSet:
    """Dedup then top-k: the full refinement pass for one class."""
    if len(merged) == 0:
        raise ValueError(f"empty description pool for label {label.label!r}")
    deduped = dedup_descriptions(merged, s_th, mode)
    if not deduped:
        raise EmptyRefinedSetError(
            f"no descriptions left for {label.label!r} after dedup at s_th={s_th} (mode={mode})"
        )
    kept = topk_by_label(deduped, label, k)
    return DescriptionSet(label.label, kept, s_th, k, mode)


def load_description_pool(path: str | Path) -> dict:
    """Read a description pool document: {"label", "prompt", "descriptions":
    [{"text", "source"}, ...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key in ("label", "prompt", "descriptions"):
        if key not in doc:
            raise ValueError(f"description pool is missing {key!r}")
    for entry in doc["descriptions"]:
        if "text" not in entry:
            raise ValueError("every description entry needs a 'text' field")
        entry.setdefault("source", "other")
    return doc


def dump_refined_pool(
    path: str | Path,
    pool_doc: dict,
    merged: Sequence[DescriptionCandidate],
    refined: DescriptionSet,
    label: LabelPrompt,
) -> None:
    """Write the pool back out with per-entry refinement results.

    Every input entry is annotated with whether it survived, its 1-based
    rank by label cosine over the full input pool, and that cosine.
    """
    sims = np.array(label_cosines(merged, label))
    order = np.argsort(-sims, kind="stable")
    rank = np.empty(len(merged), dtype=int)
    rank[order] = np.arange(1, len(merged) + 1)
    kept_texts = {c.text for c in refined.members}
    entries = []
    for i, cand in enumerate(merged):
        entries.append(
            {
                "text": cand.text,
                "source": cand.source,
                "kept": cand.text in kept_texts,
                "rank": int(rank[i]),
                "label_cosine": float(sims[i]),
            }
        )
    out = {
        "label": pool_doc["label"],
        "prompt": pool_doc["prompt"],
        "dedup_threshold": refined.dedup_threshold,
        "k": refined.k,
        "dedup_mode": refined.dedup_mode,
        "descriptions": entries,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
