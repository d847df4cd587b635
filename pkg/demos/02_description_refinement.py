"""
Refine a noisy description pool: drop near-duplicates, then keep the top-k
entries closest to the class prompt.

What this script does:
1) Generate a synthetic class with a description pool that contains restated
   duplicates and off-topic distractor lines
2) Run the greedy cosine deduplication pass and show which texts survive
3) Rank the survivors by cosine similarity to the label prompt and keep top-k
4) Print the same refinement with the TF-IDF deduplication mode to compare
   which pairs each text representation considers redundant

The pool is tiny on purpose so every decision can be read off the output.
"""

from __future__ import annotations

from crossalign import (
    LabelPrompt,
    cosine,
    dedup_descriptions,
    gen_descriptions,
    gen_world,
    label_embedding,
    refine_descriptions,
)

S_TH = 0.99
K = 4


def show_pool(title: str, pool) -> None:
    print(f"{title} ({len(pool)} entries):")
    for cand in pool:
        print(f"  [{cand.source:5s}] {cand.text}")
    print()


def main() -> None:
    world = gen_world(num_classes=3, parts_per_class=3, dim=24, noise_sigma=0.3, seed=5, g_img=4)
    class_id = 1
    label = LabelPrompt(
        label=world.labels[class_id],
        prompt_text=world.prompt_text(class_id),
        embedding=label_embedding(world, class_id),
    )

    pool = gen_descriptions(
        world, class_id, m_true=4, dup_factor=3, distractor_count=3, desc_noise=0.05
    )
    show_pool("raw pool", pool)

    deduped = dedup_descriptions(pool, s_th=S_TH, mode="embed_cosine")
    show_pool(f"after cosine dedup (s_th={S_TH})", deduped)

    refined = refine_descriptions(pool, label, s_th=S_TH, k=K, mode="embed_cosine")
    print(f"after top-{K} by label cosine:")
    for cand in refined.members:
        print(f"  cos(label, desc)={cosine(label.embedding, cand.embedding):+.4f}  {cand.text}")
    print()

    # TF-IDF dedup keys on token overlap instead of embedding geometry, so
    # restated lines with shared wording collapse even without embeddings.
    refined_tfidf = refine_descriptions(pool, label, s_th=0.60, k=K, mode="tfidf")
    print("tfidf-mode refinement (s_th=0.60) keeps:")
    for cand in refined_tfidf.members:
        print(f"  {cand.text}")


if __name__ == "__main__":
    main()
