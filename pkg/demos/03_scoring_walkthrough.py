"""
Build the weighted visual-text alignment score by hand on a 2-view,
3-description example, then cross-check it against the library call.

What this script does:
1) Construct tiny unit vectors for a full image, two crop views, a label
   prompt, and three descriptions
2) Compute the view weights (softmax over cosine of full image vs views)
   and description weights (softmax over cosine of label vs descriptions)
3) Assemble the view-by-description cosine matrix, scale it by 1/tau, and
   contract it with both weight vectors to get the class score
4) Compare against wca_score / classify_wca and show that rescaling tau
   changes the scores but never the ranking
"""

from __future__ import annotations

import numpy as np

from crossalign import (
    ClassDescriptors,
    classify_wca,
    cosine,
    desc_weights,
    softmax,
    view_weights,
    wca_score,
)


def unit(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    return arr / np.linalg.norm(arr)


def main() -> None:
    full_img = unit([1.0, 0.2, 0.0, 0.1])
    views = np.stack([unit([1.0, 0.0, 0.0, 0.0]), unit([0.6, 0.8, 0.0, 0.0])])
    label = unit([0.9, 0.1, 0.3, 0.0])
    descs = np.stack(
        [unit([1.0, 0.1, 0.2, 0.0]), unit([0.2, 1.0, 0.0, 0.0]), unit([0.0, 0.0, 1.0, 0.0])]
    )
    tau = 0.01

    # Step 1: weights from cosine similarities, no temperature on either side.
    w = view_weights(full_img, views)
    v = desc_weights(label, descs)
    print("view weights        :", np.round(w, 4))
    print("description weights :", np.round(v, 4))

    manual_w = softmax([cosine(full_img, view) for view in views])
    manual_v = softmax([cosine(label, d) for d in descs])
    assert np.allclose(w, manual_w) and np.allclose(v, manual_v)

    # Step 2: pairwise cosine matrix scaled by 1/tau.
    S = np.array([[cosine(view, d) / tau for d in descs] for view in views])
    print("scaled cosine matrix:\n", np.round(S, 2))

    # Step 3: bilinear contraction w^T S v, spelled out as a double sum.
    manual_score = sum(
        w[i] * S[i, j] * v[j] for i in range(len(views)) for j in range(len(descs))
    )
    library_score = wca_score(S, w, v)
    print(f"manual score  = {manual_score:.6f}")
    print(f"library score = {library_score:.6f}")
    assert abs(manual_score - library_score) < 1e-9

    # Step 4: rankings are invariant to tau because every class score is a
    # convex combination of cosines divided by the same constant.
    classes = [
        ClassDescriptors("axis", unit([1.0, 0, 0, 0]), descs),
        ClassDescriptors("diag", unit([0.5, 0.5, 0.5, 0.5]), descs[:2]),
    ]
    for tau_probe in (0.01, 1.0, 25.0):
        ranked = classify_wca(views, full_img, classes, tau=tau_probe)
        order = [c.label for c in ranked]
        top = ranked[0]
        print(f"tau={tau_probe:<5}: order={order} top_score={top.score:10.4f} prob={top.prob:.4f}")


if __name__ == "__main__":
    main()
