"""Encoder backends: a deterministic stub and an optional real-model wrapper.

The stub maps content hashes to unit vectors through the same exactly
specified generator the crop sampler uses, so exports are reproducible
byte-for-byte on any platform with no model weights installed.  The real
backend wraps an open_clip checkpoint behind lazy imports; it is never
touched unless requested by model id, so the heavy dependencies stay
optional.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .rng import Box, SplitMix64


class BackendError(Exception):
    """A model backend or its dependencies are unavailable."""


class StubEncoder:
    """Hash-seeded deterministic encoder for format and pipeline testing."""

    def __init__(self, dim: int) -> None:
        if dim < 2:
            raise ValueError(f"stub dimension must be >= 2, got {dim}")
        self.dim = dim
        self.name = f"stub:{dim}"

    def _vector(self, payload: bytes) -> np.ndarray:
        # Re-seed from the hash until the draw is safely away from the
        # origin; a single pass suffices in practice.
        digest = hashlib.sha256(payload).digest()
        while True:
            rng = SplitMix64(int.from_bytes(digest[:8], "little"))
            vec = np.array(
                [rng.next_double() * 2.0 - 1.0 for _ in range(self.dim)], dtype=np.float64
            )
            norm = float(np.linalg.norm(vec))
            if norm > 1e-6:
                return (vec / norm).astype(np.float32)
            digest = hashlib.sha256(digest).digest()

    def encode_text(self, text: str) -> np.ndarray:
        return self._vector(b"txt\x00" + text.encode("utf-8"))

    def encode_image(self, image_path: str | Path, box: Box) -> np.ndarray:
        # The crop box enters the hash as its exact float64 bytes, so any
        # change in sampling arithmetic changes the embedding.
        content = hashlib.sha256(Path(image_path).read_bytes()).digest()
        coords = struct.pack("<4d", box.x0, box.y0, box.x1, box.y1)
        return self._vector(b"img\x00" + content + coords)


class ClipEncoder:
    """open_clip checkpoint wrapper; constructed only for real model ids."""

    def __init__(self, model_id: str) -> None:
        try:
            import open_clip
            import torch
            from PIL import Image
        except ImportError as exc:
            raise BackendError(
                f"model {model_id!r} needs torch, open_clip_torch, and pillow; "
                f"install the 'real' extra ({exc})"
            ) from exc
        arch, _, pretrained = model_id.partition("@")
        try:
            model, _, preprocess = open_clip.create_model_and_transforms(
                arch, pretrained=pretrained or "openai"
            )
        except Exception as exc:
            raise BackendError(f"could not load model {model_id!r}: {exc}") from exc
        tokenizer = open_clip.get_tokenizer(arch)
        model.eval()
        self._torch = torch
        self._Image = Image
        self._model = model
        self._preprocess = preprocess
        self._tokenizer = tokenizer
        self.dim = int(model.text_projection.shape[1])
        self.name = model_id

    def encode_text(self, text: str) -> np.ndarray:
        with self._torch.no_grad():
            z = self._model.encode_text(self._tokenizer([text]))
        z = z[0] / z[0].norm()
        return z.cpu().numpy().astype(np.float32)

    def encode_image(self, image_path: str | Path, box: Box) -> np.ndarray:
        img = self._Image.open(image_path).convert("RGB")
        w, h = img.size
        pixel_box = (
            int(round(box.x0 * w)),
            int(round(box.y0 * h)),
            max(int(round(box.x1 * w)), int(round(box.x0 * w)) + 1),
            max(int(round(box.y1 * h)), int(round(box.y0 * h)) + 1),
        )
        tensor = self._preprocess(img.crop(pixel_box)).unsqueeze(0)
        with self._torch.no_grad():
            z = self._model.encode_image(tensor)
        z = z[0] / z[0].norm()
        return z.cpu().numpy().astype(np.float32)


def load_encoder(model_id: str):
    """Resolve a model id: ``stub:<dim>`` stays local, anything else is real."""
    if model_id == "stub" or model_id.startswith("stub:"):
        _, _, dim = model_id.partition(":")
        return StubEncoder(int(dim) if dim else 32)
    return ClipEncoder(model_id)
