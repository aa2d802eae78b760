"""Embedding provider contract plus deterministic desk-scale implementations.

Heavyweight neural sentence encoders plug in behind the same ``embed`` call;
the shipped providers are deterministic so every pipeline stage stays
reproducible without model downloads.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np


class EmbeddingProvider(Protocol):
    """Maps texts to fixed-dimension real vectors, deterministically."""

    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


_TOKEN = re.compile(r"[0-9a-z]+")


class HashingEmbeddingProvider:
    """Feature-hashed bag-of-words vectors.

    Each lowercase alphanumeric token is hashed (md5, so stable across runs and
    processes) to a coordinate and a sign; the sum is L2-normalized. Texts with
    no tokens map to the zero vector.
    """

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension

    def _token_slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % self.dimension
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        return index, sign

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension))
        for row, text in enumerate(texts):
            for token in _TOKEN.findall(text.lower()):
                index, sign = self._token_slot(token)
                out[row, index] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out


class FixedVectorProvider:
    """Test provider that returns vectors looked up from a fixture mapping."""

    def __init__(self, vectors: dict[str, Sequence[float]]):
        if not vectors:
            raise ValueError("fixture mapping is empty")
        dims = {len(v) for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError("fixture vectors must share one dimension")
        self.dimension = dims.pop()
        self._vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}

    @classmethod
    def from_json(cls, path) -> "FixedVectorProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        rows = []
        for text in texts:
            if text not in self._vectors:
                raise ValueError(f"no fixture vector for text: {text!r}")
            rows.append(self._vectors[text])
        return np.stack(rows) if rows else np.zeros((0, self.dimension))
