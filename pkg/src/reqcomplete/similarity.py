"""Static word embeddings, cosine similarity, edit distance and term matching."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

DEFAULT_MATCH_THRESHOLD = 0.85


class EmbeddingStore:
    """Lower-cased lookup table from token to a dense vector.

    Parameters
    ----------
    vectors : mapping of str to array-like
        All vectors must share one dimension.
    """

    def __init__(self, vectors: Mapping[str, object] | None = None, dimension: int | None = None):
        self.vectors = {}
        for word, vec in (vectors or {}).items():
            arr = np.asarray(vec, dtype=np.float64)
            if dimension is None:
                dimension = arr.shape[0]
            if arr.shape != (dimension,):
                raise ValueError(f"vector for {word!r} has shape {arr.shape}, expected ({dimension},)")
            self.vectors.setdefault(word.lower(), arr)
        self.dimension = dimension or 0
        self.source_hash = None
        self._norms = {}

    @classmethod
    def load(cls, path) -> "EmbeddingStore":
        """Read a GloVe-style text file: ``token v1 v2 ... vd`` per line."""
        digest = hashlib.sha256()
        vectors, dimension = {}, None
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, 1):
                digest.update(raw)
                parts = raw.decode("utf-8").rstrip().split(" ")
                if len(parts) < 2:
                    continue
                word, values = parts[0], parts[1:]
                if dimension is None:
                    dimension = len(values)
                elif len(values) != dimension:
                    raise ValueError(f"{path}:{lineno}: expected {dimension} values, got {len(values)}")
                # the first occurrence wins, as with cased entries collapsing to one key
                vectors.setdefault(word.lower(), np.array(values, dtype=np.float64))
        store = cls(vectors, dimension)
        store.source_hash = digest.hexdigest()
        return store

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, word: str):
        return self.vectors.get(word.lower())

    def norm(self, word: str) -> float:
        key = word.lower()
        value = self._norms.get(key)
        if value is None:
            value = self._norms[key] = float(np.linalg.norm(self.vectors[key]))
        return value


def cosine(store: EmbeddingStore, a: str, b: str) -> float | None:
    """Cosine similarity of two terms, ``None`` when either is out of vocabulary."""
    va, vb = store.get(a), store.get(b)
    if va is None or vb is None:
        return None
    na, nb = store.norm(a), store.norm(b)
    if na == 0.0 or nb == 0.0:
        return None
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character insertions, deletions and substitutions."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class Matcher:
    """Decides whether two lemmas denote the same term.

    Equal lemmas always match. Otherwise the embedding cosine must reach
    ``threshold``; out-of-vocabulary pairs fall back to lemma equality.
    """

    store: EmbeddingStore
    threshold: float = DEFAULT_MATCH_THRESHOLD

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")

    def cosine(self, a: str, b: str) -> float | None:
        return cosine(self.store, a, b)

    def __call__(self, a: str, b: str) -> bool:
        return terms_match(self, a, b)


def terms_match(matcher: Matcher, a: str, b: str) -> bool:
    if a.lower() == b.lower():
        return True
    sim = matcher.cosine(a, b)
    return sim is not None and sim >= matcher.threshold


def exact_matcher() -> Matcher:
    return Matcher(EmbeddingStore())
