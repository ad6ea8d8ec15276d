"""Masked-language-model backends returning scored whole-word fill-ins."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .exceptions import BackendUnavailable, ModelNotFound, QueryTooLong
from .text_pipeline import _read_wordlist, data_path

DEFAULT_K = 15
REFERENCE_MODEL = "bert-base-cased"
MASK = "[MASK]"


@dataclass(frozen=True)
class MaskedQuery:
    tokens: tuple
    mask_index: int
    k: int = DEFAULT_K

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not 0 <= self.mask_index < len(self.tokens):
            raise ValueError(f"mask_index {self.mask_index} outside 0..{len(self.tokens) - 1}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def masked_tokens(self, mask_token: str = MASK) -> list:
        words = list(self.tokens)
        words[self.mask_index] = mask_token
        return words


@dataclass(frozen=True)
class ScoredPrediction:
    term: str
    confidence: float

    def __post_init__(self):
        if not self.term:
            raise ValueError("empty prediction term")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


class Backend(Protocol):
    name: str
    context_window: int

    def predict(self, query: MaskedQuery) -> list: ...


class StubBackend:
    """Offline deterministic stand-in for a masked language model.

    Every query is hashed together with the seed to draw a fixed score for
    each vocabulary word; the top-k words are returned with their softmax
    probabilities.  The masked word itself never influences the draw.
    """

    context_window = 512

    def __init__(self, seed: int = 0, vocabulary: Sequence[str] | None = None):
        if vocabulary is None:
            vocabulary = sorted(_read_wordlist(data_path("stub_vocab.txt")))
        self.vocabulary = tuple(vocabulary)
        if not self.vocabulary:
            raise ValueError("stub vocabulary is empty")
        self.seed = seed
        self.name = f"stub:seed={seed}"

    def _scores(self, query: MaskedQuery) -> np.ndarray:
        key = "\x1f".join([str(self.seed), str(query.mask_index), *query.masked_tokens()])
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        logits = rng.gumbel(size=len(self.vocabulary)) * 2.0
        probs = np.exp(logits - logits.max())
        return probs / probs.sum()

    def predict(self, query: MaskedQuery) -> list:
        if len(query.tokens) > self.context_window:
            raise QueryTooLong(len(query.tokens), self.context_window)
        probs = self._scores(query)
        order = np.lexsort((np.arange(len(probs)), -probs))
        return [ScoredPrediction(self.vocabulary[i], float(probs[i])) for i in order[: query.k]]


def _is_whole_word(piece: str) -> bool:
    return not piece.startswith("##") and any(c.isalpha() for c in piece)


class HuggingFaceBackend:
    """Fill-mask backend over a locally available WordPiece (BERT-style) checkpoint.

    ``##`` continuation pieces and tokens without letters are skipped so the
    result always holds whole words.
    """

    def __init__(self, model: str = REFERENCE_MODEL, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModelForMaskedLM, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - depends on environment
            raise BackendUnavailable(f"transformers/torch not importable: {exc}") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model, local_files_only=True)
            self.model = AutoModelForMaskedLM.from_pretrained(model, local_files_only=True)
        except (OSError, ValueError) as exc:
            raise ModelNotFound(
                f"masked language model {model!r} is not available locally; "
                "download it into the Hugging Face cache or pass a directory path"
            ) from exc
        self._torch = torch
        self.model.to(device).eval()
        self.device = device
        self.name = f"hf:{model}"
        limit = self.tokenizer.model_max_length
        if not limit or limit > 100_000:
            limit = getattr(self.model.config, "max_position_embeddings", 512)
        self.context_window = int(limit)
        vocab = self.tokenizer.convert_ids_to_tokens(list(range(len(self.tokenizer))))
        special = set(self.tokenizer.all_special_ids)
        self._word_ids = np.array(
            [i not in special and _is_whole_word(p) for i, p in enumerate(vocab)]
        )
        self._vocab = vocab

    def predict(self, query: MaskedQuery) -> list:
        torch = self._torch
        text = " ".join(query.masked_tokens(self.tokenizer.mask_token))
        enc = self.tokenizer(text, return_tensors="pt")
        n = enc["input_ids"].shape[1]
        if n > self.context_window:
            raise QueryTooLong(n, self.context_window)
        enc = {k: v.to(self.device) for k, v in enc.items()}
        with torch.no_grad():
            logits = self.model(**enc).logits[0]
        position = int((enc["input_ids"][0] == self.tokenizer.mask_token_id).nonzero()[0])
        probs = torch.softmax(logits[position].double(), dim=-1).cpu().numpy()
        order = np.lexsort((np.arange(len(probs)), -probs))
        out = []
        for idx in order:
            if idx < len(self._word_ids) and self._word_ids[idx]:
                out.append(ScoredPrediction(self._vocab[idx], float(probs[idx])))
                if len(out) == query.k:
                    break
        return out


def load_backend(spec: str = "stub"):
    """Create a backend from a spec string.

    ``stub`` or ``stub:seed=N`` gives the offline stub; ``hf:<model>`` (or a
    bare model id / directory) loads a local transformers checkpoint.
    """
    if spec == "stub" or spec.startswith("stub:"):
        seed = 0
        for option in spec.partition(":")[2].split(","):
            name, _, value = option.partition("=")
            if name == "seed":
                seed = int(value)
            elif name:
                raise ValueError(f"unknown stub option {name!r}")
        return StubBackend(seed=seed)
    model = spec[3:] if spec.startswith("hf:") else spec
    if not model:
        raise ModelNotFound("empty model identifier")
    if not spec.startswith("hf:") and not Path(model).exists() and model != REFERENCE_MODEL:
        raise ModelNotFound(f"unknown backend {spec!r}")
    return HuggingFaceBackend(model)


def predict_masked(backend, query: MaskedQuery) -> list:
    return backend.predict(query)
