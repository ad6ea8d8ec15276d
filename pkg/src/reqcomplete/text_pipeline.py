"""Tokenization, sentence splitting, POS tagging and lemmatization.

Two interchangeable pipelines are provided:

* :class:`SpacyPipeline` wraps an installed spaCy model (``en_core_web_sm`` by
  default).
* :class:`RuleBasedPipeline` needs no model download.  It tags words with the
  lemminflect lexicon plus closed-class word lists and a handful of local
  context rules, which is enough to find the nouns and verbs of requirement
  statements.

:func:`load_pipeline` picks spaCy when a model is installed and falls back to
the rule-based pipeline otherwise.
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Protocol, Sequence

from .exceptions import EmptyDocument

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "OTHER")
MASKABLE_POS = frozenset({"NOUN", "VERB"})


def is_word(text: str) -> bool:
    """Letters and no digits: punctuation, numbers and labels like "R12" are not words."""
    return any(c.isalpha() for c in text) and not any(c.isdigit() for c in text)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str
    char_offset: int

    def __post_init__(self):
        if self.pos not in POS_TAGS:
            raise ValueError(f"unknown POS tag {self.pos!r}")
        if self.char_offset < 0:
            raise ValueError("char_offset must be >= 0")
        if is_word(self.surface) and not self.lemma:
            raise ValueError(f"word token {self.surface!r} has an empty lemma")

    @property
    def is_word(self) -> bool:
        return is_word(self.surface)


Sentence = tuple  # tuple[Token, ...]


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    sentences: tuple
    source_text: str

    def __post_init__(self):
        for sent in self.sentences:
            if not sent:
                raise ValueError("sentences must contain at least one token")
            offsets = [t.char_offset for t in sent]
            if any(b <= a for a, b in zip(offsets, offsets[1:])):
                raise ValueError("token offsets must be strictly increasing within a sentence")

    def __len__(self) -> int:
        return len(self.sentences)

    def tokens(self) -> Iterator[Token]:
        for sent in self.sentences:
            yield from sent

    def sentence_text(self, index: int) -> str:
        sent = self.sentences[index]
        start = sent[0].char_offset
        end = sent[-1].char_offset + len(sent[-1].surface)
        return self.source_text[start:end]

    def detokenize(self) -> str:
        # blank lines are always a sentence boundary for both pipelines
        return "\n\n".join(self.sentence_text(i) for i in range(len(self.sentences)))

    def subset(self, indices: Iterable[int], doc_id: str | None = None) -> "AnnotatedDocument":
        """Build a self-contained document from a selection of sentences.

        Sentences keep their annotations and their original relative order;
        only the source text and token offsets are rebuilt.
        """
        chosen = sorted(set(indices))
        parts, sentences, cursor = [], [], 0
        for i in chosen:
            text = self.sentence_text(i)
            base = self.sentences[i][0].char_offset
            sentences.append(tuple(
                Token(t.surface, t.lemma, t.pos, t.char_offset - base + cursor)
                for t in self.sentences[i]
            ))
            parts.append(text)
            cursor += len(text) + 2
        return AnnotatedDocument(doc_id or self.doc_id, tuple(sentences), "\n\n".join(parts))


# ---------------------------------------------------------------------------
# word lists


def _read_wordlist(path) -> frozenset:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                words.add(line)
    return frozenset(words)


def data_path(name: str) -> Path:
    return Path(str(resources.files("reqcomplete") / "data" / name))


@dataclass(frozen=True)
class Wordlists:
    """Common English words and requirement vague/stop words, as lemmas."""

    common_250: frozenset
    vague_stop: frozenset
    combined: frozenset = field(init=False)

    def __post_init__(self):
        if not self.common_250 or not self.vague_stop:
            raise ValueError("word lists must be non-empty")
        object.__setattr__(self, "common_250", frozenset(w.lower() for w in self.common_250))
        object.__setattr__(self, "vague_stop", frozenset(w.lower() for w in self.vague_stop))
        object.__setattr__(self, "combined", self.common_250 | self.vague_stop)

    @classmethod
    def from_files(cls, common_path=None, vague_paths=None) -> "Wordlists":
        common_path = common_path or data_path("common_250.txt")
        vague_paths = vague_paths or [data_path("vague_stop.txt")]
        vague = frozenset().union(*(_read_wordlist(p) for p in vague_paths))
        return cls(_read_wordlist(common_path), vague)

    @classmethod
    def default(cls) -> "Wordlists":
        return cls.from_files()


# ---------------------------------------------------------------------------
# term sets


def term_set(doc_or_tokens) -> frozenset:
    """Deduplicated lower-case lemmas of every word token."""
    tokens = doc_or_tokens.tokens() if isinstance(doc_or_tokens, AnnotatedDocument) else doc_or_tokens
    return frozenset(t.lemma.lower() for t in tokens if t.is_word)


def novel_terms(withheld, disclosed, wordlists: Wordlists) -> frozenset:
    return (frozenset(withheld) - frozenset(disclosed)) - wordlists.combined


# ---------------------------------------------------------------------------
# pipelines


class Pipeline(Protocol):
    name: str

    def parse(self, text: str, doc_id: str = "doc") -> AnnotatedDocument: ...

    def annotate_words(self, words: Sequence[str]) -> tuple: ...

    def lemmatize(self, word: str) -> str: ...


_TOKEN_RE = re.compile(
    r"\w+(?:[-.]\w+)*(?=['’][sS]\b)"  # stem of a possessive
    r"|['’][sS]\b"
    r"|\w+(?:[-'’.]\w+)*"
    r"|[^\w\s]"
)
_TERMINAL = {".", "!", "?"}
_CLOSERS = {")", "]", '"', "'", "”", "’"}
_BULLETS = {"-", "*", "•", "–", "(", "["}
_ABBREVIATIONS = {
    "e.g", "i.e", "etc", "vs", "cf", "al", "fig", "no", "nr", "mr", "mrs", "ms", "dr",
    "prof", "approx", "min", "max", "sec", "incl", "dept", "resp", "st", "jr", "sr",
}

DETERMINERS = {
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "any", "all", "some",
    "no", "another", "such", "both", "either", "neither", "its", "their", "his", "her", "our",
    "your", "my", "whose", "which", "what", "several", "many", "few", "more", "most", "much",
    "other", "same",
}
PRONOUNS = {
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "itself",
    "themselves", "himself", "herself", "ourselves", "yourself", "who", "whom", "someone",
    "anyone", "everyone", "something", "anything", "everything", "nothing", "none", "one",
    "there", "mine", "yours", "ours", "theirs",
}
PREPOSITIONS = {
    "of", "in", "on", "at", "by", "for", "with", "from", "into", "onto", "upon", "about",
    "above", "below", "under", "over", "between", "among", "through", "during", "before",
    "after", "within", "without", "against", "across", "along", "around", "toward",
    "towards", "via", "per", "until", "since", "like", "unlike", "beyond", "behind", "inside",
    "outside", "throughout", "except", "than", "as",
}
CONJUNCTIONS = {
    "and", "or", "but", "nor", "so", "yet", "if", "whether", "because", "although", "though",
    "while", "when", "where", "whereas", "unless", "once", "then", "thus", "hence",
}
MODALS = {"shall", "will", "must", "should", "may", "can", "could", "would", "might", "cannot"}
BE_FORMS = {"be", "is", "are", "was", "were", "been", "being", "am", "'s"}
HAVE_FORMS = {"have", "has", "had", "having"}
DO_FORMS = {"do", "does", "did"}
_AUX_LEMMA = {**{w: "be" for w in BE_FORMS}, **{w: "have" for w in HAVE_FORMS}, **{w: "do" for w in DO_FORMS}}
_CLOSED = DETERMINERS | PRONOUNS | PREPOSITIONS | CONJUNCTIONS | MODALS | _ABBREVIATIONS | {"to", "not", "n't"}

_SUFFIX_POS = (
    (("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism", "ist", "er", "or", "age"), "NOUN"),
    (("ize", "ise", "ify", "ate"), "VERB"),
    (("ly",), "ADV"),
    (("ous", "ful", "able", "ible", "ive", "al", "ic", "less", "ary"), "ADJ"),
)


def _suffix_guess(word: str) -> str:
    for suffixes, pos in _SUFFIX_POS:
        if len(word) > 4 and word.endswith(suffixes):
            return pos
    return "NOUN"


def _is_label(word: str) -> bool:
    """Identifiers mixing letters and digits ("R1", "FR-12")."""
    return any(c.isdigit() for c in word) and any(c.isalpha() for c in word)


class RuleBasedPipeline:
    """Model-free tokenizer, sentence splitter, tagger and lemmatizer."""

    name = "rules"

    def __init__(self):
        import lemminflect

        self._lex = lemminflect

    # -- tokenization -----------------------------------------------------
    @staticmethod
    def _tokenize(text: str) -> list:
        return [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]

    @staticmethod
    def _split(text: str, toks: list) -> list:
        sentences, current = [], []
        for i, (surface, start) in enumerate(toks):
            current.append((surface, start))
            if i + 1 == len(toks):
                break
            nxt, nstart = toks[i + 1]
            gap = text[start + len(surface):nstart]
            boundary = False
            if re.search(r"\n[ \t]*\n", gap):
                boundary = True
            elif surface in _TERMINAL or (surface in _CLOSERS and len(current) > 1 and current[-2][0] in _TERMINAL):
                prev = current[-2][0].lower() if len(current) > 1 else ""
                abbreviation = surface == "." and prev in _ABBREVIATIONS
                # requirement labels such as "R1." or "FR-2." open a sentence rather than end one
                abbreviation = abbreviation or (surface == "." and len(current) == 2 and _is_label(current[0][0]))
                if not abbreviation and (nxt[:1].isupper() or nxt[:1].isdigit() or nxt in _BULLETS or "\n" in gap):
                    boundary = gap != "" or nxt in _BULLETS
            elif "\n" in gap and (surface in {":", ";"} or nxt[:1].isupper() or nxt[:1].isdigit() or nxt in _BULLETS):
                boundary = True
            if boundary:
                sentences.append(current)
                current = []
        if current:
            sentences.append(current)
        return sentences

    # -- tagging ----------------------------------------------------------
    def _candidates(self, word: str) -> dict:
        lemmas = self._lex.getAllLemmas(word) or self._lex.getAllLemmas(word.lower())
        out = {}
        for upos, forms in lemmas.items():
            pos = {"NOUN": "NOUN", "PROPN": "NOUN", "VERB": "VERB", "ADJ": "ADJ", "ADV": "ADV"}.get(upos)
            if pos and pos not in out:
                out[pos] = forms[0].lower()
        return out

    def _tag(self, words: Sequence[str]) -> list:
        tags = []
        for i, word in enumerate(words):
            low = word.lower()
            prev = words[i - 1].lower() if i else ""
            prev_tag = tags[i - 1] if i else None
            nxt = words[i + 1].lower() if i + 1 < len(words) else ""
            if not is_word(word) or low in _CLOSED:
                tags.append(("ADV", low) if low in {"not", "n't"} else ("OTHER", low))
                continue
            if low in BE_FORMS:
                tags.append(("OTHER", "be"))
                continue
            if low in HAVE_FORMS or low in DO_FORMS:
                aux = nxt in {"not", "n't"} or nxt.endswith(("ed", "en")) or prev in MODALS
                tags.append(("OTHER" if aux else "VERB", _AUX_LEMMA[low]))
                continue
            cands = self._candidates(word)
            if not cands:
                if i and word[:1].isupper():
                    pos = "NOUN"
                else:
                    pos = _suffix_guess(low)
                tags.append((pos, self._lemma(low, pos)))
                continue
            coord = tags[i - 2][0] if i >= 2 and prev in {"and", "or"} else None
            pos = self._choose(low, cands, prev, prev_tag, nxt, coord)
            tags.append((pos, cands.get(pos) or self._lemma(low, pos)))
        return tags

    @staticmethod
    def _choose(low, cands, prev, prev_tag, nxt, coord=None) -> str:
        prev_pos = prev_tag[0] if prev_tag else None
        if set(cands) == {"VERB"} and low.endswith("s") and (
            prev in DETERMINERS | PREPOSITIONS or prev_pos in {"ADJ", "VERB"}
        ):
            # plural nouns missing from the lexicon ("the logs", "stores logs")
            return "NOUN"
        if coord in cands and len(cands) > 1:
            # "X and Y" usually joins words of one class
            return coord
        if len(cands) == 1:
            return next(iter(cands))
        if "VERB" in cands:
            if prev in MODALS or prev == "to" or (prev in {"not", "n't"}):
                return "VERB"
            if prev in BE_FORMS | HAVE_FORMS and low.endswith(("ing", "ed", "en")):
                return "VERB"
            if prev in PRONOUNS and prev not in {"one", "there"}:
                return "VERB"
        if prev in DETERMINERS or prev in PREPOSITIONS or prev_pos == "ADJ":
            for pos in ("NOUN", "ADJ"):
                if pos in cands:
                    return pos
        if "ADJ" in cands and nxt in {"and", "or", ","} and prev_pos in {None, "OTHER", "ADJ"}:
            # coordinated attributes ("secure, fast and reliable")
            return "ADJ"
        if (
            "VERB" in cands and prev_pos == "NOUN" and low.endswith("s") and is_word(nxt)
            and nxt not in BE_FORMS | HAVE_FORMS | MODALS | CONJUNCTIONS | PREPOSITIONS
        ):
            return "VERB"
        if low.endswith("ly") and "ADV" in cands:
            return "ADV"
        if "VERB" in cands and low.endswith("ing") and prev_pos != "OTHER":
            return "VERB"
        if "ADJ" in cands and nxt and prev_pos in {None, "OTHER"} and "NOUN" in cands and nxt not in _CLOSED:
            return "ADJ"
        for pos in ("NOUN", "VERB", "ADJ", "ADV"):
            if pos in cands:
                return pos
        return "OTHER"

    def _lemma(self, low: str, pos: str) -> str:
        if pos in {"NOUN", "VERB", "ADJ", "ADV"}:
            lemmas = self._lex.getLemma(low, upos=pos, lemmatize_oov=True)
            if lemmas:
                return lemmas[0].lower()
        return low

    # -- public API -------------------------------------------------------
    def parse(self, text: str, doc_id: str = "doc") -> AnnotatedDocument:
        if not text.strip():
            raise EmptyDocument(f"{doc_id}: document is empty")
        toks = self._tokenize(text)
        sentences = []
        for chunk in self._split(text, toks):
            words = [s for s, _ in chunk]
            tagged = self._tag(words)
            sentences.append(tuple(
                Token(s, lemma or s.lower(), pos, off) for (s, off), (pos, lemma) in zip(chunk, tagged)
            ))
        if not sentences:
            raise EmptyDocument(f"{doc_id}: no sentence found")
        return AnnotatedDocument(doc_id, tuple(sentences), text)

    @functools.lru_cache(maxsize=65536)
    def _annotate_cached(self, words: tuple) -> tuple:
        tagged = self._tag(list(words))
        out, offset = [], 0
        for w, (pos, lemma) in zip(words, tagged):
            out.append(Token(w, lemma or w.lower(), pos, offset))
            offset += len(w) + 1
        return tuple(out)

    def annotate_words(self, words: Sequence[str]) -> tuple:
        """Tag an already tokenized sentence; returns one token per word."""
        return self._annotate_cached(tuple(words))

    def lemmatize(self, word: str) -> str:
        return self.annotate_words([word])[0].lemma


_SPACY_POS = {"NOUN": "NOUN", "PROPN": "NOUN", "VERB": "VERB", "ADJ": "ADJ", "ADV": "ADV"}


class SpacyPipeline:
    """Pipeline backed by an installed spaCy model."""

    def __init__(self, model: str = "en_core_web_sm"):
        import spacy

        self.nlp = spacy.load(model, disable=["ner"])
        self.name = f"spacy:{model}"

    def _token(self, tok, offset=None) -> Token:
        lemma = (tok.lemma_ or tok.text).lower()
        return Token(tok.text, lemma, _SPACY_POS.get(tok.pos_, "OTHER"), tok.idx if offset is None else offset)

    def parse(self, text: str, doc_id: str = "doc") -> AnnotatedDocument:
        if not text.strip():
            raise EmptyDocument(f"{doc_id}: document is empty")
        doc = self.nlp(text)
        sentences = []
        for sent in doc.sents:
            toks = tuple(self._token(t) for t in sent if not t.is_space)
            if toks:
                sentences.append(toks)
        if not sentences:
            raise EmptyDocument(f"{doc_id}: no sentence found")
        return AnnotatedDocument(doc_id, tuple(sentences), text)

    @functools.lru_cache(maxsize=65536)
    def _annotate_cached(self, words: tuple) -> tuple:
        from spacy.tokens import Doc

        doc = Doc(self.nlp.vocab, words=list(words))
        for _, proc in self.nlp.pipeline:
            doc = proc(doc)
        return tuple(self._token(t) for t in doc)

    def annotate_words(self, words: Sequence[str]) -> tuple:
        return self._annotate_cached(tuple(words))

    def lemmatize(self, word: str) -> str:
        return self.annotate_words([word])[0].lemma


def load_pipeline(name: str = "auto") -> Pipeline:
    """Return a pipeline by name: ``auto``, ``rules`` or ``spacy[:model]``."""
    if name == "rules":
        return RuleBasedPipeline()
    if name.startswith("spacy"):
        _, _, model = name.partition(":")
        return SpacyPipeline(model or "en_core_web_sm")
    if name == "auto":
        try:
            return SpacyPipeline()
        except (ImportError, OSError):
            return RuleBasedPipeline()
    raise ValueError(f"unknown pipeline {name!r}")


def parse_document(text: str, doc_id: str = "doc", pipeline: Pipeline | None = None) -> AnnotatedDocument:
    return (pipeline or default_pipeline()).parse(text, doc_id)


@functools.lru_cache(maxsize=1)
def default_pipeline() -> Pipeline:
    return load_pipeline("auto")
