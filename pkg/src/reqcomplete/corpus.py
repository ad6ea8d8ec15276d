"""Depth-0 Wikipedia domain corpus and its frequency / TF-IDF statistics."""
from __future__ import annotations

import bisect
import hashlib
import json
import logging
import os
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Protocol

import numpy as np

from .exceptions import EmptyCorpus, NetworkUnavailable, NoArticlesFound
from .text_pipeline import AnnotatedDocument, Wordlists, default_pipeline

logger = logging.getLogger(__name__)

WIKIPEDIA_API = "https://en.wikipedia.org/w/api.php"
UNSEEN_DECILE = 9


# ---------------------------------------------------------------------------
# key phrases


def extract_keyphrases(doc: AnnotatedDocument, wordlists: Wordlists | None = None, limit: int | None = None) -> list:
    """Noun phrases (adjective/noun runs ending in a noun) and their head nouns.

    Phrases are lemmatized, lower-cased, stripped of common and vague words,
    and ranked by frequency; ties keep first-occurrence order.
    """
    wordlists = wordlists or Wordlists.default()
    stop = wordlists.combined
    counts, first_seen = Counter(), {}

    def add(phrase):
        counts[phrase] += 1
        first_seen.setdefault(phrase, len(first_seen))

    for sent in doc.sentences:
        run = []
        for tok in (*sent, None):
            if tok is not None and tok.pos in {"ADJ", "NOUN"} and tok.is_word and tok.lemma not in stop:
                run.append(tok)
                continue
            while run and run[-1].pos != "NOUN":
                run.pop()
            while run and run[0].pos != "NOUN" and len(run) > 1 and run[0].lemma in stop:
                run.pop(0)
            if run:
                if len(run) > 1:
                    add(" ".join(t.lemma for t in run))
                for t in run:
                    if t.pos == "NOUN":
                        add(t.lemma)
            run = []
    ranked = sorted(counts, key=lambda p: (-counts[p], first_seen[p]))
    return ranked[:limit] if limit else ranked


# ---------------------------------------------------------------------------
# fetching and caching


@dataclass(frozen=True)
class Article:
    title: str
    body: str
    fetched_at: str = ""


class Fetcher(Protocol):
    def fetch(self, phrase: str) -> Article | None: ...


class WikipediaFetcher:
    """Direct title lookup through the MediaWiki API, plain-text extracts only."""

    def __init__(self, endpoint: str = WIKIPEDIA_API, min_interval: float = 0.2, timeout: float = 20.0,
                 user_agent: str = "reqcomplete/0.1 (requirements completeness research)"):
        import requests

        self.endpoint = endpoint
        self.min_interval = min_interval
        self.timeout = timeout
        self.session = requests.Session()
        self.session.headers["User-Agent"] = user_agent
        self._lock = threading.Lock()
        self._last = 0.0

    def _throttle(self):
        with self._lock:
            wait = self._last + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last = time.monotonic()

    def fetch(self, phrase: str) -> Article | None:
        import requests

        self._throttle()
        params = {
            "action": "query", "format": "json", "prop": "extracts", "explaintext": 1,
            "redirects": 1, "titles": phrase,
        }
        try:
            resp = self.session.get(self.endpoint, params=params, timeout=self.timeout)
            resp.raise_for_status()
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise NetworkUnavailable(str(exc)) from exc
        for page in resp.json().get("query", {}).get("pages", {}).values():
            if "missing" in page or "invalid" in page:
                continue
            body = (page.get("extract") or "").strip()
            if body:
                return Article(page["title"], body, _now())
        return None


class DirectoryFetcher:
    """Offline fetcher over a directory of ``<Title>.txt`` files.

    A phrase matches a file when both normalize to the same lower-case
    words (underscores and hyphens count as spaces).
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self._index = {}
        for path in sorted(self.directory.glob("*.txt")):
            self._index.setdefault(self._normalize(path.stem), path)

    @staticmethod
    def _normalize(text: str) -> str:
        return " ".join(text.replace("_", " ").replace("-", " ").lower().split())

    def fetch(self, phrase: str) -> Article | None:
        path = self._index.get(self._normalize(phrase))
        if path is None:
            return None
        body = path.read_text("utf-8").strip()
        return Article(path.stem.replace("_", " "), body, "local") if body else None


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


class ArticleCache:
    """One UTF-8 text file per article plus a ``manifest.json`` index.

    The manifest maps each looked-up phrase to its article file, or to
    ``null`` when no article exists, so misses are not re-fetched either.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.directory / "manifest.json"
        self._lock = threading.Lock()
        self.manifest = json.loads(self.manifest_path.read_text("utf-8")) if self.manifest_path.exists() else {}

    @staticmethod
    def key(phrase: str) -> str:
        return hashlib.sha1(phrase.strip().lower().encode("utf-8")).hexdigest()

    def __contains__(self, phrase: str) -> bool:
        return self.key(phrase) in self.manifest

    def get(self, phrase: str) -> Article | None:
        entry = self.manifest[self.key(phrase)]
        if entry is None:
            return None
        body = (self.directory / entry["file"]).read_text("utf-8")
        return Article(entry["title"], body, entry["fetched_at"])

    def put(self, phrase: str, article: Article | None):
        key = self.key(phrase)
        with self._lock:
            if article is None:
                self.manifest[key] = None
            else:
                fname = f"{key}.txt"
                (self.directory / fname).write_text(article.body, "utf-8")
                self.manifest[key] = {
                    "phrase": phrase, "title": article.title, "file": fname, "fetched_at": article.fetched_at,
                }
            tmp = self.manifest_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self.manifest, indent=1, sort_keys=True), "utf-8")
            os.replace(tmp, self.manifest_path)


@dataclass(frozen=True)
class DomainCorpus:
    articles: tuple  # of (title, body)
    source_doc_id: str
    fetched_at: str

    def __post_init__(self):
        titles = [t for t, _ in self.articles]
        if len(set(titles)) != len(titles):
            raise ValueError("article titles must be unique")
        if any(not body.strip() for _, body in self.articles):
            raise ValueError("article bodies must be non-empty")

    def to_json(self) -> str:
        return json.dumps(
            {"source_doc_id": self.source_doc_id, "fetched_at": self.fetched_at,
             "articles": [{"title": t, "body": b} for t, b in self.articles]},
            ensure_ascii=False, indent=1,
        )


def build_corpus(phrases: Iterable[str], fetcher: Fetcher | None = None, cache: ArticleCache | None = None,
                 depth: int = 0, workers: int = 4, source_doc_id: str = "") -> DomainCorpus:
    """Collect one directly matching article per phrase.

    Cached phrases never touch the network.  A :class:`NetworkUnavailable`
    from the fetcher switches the build to cache-only mode.
    """
    if depth != 0:
        raise ValueError("only depth=0 (direct article matches) is supported")
    phrases = list(dict.fromkeys(p.strip() for p in phrases if p.strip()))
    results = {}
    missing = []
    for phrase in phrases:
        if cache is not None and phrase in cache:
            results[phrase] = cache.get(phrase)
        else:
            missing.append(phrase)

    offline = threading.Event()
    if fetcher is None:
        offline.set()

    def lookup(phrase):
        if offline.is_set():
            return phrase, None, False
        try:
            return phrase, fetcher.fetch(phrase), True
        except NetworkUnavailable as exc:
            if not offline.is_set():
                logger.warning("network unavailable (%s); continuing from cache only", exc)
            offline.set()
            return phrase, None, False

    if missing:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            for phrase, article, ok in pool.map(lookup, missing):
                if ok:
                    results[phrase] = article
                    if cache is not None:
                        cache.put(phrase, article)

    articles, seen = [], set()
    stamps = []
    for phrase in phrases:
        art = results.get(phrase)
        if art is None or art.title in seen or not art.body.strip():
            continue
        seen.add(art.title)
        articles.append((art.title, art.body))
        stamps.append(art.fetched_at)
    if not articles:
        raise NoArticlesFound(f"no Wikipedia article matched any of {len(phrases)} phrases")
    return DomainCorpus(tuple(articles), source_doc_id, max(stamps) if stamps else "")


# ---------------------------------------------------------------------------
# statistics


def frequency_deciles(counts: Mapping[str, int]) -> dict:
    """Map each key to 0 (top ten percent by frequency) .. 9 (bottom ten percent).

    A key's position is the number of distinct keys strictly more frequent
    than it, so ties always share a bin.
    """
    n = len(counts)
    if n == 0:
        return {}
    ascending = sorted(counts.values())
    out = {}
    for key, c in counts.items():
        above = n - bisect.bisect_right(ascending, c)
        out[key] = min(9, (10 * above) // n)
    return out


@dataclass
class CorpusStats:
    lemma_freq: dict
    freq_deciles: dict
    vocabulary: dict  # lemma -> column
    titles: tuple
    matrix: object = field(repr=False)  # (n_articles, n_lemmas) sparse, rows L2-normalized
    tfidf_mode: str = "score"

    @classmethod
    def empty(cls, tfidf_mode: str = "score") -> "CorpusStats":
        """Statistics of a corpus with no articles: every lemma is unseen."""
        from scipy.sparse import csc_matrix

        return cls({}, {}, {}, (), csc_matrix((0, 0)), tfidf_mode)

    def decile(self, lemma: str) -> int:
        return self.freq_deciles.get(lemma, UNSEEN_DECILE)

    def tfidf(self, lemma: str, article: int) -> float:
        col = self.vocabulary.get(lemma)
        return 0.0 if col is None else float(self.matrix[article, col])

    def _column(self, lemma: str) -> np.ndarray | None:
        col = self.vocabulary.get(lemma)
        if col is None:
            return None
        if self.tfidf_mode == "rank":
            return self._rank_column(col)
        return self.matrix[:, col].toarray().ravel()

    def _rank_column(self, col: int) -> np.ndarray:
        # within-article rank mapped to (0, 1]: the top term of an article scores 1
        csr = self.matrix.tocsr()
        out = np.zeros(csr.shape[0])
        for r in range(csr.shape[0]):
            start, end = csr.indptr[r], csr.indptr[r + 1]
            cols, data = csr.indices[start:end], csr.data[start:end]
            hit = np.flatnonzero(cols == col)
            if hit.size:
                out[r] = 1.0 - np.sum(data > data[hit[0]]) / len(data)
        return out

    def tfidf_mean(self, lemma: str) -> float:
        values = self._column(lemma)
        return 0.0 if values is None else float(values.mean())

    def tfidf_max(self, lemma: str) -> float:
        values = self._column(lemma)
        return 0.0 if values is None else float(values.max())

    def article_norms(self) -> np.ndarray:
        m = self.matrix
        return np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())


def compute_stats(corpus: DomainCorpus, pipeline=None, tfidf_mode: str = "score") -> CorpusStats:
    """Lemma frequencies, frequency deciles and per-article normalized TF-IDF."""
    from sklearn.feature_extraction.text import TfidfVectorizer

    if not corpus.articles:
        raise EmptyCorpus("corpus has no articles")
    if tfidf_mode not in {"score", "rank"}:
        raise ValueError("tfidf_mode must be 'score' or 'rank'")
    pipeline = pipeline or default_pipeline()
    lemma_lists = []
    for i, (title, body) in enumerate(corpus.articles):
        doc = pipeline.parse(body, doc_id=title)
        lemma_lists.append([t.lemma.lower() for t in doc.tokens() if t.is_word])
    freq = Counter(lemma for lemmas in lemma_lists for lemma in lemmas)
    if not freq:
        raise EmptyCorpus("corpus contains no words")
    vectorizer = TfidfVectorizer(analyzer=lambda lemmas: lemmas, lowercase=False, smooth_idf=True, norm="l2")
    matrix = vectorizer.fit_transform(lemma_lists).tocsc()
    vocabulary = {lemma: int(col) for lemma, col in vectorizer.vocabulary_.items()}
    return CorpusStats(
        lemma_freq=dict(freq),
        freq_deciles=frequency_deciles(freq),
        vocabulary=vocabulary,
        titles=tuple(t for t, _ in corpus.articles),
        matrix=matrix,
        tfidf_mode=tfidf_mode,
    )
