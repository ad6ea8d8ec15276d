"""Command-line entry point: ``reqcomplete <command> [options]``.

Every command reads an optional YAML/JSON config file, applies flag
overrides on top, and writes its outputs together with ``config.json`` (the
effective configuration) and ``provenance.json`` into the output directory.
Passing that ``config.json`` back with ``--config`` reproduces the run.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import click
import yaml

from . import __version__
from .corpus import ArticleCache, DirectoryFetcher, WikipediaFetcher, build_corpus, extract_keyphrases
from .evaluation import (
    EXPI_KS,
    Resources,
    analyze_disclosed,
    box_plots,
    build_training_set,
    compare_algorithms,
    pairwise_k_tests,
    run_expi,
    run_expiii,
    summarize,
    wikipedia_corpus_provider,
)
from .exceptions import DegenerateDataset, ReqCompleteError
from .features import FEATURES, RELEVANT, FeatureMatrix
from .metrics import classification_metrics
from .mlm import DEFAULT_K, load_backend
from .relevance import PRESETS, FilterModel, LabeledDataset, train_preset
from .similarity import DEFAULT_MATCH_THRESHOLD, EmbeddingStore, Matcher, exact_matcher
from .text_pipeline import Wordlists, data_path, load_pipeline, parse_document

CACHE_ENV = "REQCOMPLETE_CACHE"
FILTER_MODES = ("none", "strict", "moderate", "lenient")
logger = logging.getLogger("reqcomplete")


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    backend: str = "stub"
    pipeline: str = "auto"
    k: int = DEFAULT_K
    ks: list = field(default_factory=lambda: list(EXPI_KS))
    preset: str = "none"
    presets: list = field(default_factory=lambda: list(PRESETS))
    model_dir: str | None = None
    common_wordlist: str | None = None
    vague_wordlists: list = field(default_factory=list)
    embeddings: str | None = None
    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    cache_dir: str | None = None
    corpus_dir: str | None = None
    online: bool = False
    master_seed: int = 0
    ratio: float = 0.5
    repeats: int = 5
    folds: int = 10
    search_budget: int = 0
    workers: int = 1
    output_dir: str = "reqcomplete-out"

    def __post_init__(self):
        if self.k < 1 or any(k < 1 for k in self.ks):
            raise click.BadParameter("k must be >= 1")
        if self.preset not in FILTER_MODES:
            raise click.BadParameter(f"preset must be one of {FILTER_MODES}")
        unknown = [p for p in self.presets if p not in PRESETS]
        if unknown:
            raise click.BadParameter(f"unknown presets {unknown}")
        if not 0.0 < self.ratio < 1.0:
            raise click.BadParameter("ratio must lie in (0, 1)")
        if self.cache_dir is None:
            self.cache_dir = os.environ.get(CACHE_ENV)

    @classmethod
    def load(cls, path, overrides: dict) -> "RunConfig":
        values = {}
        if path:
            with open(path, encoding="utf-8") as fh:
                values = yaml.safe_load(fh) or {}
            if not isinstance(values, dict):
                raise click.BadParameter(f"{path}: config must be a mapping")
            unknown = set(values) - {f.name for f in dataclasses.fields(cls)}
            if unknown:
                raise click.BadParameter(f"{path}: unknown config keys {sorted(unknown)}")
        for key, value in overrides.items():
            if value is None or value == ():
                continue
            values[key] = list(value) if isinstance(value, tuple) else value
        return cls(**values)

    def dump(self, path):
        Path(path).write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# resource assembly


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _input_files(paths) -> list:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.txt")))
        elif p.is_file():
            files.append(p)
        else:
            raise click.BadParameter(f"input {p} does not exist")
    if not files:
        raise click.BadParameter("no input documents given")
    return files


def _load_docs(cfg: RunConfig, pipeline) -> list:
    return [parse_document(f.read_text("utf-8"), f.stem, pipeline) for f in _input_files(cfg.inputs)]


def _wordlists(cfg: RunConfig) -> tuple:
    common = cfg.common_wordlist or data_path("common_250.txt")
    vague = cfg.vague_wordlists or [data_path("vague_stop.txt")]
    for p in [common, *vague]:
        if not Path(p).is_file():
            raise click.BadParameter(f"word list {p} not found")
    hashes = {str(p): _sha256(p) for p in [common, *vague]}
    return Wordlists.from_files(common, vague), hashes


def _matcher(cfg: RunConfig) -> Matcher:
    if cfg.embeddings is None:
        return exact_matcher()
    if not Path(cfg.embeddings).is_file():
        raise click.BadParameter(
            f"embedding file {cfg.embeddings} not found; point --embeddings at a GloVe-format text file "
            "or drop the option to use exact lemma matching"
        )
    return Matcher(EmbeddingStore.load(cfg.embeddings), cfg.match_threshold)


def _corpus_provider(cfg: RunConfig, wordlists, pipeline):
    fetcher = None
    if cfg.corpus_dir:
        fetcher = DirectoryFetcher(cfg.corpus_dir)
    elif cfg.online:
        fetcher = WikipediaFetcher()
    cache = ArticleCache(cfg.cache_dir) if cfg.cache_dir else None
    if fetcher is None and cache is None:
        return None
    return wikipedia_corpus_provider(fetcher, cache, wordlists=wordlists, pipeline=pipeline)


def _resources(cfg: RunConfig) -> tuple:
    wordlists, hashes = _wordlists(cfg)
    matcher = _matcher(cfg)
    pipeline = load_pipeline(cfg.pipeline)
    backend = load_backend(cfg.backend)
    res = Resources(backend, wordlists, matcher, pipeline, _corpus_provider(cfg, wordlists, pipeline), cfg.workers)
    provenance = {
        "package_version": __version__,
        "backend": getattr(backend, "name", cfg.backend),
        "pipeline": type(pipeline).__name__,
        "wordlists": hashes,
        "embeddings": None if cfg.embeddings is None else {"path": cfg.embeddings, "sha256": matcher.store.source_hash},
        "corpus": cfg.corpus_dir or ("wikipedia" if cfg.online else None),
        "master_seed": cfg.master_seed,
    }
    return res, provenance


def _out_dir(cfg: RunConfig, provenance: dict) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.json")
    (out / "provenance.json").write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n", "utf-8")
    return out


def _write_csv(path, rows: list, columns=None):
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in columns})


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, sort_keys=True, default=str)
    return value


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n", "utf-8")


def _load_models(cfg: RunConfig, names) -> dict:
    if not cfg.model_dir:
        raise click.BadParameter("--model-dir is required when a filter preset is used")
    models = {}
    for name in names:
        path = Path(cfg.model_dir) / f"{name}.joblib"
        if not path.is_file():
            raise click.BadParameter(f"filter model {path} not found; create it with 'reqcomplete train-filter'")
        models[name] = FilterModel.load(path)
    return models


# ---------------------------------------------------------------------------
# commands


def _common_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="YAML or JSON config file; flags override its values."),
        click.option("--backend", help="stub, stub:seed=N or hf:<model id or directory>."),
        click.option("--pipeline", help="auto, rules or spacy[:model]."),
        click.option("--embeddings", type=click.Path(), help="GloVe-format vector file for similarity matching."),
        click.option("--common-wordlist", type=click.Path()),
        click.option("--vague-wordlist", "vague_wordlists", multiple=True, type=click.Path()),
        click.option("--corpus-dir", type=click.Path(file_okay=False), help="Offline directory of <Title>.txt articles."),
        click.option("--online/--offline", default=None, help="Fetch domain articles from Wikipedia."),
        click.option("--cache-dir", type=click.Path(file_okay=False), help=f"Article cache (default ${CACHE_ENV})."),
        click.option("--seed", "master_seed", type=int),
        click.option("--workers", type=int),
        click.option("--output-dir", "-o", type=click.Path(file_okay=False)),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _run(fn):
    """Turn package errors into a diagnostic and a nonzero exit status."""
    try:
        return fn()
    except DegenerateDataset as exc:
        raise click.ClickException(f"{exc}. Add more training documents or use a larger k so both classes occur.")
    except ReqCompleteError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Recommend terms that are likely missing from a requirements document."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@_common_options
@click.option("-k", type=int, help="Predictions per mask.")
@click.option("--preset", type=click.Choice(FILTER_MODES))
@click.option("--model-dir", type=click.Path(file_okay=False))
def recommend(config_path, inputs, **flags):
    """Recommend terms for each input document."""
    cfg = RunConfig.load(config_path, {"inputs": inputs, **flags})

    def go():
        res, provenance = _resources(cfg)
        models = _load_models(cfg, [cfg.preset]) if cfg.preset != "none" else {}
        out = _out_dir(cfg, provenance)
        summary = []
        for doc in _load_docs(cfg, res.pipeline):
            analysis = analyze_disclosed(doc, cfg.k, res, with_features=True)
            matrix = analysis.matrix
            if models:
                keep = models[cfg.preset].predict(matrix) == RELEVANT if len(matrix) else []
                matrix = matrix.subset([i for i, flag in enumerate(keep) if flag])
            matrix.to_csv(out / f"{doc.doc_id}.predictions.csv")
            terms = _deduplicate(matrix)
            _write_csv(out / f"{doc.doc_id}.recommendations.csv", terms,
                       ["lemma", "max_confidence", "occurrences", "contexts", *(f"mean_{f}" for f in FEATURES)])
            summary.append({"doc_id": doc.doc_id, "preset": cfg.preset, "recommended": len(terms)})
            click.echo(f"{doc.doc_id}: {len(terms)} recommended terms")
        _write_json(out / "summary.json", summary)

    _run(go)


def _deduplicate(matrix: FeatureMatrix) -> list:
    groups = defaultdict(list)
    for row in matrix.rows:
        groups[row.record.lemma].append(row)
    out = []
    for lemma, rows in groups.items():
        contexts = sorted({f"{r.record.instance.sentence_index}:{r.record.instance.token_index}:"
                           f"{r.record.instance.masked_word.surface}" for r in rows})
        entry = {"lemma": lemma, "max_confidence": max(r.record.confidence for r in rows),
                 "occurrences": len(rows), "contexts": ";".join(contexts)}
        for f in FEATURES:
            values = [getattr(r.vector, f) for r in rows]
            numeric = [float(v) for v in values if isinstance(v, (int, float)) and v is not None]
            entry[f"mean_{f}"] = sum(numeric) / len(numeric) if len(numeric) == len(values) else (
                values[0] if len(set(values)) == 1 else None)
        out.append(entry)
    return sorted(out, key=lambda e: (-e["max_confidence"], e["lemma"]))


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@_common_options
@click.option("--experiment", type=click.Choice(["expi", "expiii"]), default="expi", show_default=True)
@click.option("-k", "ks", type=int, multiple=True, help="k levels for EXPI (repeatable).")
@click.option("--repeats", type=int)
@click.option("--ratio", type=float)
@click.option("--model-dir", type=click.Path(file_okay=False))
@click.option("--plots", is_flag=True, help="Write one box plot per metric.")
def simulate(config_path, inputs, experiment, plots, **flags):
    """Withhold half of each document and score the recommendations (EXPI or EXPIII)."""
    cfg = RunConfig.load(config_path, {"inputs": inputs, **flags})

    def go():
        res, provenance = _resources(cfg)
        out = _out_dir(cfg, provenance)
        docs = _load_docs(cfg, res.pipeline)
        if experiment == "expi":
            reports = run_expi(docs, res, cfg.ks, cfg.master_seed, cfg.ratio)
            tests = pairwise_k_tests(reports)
            _write_csv(out / "expi_tests.csv", tests, ["metric", "comparison", "n", "p_value", "a12"])
            group = "k"
        else:
            models = _load_models(cfg, cfg.presets)
            reports = run_expiii(docs, res, models, cfg.repeats, cfg.k, cfg.master_seed, cfg.ratio)
            group = "filter_mode"
        rows = [r.as_dict() for r in reports]
        columns = [f.name for f in dataclasses.fields(type(reports[0]))] if reports else []
        _write_csv(out / f"{experiment}.csv", rows, columns)
        summary = summarize(reports, by=(group,))
        _write_json(out / f"{experiment}.json", {"runs": rows, "summary": summary})
        if plots:
            box_plots(reports, out / "plots", group_by=group)
        for row in summary:
            click.echo(f"{group}={row[group]}: accuracy={_fmt(row['mean_accuracy'])} "
                       f"coverage={_fmt(row['mean_coverage'])} runs={row['runs']}")

    _run(go)


def _fmt(x):
    return "undefined" if x is None else f"{x:.4f}"


@main.command("train-filter")
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@_common_options
@click.option("-k", type=int)
@click.option("--folds", type=int)
@click.option("--search-budget", type=int, help="Random-search configurations per algorithm (0 = defaults).")
def train_filter(config_path, inputs, **flags):
    """Build the labeled training set and train the strict/moderate/lenient filters."""
    cfg = RunConfig.load(config_path, {"inputs": inputs, **flags})

    def go():
        res, provenance = _resources(cfg)
        docs = _load_docs(cfg, res.pipeline)
        if len(docs) < 2:
            raise click.BadParameter("train-filter needs at least 2 training documents")
        out = _out_dir(cfg, provenance)
        ds = build_training_set(docs, res, cfg.k, cfg.master_seed, cfg.ratio)
        ds.matrix.to_csv(out / "training_set.csv")
        counts = ds.class_counts
        click.echo(f"training rows: {len(ds)} ({counts[RELEVANT]} relevant)")
        if min(counts.values()) == 0:
            raise DegenerateDataset(f"training set has class counts {counts}")
        table, ig = compare_algorithms(ds, folds=cfg.folds, budget=cfg.search_budget, seed=cfg.master_seed)
        _write_csv(out / "cv_table.csv", table,
                   ["option", "algorithm", "rows", "classification_accuracy", "precision", "recall", "hyperparams"])
        _write_csv(out / "information_gain.csv", [{"feature": f, "information_gain": v} for f, v in ig])
        model_dir = out / "models"
        model_dir.mkdir(exist_ok=True)
        for name in PRESETS:
            params = next((row["hyperparams"] for row in table
                           if row["option"] == name and row["algorithm"] == PRESETS[name].algorithm), None)
            train_preset(ds, name, params or None, cfg.master_seed).save(model_dir / f"{name}.joblib")
        _write_json(out / "label_counts.json", counts)
        click.echo(f"models written to {model_dir}")

    _run(go)


@main.command("build-corpus")
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@_common_options
@click.option("--max-phrases", type=int, default=50, show_default=True)
def build_corpus_cmd(config_path, inputs, max_phrases, **flags):
    """Collect the domain article corpus for each document and save it as JSON."""
    cfg = RunConfig.load(config_path, {"inputs": inputs, **flags})

    def go():
        wordlists, hashes = _wordlists(cfg)
        pipeline = load_pipeline(cfg.pipeline)
        fetcher = DirectoryFetcher(cfg.corpus_dir) if cfg.corpus_dir else (WikipediaFetcher() if cfg.online else None)
        cache = ArticleCache(cfg.cache_dir) if cfg.cache_dir else None
        if fetcher is None and cache is None:
            raise click.BadParameter("give --corpus-dir, --online or a cache directory")
        out = _out_dir(cfg, {"package_version": __version__, "wordlists": hashes,
                             "corpus": cfg.corpus_dir or ("wikipedia" if cfg.online else "cache")})
        for doc in _load_docs(cfg, pipeline):
            phrases = extract_keyphrases(doc, wordlists, limit=max_phrases)
            corpus = build_corpus(phrases, fetcher, cache, workers=cfg.workers, source_doc_id=doc.doc_id)
            (out / f"{doc.doc_id}.corpus.json").write_text(corpus.to_json() + "\n", "utf-8")
            click.echo(f"{doc.doc_id}: {len(corpus.articles)} articles from {len(phrases)} phrases")

    _run(go)


@main.command("eval-filter")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("features_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", "-o", type=click.Path(file_okay=False), default="reqcomplete-out", show_default=True)
def eval_filter(model_path, features_csv, output_dir):
    """Score a saved filter on a labeled feature CSV (e.g. another run's training_set.csv)."""

    def go():
        model = FilterModel.load(model_path)
        matrix = FeatureMatrix.from_csv(features_csv)
        ds = LabeledDataset(matrix)
        pred = model.predict(matrix) == RELEVANT
        truth = ds.y == RELEVANT
        tp, fp = int((pred & truth).sum()), int((pred & ~truth).sum())
        tn, fn = int((~pred & ~truth).sum()), int((~pred & truth).sum())
        acc, prec, rec = classification_metrics(tp, fp, tn, fn)
        result = {"model": str(model_path), "training_mode": model.training_mode, "algorithm": model.algorithm,
                  "rows": len(ds), "tp": tp, "fp": fp, "tn": tn, "fn": fn,
                  "classification_accuracy": acc, "precision": prec, "recall": rec}
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "eval_filter.json", result)
        click.echo(f"accuracy={_fmt(acc)} precision={_fmt(prec)} recall={_fmt(rec)}")

    _run(go)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
