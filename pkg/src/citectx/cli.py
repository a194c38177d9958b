"""Command-line pipeline driver.

Subcommands: index, contextualize, train-ranker, facet-train,
facet-predict, summarize, retrofit, evaluate, pipeline.  Artifacts land
under ``<out>/<config-hash>/`` so different configurations never clobber
each other; every run also writes ``run_manifest.json`` with the config,
its hash, the seed, and stage timings (the manifest is the only
non-deterministic output because of the timings).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from citectx import corpus as corpus_mod
from citectx import contextualizer as ctx
from citectx import facets as facets_mod
from citectx import summarizer as summ_mod
from citectx import evaluation as eval_mod
from citectx.config import PipelineConfig
from citectx.corpus import SpanIndex, Topic, build_span_index
from citectx.embeddings import (
    EmbeddingTable,
    Lexicon,
    SimilarityParams,
    estimate_tau,
    load_embeddings,
    retrofit,
)


class StageError(RuntimeError):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------------------
# Shared resources
# ---------------------------------------------------------------------------

class Resources:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.table: EmbeddingTable | None = None
        self.params: SimilarityParams | None = None
        self.lexicon: Lexicon | None = None
        self.domain_lexicon: Lexicon | None = None
        self.ranker: ctx.RankerModel | None = None

        if cfg.embeddings_path:
            with open(cfg.embeddings_path, encoding="utf-8") as fh:
                self.table = load_embeddings(fh)
            if cfg.tau == "auto":
                tau = estimate_tau(
                    self.table, sample_size=cfg.tau_sample_size, rng_seed=cfg.seed
                )
            else:
                tau = float(cfg.tau)
            tau = min(max(tau, 1e-6), 1.0 - 1e-3)
            self.params = SimilarityParams(tau=tau)
        if cfg.lexicon_path:
            with open(cfg.lexicon_path, encoding="utf-8") as fh:
                self.lexicon = Lexicon.load(fh)
        if cfg.domain_lexicon_path:
            with open(cfg.domain_lexicon_path, encoding="utf-8") as fh:
                self.domain_lexicon = Lexicon.load(fh)
        if cfg.ranker_path and Path(cfg.ranker_path).exists():
            self.ranker = ctx.RankerModel.load(cfg.ranker_path)

    def require_embeddings(self) -> tuple[EmbeddingTable, SimilarityParams]:
        if self.table is None or self.params is None:
            raise StageError("this model requires --embeddings", exit_code=2)
        return self.table, self.params


def _load_topics(cfg: PipelineConfig) -> list[Topic]:
    if not cfg.corpus_dir:
        raise StageError("no corpus directory configured", exit_code=2)
    try:
        return corpus_mod.load_topic_dir(cfg.corpus_dir)
    except FileNotFoundError as exc:
        raise StageError(str(exc), exit_code=2) from exc


def _make_score_fn(cfg, index, resources, citance, query_terms):
    model = cfg.model.lower()
    if model in ("vsm", "bm25", "lmd"):
        params = ctx.BaselineParams(mu=cfg.mu)
        return lambda ref: ctx.score_baseline(model, query_terms, ref, index, params)
    if model == "embedding":
        table, simparams = resources.require_embeddings()
        scorer = ctx.TranslationScorer(
            index, ctx.EmbeddingSimilarityProvider(table, simparams), mu=cfg.mu
        )
        return lambda ref: scorer.score(query_terms, ref)
    if model == "interpolated":
        table, simparams = resources.require_embeddings()
        if resources.lexicon is None:
            raise StageError("interpolated model requires --lexicon", exit_code=2)
        scorer = ctx.InterpolatedScorer(
            index,
            ctx.EmbeddingSimilarityProvider(table, simparams),
            resources.lexicon,
            mu=cfg.mu,
            lambda_=cfg.lambda_,
            gamma=cfg.gamma,
        )
        return lambda ref: scorer.score(query_terms, ref)
    if model == "supervised":
        table, simparams = resources.require_embeddings()
        if resources.ranker is None:
            raise StageError(
                "supervised model requires a trained ranker (run train-ranker first)",
                exit_code=2,
            )
        extractor = ctx.PairFeatureExtractor(index, table, simparams)
        ranker = resources.ranker
        return lambda ref: ctx.score_supervised(ranker, extractor.extract(citance, ref))
    raise StageError(f"unknown model {cfg.model!r}", exit_code=2)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def _run_dir(cfg: PipelineConfig) -> Path:
    run_dir = Path(cfg.out_dir) / cfg.config_hash()
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def stage_index(cfg: PipelineConfig, run_dir: Path, topics: list[Topic]) -> dict[str, SpanIndex]:
    indexes: dict[str, SpanIndex] = {}
    for topic in topics:
        index = build_span_index(topic.reference, max_n=cfg.max_n)
        indexes[topic.id] = index
        _write_json(
            run_dir / "index" / f"{topic.id}.json",
            {
                "doc_id": topic.reference.id,
                "num_sentences": len(topic.reference.sentences),
                "num_spans": index.num_spans,
                "total_collection_tokens": index.total_collection_tokens,
                "spans": [
                    {
                        "first_sentence": s.first_sentence,
                        "n": s.n,
                        "char_start": s.char_start,
                        "char_end": s.char_end,
                    }
                    for s in index.spans
                ],
            },
        )
    return indexes


def stage_contextualize(
    cfg: PipelineConfig,
    run_dir: Path,
    topics: list[Topic],
    indexes: dict[str, SpanIndex],
    resources: Resources,
) -> dict[str, dict[str, list[dict]]]:
    def process(topic: Topic) -> tuple[str, dict[str, list[dict]]]:
        index = indexes[topic.id]
        per_citance: dict[str, list[dict]] = {}
        for citance in topic.citances:
            query = ctx.reduce_query(
                citance,
                cfg.query_method,
                index=index,
                idf_lo=cfg.idf_lo,
                idf_hi=cfg.idf_hi,
                domain_lexicon=resources.domain_lexicon,
            )
            score_fn = _make_score_fn(cfg, index, resources, citance, query.terms)
            ranked = ctx.retrieve_contexts(
                citance, index, score_fn, k=cfg.k, model=cfg.model
            )
            per_citance[citance.id] = [
                {
                    "span_ref": e.span_ref,
                    "first_sentence": e.span.first_sentence,
                    "n": e.span.n,
                    "char_start": e.span.char_start,
                    "char_end": e.span.char_end,
                    "score": e.score,
                }
                for e in ranked.entries
            ]
        return topic.id, per_citance

    workers = int(os.environ.get("CITECTX_WORKERS", cfg.workers))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(process, topics))
    else:
        results = [process(t) for t in topics]

    contexts = dict(results)
    for topic_id, per_citance in contexts.items():
        _write_json(run_dir / "contexts" / f"{topic_id}.json", per_citance)
    return contexts


def _load_contexts(run_dir: Path, topics: list[Topic]) -> dict[str, dict[str, list[dict]]]:
    contexts = {}
    for topic in topics:
        path = run_dir / "contexts" / f"{topic.id}.json"
        if not path.exists():
            raise StageError(f"missing contexts artifact: {path}", exit_code=2)
        with open(path, encoding="utf-8") as fh:
            contexts[topic.id] = json.load(fh)
    return contexts


def stage_train_ranker(
    cfg: PipelineConfig,
    run_dir: Path,
    topics: list[Topic],
    indexes: dict[str, SpanIndex],
    resources: Resources,
) -> ctx.RankerModel:
    table, params = resources.require_embeddings()
    examples = []
    for topic in topics:
        if not topic.gold:
            continue
        extractor = ctx.PairFeatureExtractor(indexes[topic.id], table, params)
        examples.extend(
            ctx.build_ranker_examples(
                topic.citances,
                topic.gold,
                indexes[topic.id],
                extractor,
                negatives_per_positive=cfg.negatives_per_positive,
                seed=cfg.seed,
            )
        )
    if not examples:
        raise StageError("no gold annotations available to train the ranker", exit_code=2)
    model = ctx.train_ranker(examples, seed=cfg.seed)
    out = run_dir / "ranker.weights"
    model.save(out)
    resources.ranker = model
    return model


def _gold_context_span(topic: Topic, index: SpanIndex, citance_id: str):
    """Sentence span covering the first annotator's first gold range."""
    annotation = topic.gold.get(citance_id)
    if annotation is None or not annotation.context_ranges:
        return None
    ranges = eval_mod.merge_ranges(
        [r for annot in annotation.context_ranges for r in annot]
    )
    if not ranges:
        return None
    a, b = ranges[0]
    hit = [
        s.index
        for s in topic.reference.sentences
        if s.char_start < b and a < s.char_end
    ]
    if not hit:
        return None
    first, last = hit[0], hit[-1]
    for span in index.spans:
        if span.first_sentence == first and span.n == last - first + 1:
            return span
    return index.spans[first]  # fall back to the single-sentence span


def stage_facet_train(
    cfg: PipelineConfig,
    run_dir: Path,
    topics: list[Topic],
    indexes: dict[str, SpanIndex],
) -> facets_mod.FacetModel:
    examples = []
    for topic in topics:
        for citance in topic.citances:
            annotation = topic.gold.get(citance.id)
            if annotation is None or not annotation.facet_labels:
                continue
            span = _gold_context_span(topic, indexes[topic.id], citance.id)
            if span is None:
                continue
            label = annotation.facet_labels[0]
            features = facets_mod.extract_facet_features(citance, span, topic.reference)
            examples.append((features, label))
    if not examples:
        raise StageError("no gold facet labels available for training", exit_code=2)
    model = facets_mod.train_facet_model(
        examples, algorithm=cfg.facet_algorithm, seed=cfg.seed
    )
    model.save(run_dir / "facet_model.npz")
    return model


def stage_facet_predict(
    cfg: PipelineConfig,
    run_dir: Path,
    topics: list[Topic],
    indexes: dict[str, SpanIndex],
    contexts: dict[str, dict[str, list[dict]]],
    model: facets_mod.FacetModel | None,
) -> dict[str, dict[str, list[str]]]:
    predictions: dict[str, dict[str, list[str]]] = {}
    default_label = sorted(cfg.facet_labels)[0]
    for topic in topics:
        index = indexes[topic.id]
        by_citance: dict[str, list[str]] = {}
        for citance in topic.citances:
            labels = []
            for entry in contexts[topic.id].get(citance.id, []):
                span = index.spans[entry["span_ref"]]
                if model is None:
                    labels.append(default_label)
                else:
                    features = facets_mod.extract_facet_features(
                        citance, span, topic.reference
                    )
                    labels.append(facets_mod.predict_facet(model, features))
            by_citance[citance.id] = labels
        predictions[topic.id] = by_citance
        _write_json(run_dir / "facets" / f"{topic.id}.json", by_citance)
    return predictions


def stage_summarize(
    cfg: PipelineConfig,
    run_dir: Path,
    topics: list[Topic],
    indexes: dict[str, SpanIndex],
    contexts: dict[str, dict[str, list[dict]]],
    facet_predictions: dict[str, dict[str, list[str]]],
) -> dict[str, summ_mod.Summary]:
    summaries: dict[str, summ_mod.Summary] = {}
    for topic in topics:
        index = indexes[topic.id]
        faceted = []
        for citance in topic.citances:
            entries = contexts[topic.id].get(citance.id, [])
            labels = facet_predictions.get(topic.id, {}).get(citance.id, [])
            for i, entry in enumerate(entries):
                span = index.spans[entry["span_ref"]]
                label = labels[i] if i < len(labels) else sorted(cfg.facet_labels)[0]
                faceted.append((span, label))
        summary = summ_mod.summarize_contexts(
            faceted,
            topic.reference,
            budget_words=cfg.budget_words,
            strategy=cfg.strategy,
            lambda_mmr=cfg.lambda_mmr,
        )
        summaries[topic.id] = summary
        text_path = run_dir / "summaries" / f"{topic.id}.txt"
        text_path.parent.mkdir(parents=True, exist_ok=True)
        with open(text_path, "w", encoding="utf-8") as fh:
            for sent in summary.selected:
                fh.write(sent.text.replace("\n", " ") + "\n")
        _write_json(
            run_dir / "summaries" / f"{topic.id}.json",
            {
                "budget": summary.budget,
                "word_count": summary.word_count,
                "sentences": [
                    {"text": s.text, "facet": s.facet, "score": s.score}
                    for s in summary.selected
                ],
            },
        )
    return summaries


def stage_evaluate(
    cfg: PipelineConfig,
    run_dir: Path,
    topics: list[Topic],
    contexts: dict[str, dict[str, list[dict]]],
    facet_predictions: dict[str, dict[str, list[str]]],
    summaries: dict[str, summ_mod.Summary],
) -> dict:
    if not any(topic.gold or topic.gold_summaries for topic in topics):
        raise StageError(
            'cannot evaluate: no "gold" block found in any topic file', exit_code=2
        )
    report: dict[str, dict] = {}
    for topic in topics:
        char_scores, sent_scores, facet_scores = [], [], []
        for citance in topic.citances:
            annotation = topic.gold.get(citance.id)
            if annotation is None or not annotation.context_ranges:
                continue
            entries = contexts[topic.id].get(citance.id, [])
            system = [(e["char_start"], e["char_end"]) for e in entries]
            char_scores.append(
                eval_mod.char_overlap_prf(system, annotation.context_ranges)
            )
            system_sents = {
                i
                for e in entries
                for i in range(e["first_sentence"], e["first_sentence"] + e["n"])
            }
            gold_sents = {
                s.index
                for s in topic.reference.sentences
                for annot in annotation.context_ranges
                for a, b in annot
                if s.char_start < b and a < s.char_end
            }
            sent_scores.append(eval_mod.sentence_overlap_prf(system_sents, gold_sents))
            labels = facet_predictions.get(topic.id, {}).get(citance.id, [])
            if labels and annotation.facet_labels:
                facet_scores.append(
                    eval_mod.weighted_facet_accuracy(labels[0], annotation.facet_labels)
                )

        topic_report: dict[str, object] = {}

        def avg(values):
            return sum(values) / len(values) if values else 0.0

        if char_scores:
            topic_report["char"] = {
                "precision": avg([s.precision for s in char_scores]),
                "recall": avg([s.recall for s in char_scores]),
                "f1": avg([s.f1 for s in char_scores]),
            }
            topic_report["sentence"] = {
                "precision": avg([s.precision for s in sent_scores]),
                "recall": avg([s.recall for s in sent_scores]),
                "f1": avg([s.f1 for s in sent_scores]),
            }
        if facet_scores:
            topic_report["facet_weighted_accuracy"] = avg(facet_scores)
        if topic.gold_summaries and topic.id in summaries:
            candidate = " ".join(s.text for s in summaries[topic.id].selected)
            rouge = {}
            for variant in ("N1", "N2", "N3", "SU4"):
                score = eval_mod.rouge_score(candidate, topic.gold_summaries, variant)
                rouge[variant] = {
                    "precision": score.precision,
                    "recall": score.recall,
                    "f1": score.f1,
                }
            topic_report["rouge"] = rouge
        report[topic.id] = topic_report

    # macro average over topics for each numeric leaf
    def collect(path: tuple[str, ...], node, sink):
        if isinstance(node, dict):
            for key, val in node.items():
                collect(path + (key,), val, sink)
        else:
            sink.setdefault(path, []).append(node)

    sink: dict[tuple[str, ...], list[float]] = {}
    for topic_report in report.values():
        collect((), topic_report, sink)
    macro: dict = {}
    for path, values in sink.items():
        node = macro
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = sum(values) / len(values)

    payload = {"per_topic": report, "macro": macro}
    _write_json(run_dir / "evaluation" / "report.json", payload)

    lines = ["topic\tmetric\tprecision\trecall\tf1"]
    for topic_id, topic_report in sorted(report.items()):
        for metric in ("char", "sentence"):
            if metric in topic_report:
                m = topic_report[metric]
                lines.append(
                    f"{topic_id}\t{metric}\t{m['precision']:.4f}\t{m['recall']:.4f}\t{m['f1']:.4f}"
                )
        if "rouge" in topic_report:
            for variant, m in sorted(topic_report["rouge"].items()):
                lines.append(
                    f"{topic_id}\trouge_{variant}\t{m['precision']:.4f}\t{m['recall']:.4f}\t{m['f1']:.4f}"
                )
        if "facet_weighted_accuracy" in topic_report:
            acc = topic_report["facet_weighted_accuracy"]
            lines.append(f"{topic_id}\tfacet_weighted_accuracy\t{acc:.4f}\t-\t-")
    tsv_path = run_dir / "evaluation" / "report.tsv"
    tsv_path.parent.mkdir(parents=True, exist_ok=True)
    tsv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return payload


def stage_retrofit(cfg: PipelineConfig, run_dir: Path, resources: Resources) -> Path:
    table, _ = resources.require_embeddings()
    if resources.lexicon is None:
        raise StageError("retrofit requires --lexicon", exit_code=2)
    fitted = retrofit(table, resources.lexicon)
    out = run_dir / "retrofitted_vectors.txt"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"{len(fitted)} {fitted.dimension}\n")
        for word in fitted.words():
            vec = fitted.get(word)
            fh.write(word + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")
    return out


# ---------------------------------------------------------------------------
# Command dispatch
# ---------------------------------------------------------------------------

def run_command(command: str, cfg: PipelineConfig) -> int:
    run_dir = _run_dir(cfg)
    timings: dict[str, float] = {}

    def timed(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        timings[name] = time.perf_counter() - t0
        return result

    try:
        resources = Resources(cfg)
        if command == "retrofit":
            timed("retrofit", stage_retrofit, cfg, run_dir, resources)
        else:
            topics = _load_topics(cfg)
            indexes = timed("index", stage_index, cfg, run_dir, topics)
            if command == "index":
                pass
            elif command == "contextualize":
                timed(
                    "contextualize",
                    stage_contextualize, cfg, run_dir, topics, indexes, resources,
                )
            elif command == "train-ranker":
                timed("train_ranker", stage_train_ranker, cfg, run_dir, topics, indexes, resources)
            elif command == "facet-train":
                timed("facet_train", stage_facet_train, cfg, run_dir, topics, indexes)
            elif command == "facet-predict":
                contexts = _load_contexts(run_dir, topics)
                model_path = run_dir / "facet_model.npz"
                model = facets_mod.FacetModel.load(model_path) if model_path.exists() else None
                timed(
                    "facet_predict",
                    stage_facet_predict, cfg, run_dir, topics, indexes, contexts, model,
                )
            elif command == "summarize":
                contexts = _load_contexts(run_dir, topics)
                predictions = {}
                for topic in topics:
                    path = run_dir / "facets" / f"{topic.id}.json"
                    if path.exists():
                        with open(path, encoding="utf-8") as fh:
                            predictions[topic.id] = json.load(fh)
                timed(
                    "summarize",
                    stage_summarize, cfg, run_dir, topics, indexes, contexts, predictions,
                )
            elif command == "evaluate":
                contexts = _load_contexts(run_dir, topics)
                predictions = {}
                summaries = {}
                for topic in topics:
                    fpath = run_dir / "facets" / f"{topic.id}.json"
                    if fpath.exists():
                        with open(fpath, encoding="utf-8") as fh:
                            predictions[topic.id] = json.load(fh)
                    spath = run_dir / "summaries" / f"{topic.id}.json"
                    if spath.exists():
                        with open(spath, encoding="utf-8") as fh:
                            data = json.load(fh)
                        summaries[topic.id] = summ_mod.Summary(
                            selected=[
                                summ_mod.SummarySentence(
                                    text=s["text"], facet=s["facet"], score=s["score"]
                                )
                                for s in data["sentences"]
                            ],
                            word_count=data["word_count"],
                            budget=data["budget"],
                        )
                timed(
                    "evaluate",
                    stage_evaluate, cfg, run_dir, topics, contexts, predictions, summaries,
                )
            elif command == "pipeline":
                if cfg.model == "supervised":
                    timed("train_ranker", stage_train_ranker, cfg, run_dir, topics, indexes, resources)
                contexts = timed(
                    "contextualize",
                    stage_contextualize, cfg, run_dir, topics, indexes, resources,
                )
                has_gold_facets = any(
                    a.facet_labels for t in topics for a in t.gold.values()
                )
                model = None
                if has_gold_facets:
                    model = timed("facet_train", stage_facet_train, cfg, run_dir, topics, indexes)
                predictions = timed(
                    "facet_predict",
                    stage_facet_predict, cfg, run_dir, topics, indexes, contexts, model,
                )
                summaries = timed(
                    "summarize",
                    stage_summarize, cfg, run_dir, topics, indexes, contexts, predictions,
                )
                if any(t.gold or t.gold_summaries for t in topics):
                    timed(
                        "evaluate",
                        stage_evaluate, cfg, run_dir, topics, contexts, predictions, summaries,
                    )
            else:
                raise StageError(f"unknown command {command!r}", exit_code=2)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "timings": timings,
    }
    _write_json(run_dir / "run_manifest.json", manifest)
    print(f"{command}: artifacts in {run_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citectx",
        description="Citation contextualization, facet labeling, and summarization pipeline",
    )
    parser.add_argument("command", choices=[
        "index", "contextualize", "train-ranker", "facet-train", "facet-predict",
        "summarize", "retrofit", "evaluate", "pipeline",
    ])
    parser.add_argument("--config", type=str, help="JSON config file")
    parser.add_argument("--corpus", type=str, help="directory of topic JSON files")
    parser.add_argument("--embeddings", type=str, help="word vector text file")
    parser.add_argument("--lexicon", type=str, help="synonym lexicon file")
    parser.add_argument("--domain-lexicon", type=str, help="domain concept lexicon file")
    parser.add_argument("--model", type=str, help="vsm|bm25|lmd|embedding|interpolated|supervised")
    parser.add_argument("--query-method", type=str, help="full|kw|np|domain")
    parser.add_argument("--k", type=int, help="contexts per citance")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--strategy", type=str, choices=["iterative", "greedy"])
    parser.add_argument("--dataset", type=str, choices=["tac", "cl"])
    parser.add_argument("--out", type=str, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    overrides = {
        "corpus_dir": args.corpus,
        "embeddings_path": args.embeddings,
        "lexicon_path": args.lexicon,
        "domain_lexicon_path": args.domain_lexicon,
        "model": args.model,
        "query_method": args.query_method,
        "k": args.k,
        "seed": args.seed,
        "strategy": args.strategy,
        "dataset": args.dataset,
        "out_dir": args.out,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    try:
        cfg = PipelineConfig.from_dict(data)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run_command(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
