"""Command-line interface.

Each subcommand covers one pipeline stage and the stages compose through
the documented file formats, so ``pipeline`` and a chain of stage calls
produce the same outputs.  Exit codes: 0 success, 1 stage failure, 2
stopword curation required, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import load_corpus, save_corpus, filter_corpus
from .embedding import TrainConfig, load_model, save_model, train
from .keywords import (
    FileEmbedder,
    ReferenceEmbedder,
    extract_keywords,
    load_extractions,
    save_extractions,
)
from .pipeline import (
    CurationRequired,
    PipelineStageError,
    analyze_extractions,
    resolve_config,
    run_pipeline,
    write_report_files,
)
from .query import parse_query
from .svgplot import emit_scatter_svg
from .textprep import (
    TokenStream,
    filter_stopwords,
    load_base_stopwords,
    load_stopword_list,
    load_token_streams,
    save_token_streams,
    tokenize,
)
from .trends import ProjectedPoint, generate_stopword_candidates, save_candidates

log = logging.getLogger("trendlens")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CURATION = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 64 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_stopword_flags(parser):
    parser.add_argument(
        "--base-stopwords", metavar="FILE", help="base English stopword list (default: bundled)"
    )
    parser.add_argument(
        "--extra-stopwords",
        metavar="FILE",
        action="append",
        default=[],
        help="curated stopword list; repeatable",
    )


def _add_train_flags(parser, none_defaults: bool = False):
    # none_defaults lets a config file supply values that flags then override
    d = TrainConfig() if not none_defaults else None
    parser.add_argument("--dim", type=int, default=d.dim if d else None)
    parser.add_argument("--window", type=int, default=d.window if d else None)
    parser.add_argument("--epochs", type=int, default=d.epochs if d else None)
    parser.add_argument("--learning-rate", type=float, default=d.learning_rate if d else None)
    parser.add_argument("--min-count", type=int, default=d.min_count if d else None)
    parser.add_argument(
        "--mode", choices=("negative_sampling", "full_softmax"), default=d.mode if d else None
    )
    parser.add_argument("--negatives", type=int, default=d.negatives if d else None)
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default: $TRENDLENS_SEED or 1)")
    parser.add_argument("--full-softmax-cap", type=int, default=d.full_softmax_cap if d else None)
    parser.add_argument(
        "--workers", type=int, default=1 if d else None, help=">1 trades determinism for speed"
    )


def _seed_or_default(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("TRENDLENS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"TRENDLENS_SEED must be an integer, got {env!r}") from None
    return TrainConfig().seed


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        dim=args.dim,
        window=args.window,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        min_count=args.min_count,
        mode=args.mode,
        negatives=args.negatives,
        seed=_seed_or_default(args.seed),
        full_softmax_cap=args.full_softmax_cap,
    )


def _load_stopword_lists(args):
    base = (
        load_stopword_list(args.base_stopwords, "base")
        if args.base_stopwords
        else load_base_stopwords()
    )
    extras = [load_stopword_list(path, "curated") for path in args.extra_stopwords]
    return base, extras


def _read_query(args) -> str | None:
    if getattr(args, "query", None):
        return args.query
    if getattr(args, "query_file", None):
        return Path(args.query_file).read_text(encoding="utf-8").strip()
    return None


def _input_streams(args) -> list[TokenStream]:
    """Token streams from either a corpus file or a tokens JSONL file.

    The kind is sniffed from the first record: corpus records carry an
    'abstract' key, token records carry 'tokens'.  Corpus input is
    tokenized and stopword-filtered here; token input is used as is.
    """
    path = Path(args.input)
    first = ""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                first = line
                break
    if '"tokens"' in first and '"abstract"' not in first:
        return load_token_streams(path)
    corpus = load_corpus(path, getattr(args, "format", None))
    base, extras = _load_stopword_lists(args)
    return [
        filter_stopwords(TokenStream(d.id, tuple(tokenize(d.abstract))), base, *extras)
        for d in corpus
    ]


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.input, args.format)
    log.info("loaded %d documents (%d industries)", len(corpus), len(corpus.industries))
    if args.out:
        save_corpus(corpus, args.out)
    if args.tokens_out:
        base, extras = _load_stopword_lists(args)
        streams = [
            filter_stopwords(TokenStream(d.id, tuple(tokenize(d.abstract))), base, *extras)
            for d in corpus
        ]
        save_token_streams(streams, args.tokens_out)
    return EXIT_OK


def cmd_query(args) -> int:
    source = _read_query(args)
    expr = parse_query(source)
    corpus = load_corpus(args.input, args.format)
    kept = filter_corpus(corpus, expr)
    log.info("query kept %d of %d documents", len(kept), len(corpus))
    save_corpus(kept, args.out)
    return EXIT_OK


def cmd_stopwords(args) -> int:
    corpus = load_corpus(args.input, args.format)
    base = (
        load_stopword_list(args.base_stopwords, "base")
        if args.base_stopwords
        else load_base_stopwords()
    )
    if args.model:
        model = load_model(args.model)
    else:
        streams = [
            filter_stopwords(TokenStream(d.id, tuple(tokenize(d.abstract))), base) for d in corpus
        ]
        model = train(streams, _train_config(args), workers=args.workers)
    candidates = generate_stopword_candidates(
        corpus, ReferenceEmbedder(model), base, args.top_k, args.top_n
    )
    save_candidates(candidates, args.out)
    log.info("wrote %d candidates to %s", len(candidates), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    streams = _input_streams(args)
    model = train(streams, _train_config(args), workers=args.workers)
    save_model(model, args.out, full=args.full)
    log.info("trained %d-word, %d-d model -> %s", len(model.vocab), model.dim, args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    if args.model and (args.doc_vectors or args.word_vectors):
        raise ValueError("use either --model or --doc-vectors/--word-vectors, not both")
    if args.model:
        embedder = ReferenceEmbedder(load_model(args.model))
    elif args.doc_vectors and args.word_vectors:
        embedder = FileEmbedder.from_files(args.doc_vectors, args.word_vectors)
    else:
        raise ValueError("--model or both --doc-vectors and --word-vectors are required")
    streams = _input_streams(args)
    results = [extract_keywords(s, embedder, (), args.top_n) for s in streams]
    save_extractions(results, args.out)
    skipped = sum(1 for r in results if r.warning)
    if skipped:
        log.warning("%d document(s) had no scoreable keywords", skipped)
    return EXIT_OK


def _parse_anchor_flags(pairs):
    anchors = {}
    for spec in pairs:
        industry, sep, token = spec.partition("=")
        if not sep or not industry or not token:
            raise ValueError(f"--anchor expects INDUSTRY=TOKEN, got {spec!r}")
        anchors[industry] = token
    return anchors


def cmd_analyze(args) -> int:
    corpus = load_corpus(args.corpus, args.format)
    model = load_model(args.model)
    results = load_extractions(args.keywords)
    report = analyze_extractions(
        results,
        corpus,
        model,
        args.top_percent,
        args.cluster_threshold,
        _parse_anchor_flags(args.anchor),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = write_report_files(report, out_dir)
    log.info("wrote %s", ", ".join(p.name for p in written))
    return EXIT_OK


def cmd_plot(args) -> int:
    import csv as _csv

    by_industry: dict[str, tuple[list[ProjectedPoint], dict[str, int]]] = {}
    with open(args.projection, encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header != ["industry", "keyword", "x", "y", "cluster_id"]:
            raise ValueError(f"{args.projection}: expected header industry,keyword,x,y,cluster_id")
        for industry, keyword, x, y, cluster_id in reader:
            points, labels = by_industry.setdefault(industry, ([], {}))
            points.append(ProjectedPoint(keyword, None, (float(x), float(y))))
            labels[keyword] = int(cluster_id)
    if not by_industry:
        # a header-only projection is what the pipeline emits when every
        # industry was too small to project; succeeding with no plots keeps
        # staged output identical to the single-shot run
        log.warning("%s: no projected points; nothing to plot", args.projection)
        return EXIT_OK
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for industry, (points, labels) in sorted(by_industry.items()):
        name = "".join(ch if ch.isalnum() else "_" for ch in industry.lower())
        emit_scatter_svg(points, labels, out_dir / f"scatter_{name}.svg")
    log.info("wrote %d plot(s) to %s", len(by_industry), out_dir)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    overrides = {
        "corpus": args.corpus,
        "format": args.format,
        "query": _read_query(args),
        "base_stopwords": args.base_stopwords,
        "extra_stopwords": args.extra_stopwords or None,
        "model": args.model,
        "top_n": args.top_n,
        "top_percent": args.top_percent,
        "cluster_threshold": args.cluster_threshold,
        "anchors": _parse_anchor_flags(args.anchor) or None,
        "out_dir": args.out_dir,
        "workers": args.workers,
        "dim": args.dim,
        "window": args.window,
        "epochs": args.epochs,
        "learning_rate": args.learning_rate,
        "min_count": args.min_count,
        "mode": args.mode,
        "negatives": args.negatives,
        "seed": args.seed,
        "full_softmax_cap": args.full_softmax_cap,
    }
    config = resolve_config(args.config, overrides, os.environ.get("TRENDLENS_SEED"))
    run_pipeline(config)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="trendlens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="validate a corpus file; optionally emit tokens")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p.add_argument("--out", metavar="FILE", help="write normalized corpus JSONL")
    p.add_argument("--tokens-out", metavar="FILE", help="write stopword-filtered token streams")
    _add_stopword_flags(p)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("query", help="filter a corpus with a boolean query")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--query", metavar="EXPR")
    group.add_argument("--query-file", metavar="FILE")
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(handler=cmd_query)

    p = sub.add_parser("stopwords", help="emit stopword candidates for curation")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p.add_argument("--model", metavar="FILE", help="existing model (otherwise trains one)")
    p.add_argument("--base-stopwords", metavar="FILE")
    p.add_argument("--top-k", type=int, default=30)
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--out", required=True, metavar="FILE")
    _add_train_flags(p)
    p.set_defaults(handler=cmd_stopwords)

    p = sub.add_parser("train", help="train skip-gram embeddings")
    p.add_argument("--input", required=True, metavar="FILE", help="corpus JSONL/CSV or tokens JSONL")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--full", action="store_true", help="also store the output matrix")
    _add_stopword_flags(p)
    _add_train_flags(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("extract", help="extract top keywords per document")
    p.add_argument("--input", required=True, metavar="FILE", help="corpus JSONL/CSV or tokens JSONL")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p.add_argument("--model", metavar="FILE")
    p.add_argument("--doc-vectors", metavar="FILE", help="external document vectors")
    p.add_argument("--word-vectors", metavar="FILE", help="external word vectors")
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--out", required=True, metavar="FILE")
    _add_stopword_flags(p)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("analyze", help="aggregate, select, project, and cluster keywords")
    p.add_argument("--keywords", required=True, metavar="FILE", help="extraction CSV")
    p.add_argument("--corpus", required=True, metavar="FILE")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--top-percent", type=float, default=5.0)
    p.add_argument("--cluster-threshold", type=float, default=1.0)
    p.add_argument("--anchor", action="append", default=[], metavar="INDUSTRY=TOKEN")
    p.add_argument("--out-dir", required=True, metavar="DIR")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("plot", help="render SVG scatter plots from a projection CSV")
    p.add_argument("--projection", required=True, metavar="FILE")
    p.add_argument("--out-dir", required=True, metavar="DIR")
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--config", metavar="FILE", help="flat JSON config; flags override")
    p.add_argument("--corpus", metavar="FILE")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--query", metavar="EXPR")
    group.add_argument("--query-file", metavar="FILE")
    p.add_argument("--model", metavar="FILE", help="pretrained model; skips training")
    p.add_argument("--top-n", type=int, default=None)
    p.add_argument("--top-percent", type=float, default=None)
    p.add_argument("--cluster-threshold", type=float, default=None)
    p.add_argument("--anchor", action="append", default=[], metavar="INDUSTRY=TOKEN")
    p.add_argument("--out-dir", metavar="DIR")
    _add_stopword_flags(p)
    _add_train_flags(p, none_defaults=True)
    p.set_defaults(handler=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except CurationRequired as exc:
        log.error("%s", exc)
        return EXIT_CURATION
    except PipelineStageError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    except Exception as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


def entrypoint() -> None:
    sys.exit(main())
