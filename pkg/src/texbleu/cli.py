"""Command-line entry point: ``texbleu <subcommand> ...``.

Exit codes: 0 success, 1 validation/data error, 2 I/O error,
3 artifact-consistency error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .corpus import MODES, ingest_corpus, read_corpus, write_corpus
from .embeddings import (
    DEFAULT_DIM, DEFAULT_EPOCHS, DEFAULT_MAX_LEN, DEFAULT_NEGATIVES, DEFAULT_WINDOW,
    load_embedding_table, load_positional_table, save_table, sinusoidal_positions, train_embeddings,
)
from .errors import ArtifactMismatchError, DataError
from .harness import ABLATIONS, ALL_METRICS, load_dataset, run_evaluation
from .metric import MetricConfig, Scorer
from .tokenizer import DEFAULT_MIN_PAIR_FREQ, DEFAULT_VOCAB_SIZE, encode, load_vocab, save_vocab, train_bpe

log = logging.getLogger("texbleu")

EXIT_OK, EXIT_DATA, EXIT_IO, EXIT_MISMATCH = 0, 1, 2, 3

# two 20-character expressions for the latency benchmark
BENCH_REF = r"\frac{a+b}{\sqrt{x}}"
BENCH_PRED = r"(a+b)/\sqrt{x}+c^{2}"
VOCAB_FILE, EMB_FILE, POS_FILE = "vocab.txt", "emb.bin", "pos.bin"


def artifact_home() -> Path:
    return Path(os.environ.get("TEXBLEU_HOME", "."))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DATA, f"{self.prog}: error: {message}\n")


def _weights(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be comma-separated numbers, got {text!r}")


def _add_artifacts(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("artifacts (default: files in $TEXBLEU_HOME or the current directory)")
    g.add_argument("--vocab", help=f"vocab file (default: {VOCAB_FILE})")
    g.add_argument("--emb", help=f"embedding table (default: {EMB_FILE})")
    g.add_argument("--pos", help=f"positional table (default: {POS_FILE}; sinusoidal if absent)")


def _add_metric(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("metric")
    g.add_argument("--alpha", type=float, default=2.0, help="exponent on cosine distance (default: %(default)s)")
    g.add_argument("--beta", type=float, default=0.1, help="tanh scale of the positional term (default: %(default)s)")
    g.add_argument("--max-n", type=int, default=3, help="largest n-gram order N (default: %(default)s)")
    g.add_argument("--weights", type=_weights, default=None,
                   help="comma-separated n-gram weights (default: uniform 1/N)")
    g.add_argument("--pairing", choices=("best", "index"), default="best",
                   help="n-gram pairing: content-matched or index-aligned (default: %(default)s)")
    g.add_argument("--position-mode", choices=("vector", "index"), default="vector",
                   help="positional gap: L1 over table rows or plain index difference (default: %(default)s)")
    g.add_argument("--no-positional", action="store_true", help="drop the positional term")


def _add_corpus(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus-dir", help="directory of .tex files to ingest")
    src.add_argument("--corpus", help="corpus file written by 'texbleu ingest'")
    p.add_argument("--mode", choices=MODES, default="whole", help="ingest mode for --corpus-dir (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="texbleu", description="TeXBLEU: evaluate LaTeX math expressions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="normalize a directory of .tex files into a corpus file")
    p.add_argument("--corpus-dir", required=True, help="directory searched recursively for .tex files")
    p.add_argument("--out", required=True, help="corpus file to write")
    p.add_argument("--mode", choices=MODES, default="whole",
                   help="whole files or math spans only (default: %(default)s)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train-tokenizer", help="learn BPE merges")
    _add_corpus(p)
    p.add_argument("--out", help=f"vocab file to write (default: $TEXBLEU_HOME/{VOCAB_FILE})")
    p.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE,
                   help="target vocabulary size incl. 256 byte tokens (default: %(default)s)")
    p.add_argument("--min-pair-freq", type=int, default=DEFAULT_MIN_PAIR_FREQ,
                   help="stop when no pair is this frequent (default: %(default)s)")
    p.set_defaults(func=cmd_train_tokenizer)

    p = sub.add_parser("train-embeddings", help="train skip-gram token embeddings")
    _add_corpus(p)
    p.add_argument("--vocab", help=f"vocab file (default: $TEXBLEU_HOME/{VOCAB_FILE})")
    p.add_argument("--out", help=f"embedding table to write (default: $TEXBLEU_HOME/{EMB_FILE})")
    p.add_argument("--pos-out", help="also write a sinusoidal positional table here")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM, help="embedding size (default: %(default)s)")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="context window (default: %(default)s)")
    p.add_argument("--negatives", type=int, default=DEFAULT_NEGATIVES,
                   help="negative samples per pair (default: %(default)s)")
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS, help="(default: %(default)s)")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN,
                   help="rows of the --pos-out table (default: %(default)s)")
    p.add_argument("--seed", type=int, default=42, help="random seed (default: %(default)s)")
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("score", help="score one prediction against one reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--pred", required=True)
    _add_artifacts(p)
    _add_metric(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="score a dataset and correlate with human ratings")
    p.add_argument("--dataset", required=True, help="line-delimited JSON records")
    p.add_argument("--metrics", default=",".join(ALL_METRICS),
                   help="comma-separated metrics or external score columns (default: %(default)s)")
    p.add_argument("--ablation", action="store_true",
                   help=f"add the ablation rows ({', '.join(ABLATIONS)})")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text",
                   help="report format (default: %(default)s)")
    p.add_argument("--lenient", action="store_true", help="skip malformed records instead of failing")
    p.add_argument("--workers", type=int, default=1, help="scoring threads (default: %(default)s)")
    _add_artifacts(p)
    _add_metric(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time TeXBLEU on two 20-character expressions")
    p.add_argument("--iterations", type=int, default=10, help="timed runs (default: %(default)s)")
    _add_artifacts(p)
    _add_metric(p)
    p.set_defaults(func=cmd_bench)
    return parser


def config_from_args(args) -> MetricConfig:
    return MetricConfig(
        alpha=args.alpha,
        beta=args.beta,
        max_n=args.max_n,
        weights=args.weights,
        pairing=args.pairing,
        positional=not args.no_positional,
        position_mode=args.position_mode,
    )


def load_scorer(args, cfg: MetricConfig | None = None) -> Scorer:
    home = artifact_home()
    vocab = load_vocab(args.vocab or home / VOCAB_FILE)
    emb = load_embedding_table(args.emb or home / EMB_FILE)
    pos_path = Path(args.pos) if args.pos else home / POS_FILE
    if args.pos or pos_path.exists():
        pos = load_positional_table(pos_path)
    else:
        log.info("no positional table at %s; using sinusoidal positions", pos_path)
        pos = sinusoidal_positions(DEFAULT_MAX_LEN, emb.dim)
    return Scorer(vocab, emb, pos, cfg)


def _corpus_lines(args):
    if args.corpus_dir:
        lines, stats = ingest_corpus(args.corpus_dir, args.mode)
        print(stats.as_text(), file=sys.stderr)
        return lines
    return read_corpus(args.corpus)


def cmd_ingest(args) -> int:
    lines, stats = ingest_corpus(args.corpus_dir, args.mode)
    write_corpus(lines, args.out)
    print(stats.as_text(), file=sys.stderr)
    if stats.file_count == 0:
        print(f"warning: no .tex files ingested from {args.corpus_dir}", file=sys.stderr)
    return EXIT_OK


def cmd_train_tokenizer(args) -> int:
    vocab = train_bpe(_corpus_lines(args), args.vocab_size, args.min_pair_freq)
    out = args.out or artifact_home() / VOCAB_FILE
    save_vocab(vocab, out)
    print(f"vocab_size: {vocab.vocab_size}\nmerges: {len(vocab.merges)}\nwrote: {out}", file=sys.stderr)
    return EXIT_OK


def cmd_train_embeddings(args) -> int:
    vocab = load_vocab(args.vocab or artifact_home() / VOCAB_FILE)
    seqs = [encode(vocab, line) for line in _corpus_lines(args)]
    table = train_embeddings(seqs, vocab.vocab_size, dim=args.dim, window=args.window,
                             negatives=args.negatives, epochs=args.epochs, seed=args.seed)
    out = args.out or artifact_home() / EMB_FILE
    save_table(table, out)
    print(f"embeddings: {table.vocab_size}x{table.dim}\nwrote: {out}", file=sys.stderr)
    if args.pos_out:
        save_table(sinusoidal_positions(args.max_len, args.dim), args.pos_out)
        print(f"positions: {args.max_len}x{args.dim}\nwrote: {args.pos_out}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args) -> int:
    scorer = load_scorer(args, config_from_args(args))
    print(f"{scorer.score(args.ref, args.pred):.6f}\t{scorer.cfg.describe()}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = config_from_args(args)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    ablations = list(ABLATIONS) if args.ablation else []
    if ablations:
        metrics = list(dict.fromkeys(["bleu", *metrics, "texbleu"]))
    scorer = load_scorer(args, cfg) if "texbleu" in metrics or ablations else None
    records = load_dataset(args.dataset, lenient=args.lenient)
    report = run_evaluation(records, metrics, scorer, ablations, workers=args.workers)
    report.config = cfg
    print(report.render(args.format))
    return EXIT_OK


def benchmark(scorer: Scorer, ref: str = BENCH_REF, pred: str = BENCH_PRED, iterations: int = 10) -> list[float]:
    """Wall-clock seconds for each of ``iterations`` scoring calls."""
    if iterations < 1:
        raise DataError("iterations must be >= 1")
    times = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        scorer.score(ref, pred)
        times.append(time.perf_counter() - t0)
    return times


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    scorer = load_scorer(args, config_from_args(args))
    load_ms = (time.perf_counter() - t0) * 1e3
    times = benchmark(scorer, iterations=args.iterations)
    mean_ms = sum(times) / len(times) * 1e3
    print(f"load_ms: {load_ms:.3f}")
    print(f"iterations: {len(times)}")
    print(f"mean_ms: {mean_ms:.3f}")
    print(f"max_ms: {max(times) * 1e3:.3f}")
    print(f"config: {scorer.cfg.describe()}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ArtifactMismatchError as exc:
        print(f"texbleu: artifact mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except DataError as exc:
        print(f"texbleu: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"texbleu: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
