"""Score evaluation datasets with every metric and correlate the scores
with human ratings (Pearson and Spearman, per rater group).

Dataset format: one JSON object per line with ``ref`` and ``pred``
strings, an optional ``human`` field holding one list of 1-5 ratings per
rater group, and an optional ``scores`` object of externally computed
metric columns (e.g. a sacreBLEU value) that are correlated as-is.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .baselines import bleu, cer, rouge1, wer
from .embeddings import EmbeddingTable
from .errors import DataError
from .metric import MetricConfig, Scorer
from .tokenizer import ALPHABET_SIZE, byte_vocab

log = logging.getLogger(__name__)

BASELINE_METRICS: dict[str, Callable[[str, str], float]] = {
    "bleu": bleu,
    "rouge1": rouge1,
    "cer": cer,
    "wer": wer,
}
ALL_METRICS = ("bleu", "rouge1", "cer", "wer", "texbleu")
# Table-2 style rows: (name, positional term on, custom tokenizer on)
ABLATIONS = {
    "no-pos": ("TeXBLEU, tokenizer, no positional", False, True),
    "no-tok": ("TeXBLEU, positional, byte tokenizer", True, False),
}
LABELS = {
    "bleu": "BLEU",
    "rouge1": "ROUGE-1",
    "cer": "CER",
    "wer": "WER",
    "texbleu": "TeXBLEU",
}


@dataclass(frozen=True)
class EvalRecord:
    ref: str
    pred: str
    human: Optional[tuple[tuple[int, ...], ...]] = None
    scores: dict[str, float] = field(default_factory=dict)

    def group_mean(self, group: int) -> Optional[float]:
        if self.human is None or group >= len(self.human):
            return None
        ratings = self.human[group]
        return sum(ratings) / len(ratings)


def _parse_record(obj) -> EvalRecord:
    if not isinstance(obj, dict):
        raise DataError("record must be a JSON object")
    ref, pred = obj.get("ref"), obj.get("pred")
    if not isinstance(ref, str) or not ref.strip():
        raise DataError("'ref' must be a non-empty string")
    if not isinstance(pred, str):
        raise DataError("'pred' must be a string")
    human = obj.get("human")
    if human is not None:
        if not isinstance(human, list) or not human:
            raise DataError("'human' must be a non-empty list of rater groups")
        groups = []
        for g, ratings in enumerate(human):
            if not isinstance(ratings, list) or not ratings:
                raise DataError(f"human group {g} must be a non-empty list of ratings")
            for s in ratings:
                if isinstance(s, bool) or not isinstance(s, int) or not 1 <= s <= 5:
                    raise DataError(f"human score {s!r} in group {g} is not an integer in 1..5")
            groups.append(tuple(ratings))
        human = tuple(groups)
    scores = obj.get("scores") or {}
    if not isinstance(scores, dict):
        raise DataError("'scores' must be an object of metric name -> number")
    for k, v in scores.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise DataError(f"external score {k!r} must be a finite number, got {v!r}")
    return EvalRecord(ref, pred, human, {k: float(v) for k, v in scores.items()})


def load_dataset(path: str | os.PathLike, lenient: bool = False) -> list[EvalRecord]:
    """Read and validate a line-delimited JSON dataset.

    Malformed lines raise a ``DataError`` listing every bad line number,
    unless ``lenient`` is set, in which case they are skipped with a warning.
    """
    records, problems = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(_parse_record(json.loads(line)))
            except json.JSONDecodeError as exc:
                problems.append(f"line {lineno}: invalid JSON ({exc.msg})")
            except DataError as exc:
                problems.append(f"line {lineno}: {exc}")
    if problems:
        if not lenient:
            raise DataError("malformed dataset records:\n  " + "\n  ".join(problems))
        for p in problems:
            log.warning("skipping %s", p)
    if not records:
        log.warning("dataset %s contains no records", path)
    return records


# --- correlation ---------------------------------------------------------

def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise DataError("correlation needs at least two observations")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Sample Pearson r, or ``None`` when either input has zero variance."""
    x, y = _check_pair(x, y)
    # exact test: mean subtraction leaves rounding noise on constant input
    if x.min() == x.max() or y.min() == y.max():
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank span."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    out = np.empty(x.size)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        out[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return out


def spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Spearman rho: Pearson r of the average ranks."""
    x, y = _check_pair(x, y)
    return pearson(ranks(x), ranks(y))


# --- evaluation ----------------------------------------------------------

@dataclass
class MetricRow:
    name: str
    label: str
    mean_score: Optional[float]
    # group name -> (pearson, spearman); None marks an undefined value
    correlations: dict[str, tuple[Optional[float], Optional[float]]] = field(default_factory=dict)

    @property
    def average(self) -> Optional[float]:
        vals = [v for pair in self.correlations.values() for v in pair if v is not None]
        return sum(vals) / len(vals) if vals else None


@dataclass
class CorrelationReport:
    rows: list[MetricRow]
    groups: list[str]
    n_records: int
    config: MetricConfig

    def row(self, name: str) -> MetricRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "n_records": self.n_records,
            "groups": list(self.groups),
            "config": {
                "pairing": cfg.pairing,
                "alpha": cfg.alpha,
                "beta": cfg.beta,
                "max_n": cfg.max_n,
                "weights": list(cfg.weights),
                "positional": cfg.position_mode if cfg.positional else "off",
            },
            "metrics": [
                {
                    "name": r.name,
                    "label": r.label,
                    "mean_score": r.mean_score,
                    "correlations": {
                        g: {"pearson": p, "spearman": s} for g, (p, s) in r.correlations.items()
                    },
                    "average": r.average,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def _columns(self) -> list[str]:
        cols = []
        for g in self.groups:
            cols += [f"{g}-pearson", f"{g}-spearman"]
        return cols

    def _cells(self, r: MetricRow) -> list[Optional[float]]:
        cells = []
        for g in self.groups:
            cells += list(r.correlations.get(g, (None, None)))
        return cells

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "mean_score", *self._columns(), "average"])
        for r in self.rows:
            vals = [r.mean_score, *self._cells(r), r.average]
            w.writerow([r.name, *("undefined" if v is None else repr(v) for v in vals)])
        return buf.getvalue()

    def to_text(self) -> str:
        head = ["metric", "score", *self._columns()]
        if self.groups:
            head.append("average")
        body = []
        for r in self.rows:
            vals = [r.mean_score, *self._cells(r)]
            if self.groups:
                vals.append(r.average)
            body.append([r.label] + ["undef" if v is None else f"{v:.4f}" for v in vals])
        widths = [max(len(row[i]) for row in [head, *body]) for i in range(len(head))]
        fmt = lambda row: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
        lines = [f"# records={self.n_records} {self.config.describe()}", fmt(head),
                 "  ".join("-" * w for w in widths)]
        lines += [fmt(row) for row in body]
        return "\n".join(lines)

    def render(self, fmt: str = "text") -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "text":
            return self.to_text()
        raise DataError(f"unknown report format {fmt!r}")


def ablation_scorer(scorer: Scorer, variant: str) -> Scorer:
    """Scorer for one ablation row.

    ``no-pos`` drops the positional term (distance is the embedding term
    alone). ``no-tok`` swaps the trained vocab for the merge-free byte vocab;
    byte ids coincide with the first rows of the trained embedding table.
    """
    _, positional, custom_tok = ABLATIONS[variant]
    cfg = scorer.cfg.replace(positional=positional)
    if custom_tok:
        return scorer.with_config(cfg)
    emb = EmbeddingTable(scorer.emb.rows[:ALPHABET_SIZE])
    return Scorer(byte_vocab(), emb, scorer.pos, cfg)


def _score_all(fn: Callable[[str, str], float], records: Sequence[EvalRecord], workers: int) -> list[float]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda r: fn(r.ref, r.pred), records))
    return [fn(r.ref, r.pred) for r in records]


def _correlate(values: list[float], records: Sequence[EvalRecord], n_groups: int) -> dict:
    out = {}
    for g in range(n_groups):
        pairs = [(v, r.group_mean(g)) for v, r in zip(values, records) if r.group_mean(g) is not None]
        name = f"H{g + 1}"
        if len(pairs) < 2:
            out[name] = (None, None)
            continue
        xs, hs = zip(*pairs)
        out[name] = (pearson(xs, hs), spearman(xs, hs))
    return out


def run_evaluation(
    records: Sequence[EvalRecord],
    metrics: Iterable[str] = ALL_METRICS,
    scorer: Scorer | None = None,
    ablations: Iterable[str] = (),
    workers: int = 1,
) -> CorrelationReport:
    """Score every record with every selected metric and correlate the
    scores with each rater group's mean rating.

    ``metrics`` may name built-in metrics or external columns present in the
    records' ``scores``. ``ablations`` adds extra TeXBLEU rows (``no-pos``,
    ``no-tok``). Records without human ratings still contribute mean scores.
    """
    metrics = list(dict.fromkeys(metrics))
    ablations = list(dict.fromkeys(ablations))
    if not metrics and not ablations:
        raise DataError("select at least one metric")
    needs_scorer = "texbleu" in metrics or ablations
    if needs_scorer and scorer is None:
        raise DataError("TeXBLEU rows need a bound Scorer (vocab + tables)")
    for a in ablations:
        if a not in ABLATIONS:
            raise DataError(f"unknown ablation {a!r}; choose from {sorted(ABLATIONS)}")

    n_groups = max((len(r.human) for r in records if r.human), default=0)
    columns: list[tuple[str, str, list[float]]] = []
    for name in metrics:
        if name in BASELINE_METRICS:
            vals = _score_all(BASELINE_METRICS[name], records, workers)
        elif name == "texbleu":
            vals = _score_all(scorer.score, records, workers)
        else:
            missing = [i for i, r in enumerate(records) if name not in r.scores]
            if missing:
                raise DataError(f"metric {name!r} is neither built in nor present on records {missing[:5]}")
            vals = [r.scores[name] for r in records]
        columns.append((name, LABELS.get(name, name), vals))
    for a in ablations:
        vals = _score_all(ablation_scorer(scorer, a).score, records, workers)
        columns.append((f"texbleu[{a}]", ABLATIONS[a][0], vals))

    rows = []
    for name, label, vals in columns:
        mean = sum(vals) / len(vals) if vals else None
        corr = _correlate(vals, records, n_groups) if n_groups else {}
        rows.append(MetricRow(name, label, mean, corr))
    cfg = scorer.cfg if scorer is not None else MetricConfig()
    return CorrelationReport(rows, [f"H{g + 1}" for g in range(n_groups)], len(records), cfg)
