"""The TeXBLEU score.

Token distance blends an embedding term and a positional term::

    d(t1, t2) = (cos_dist(e1, e2) ** alpha + tanh(beta * |p1 - p2|)) / 2

n-gram similarity averages ``d`` over the tokens of ``L_n`` paired
n-grams and subtracts it from 1; the final score is the weighted geometric
mean of the n-gram similarities. There is no brevity penalty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .embeddings import EmbeddingTable, PositionalTable, cos_dist, cos_dist_matrix
from .errors import ArtifactMismatchError, DataError
from .tokenizer import TokenSeq, Vocab, encode

PAIRING_MODES = ("best", "index")
POSITION_MODES = ("vector", "index")


@dataclass(frozen=True)
class MetricConfig:
    alpha: float = 2.0
    beta: float = 0.1
    max_n: int = 3
    weights: Optional[tuple[float, ...]] = None
    pairing: str = "best"
    sim_floor: float = 1e-9
    positional: bool = True
    position_mode: str = "vector"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DataError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise DataError(f"beta must be > 0, got {self.beta}")
        if self.max_n < 1:
            raise DataError(f"max_n must be >= 1, got {self.max_n}")
        if not 0 < self.sim_floor < 1:
            raise DataError(f"sim_floor must lie in (0, 1), got {self.sim_floor}")
        if self.pairing not in PAIRING_MODES:
            raise DataError(f"pairing must be one of {PAIRING_MODES}, got {self.pairing!r}")
        if self.position_mode not in POSITION_MODES:
            raise DataError(f"position_mode must be one of {POSITION_MODES}, got {self.position_mode!r}")
        if self.weights is None:
            object.__setattr__(self, "weights", tuple([1.0 / self.max_n] * self.max_n))
        else:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.max_n:
                raise DataError(f"expected {self.max_n} weights, got {len(w)}")
            if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
                raise DataError(f"weights must be non-negative and sum to 1, got {w}")
            object.__setattr__(self, "weights", w)

    def replace(self, **changes) -> "MetricConfig":
        if "max_n" in changes and "weights" not in changes:
            changes["weights"] = None
        return replace(self, **changes)

    def describe(self) -> str:
        w = ",".join(f"{x:g}" for x in self.weights)
        pos = self.position_mode if self.positional else "off"
        return (f"pairing={self.pairing} alpha={self.alpha:g} beta={self.beta:g} "
                f"N={self.max_n} weights={w} positional={pos}")


@dataclass(frozen=True)
class EmbeddedToken:
    token: str
    embedding: np.ndarray = field(repr=False)
    position_vec: np.ndarray = field(repr=False)
    position_idx: int = 0


@dataclass(frozen=True)
class EmbeddedSeq:
    """Column-wise form of a list of ``EmbeddedToken`` (what scoring uses)."""
    tokens: list[str]
    emb: np.ndarray
    pos: np.ndarray
    idx: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> EmbeddedToken:
        return EmbeddedToken(self.tokens[i], self.emb[i], self.pos[i], int(self.idx[i]))

    @classmethod
    def from_tokens(cls, toks: Sequence[EmbeddedToken]) -> "EmbeddedSeq":
        if not toks:
            return cls([], np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0, dtype=np.int64))
        return cls(
            [t.token for t in toks],
            np.stack([np.asarray(t.embedding, dtype=np.float64) for t in toks]),
            np.stack([np.asarray(t.position_vec, dtype=np.float64) for t in toks]),
            np.array([t.position_idx for t in toks], dtype=np.int64),
        )


SeqLike = Union[EmbeddedSeq, Sequence[EmbeddedToken]]


def _as_seq(x: SeqLike) -> EmbeddedSeq:
    return x if isinstance(x, EmbeddedSeq) else EmbeddedSeq.from_tokens(list(x))


def embed(seq: TokenSeq, emb: EmbeddingTable, pos: PositionalTable) -> EmbeddedSeq:
    if emb.dim != pos.dim:
        raise ArtifactMismatchError(f"embedding dim {emb.dim} != positional dim {pos.dim}")
    return EmbeddedSeq(
        list(seq.tokens),
        emb.lookup(seq.ids).astype(np.float64),
        pos.lookup(seq.positions).astype(np.float64),
        np.asarray(seq.positions, dtype=np.int64),
    )


def _positional_term(p1: np.ndarray, p2: np.ndarray, i1, i2, cfg: MetricConfig):
    if cfg.position_mode == "index":
        gap = np.abs(np.subtract.outer(np.asarray(i1, dtype=np.float64), np.asarray(i2, dtype=np.float64)))
    else:
        gap = _l1_matrix(p1, p2)
    return np.tanh(cfg.beta * gap)


def _l1_matrix(a: np.ndarray, b: np.ndarray, budget: int = 1 << 22) -> np.ndarray:
    out = np.empty((a.shape[0], b.shape[0]))
    step = max(1, budget // max(1, b.shape[0] * a.shape[1]))
    for lo in range(0, a.shape[0], step):
        out[lo:lo + step] = np.abs(a[lo:lo + step, None, :] - b[None, :, :]).sum(axis=-1)
    return out


def token_distance(t1: EmbeddedToken, t2: EmbeddedToken, cfg: MetricConfig = MetricConfig()) -> float:
    """Distance in [0, 1] between two embedded tokens.

    With ``cfg.positional`` off only the embedding term remains (not halved),
    so the ceiling stays at 1.
    """
    e = np.asarray(t1.embedding)
    if e.shape != np.asarray(t2.embedding).shape or np.shape(t1.position_vec) != np.shape(t2.position_vec):
        raise DataError("embedded tokens have mismatched dimensions")
    emb_term = cos_dist(t1.embedding, t2.embedding) ** cfg.alpha
    if not cfg.positional:
        return emb_term
    if cfg.position_mode == "index":
        gap = abs(t1.position_idx - t2.position_idx)
    else:
        gap = float(np.abs(np.asarray(t1.position_vec, dtype=np.float64)
                           - np.asarray(t2.position_vec, dtype=np.float64)).sum())
    return (emb_term + math.tanh(cfg.beta * gap)) / 2.0


def distance_matrices(r: EmbeddedSeq, p: EmbeddedSeq, cfg: MetricConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(embedding_term, full_distance)`` for every (r, p) token pair."""
    _check_dims(r, p)
    emb_term = cos_dist_matrix(r.emb, p.emb) ** cfg.alpha
    if not cfg.positional:
        return emb_term, emb_term
    pos_term = _positional_term(r.pos, p.pos, r.idx, p.idx, cfg)
    return emb_term, (emb_term + pos_term) / 2.0


def aligned_distances(r: EmbeddedSeq, p: EmbeddedSeq, cfg: MetricConfig) -> np.ndarray:
    """``d(r[k], p[k])`` for k below the shorter length."""
    _check_dims(r, p)
    m = min(len(r), len(p))
    a, b = r.emb[:m], p.emb[:m]
    norms = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.einsum("kd,kd->k", a, b) / norms
    out = np.clip(1.0 - np.where(norms > 0, sim, 0.0), 0.0, 1.0) ** cfg.alpha
    if not cfg.positional:
        return out
    if cfg.position_mode == "index":
        gap = np.abs(r.idx[:m] - p.idx[:m]).astype(np.float64)
    else:
        gap = np.abs(r.pos[:m] - p.pos[:m]).sum(axis=1)
    return (out + np.tanh(cfg.beta * gap)) / 2.0


def _check_dims(r: EmbeddedSeq, p: EmbeddedSeq) -> None:
    if r.emb.shape[1] != p.emb.shape[1] or r.pos.shape[1] != p.pos.shape[1]:
        raise DataError("embedded sequences have mismatched dimensions")


def _window_sums(mat: np.ndarray, n: int, rows: int, cols: int) -> np.ndarray:
    # out[i, s] = sum_j mat[i + j, s + j]
    out = np.zeros((rows, cols))
    for j in range(n):
        out += mat[j:j + rows, j:j + cols]
    return out


class _PairTerms:
    """Distances between one ref/pred pair, computed lazily and shared across n."""

    def __init__(self, r: EmbeddedSeq, p: EmbeddedSeq, cfg: MetricConfig):
        self.r, self.p, self.cfg = r, p, cfg
        self._aligned = None
        self._matrices = None

    @property
    def aligned(self) -> np.ndarray:
        if self._aligned is None:
            self._aligned = aligned_distances(self.r, self.p, self.cfg)
        return self._aligned

    @property
    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        if self._matrices is None:
            self._matrices = distance_matrices(self.r, self.p, self.cfg)
        return self._matrices

    def similarity(self, n: int) -> Optional[float]:
        if n < 1:
            raise DataError(f"n must be >= 1, got {n}")
        len_r, len_p = len(self.r), len(self.p)
        n_grams = min(len_r, len_p) - n + 1
        if n_grams <= 0:
            return None
        if self.cfg.pairing == "index":
            aligned = self.aligned
            total = sum(aligned[j:j + n_grams].sum() for j in range(n))
        else:
            emb_term, dist = self.matrices
            p_starts = len_p - n + 1
            cost = _window_sums(emb_term, n, n_grams, p_starts)
            full = _window_sums(dist, n, n_grams, p_starts)
            offsets = np.arange(p_starts)
            total = 0.0
            for i in range(n_grams):
                row = cost[i]
                tied = np.flatnonzero(row <= row.min() + 1e-12)
                best = tied[np.argmin(np.abs(offsets[tied] - i))]
                total += full[i, best]
        sim = 1.0 - total / (n_grams * n)
        return float(min(1.0, max(0.0, sim)))


def ngram_similarity(r: SeqLike, p: SeqLike, n: int, cfg: MetricConfig = MetricConfig()) -> Optional[float]:
    """Similarity of the n-grams of ``r`` and ``p`` in [0, 1].

    Returns ``None`` when either side is too short to hold an n-gram.

    ``cfg.pairing == "index"`` pairs token k of ``r`` with token k of ``p``.
    ``"best"`` pairs each n-gram of ``r`` with the n-gram of ``p`` that has
    the lowest summed embedding term (ties go to the nearest offset), then
    charges the full distance, positional term included.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    return _PairTerms(_as_seq(r), _as_seq(p), cfg).similarity(n)


def aggregate(sims: Sequence[Optional[float]], cfg: MetricConfig = MetricConfig()) -> float:
    """Weighted geometric mean of the defined n-gram similarities.

    Undefined orders are dropped and the remaining weights renormalized.
    """
    pairs = [(w, s) for w, s in zip(cfg.weights, sims) if s is not None]
    total_w = sum(w for w, _ in pairs)
    if not pairs or total_w <= 0:
        return 0.0
    log_sum = sum(w * math.log(min(1.0, max(cfg.sim_floor, s))) for w, s in pairs)
    return float(min(1.0, math.exp(log_sum / total_w)))


class Scorer:
    """A vocab, embedding table and positional table bound together.

    Binding checks that the tables fit the vocab; a mismatch raises
    ``ArtifactMismatchError``. Instances are read-only after construction
    and safe to share between threads.
    """

    def __init__(self, vocab: Vocab, emb: EmbeddingTable, pos: PositionalTable,
                 cfg: MetricConfig | None = None):
        check_binding(vocab, emb, pos)
        self.vocab = vocab
        self.emb = emb
        self.pos = pos
        self.cfg = cfg or MetricConfig()

    def with_config(self, cfg: MetricConfig) -> "Scorer":
        return Scorer(self.vocab, self.emb, self.pos, cfg)

    def embed_text(self, text: str) -> EmbeddedSeq:
        return embed(encode(self.vocab, text), self.emb, self.pos)

    def ngram_sims(self, ref: EmbeddedSeq, pred: EmbeddedSeq) -> list[Optional[float]]:
        terms = _PairTerms(ref, pred, self.cfg)
        return [terms.similarity(n) for n in range(1, self.cfg.max_n + 1)]

    def score_sequences(self, ref: TokenSeq, pred: TokenSeq) -> float:
        if len(ref) == 0 and len(pred) == 0:
            return 1.0
        if len(ref) == 0 or len(pred) == 0:
            return 0.0
        r = embed(ref, self.emb, self.pos)
        p = embed(pred, self.emb, self.pos)
        return aggregate(self.ngram_sims(r, p), self.cfg)

    def score(self, ref: str, pred: str) -> float:
        return self.score_sequences(encode(self.vocab, ref), encode(self.vocab, pred))

    __call__ = score


def check_binding(vocab: Vocab, emb: EmbeddingTable, pos: PositionalTable) -> None:
    if vocab is None or emb is None or pos is None:
        raise ArtifactMismatchError("vocab, embedding table and positional table are all required")
    if emb.vocab_size != vocab.vocab_size:
        raise ArtifactMismatchError(
            f"embedding table has {emb.vocab_size} rows but the vocab has {vocab.vocab_size} tokens")
    if emb.dim != pos.dim:
        raise ArtifactMismatchError(f"embedding dim {emb.dim} != positional dim {pos.dim}")


def texbleu(ref: str, pred: str, vocab: Vocab, emb: EmbeddingTable, pos: PositionalTable,
            cfg: MetricConfig | None = None) -> float:
    """Score ``pred`` against ``ref``; 1 means identical after normalization."""
    return Scorer(vocab, emb, pos, cfg).score(ref, pred)
