"""Token-embedding and positional tables, their binary format, and a
small skip-gram trainer for producing embeddings from a local corpus.

Binary table layout (little endian)::

    b"TXBL" | version u16 | kind u8 | rows u32 | dim u32 | rows*dim float32
"""
from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from typing import ClassVar, Iterable, Sequence

import numpy as np

from .errors import DataError, FormatError

log = logging.getLogger(__name__)

MAGIC = b"TXBL"
TABLE_VERSION = 1
KIND_EMBEDDING = 0
KIND_POSITIONAL = 1
_HEADER = struct.Struct("<4sHBII")

DEFAULT_DIM = 128
DEFAULT_WINDOW = 5
DEFAULT_NEGATIVES = 5
DEFAULT_EPOCHS = 5
DEFAULT_MAX_LEN = 1024  # same length as GPT-2's wpe


@dataclass(frozen=True, eq=False)
class _Table:
    rows: np.ndarray
    kind: ClassVar[int]

    def __post_init__(self):
        arr = np.ascontiguousarray(self.rows, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"table must be a non-empty 2-D matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise DataError("table contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other) -> bool:
        return (type(self) is type(other)
                and self.rows.shape == other.rows.shape
                and self.rows.tobytes() == other.rows.tobytes())

    __hash__ = None


class EmbeddingTable(_Table):
    kind = KIND_EMBEDDING

    @property
    def vocab_size(self) -> int:
        return self.rows.shape[0]

    def lookup(self, ids: Sequence[int]) -> np.ndarray:
        return self.rows[np.asarray(ids, dtype=np.int64)]


class PositionalTable(_Table):
    kind = KIND_POSITIONAL

    @property
    def max_len(self) -> int:
        return self.rows.shape[0]

    def lookup(self, positions: Sequence[int]) -> np.ndarray:
        """Rows for ``positions``; indices past the end reuse the last row."""
        idx = np.minimum(np.asarray(positions, dtype=np.int64), self.max_len - 1)
        return self.rows[idx]


def sinusoidal_positions(max_len: int = DEFAULT_MAX_LEN, dim: int = DEFAULT_DIM) -> PositionalTable:
    """Fixed transformer-style table: sin on even columns, cos on odd ones."""
    if dim < 2 or dim % 2:
        raise DataError(f"sinusoidal positions need an even dim >= 2, got {dim}")
    if max_len < 1:
        raise DataError(f"max_len must be >= 1, got {max_len}")
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    freq = np.power(10000.0, -np.arange(0, dim, 2, dtype=np.float64) / dim)
    table = np.empty((max_len, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(pos * freq)
    table[:, 1::2] = np.cos(pos * freq)
    return PositionalTable(table)


def cos_dist(e1, e2) -> float:
    """``1 - cosine similarity``, clamped to [0, 1].

    A zero vector has no direction, so its distance to anything is 1.
    """
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 1.0
    return float(min(1.0, max(0.0, 1.0 - np.dot(a, b) / (na * nb))))


def cos_dist_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise clamped cosine distance between the rows of ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise DataError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.outer(na, nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = (a @ b.T) / denom
    sim = np.where(denom > 0, sim, 0.0)
    return np.clip(1.0 - sim, 0.0, 1.0)


# --- persistence ---------------------------------------------------------

def dumps_table(table: _Table) -> bytes:
    rows, dim = table.rows.shape
    return _HEADER.pack(MAGIC, TABLE_VERSION, table.kind, rows, dim) + table.rows.astype("<f4").tobytes()


def save_table(table: _Table, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_table(table))


def loads_table(data: bytes, expect_kind: int | None = None) -> _Table:
    if len(data) < _HEADER.size:
        raise FormatError(f"table file too short for header ({len(data)} bytes)")
    magic, version, kind, rows, dim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
    if version != TABLE_VERSION:
        raise FormatError(f"unsupported table version {version}; expected {TABLE_VERSION}")
    if kind not in (KIND_EMBEDDING, KIND_POSITIONAL):
        raise FormatError(f"unknown table kind {kind}")
    if expect_kind is not None and kind != expect_kind:
        want = "embedding" if expect_kind == KIND_EMBEDDING else "positional"
        raise FormatError(f"expected a {want} table, file holds kind {kind}")
    payload = len(data) - _HEADER.size
    if payload != rows * dim * 4:
        raise FormatError(f"header declares {rows}x{dim} floats ({rows * dim * 4} bytes), payload has {payload}")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(rows, dim)
    cls = EmbeddingTable if kind == KIND_EMBEDDING else PositionalTable
    try:
        return cls(arr.astype(np.float32))
    except DataError as exc:
        raise FormatError(str(exc)) from None


def load_table(path: str | os.PathLike, expect_kind: int | None = None) -> _Table:
    with open(path, "rb") as fh:
        return loads_table(fh.read(), expect_kind)


def load_embedding_table(path) -> EmbeddingTable:
    return load_table(path, KIND_EMBEDDING)


def load_positional_table(path) -> PositionalTable:
    return load_table(path, KIND_POSITIONAL)


# --- skip-gram with negative sampling ------------------------------------

def _training_pairs(corpus: Iterable, window: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    centers, contexts = [], []
    counts: dict[int, int] = {}
    for seq in corpus:
        ids = np.asarray(getattr(seq, "ids", seq), dtype=np.int64)
        for t in ids.tolist():
            counts[t] = counts.get(t, 0) + 1
        for off in range(1, window + 1):
            if len(ids) <= off:
                break
            centers += [ids[:-off], ids[off:]]
            contexts += [ids[off:], ids[:-off]]
    if not centers:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    uniq = np.array(sorted(counts), dtype=np.int64)
    return np.concatenate(centers), np.concatenate(contexts), np.stack([uniq, [counts[u] for u in uniq.tolist()]])


def train_embeddings(
    corpus: Iterable,
    vocab_size: int,
    dim: int = DEFAULT_DIM,
    window: int = DEFAULT_WINDOW,
    negatives: int = DEFAULT_NEGATIVES,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 42,
    lr: float = 0.025,
    batch_size: int = 256,
) -> EmbeddingTable:
    """Skip-gram with negative sampling over token-id sequences.

    ``corpus`` yields ``TokenSeq`` objects (or plain id lists). Negatives
    come from the unigram distribution raised to 0.75. Tokens that never
    occur keep their small random initial vectors. The result depends only
    on the inputs and ``seed``.
    """
    if dim < 2:
        raise DataError(f"dim must be >= 2, got {dim}")
    if window < 1 or negatives < 1 or epochs < 1:
        raise DataError("window, negatives and epochs must all be >= 1")
    centers, contexts, freq = _training_pairs(corpus, window)
    if centers.size == 0:
        raise DataError("corpus yields no (center, context) pairs; need sequences of 2+ tokens")
    if int(freq[0].max()) >= vocab_size or int(freq[0].min()) < 0:
        raise DataError(f"corpus contains token ids outside 0..{vocab_size - 1}")

    rng = np.random.default_rng(seed)
    w_in = (rng.random((vocab_size, dim)) - 0.5) / dim
    w_out = np.zeros((vocab_size, dim))
    noise = np.zeros(vocab_size)
    noise[freq[0].astype(np.int64)] = freq[1] ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    n = centers.size
    steps = epochs * ((n + batch_size - 1) // batch_size)
    step = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        loss = 0.0
        for start in range(0, n, batch_size):
            rate = lr * max(1e-4, 1.0 - step / steps)
            step += 1
            idx = order[start:start + batch_size]
            c, o = centers[idx], contexts[idx]
            neg = np.searchsorted(noise_cdf, rng.random((idx.size, negatives)), side="right")
            neg = np.minimum(neg, vocab_size - 1)

            v = w_in[c]
            u_pos = w_out[o]
            u_neg = w_out[neg]
            s_pos = _sigmoid(np.einsum("bd,bd->b", v, u_pos))
            s_neg = _sigmoid(np.einsum("bkd,bd->bk", u_neg, v))
            loss -= np.log(s_pos + 1e-12).sum() + np.log(1.0 - s_neg + 1e-12).sum()

            g_pos = s_pos - 1.0
            grad_v = g_pos[:, None] * u_pos + np.einsum("bk,bkd->bd", s_neg, u_neg)
            np.add.at(w_out, o, -rate * g_pos[:, None] * v)
            np.add.at(w_out, neg.ravel(), -rate * (s_neg[:, :, None] * v[:, None, :]).reshape(-1, dim))
            np.add.at(w_in, c, -rate * grad_v)
        log.info("epoch %d/%d: mean loss %.4f", epoch + 1, epochs, loss / n)
    return EmbeddingTable(w_in)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))
