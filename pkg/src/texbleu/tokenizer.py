"""Byte-level BPE tokenizer trained on normalized LaTeX lines.

Words are the space-separated pieces of normalized text; merges never cross
a word boundary and there is no end-of-word symbol. The base alphabet is
all 256 byte values (ids 0-255), so any input can be encoded. Merge ``i``
produces token id ``256 + i``.
"""
from __future__ import annotations

import heapq
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Union

from .corpus import CorpusLine
from .errors import DataError, FormatError
from .textnorm import NormalizedText, normalize_spacing

ALPHABET_SIZE = 256
DEFAULT_VOCAB_SIZE = 30_000
DEFAULT_MIN_PAIR_FREQ = 2
VOCAB_FORMAT_VERSION = "v1"
_MAGIC = "texbleu-vocab"

Pair = tuple[bytes, bytes]
_BASE = [bytes([b]) for b in range(ALPHABET_SIZE)]


@dataclass
class Vocab:
    merges: list[Pair]
    id_to_token: list[bytes]
    token_to_id: dict[bytes, int] = field(repr=False)
    _ranks: dict[Pair, int] = field(init=False, repr=False, compare=False)
    _cache: dict[bytes, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._cache = {}

    @classmethod
    def from_merges(cls, merges: Iterable[Pair]) -> "Vocab":
        merges = list(merges)
        tokens = list(_BASE)
        index = {t: i for i, t in enumerate(tokens)}
        for left, right in merges:
            if left not in index or right not in index:
                raise DataError(f"merge operand missing for {left!r} + {right!r}")
            new = left + right
            if new in index:
                raise DataError(f"merge {left!r} + {right!r} duplicates token {new!r}")
            index[new] = len(tokens)
            tokens.append(new)
        return cls(merges, tokens, index)

    @property
    def vocab_size(self) -> int:
        return len(self.id_to_token)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def display(self, token_id: int) -> str:
        return self.id_to_token[token_id].decode("utf-8", errors="backslashreplace")

    def encode_word(self, word: bytes) -> tuple[int, ...]:
        hit = self._cache.get(word)
        if hit is not None:
            return hit
        symbols = [word[i:i + 1] for i in range(len(word))]
        ranks = self._ranks
        while len(symbols) > 1:
            best = min(
                (ranks.get(p, len(ranks)) for p in zip(symbols, symbols[1:])),
                default=len(ranks),
            )
            if best == len(ranks):
                break
            symbols = _merge_pair(symbols, self.merges[best])
        ids = tuple(self.token_to_id[s] for s in symbols)
        self._cache[word] = ids
        return ids


def byte_vocab() -> Vocab:
    """Merge-free vocabulary: every byte is its own token."""
    return Vocab.from_merges([])


def _merge_pair(symbols: list[bytes], pair: Pair) -> list[bytes]:
    left, right = pair
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


@dataclass(frozen=True)
class TokenSeq:
    tokens: list[str]
    ids: list[int]
    positions: list[int]
    starts_word: list[bool]

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def empty(cls) -> "TokenSeq":
        return cls([], [], [], [])


TextLike = Union[str, NormalizedText, CorpusLine]


def _as_text(item: TextLike) -> str:
    if isinstance(item, CorpusLine):
        return item.text.text
    if isinstance(item, NormalizedText):
        return item.text
    return normalize_spacing(item).text


def train_bpe(
    corpus: Iterable[TextLike],
    vocab_size: int = DEFAULT_VOCAB_SIZE,
    min_pair_freq: int = DEFAULT_MIN_PAIR_FREQ,
) -> Vocab:
    """Learn BPE merges from ``corpus`` until ``vocab_size`` tokens exist.

    The most frequent adjacent pair is merged first. Equal frequencies are
    resolved by the smallest concatenated byte string, then the smallest
    left operand. A pair whose concatenation is already a token is never
    merged (keeps token strings unique). Training stops early when no pair
    reaches ``min_pair_freq``.
    """
    if vocab_size < ALPHABET_SIZE:
        raise DataError(f"vocab_size {vocab_size} is below the byte alphabet size {ALPHABET_SIZE}")
    counts: Counter[bytes] = Counter()
    for item in corpus:
        text = _as_text(item)
        counts.update(w.encode("utf-8") for w in text.split(" ") if w)
    if not counts:
        raise DataError("cannot train a tokenizer on an empty corpus")

    word_keys = sorted(counts)
    words = [[w[i:i + 1] for i in range(len(w))] for w in word_keys]
    freqs = [counts[w] for w in word_keys]

    pair_counts: dict[Pair, int] = defaultdict(int)
    where: dict[Pair, set[int]] = defaultdict(set)
    for wi, syms in enumerate(words):
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += freqs[wi]
            where[pair].add(wi)

    heap = [(-c, a + b, a, b) for (a, b), c in pair_counts.items()]
    heapq.heapify(heap)

    token_index = {t: i for i, t in enumerate(_BASE)}
    merges: list[Pair] = []
    while len(token_index) < vocab_size and heap:
        neg, _, a, b = heapq.heappop(heap)
        pair = (a, b)
        if pair_counts.get(pair, 0) != -neg:
            continue  # stale entry
        if -neg < min_pair_freq:
            break
        if a + b in token_index:
            continue
        merges.append(pair)
        token_index[a + b] = len(token_index)

        touched: dict[Pair, int] = {}
        for wi in sorted(where.pop(pair)):
            syms = words[wi]
            f = freqs[wi]
            for p in zip(syms, syms[1:]):
                pair_counts[p] -= f
                touched[p] = pair_counts[p]
                where[p].discard(wi)
            syms = _merge_pair(syms, pair)
            words[wi] = syms
            for p in zip(syms, syms[1:]):
                pair_counts[p] += f
                touched[p] = pair_counts[p]
                where[p].add(wi)
        pair_counts.pop(pair, None)
        for p, c in touched.items():
            if c <= 0:
                pair_counts.pop(p, None)
                where.pop(p, None)
            elif p != pair:
                heapq.heappush(heap, (-c, p[0] + p[1], p[0], p[1]))

    return Vocab.from_merges(merges)


def encode(vocab: Vocab, text: TextLike) -> TokenSeq:
    """Normalize ``text`` and split it into vocabulary tokens."""
    norm = _as_text(text)
    ids: list[int] = []
    starts: list[bool] = []
    for word in norm.split(" "):
        if not word:
            continue
        wid = vocab.encode_word(word.encode("utf-8"))
        ids.extend(wid)
        starts.extend([True] + [False] * (len(wid) - 1))
    return TokenSeq(
        tokens=[vocab.display(i) for i in ids],
        ids=ids,
        positions=list(range(len(ids))),
        starts_word=starts,
    )


def decode(vocab: Vocab, seq: TokenSeq) -> str:
    """Rebuild the normalized text of ``seq``; raises ``DataError`` on an unknown id."""
    words: list[bytearray] = []
    for tid, start in zip(seq.ids, seq.starts_word):
        if not 0 <= tid < vocab.vocab_size:
            raise DataError(f"token id {tid} is outside the vocabulary (size {vocab.vocab_size})")
        if start or not words:
            words.append(bytearray())
        words[-1] += vocab.id_to_token[tid]
    return " ".join(w.decode("utf-8", errors="replace") for w in words)


# --- persistence ---------------------------------------------------------

def _escape(token: bytes) -> str:
    out = []
    for b in token:
        if b == 0x5C:
            out.append("\\\\")
        elif 0x21 <= b <= 0x7E:
            out.append(chr(b))
        else:
            out.append(f"\\x{b:02x}")
    return "".join(out)


def _unescape(field_: str, lineno: int) -> bytes:
    out = bytearray()
    i = 0
    while i < len(field_):
        ch = field_[i]
        if ch == "\\":
            nxt = field_[i + 1:i + 2]
            if nxt == "\\":
                out.append(0x5C)
                i += 2
                continue
            if nxt == "x":
                try:
                    out.append(int(field_[i + 2:i + 4], 16))
                except ValueError:
                    raise FormatError(f"line {lineno}: bad escape in {field_!r}") from None
                if len(field_[i + 2:i + 4]) != 2:
                    raise FormatError(f"line {lineno}: truncated escape in {field_!r}")
                i += 4
                continue
            raise FormatError(f"line {lineno}: bad escape in {field_!r}")
        if not 0x21 <= ord(ch) <= 0x7E:
            raise FormatError(f"line {lineno}: unescaped character {ch!r}")
        out.append(ord(ch))
        i += 1
    if not out:
        raise FormatError(f"line {lineno}: empty token")
    return bytes(out)


def dumps_vocab(vocab: Vocab) -> str:
    lines = [f"{_MAGIC} {VOCAB_FORMAT_VERSION} {vocab.vocab_size}"]
    lines += [f"{_escape(a)}\t{_escape(b)}" for a, b in vocab.merges]
    lines.append("")
    lines += [f"{i}\t{_escape(t)}" for i, t in enumerate(vocab.id_to_token)]
    return "\n".join(lines) + "\n"


def save_vocab(vocab: Vocab, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps_vocab(vocab))


def loads_vocab(text: str) -> Vocab:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("line 1: empty vocab file")
    head = lines[0].split(" ")
    if len(head) != 3 or head[0] != _MAGIC:
        raise FormatError(f"line 1: expected header '{_MAGIC} {VOCAB_FORMAT_VERSION} <size>', got {lines[0]!r}")
    if head[1] != VOCAB_FORMAT_VERSION:
        raise FormatError(f"line 1: unsupported vocab version {head[1]!r}; expected {VOCAB_FORMAT_VERSION}")
    try:
        size = int(head[2])
    except ValueError:
        raise FormatError(f"line 1: bad vocab size {head[2]!r}") from None
    if size < ALPHABET_SIZE:
        raise FormatError(f"line 1: vocab size {size} below alphabet size {ALPHABET_SIZE}")

    try:
        blank = lines.index("", 1)
    except ValueError:
        raise FormatError(f"line {len(lines) + 1}: missing blank separator after merges (truncated file?)") from None
    merges = []
    for lineno, line in enumerate(lines[1:blank], start=2):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected '<left>\\t<right>', got {line!r}")
        merges.append((_unescape(parts[0], lineno), _unescape(parts[1], lineno)))
    if len(merges) != size - ALPHABET_SIZE:
        raise FormatError(
            f"line {blank + 1}: header declares {size} tokens but {len(merges)} merges were read")

    entries = lines[blank + 1:]
    if len(entries) != size:
        raise FormatError(
            f"line {blank + 2 + len(entries)}: expected {size} id lines, found {len(entries)} (truncated file?)")
    tokens = []
    for offset, line in enumerate(entries):
        lineno = blank + 2 + offset
        parts = line.split("\t")
        if len(parts) != 2 or parts[0] != str(offset):
            raise FormatError(f"line {lineno}: expected '{offset}\\t<token>', got {line!r}")
        tokens.append(_unescape(parts[1], lineno))
    try:
        vocab = Vocab.from_merges(merges)
    except DataError as exc:
        raise FormatError(f"inconsistent merges: {exc}") from None
    if vocab.id_to_token != tokens:
        bad = next(i for i, (x, y) in enumerate(zip(vocab.id_to_token, tokens)) if x != y)
        raise FormatError(f"line {blank + 2 + bad}: token does not match the merge table")
    return vocab


def load_vocab(path: str | os.PathLike) -> Vocab:
    with open(path, encoding="ascii", errors="strict", newline="\n") as fh:
        try:
            text = fh.read()
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: vocab files are ASCII ({exc})") from None
    return loads_vocab(text)
