"""Turn a directory of ``.tex`` sources into normalized training lines."""
from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .textnorm import NormalizedText, normalize_spacing

log = logging.getLogger(__name__)

MODES = ("whole", "math")

_COMMENT = re.compile(r"(?<!\\)%.*")
_MATH_OPEN = re.compile(r"\$\$|\$|\\\[|\\begin\{equation\*?\}")
_MATH_CLOSE = {
    "$$": re.compile(r"\$\$"),
    "$": re.compile(r"(?<!\\)\$"),
    "\\[": re.compile(r"\\\]"),
    "\\begin{equation}": re.compile(r"\\end\{equation\}"),
    "\\begin{equation*}": re.compile(r"\\end\{equation\*\}"),
}


@dataclass(frozen=True)
class CorpusLine:
    text: NormalizedText
    source: str
    line_no: int


@dataclass
class CorpusStats:
    file_count: int = 0
    line_count: int = 0
    char_count: int = 0
    lossy_decodes: int = 0
    dropped_spans: int = 0
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def skipped_files(self) -> int:
        return len(self.skipped)

    @property
    def files_visited(self) -> int:
        return self.file_count + self.skipped_files

    def as_text(self) -> str:
        rows = [
            ("files", self.file_count),
            ("skipped", self.skipped_files),
            ("lines", self.line_count),
            ("chars", self.char_count),
            ("lossy_decodes", self.lossy_decodes),
            ("dropped_math_spans", self.dropped_spans),
        ]
        out = [f"{k}: {v}" for k, v in rows]
        out += [f"skip {path}: {why}" for path, why in self.skipped.items()]
        return "\n".join(out)


def strip_comments(tex: str) -> str:
    """Drop every unescaped ``%`` and the rest of its line.

    Line breaks are kept, so line numbering is unchanged.

    >>> strip_comments("a % note\\nb")
    'a \\nb'
    """
    return _COMMENT.sub("", tex)


def extract_math_segments(tex: str, stats: CorpusStats | None = None) -> list[str]:
    """Return the bodies of ``$..$``, ``$$..$$``, ``\\[..\\]`` and equation
    environments in document order.

    An opener without a closer is dropped (and counted in ``stats``); the
    scan continues after it.
    """
    segments = []
    pos = 0
    while True:
        m = _MATH_OPEN.search(tex, pos)
        if m is None:
            break
        if m.start() > 0 and tex[m.start() - 1] == "\\" and m.group(0).startswith("$"):
            # \$ is a literal dollar sign
            pos = m.end()
            continue
        close = _MATH_CLOSE[m.group(0)].search(tex, m.end())
        if close is None:
            if stats is not None:
                stats.dropped_spans += 1
            pos = m.end()
            continue
        segments.append(tex[m.end():close.start()])
        pos = close.end()
    return segments


def _tex_files(root: Path) -> list[Path]:
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        found.extend(Path(dirpath) / f for f in filenames if f.endswith(".tex"))
    return sorted(found, key=lambda p: p.as_posix())


def _read_lenient(path: Path, stats: CorpusStats) -> str:
    raw = path.read_bytes()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        stats.lossy_decodes += 1
        return raw.decode("utf-8", errors="replace")


def _file_lines(path: Path, mode: str, stats: CorpusStats) -> Iterator[tuple[int, str]]:
    text = strip_comments(_read_lenient(path, stats))
    if mode == "math":
        chunks = extract_math_segments(text, stats)
    else:
        chunks = [text]
    idx = 0
    for chunk in chunks:
        for line in chunk.splitlines():
            yield idx, line
            idx += 1


def ingest_corpus(root: str | os.PathLike, mode: str = "whole") -> tuple[list[CorpusLine], CorpusStats]:
    """Ingest every ``*.tex`` file under ``root``.

    Files are visited in lexicographic path order. Each file goes through
    comment stripping, optional math extraction (``mode="math"``) and
    spacing normalization; lines that normalize to nothing are dropped.
    Unreadable files are recorded in ``stats.skipped`` and do not stop
    ingestion. Raises ``NotADirectoryError``/``FileNotFoundError`` when the
    root itself is unusable.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"corpus root does not exist: {root}")
    if not root.is_dir():
        raise NotADirectoryError(f"corpus root is not a directory: {root}")
    os.listdir(root)  # surfaces PermissionError for the root itself

    stats = CorpusStats()
    lines: list[CorpusLine] = []
    for path in _tex_files(root):
        rel = path.relative_to(root).as_posix()
        try:
            raw_lines = list(_file_lines(path, mode, stats))
        except OSError as exc:
            log.warning("skipping %s: %s", path, exc)
            stats.skipped[rel] = exc.strerror or str(exc)
            continue
        stats.file_count += 1
        for idx, raw in raw_lines:
            norm = normalize_spacing(raw)
            if not norm.text:
                continue
            lines.append(CorpusLine(norm, rel, idx))
            stats.line_count += 1
            stats.char_count += len(norm.text)
    return lines, stats


def write_corpus(lines: Iterable[CorpusLine], path: str | os.PathLike) -> int:
    """Write one normalized line per record (UTF-8, LF). Returns the count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line.text.text + "\n")
            n += 1
    return n


def read_corpus(path: str | os.PathLike) -> list[CorpusLine]:
    """Read a corpus file back. Lines are re-normalized; empties skipped."""
    out = []
    name = os.fspath(path)
    with open(path, encoding="utf-8", errors="replace") as fh:
        for idx, raw in enumerate(fh):
            norm = normalize_spacing(raw)
            if norm.text:
                out.append(CorpusLine(norm, name, idx))
    return out
