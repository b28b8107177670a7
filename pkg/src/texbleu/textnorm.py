"""Spacing normalization applied to every string before tokenization.

Rules, applied in order:

1. every run of whitespace becomes one space;
2. ``{``, ``}``, ``^`` and ``_`` get a space on both sides;
3. backslash commands (``\\`` + ASCII letters, or ``\\`` + one other
   non-space character) are delimited by spaces;
4. double spaces produced by 2-3 are collapsed;
5. the result is trimmed.

An escaped character such as ``\\{`` or ``\\%`` is a one-character command,
so it is spaced as a unit and its brace is not split off.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

_WHITESPACE = re.compile(r"\s+")
# order matters: the command alternatives must win over a bare trigger char
_SPACED_UNIT = re.compile(r"\\(?:[A-Za-z]+|[^A-Za-z\s])?|[{}^_]")


@dataclass(frozen=True)
class NormalizedText:
    text: str
    original_len: int

    def __str__(self) -> str:
        return self.text


def normalize_spacing(raw: str) -> NormalizedText:
    """Return the canonical spacing of ``raw``.

    >>> normalize_spacing("\\\\frac{a}{b}").text
    '\\\\frac { a } { b }'
    """
    text = _WHITESPACE.sub(" ", raw)
    text = _SPACED_UNIT.sub(lambda m: f" {m.group(0)} ", text)
    text = _WHITESPACE.sub(" ", text).strip()
    return NormalizedText(text=text, original_len=len(raw))


def normalize(raw: str) -> str:
    """Shorthand for ``normalize_spacing(raw).text``."""
    return normalize_spacing(raw).text
