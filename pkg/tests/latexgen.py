"""Seeded random LaTeX expressions for property tests."""
import random

LETTERS = "abcnxyzk"
DIGITS = "0123456789"
SYMBOLS = [r"\alpha", r"\beta", r"\pi", r"\theta", r"\infty", r"\lambda"]
BINOPS = ["+", "-", "=", r"\cdot", r"\times", r"\leq", "/"]


def atom(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.4:
        return rng.choice(LETTERS)
    if roll < 0.6:
        return rng.choice(DIGITS)
    return rng.choice(SYMBOLS)


def expr(rng: random.Random, depth: int = 2) -> str:
    if depth <= 0:
        return atom(rng)
    kind = rng.randrange(7)
    sub = lambda: expr(rng, depth - 1)
    if kind == 0:
        return rf"\frac{{{sub()}}}{{{sub()}}}"
    if kind == 1:
        return rf"\sqrt{{{sub()}}}"
    if kind == 2:
        return f"{atom(rng)}^{{{sub()}}}"
    if kind == 3:
        return f"{atom(rng)}_{rng.choice(LETTERS + DIGITS)}"
    if kind == 4:
        return rf"\sum_{{{rng.choice(LETTERS)}=1}}^{{{rng.choice('nN')}}} {sub()}"
    if kind == 5:
        return rf"\left( {sub()} \right)"
    return f"{sub()} {rng.choice(BINOPS)} {sub()}"


def random_latex(rng: random.Random, depth: int = 2) -> str:
    return expr(rng, depth)


def corpus(n: int, seed: int = 0, depth: int = 2) -> list[str]:
    rng = random.Random(seed)
    return [random_latex(rng, depth) for _ in range(n)]


def perturb_whitespace(text: str, rng: random.Random) -> str:
    """Insert or remove whitespace only where spacing normalization ignores it.

    Legal spots: next to existing whitespace, next to ``{ } ^ _``, and at
    backslash-command boundaries.
    """
    # character-level segmentation into units that must not be split
    units = []
    i = 0
    while i < len(text):
        if text[i] == "\\":
            j = i + 1
            if j < len(text) and text[j].isascii() and text[j].isalpha():
                while j < len(text) and text[j].isascii() and text[j].isalpha():
                    j += 1
            elif j < len(text) and not text[j].isspace():
                j += 1
            units.append(("cmd", text[i:j]))
            i = j
        elif text[i].isspace():
            j = i
            while j < len(text) and text[j].isspace():
                j += 1
            units.append(("ws", text[i:j]))
            i = j
        elif text[i] in "{}^_":
            units.append(("trig", text[i]))
            i += 1
        else:
            units.append(("chr", text[i]))
            i += 1

    out = []
    for k, (kind, s) in enumerate(units):
        if kind == "ws":
            out.append(rng.choice([" ", "  ", "\t", "\n ", ""]) if _removable(units, k) else rng.choice([" ", "\t", "  \n"]))
            continue
        out.append(s)
        nxt = units[k + 1][0] if k + 1 < len(units) else None
        # a gap is free if either side is a command/trigger (a command followed
        # by a letter is excluded: removing that space would merge names)
        if kind in ("cmd", "trig") or nxt in ("cmd", "trig"):
            if nxt is not None and nxt != "ws" and rng.random() < 0.3:
                if not (kind == "cmd" and units[k + 1][1][:1].isalpha() and s[1:].isalpha()):
                    out.append(rng.choice([" ", "  ", "\t"]))
    return "".join(out)


def _removable(units, k) -> bool:
    prev = units[k - 1] if k > 0 else None
    nxt = units[k + 1] if k + 1 < len(units) else None
    if prev is None or nxt is None:
        return True
    if prev[0] == "cmd" and prev[1][1:].isalpha() and nxt[1][:1].isascii() and nxt[1][:1].isalpha():
        return False  # "\cdot b" must stay apart
    if prev[0] == "cmd" and len(prev[1]) == 1:
        return False  # a bare backslash would swallow the next char
    return prev[0] in ("cmd", "trig") or nxt[0] in ("cmd", "trig")
