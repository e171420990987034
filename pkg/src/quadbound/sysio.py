"""Plain-text formats for systems and certificates.

System files:

    # comments run to end of line
    n 3
    c
    0 0 0
    L
    -2  1  0
    -1  0.5 3
     0 -3 -3
    Q 1
    0 0   0
    0 0   0.5
    0 0.5 0
    Q 2
    ...

Numbers may wrap lines freely; fields (`c`, `L`, `Q 1` .. `Q n`) may appear
in any order after `n`, each exactly once.  The writer emits shortest
round-trip decimal literals, so read(write(sys)) reproduces every entry
exactly.  Certificate files use the same token grammar with fields `Mv`,
`Md` (4x4 blocks) and `alpha`.
"""

from __future__ import annotations

import re

import numpy as np

from .certificates import QuarticCertificate, make_certificate
from .errors import ParseError
from .system import QuadraticSystem, new_system

_TOKEN_RE = re.compile(r"\S+")


def _tokenize(text: str):
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for match in _TOKEN_RE.finditer(body):
            tokens.append((match.group(0), lineno, match.start() + 1))
    return tokens


class _Cursor:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None, None)

    def next(self, what: str):
        if self.done():
            raise ParseError(f"unexpected end of file while reading {what}")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def next_int(self, what: str) -> int:
        text, line, col = self.next(what)
        try:
            return int(text)
        except ValueError:
            raise ParseError(f"expected integer for {what}, got {text!r}", line, col) from None

    def next_float(self, what: str) -> float:
        text, line, col = self.next(what)
        try:
            return float(text)
        except ValueError:
            raise ParseError(f"expected number for {what}, got {text!r}", line, col) from None

    def read_matrix(self, rows: int, cols: int, name: str) -> np.ndarray:
        out = np.empty((rows, cols))
        for r in range(rows):
            for cc in range(cols):
                out[r, cc] = self.next_float(f"{name} row {r + 1}")
        return out


def parse_system_raw(text: str):
    """Parse without validation; returns (n, c, L, Q) raw arrays."""
    cur = _Cursor(text)
    tok, line, col = cur.next("header")
    if tok != "n":
        raise ParseError(f"system file must start with 'n', got {tok!r}", line, col)
    n = cur.next_int("n")
    if n < 1:
        raise ParseError(f"n must be positive, got {n}", line, col)
    c = None
    L = None
    Qblocks: dict[int, np.ndarray] = {}
    while not cur.done():
        tok, line, col = cur.next("field name")
        if tok == "c":
            if c is not None:
                raise ParseError("duplicate field 'c'", line, col)
            c = np.array([cur.next_float(f"c entry {j + 1}") for j in range(n)])
        elif tok == "L":
            if L is not None:
                raise ParseError("duplicate field 'L'", line, col)
            L = cur.read_matrix(n, n, "L")
        elif tok == "Q":
            idx = cur.next_int("Q index")
            if not 1 <= idx <= n:
                raise ParseError(f"Q index must be in 1..{n}, got {idx}", line, col)
            if idx in Qblocks:
                raise ParseError(f"duplicate field 'Q {idx}'", line, col)
            Qblocks[idx] = cur.read_matrix(n, n, f"Q {idx}")
        else:
            raise ParseError(f"unknown field {tok!r} (expected c, L or Q)", line, col)
    if c is None:
        raise ParseError("missing field 'c'")
    if L is None:
        raise ParseError("missing field 'L'")
    missing = [str(i) for i in range(1, n + 1) if i not in Qblocks]
    if missing:
        raise ParseError(f"missing Q block(s): {', '.join(missing)}")
    Q = np.stack([Qblocks[i] for i in range(1, n + 1)])
    return n, c, L, Q


def parse_system(text: str) -> QuadraticSystem:
    return new_system(*parse_system_raw(text))


def load_system(path) -> QuadraticSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system(fh.read())


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_system(sys: QuadraticSystem, comment: str | None = None) -> str:
    lines = []
    if comment:
        for ln in comment.splitlines():
            lines.append(f"# {ln}")
    lines.append(f"n {sys.n}")
    lines.append("c")
    lines.append(" ".join(_fmt(v) for v in sys.c))
    lines.append("L")
    for row in sys.L:
        lines.append(" ".join(_fmt(v) for v in row))
    for i in range(sys.n):
        lines.append(f"Q {i + 1}")
        for row in sys.Q[i]:
            lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def save_system(sys: QuadraticSystem, path, comment: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_system(sys, comment))


def parse_certificate(text: str) -> QuarticCertificate:
    cur = _Cursor(text)
    Mv = None
    Md = None
    alpha = None
    while not cur.done():
        tok, line, col = cur.next("field name")
        if tok == "Mv":
            if Mv is not None:
                raise ParseError("duplicate field 'Mv'", line, col)
            Mv = cur.read_matrix(4, 4, "Mv")
        elif tok == "Md":
            if Md is not None:
                raise ParseError("duplicate field 'Md'", line, col)
            Md = cur.read_matrix(4, 4, "Md")
        elif tok == "alpha":
            if alpha is not None:
                raise ParseError("duplicate field 'alpha'", line, col)
            alpha = cur.next_float("alpha")
        else:
            raise ParseError(f"unknown field {tok!r} (expected Mv, Md or alpha)", line, col)
    if Mv is None or Md is None or alpha is None:
        missing = [nm for nm, v in [("Mv", Mv), ("Md", Md), ("alpha", alpha)] if v is None]
        raise ParseError(f"missing certificate field(s): {', '.join(missing)}")
    return make_certificate(Mv, Md, alpha)


def load_certificate(path) -> QuarticCertificate:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_certificate(fh.read())


def dump_certificate(cert: QuarticCertificate, comment: str | None = None) -> str:
    lines = []
    if comment:
        for ln in comment.splitlines():
            lines.append(f"# {ln}")
    lines.append("Mv")
    for row in cert.M_v:
        lines.append(" ".join(_fmt(v) for v in row))
    lines.append("Md")
    for row in cert.M_d:
        lines.append(" ".join(_fmt(v) for v in row))
    lines.append("alpha")
    lines.append(_fmt(cert.alpha))
    return "\n".join(lines) + "\n"


def save_certificate(cert: QuarticCertificate, path, comment: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_certificate(cert, comment))
