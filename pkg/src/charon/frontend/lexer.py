from __future__ import annotations

from dataclasses import dataclass

from ..errors import LexError

KEYWORDS = frozenset(
    {"int", "short", "float", "struct", "if", "else", "while", "return", "__unknown_type__"}
)

# longest first; anything else made of these characters is rejected
OPERATORS = ("||", "&&", "==", "!=", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "!", "&", "|", "=")
PUNCT = ("(", ")", "{", "}", "[", "]", ";", ".")

UNSUPPORTED = (
    "<<=", ">>=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "++", "--", "->",
)


@dataclass(frozen=True)
class Token:
    kind: str  # kw, ident, int, float, op, punct, eof
    text: str
    line: int
    col: int

    @property
    def value(self) -> int | float:
        return int(self.text) if self.kind == "int" else float(self.text)


def tokenize(source: str) -> list[Token]:
    """Split CharonLang source into tokens, dropping whitespace and comments."""
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for ch in source[i : i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            advance((n if j < 0 else j) - i)
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise LexError("unterminated comment", line, col)
            advance(j + 2 - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
            advance(j - i)
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            kind = "int"
            if j < n and source[j] == ".":
                k = j + 1
                while k < n and source[k].isdigit():
                    k += 1
                if k == j + 1:
                    raise LexError("malformed float literal", line, col)
                kind, j = "float", k
            if j < n and (source[j].isalpha() or source[j] == "_"):
                raise LexError(f"malformed number {source[i:j + 1]!r}", line, col)
            toks.append(Token(kind, source[i:j], line, col))
            advance(j - i)
            continue
        for bad in UNSUPPORTED:
            if source.startswith(bad, i):
                raise LexError(f"operator {bad!r} is not part of CharonLang", line, col)
        for op in OPERATORS:
            if source.startswith(op, i):
                toks.append(Token("op", op, line, col))
                advance(len(op))
                break
        else:
            if ch in PUNCT:
                toks.append(Token("punct", ch, line, col))
                advance(1)
            else:
                raise LexError(f"unexpected character {ch!r}", line, col)
    return toks
