"""Tokenizer for the Solidity subset.

Comments are dropped from the token stream but their text is kept on the
side (``Lexer.comments``) so callers can look for version banners.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class TokKind(Enum):
    IDENT = "ident"
    NUMBER = "number"
    STRING = "string"
    HEXSTR = "hexstring"
    PUNCT = "punct"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokKind
    text: str
    offset: int
    line: int
    col: int

    @property
    def end(self) -> int:
        return self.offset + len(self.text)

    def is_(self, text: str) -> bool:
        return self.kind in (TokKind.PUNCT, TokKind.IDENT) and self.text == text


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# longest first
_PUNCTS = sorted(
    [
        ">>>=", "<<=", ">>=", ">>>", "**=",
        "=>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=",
        "/=", "%=", "|=", "&=", "^=", "<<", ">>", "**", ":=", "->",
        "(", ")", "[", "]", "{", "}", ";", ",", ".", "?", ":", "=", "+", "-",
        "*", "/", "%", "!", "~", "<", ">", "&", "|", "^", "@",
    ],
    key=len,
    reverse=True,
)


@dataclass(frozen=True)
class Comment:
    text: str
    offset: int
    line: int


class Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1
        self.comments: list[Comment] = []

    def _advance(self, n: int) -> None:
        for ch in self.src[self.pos:self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        src = self.src
        n = len(src)
        while True:
            self._skip_trivia()
            if self.pos >= n:
                out.append(Token(TokKind.EOF, "", n, self.line, self.col))
                return out
            ch = src[self.pos]
            start, line, col = self.pos, self.line, self.col
            if ch.isalpha() or ch in "_$":
                j = self.pos + 1
                while j < n and (src[j].isalnum() or src[j] in "_$"):
                    j += 1
                word = src[self.pos:j]
                # hex"..." / unicode"..." literals
                if word in ("hex", "unicode") and j < n and src[j] in "\"'":
                    self._advance(j - self.pos)
                    self._string_body(src[j])
                    kind = TokKind.HEXSTR if word == "hex" else TokKind.STRING
                    out.append(Token(kind, src[start:self.pos], start, line, col))
                    continue
                self._advance(j - self.pos)
                out.append(Token(TokKind.IDENT, word, start, line, col))
            elif ch.isdigit() or (ch == "." and self.pos + 1 < n and src[self.pos + 1].isdigit()):
                self._number()
                out.append(Token(TokKind.NUMBER, src[start:self.pos], start, line, col))
            elif ch in "\"'":
                self._string_body(ch)
                out.append(Token(TokKind.STRING, src[start:self.pos], start, line, col))
            else:
                for p in _PUNCTS:
                    if src.startswith(p, self.pos):
                        self._advance(len(p))
                        out.append(Token(TokKind.PUNCT, p, start, line, col))
                        break
                else:
                    raise LexError(f"unexpected character {ch!r}", line, col)

    def _skip_trivia(self) -> None:
        src = self.src
        n = len(src)
        while self.pos < n:
            ch = src[self.pos]
            if ch in " \t\r\n\f\v﻿":
                self._advance(1)
            elif src.startswith("//", self.pos):
                j = src.find("\n", self.pos)
                j = n if j < 0 else j
                self.comments.append(Comment(src[self.pos:j], self.pos, self.line))
                self._advance(j - self.pos)
            elif src.startswith("/*", self.pos):
                j = src.find("*/", self.pos + 2)
                if j < 0:
                    raise LexError("unterminated block comment", self.line, self.col)
                self.comments.append(Comment(src[self.pos:j + 2], self.pos, self.line))
                self._advance(j + 2 - self.pos)
            else:
                return

    def _string_body(self, quote: str) -> None:
        line, col = self.line, self.col
        self._advance(1)
        src = self.src
        while self.pos < len(src):
            ch = src[self.pos]
            if ch == "\\":
                self._advance(2)
                continue
            if ch == quote:
                self._advance(1)
                return
            if ch == "\n":
                break
            self._advance(1)
        raise LexError("unterminated string literal", line, col)

    def _number(self) -> None:
        src = self.src
        n = len(src)
        j = self.pos
        if src.startswith(("0x", "0X"), j):
            j += 2
            while j < n and (src[j] in "0123456789abcdefABCDEF_"):
                j += 1
        else:
            while j < n and (src[j].isdigit() or src[j] == "_"):
                j += 1
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                j += 1
                while j < n and (src[j].isdigit() or src[j] == "_"):
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] == "-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
        self._advance(j - self.pos)


def tokenize(source: str) -> tuple[list[Token], list[Comment]]:
    lx = Lexer(source)
    toks = lx.tokens()
    return toks, lx.comments
