"""AST, prefix tokenizer and parser for the RobustFill string DSL.

A program is a concatenation of expressions. Each expression is written in
prefix form, one token per operator name or literal, e.g.::

    GetToken WORD 1 ConstStr @ Compose ToCase LOWER GetFrom :

Operators have fixed arity, so no brackets are needed.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, fields
from typing import ClassVar, Sequence, Union

TOKEN_TYPES = ("NUMBER", "WORD", "ALPHANUM", "ALL_CAPS", "PROP_CASE", "LOWER", "DIGIT", "CHAR")
CASES = ("PROPER", "ALL_CAPS", "LOWER")
BOUNDARIES = ("START", "END")
DELIMITERS = "&,.?@()[]%{}/:;$#\"'"
CHARACTERS = string.ascii_uppercase + string.ascii_lowercase + string.digits + DELIMITERS
ALPHABET = CHARACTERS + " "
# Constant characters the parser accepts; generation draws from CHARACTERS only.
CONST_CHARACTERS = CHARACTERS + "".join(c for c in string.punctuation if c not in CHARACTERS)

POSITIONS = tuple(k for k in range(-100, 101) if k != 0)
INDICES = tuple(i for i in range(-5, 6) if i != 0)
REGEXES = TOKEN_TYPES + tuple(DELIMITERS)


class RfSyntaxError(ValueError):
    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (token {index})")
        self.index = index


class RfRangeError(ValueError):
    """A literal lies outside the range its argument slot allows."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (token {index})"
        super().__init__(message)
        self.index = index


# argument kind -> (admissible values, converter from token text)
_KINDS = {
    "position": (frozenset(POSITIONS), int),
    "index": (frozenset(INDICES), int),
    "regex": (frozenset(REGEXES), str),
    "type": (frozenset(TOKEN_TYPES), str),
    "boundary": (frozenset(BOUNDARIES), str),
    "case": (frozenset(CASES), str),
    "delim": (frozenset(DELIMITERS), str),
    "char": (frozenset(CONST_CHARACTERS), str),
}


class _Op:
    NAME: ClassVar[str]
    KINDS: ClassVar[tuple[str, ...]] = ()

    def __post_init__(self):
        for f, kind in zip(fields(self), self.KINDS):
            value = getattr(self, f.name)
            allowed = _KINDS[kind][0]
            if isinstance(value, bool) or value not in allowed:
                raise RfRangeError(f"{self.NAME}: {kind} {value!r} outside the allowed range")

    def args(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def tokens(self) -> list[str]:
        return [self.NAME] + [str(a) for a in self.args()]

    def __str__(self):
        return f"{self.NAME}({', '.join(repr(a) if isinstance(a, str) else str(a) for a in self.args())})"


# -- substring operations ---------------------------------------------------


@dataclass(frozen=True)
class SubStr(_Op):
    k1: int
    k2: int
    NAME = "SubStr"
    KINDS = ("position", "position")


@dataclass(frozen=True)
class GetSpan(_Op):
    r1: str
    i1: int
    b1: str
    r2: str
    i2: int
    b2: str
    NAME = "GetSpan"
    KINDS = ("regex", "index", "boundary", "regex", "index", "boundary")


@dataclass(frozen=True)
class GetToken(_Op):
    t: str
    i: int
    NAME = "GetToken"
    KINDS = ("type", "index")


@dataclass(frozen=True)
class GetUpto(_Op):
    r: str
    NAME = "GetUpto"
    KINDS = ("regex",)


@dataclass(frozen=True)
class GetFrom(_Op):
    r: str
    NAME = "GetFrom"
    KINDS = ("regex",)


# -- modification operations ------------------------------------------------


@dataclass(frozen=True)
class ToCase(_Op):
    case: str
    NAME = "ToCase"
    KINDS = ("case",)


@dataclass(frozen=True)
class Replace(_Op):
    d1: str
    d2: str
    NAME = "Replace"
    KINDS = ("delim", "delim")


@dataclass(frozen=True)
class Trim(_Op):
    NAME = "Trim"


@dataclass(frozen=True)
class GetFirst(_Op):
    t: str
    i: int
    NAME = "GetFirst"
    KINDS = ("type", "index")


@dataclass(frozen=True)
class GetAll(_Op):
    t: str
    NAME = "GetAll"
    KINDS = ("type",)


@dataclass(frozen=True)
class Substitute(_Op):
    t: str
    i: int
    c: str
    NAME = "Substitute"
    KINDS = ("type", "index", "char")


@dataclass(frozen=True)
class SubstituteAll(_Op):
    t: str
    c: str
    NAME = "SubstituteAll"
    KINDS = ("type", "char")


@dataclass(frozen=True)
class Remove(_Op):
    t: str
    i: int
    NAME = "Remove"
    KINDS = ("type", "index")


@dataclass(frozen=True)
class RemoveAll(_Op):
    t: str
    NAME = "RemoveAll"
    KINDS = ("type",)


@dataclass(frozen=True)
class ConstStr(_Op):
    c: str
    NAME = "ConstStr"
    KINDS = ("char",)


SubstringOp = Union[SubStr, GetSpan, GetToken, GetUpto, GetFrom]
ModificationOp = Union[
    ToCase, Replace, Trim, GetFirst, GetAll, Substitute, SubstituteAll, Remove, RemoveAll
]

SUBSTRING_OPS: tuple[type, ...] = (SubStr, GetSpan, GetToken, GetUpto, GetFrom)
MODIFICATION_OPS: tuple[type, ...] = (
    ToCase, Replace, Trim, GetFirst, GetAll, Substitute, SubstituteAll, Remove, RemoveAll,
)


@dataclass(frozen=True)
class Compose:
    """``outer(inner)``: a modification applied to another modification or substring."""

    outer: ModificationOp
    inner: Union[ModificationOp, SubstringOp]
    NAME: ClassVar[str] = "Compose"

    def __post_init__(self):
        if not isinstance(self.outer, MODIFICATION_OPS):
            raise RfRangeError(f"Compose outer must be a modification, got {self.outer.NAME}")
        if not isinstance(self.inner, MODIFICATION_OPS + SUBSTRING_OPS):
            raise RfRangeError(f"Compose inner must be a modification or substring, got {type(self.inner).__name__}")

    def tokens(self) -> list[str]:
        return [self.NAME] + self.outer.tokens() + self.inner.tokens()

    def __str__(self):
        return f"{self.outer}({self.inner})"


RfExpression = Union[SubstringOp, ModificationOp, Compose, ConstStr]

OPS_BY_NAME: dict[str, type] = {
    cls.NAME: cls for cls in SUBSTRING_OPS + MODIFICATION_OPS + (ConstStr, Compose)
}


@dataclass(frozen=True)
class RfProgram:
    expressions: tuple[RfExpression, ...]

    def __post_init__(self):
        if not self.expressions:
            raise ValueError("a program needs at least one expression")
        object.__setattr__(self, "expressions", tuple(self.expressions))

    def __len__(self):
        return len(self.expressions)

    def __str__(self):
        return "Concat(" + ", ".join(str(e) for e in self.expressions) + ")"


@dataclass(frozen=True)
class IoExample:
    input: str
    output: str

    def __post_init__(self):
        if not self.input:
            raise ValueError("example input must be non-empty")


def is_substring(e) -> bool:
    return isinstance(e, SUBSTRING_OPS)


def is_modification(e) -> bool:
    return isinstance(e, MODIFICATION_OPS)


def tokenize_expression(e: RfExpression) -> list[str]:
    return e.tokens()


def tokenize_program(p: RfProgram) -> list[str]:
    out = []
    for e in p.expressions:
        out.extend(e.tokens())
    return out


def expression_spans(p: RfProgram) -> list[tuple[int, int]]:
    """Half-open token ranges of each expression within ``tokenize_program(p)``."""
    spans, pos = [], 0
    for e in p.expressions:
        n = len(e.tokens())
        spans.append((pos, pos + n))
        pos += n
    return spans


def _parse_op(tokens: Sequence[str], pos: int, allowed: tuple[type, ...]) -> tuple[object, int]:
    if pos >= len(tokens):
        raise RfSyntaxError("unexpected end of program", pos)
    name = tokens[pos]
    cls = OPS_BY_NAME.get(name)
    if cls is None:
        raise RfSyntaxError(f"unknown operator {name!r}", pos)
    if cls not in allowed:
        raise RfSyntaxError(f"operator {name} not allowed here", pos)
    if cls is Compose:
        outer, nxt = _parse_op(tokens, pos + 1, MODIFICATION_OPS)
        inner, nxt = _parse_op(tokens, nxt, MODIFICATION_OPS + SUBSTRING_OPS)
        return Compose(outer, inner), nxt
    args = []
    for j, kind in enumerate(cls.KINDS):
        at = pos + 1 + j
        if at >= len(tokens):
            raise RfSyntaxError(f"{name} expects {len(cls.KINDS)} arguments", at)
        text = tokens[at]
        if text in OPS_BY_NAME:
            raise RfSyntaxError(f"{name} expects {len(cls.KINDS)} arguments, got operator {text!r}", at)
        allowed_values, convert = _KINDS[kind]
        try:
            value = convert(text)
        except ValueError:
            raise RfSyntaxError(f"{name}: expected {kind}, got {text!r}", at) from None
        if value not in allowed_values:
            raise RfRangeError(f"{name}: {kind} {text} outside the allowed range", at)
        args.append(value)
    return cls(*args), pos + 1 + len(cls.KINDS)


_EXPRESSION_OPS = SUBSTRING_OPS + MODIFICATION_OPS + (Compose, ConstStr)


def parse_expression(tokens: Sequence[str]) -> RfExpression:
    e, end = _parse_op(tokens, 0, _EXPRESSION_OPS)
    if end != len(tokens):
        raise RfSyntaxError("trailing tokens after expression", end)
    return e


def parse_program(tokens: Sequence[str] | str) -> RfProgram:
    """Parse a prefix token sequence (or space-joined text) into a program."""
    if isinstance(tokens, str):
        tokens = tokens.split(" ") if tokens else []
    tokens = list(tokens)
    if not tokens:
        raise RfSyntaxError("empty program", 0)
    exprs, pos = [], 0
    while pos < len(tokens):
        e, pos = _parse_op(tokens, pos, _EXPRESSION_OPS)
        exprs.append(e)
    return RfProgram(tuple(exprs))


def program_text(p: RfProgram) -> str:
    return " ".join(tokenize_program(p))
