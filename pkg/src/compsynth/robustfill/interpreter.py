"""Evaluation of RobustFill expressions and programs.

Conventions: positions and indices are 1-based and negative values count
from the end. Token-type matches are maximal, non-overlapping and scanned
left to right.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Sequence

from compsynth.robustfill.dsl import (
    Compose,
    ConstStr,
    GetAll,
    GetFirst,
    GetFrom,
    GetSpan,
    GetToken,
    GetUpto,
    IoExample,
    Remove,
    RemoveAll,
    Replace,
    RfExpression,
    RfProgram,
    SubStr,
    Substitute,
    SubstituteAll,
    ToCase,
    Trim,
)

TYPE_PATTERNS = {
    "NUMBER": r"[0-9]+",
    "WORD": r"[A-Za-z]+",
    "ALPHANUM": r"[A-Za-z0-9]+",
    "ALL_CAPS": r"[A-Z]+",
    "PROP_CASE": r"[A-Z][a-z]+",
    "LOWER": r"[a-z]+",
    "DIGIT": r"[0-9]",
    "CHAR": r"[^ ]",
}
_WORD = re.compile(TYPE_PATTERNS["WORD"])


class ExecutionError(Exception):
    """An expression referenced a match or position that does not exist."""

    def __init__(self, reason: str, index: int | None = None):
        prefix = f"expression {index}: " if index is not None else ""
        super().__init__(prefix + reason)
        self.reason = reason
        self.index = index


@lru_cache(maxsize=None)
def _compile(regex: str) -> re.Pattern:
    pattern = TYPE_PATTERNS.get(regex)
    return re.compile(pattern if pattern is not None else re.escape(regex))


def find_matches(regex: str, s: str) -> list[tuple[int, int]]:
    """Spans of every match of a token type or delimiter literal in ``s``."""
    return [m.span() for m in _compile(regex).finditer(s)]


def _nth(matches: list, i: int, what: str):
    n = len(matches)
    if i > 0 and i <= n:
        return matches[i - 1]
    if i < 0 and -i <= n:
        return matches[i]
    raise ExecutionError(f"{what}: no match {i} (found {n})")


def _position(k: int, n: int) -> int:
    p = k if k > 0 else n + k + 1
    if not 1 <= p <= n:
        raise ExecutionError(f"position {k} outside a string of length {n}")
    return p


def _proper(s: str) -> str:
    return _WORD.sub(lambda m: m.group(0)[0].upper() + m.group(0)[1:].lower(), s)


def _splice(s: str, span: tuple[int, int], text: str) -> str:
    return s[: span[0]] + text + s[span[1]:]


def apply_operation(op, s: str) -> str:
    """Apply one substring or modification operation to ``s``.

    Raises ExecutionError when a referenced match or position is missing.
    """
    cls = type(op)
    if cls is SubStr:
        n = len(s)
        p1, p2 = _position(op.k1, n), _position(op.k2, n)
        return s[p1 - 1 : p2] if p1 <= p2 else ""
    if cls is GetToken:
        a, b = _nth(find_matches(op.t, s), op.i, op.t)
        return s[a:b]
    if cls is GetSpan:
        m1 = _nth(find_matches(op.r1, s), op.i1, op.r1)
        m2 = _nth(find_matches(op.r2, s), op.i2, op.r2)
        start = m1[0] if op.b1 == "START" else m1[1]
        end = m2[0] if op.b2 == "START" else m2[1]
        return s[start:end] if start <= end else ""
    if cls is GetUpto:
        m = _compile(op.r).search(s)
        if m is None:
            raise ExecutionError(f"{op.r}: no match")
        return s[: m.end()]
    if cls is GetFrom:
        m = _compile(op.r).search(s)
        if m is None:
            raise ExecutionError(f"{op.r}: no match")
        return s[m.end():]
    if cls is ToCase:
        if op.case == "ALL_CAPS":
            return s.upper()
        if op.case == "LOWER":
            return s.lower()
        return _proper(s)
    if cls is Replace:
        return s.replace(op.d1, op.d2)
    if cls is Trim:
        return s.strip(" ")
    if cls is GetFirst:
        matches = find_matches(op.t, s)
        if op.i < 1 or len(matches) < op.i:
            raise ExecutionError(f"GetFirst: need {op.i} {op.t} matches, found {len(matches)}")
        return "".join(s[a:b] for a, b in matches[: op.i])
    if cls is GetAll:
        return " ".join(s[a:b] for a, b in find_matches(op.t, s))
    if cls is Substitute:
        return _splice(s, _nth(find_matches(op.t, s), op.i, op.t), op.c)
    if cls is SubstituteAll:
        return _compile(op.t).sub(lambda m: op.c, s)
    if cls is Remove:
        return _splice(s, _nth(find_matches(op.t, s), op.i, op.t), "")
    if cls is RemoveAll:
        return _compile(op.t).sub("", s)
    raise TypeError(f"not an operation: {op!r}")


def execute_expression(e: RfExpression, s: str) -> str:
    if isinstance(e, ConstStr):
        return e.c
    if isinstance(e, Compose):
        return apply_operation(e.outer, apply_operation(e.inner, s))
    return apply_operation(e, s)


def eval_expression(e: RfExpression, s: str) -> str | None:
    """Result of ``e`` on ``s``, or None when evaluation fails."""
    try:
        return execute_expression(e, s)
    except ExecutionError:
        return None


def execute_program(p: RfProgram, s: str) -> str:
    """Concatenated expression outputs; raises ExecutionError carrying the failing index."""
    if not s:
        raise ValueError("program input must be non-empty")
    out = []
    for idx, e in enumerate(p.expressions):
        try:
            out.append(execute_expression(e, s))
        except ExecutionError as err:
            raise ExecutionError(err.reason, idx) from None
    return "".join(out)


def eval_program(p: RfProgram, s: str) -> str | None:
    try:
        return execute_program(p, s)
    except ExecutionError:
        return None


def satisfies(p: RfProgram, spec: Sequence[IoExample]) -> bool:
    if not spec:
        raise ValueError("specification must contain at least one example")
    return all(eval_program(p, ex.input) == ex.output for ex in spec)
