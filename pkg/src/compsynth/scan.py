"""SCAN command language: AST, parser, printer and action translator.

Commands follow the generalized grammar::

    C := C after C | D
    D := D and D | P
    P := Q | Q twice | Q thrice
    Q := v left | v opposite left | v around left
       | v right | v opposite right | v around right | a
    v := turn | a
    a := walk | look | run | jump

``and`` binds tighter than ``after``; both are parsed right-associatively.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Union

ACTIONS = ("walk", "look", "run", "jump")
VERBS = ("turn",) + ACTIONS
DIRECTIONS = ("left", "right")
MODIFIERS = (None, "opposite", "around")
REPETITIONS = {1: None, 2: "twice", 3: "thrice"}
CONJUNCTIONS = ("and", "after")

ACTION_TOKENS = ("WALK", "LOOK", "RUN", "JUMP", "LTURN", "RTURN")
_TURN_TOKEN = {"left": "LTURN", "right": "RTURN"}


class ScanSyntaxError(ValueError):
    """Raised for command text outside the grammar."""

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (token {index})")
        self.index = index


class Concept(str, enum.Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    NONE = "NONE"


@dataclass(frozen=True)
class ScanPart:
    """One conjunction-free command phrase, e.g. ``jump around right twice``."""

    verb: str
    direction: str | None = None
    modifier: str | None = None
    repetition: int = 1

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ValueError(f"unknown verb {self.verb!r}")
        if self.direction is None:
            if self.verb == "turn":
                raise ValueError("'turn' requires a direction")
            if self.modifier is not None:
                raise ValueError("a modifier requires a direction")
        elif self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.modifier not in MODIFIERS:
            raise ValueError(f"unknown modifier {self.modifier!r}")
        if self.repetition not in REPETITIONS:
            raise ValueError(f"repetition must be 1, 2 or 3, got {self.repetition}")

    def words(self) -> list[str]:
        out = [self.verb]
        if self.modifier:
            out.append(self.modifier)
        if self.direction:
            out.append(self.direction)
        if self.repetition > 1:
            out.append(REPETITIONS[self.repetition])
        return out

    def text(self) -> str:
        return " ".join(self.words())

    @property
    def concept(self) -> Concept:
        if self.direction == "left":
            return Concept.LEFT
        if self.direction == "right":
            return Concept.RIGHT
        return Concept.NONE

    def actions(self) -> list[str]:
        """Action tokens for this part, repetition included."""
        return self._unit_actions() * self.repetition

    def _unit_actions(self) -> list[str]:
        if self.direction is None:
            return [self.verb.upper()]
        turn = _TURN_TOKEN[self.direction]
        step = [turn] if self.verb == "turn" else [turn, self.verb.upper()]
        if self.modifier is None:
            return step
        if self.modifier == "opposite":
            return [turn] + step
        return step * 4


@dataclass(frozen=True)
class Part:
    part: ScanPart


@dataclass(frozen=True)
class And:
    left: "ScanCommand"
    right: "ScanCommand"

    def __post_init__(self):
        for child in (self.left, self.right):
            if isinstance(child, After):
                raise ValueError("'after' cannot appear inside an 'and' operand")


@dataclass(frozen=True)
class After:
    left: "ScanCommand"
    right: "ScanCommand"


ScanCommand = Union[Part, And, After]


@dataclass(frozen=True)
class ActionProgram:
    tokens: tuple[str, ...]
    part_spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pos = 0
        for start, end in self.part_spans:
            if start != pos or end <= start:
                raise ValueError(f"part spans do not tile the tokens: {self.part_spans}")
            pos = end
        if pos != len(self.tokens):
            raise ValueError("part spans do not cover all tokens")

    def text(self) -> str:
        return " ".join(self.tokens)

    def parts(self) -> list[tuple[str, ...]]:
        return [self.tokens[s:e] for s, e in self.part_spans]


def _parse_part(words: list[str], offset: int) -> ScanPart:
    if not words:
        raise ScanSyntaxError("empty command part", offset)
    verb = words[0]
    if verb not in VERBS:
        raise ScanSyntaxError(f"expected a verb, got {verb!r}", offset)
    i = 1
    modifier = direction = None
    if i < len(words) and words[i] in ("opposite", "around"):
        modifier = words[i]
        i += 1
        if i >= len(words) or words[i] not in DIRECTIONS:
            raise ScanSyntaxError(f"'{modifier}' must be followed by left or right", offset + i)
    if i < len(words) and words[i] in DIRECTIONS:
        direction = words[i]
        i += 1
    repetition = 1
    if i < len(words) and words[i] in ("twice", "thrice"):
        repetition = 2 if words[i] == "twice" else 3
        i += 1
    if i < len(words):
        raise ScanSyntaxError(f"unexpected token {words[i]!r}", offset + i)
    if verb == "turn" and direction is None:
        raise ScanSyntaxError("'turn' requires a direction", offset)
    return ScanPart(verb, direction, modifier, repetition)


def _split(words: list[str], offset: int, sep: str) -> list[tuple[list[str], int]]:
    chunks = []
    start = 0
    for i, w in enumerate(words):
        if w == sep:
            chunks.append((words[start:i], offset + start))
            start = i + 1
    chunks.append((words[start:], offset + start))
    for chunk, at in chunks:
        if not chunk:
            raise ScanSyntaxError(f"'{sep}' is missing an operand", at)
    return chunks


def _fold_right(nodes: list, cls) -> ScanCommand:
    node = nodes[-1]
    for left in reversed(nodes[:-1]):
        node = cls(left, node)
    return node


def parse_command(text: str) -> ScanCommand:
    words = text.split()
    if not words:
        raise ScanSyntaxError("empty command", 0)
    clauses = []
    for clause, at in _split(words, 0, "after"):
        parts = [Part(_parse_part(chunk, pos)) for chunk, pos in _split(clause, at, "and")]
        clauses.append(_fold_right(parts, And))
    return _fold_right(clauses, After)


def iter_parts(cmd: ScanCommand) -> Iterator[ScanPart]:
    """Leaf parts in command (textual) order."""
    if isinstance(cmd, Part):
        yield cmd.part
    else:
        yield from iter_parts(cmd.left)
        yield from iter_parts(cmd.right)


def flatten(cmd: ScanCommand) -> tuple[list[ScanPart], list[str]]:
    """Return the parts and the conjunctions between them, in textual order."""
    if isinstance(cmd, Part):
        return [cmd.part], []
    lparts, lconj = flatten(cmd.left)
    rparts, rconj = flatten(cmd.right)
    word = "after" if isinstance(cmd, After) else "and"
    return lparts + rparts, lconj + [word] + rconj


def build_command(parts: list[ScanPart], conjunctions: list[str]) -> ScanCommand:
    """Assemble the canonical tree for a flat part/conjunction sequence."""
    if len(conjunctions) != len(parts) - 1:
        raise ValueError("need exactly one conjunction between consecutive parts")
    clauses: list[list[ScanCommand]] = [[Part(parts[0])]]
    for word, part in zip(conjunctions, parts[1:]):
        if word == "after":
            clauses.append([Part(part)])
        elif word == "and":
            clauses[-1].append(Part(part))
        else:
            raise ValueError(f"unknown conjunction {word!r}")
    return _fold_right([_fold_right(c, And) for c in clauses], After)


def normalize(cmd: ScanCommand) -> ScanCommand:
    return build_command(*flatten(cmd))


def print_command(cmd: ScanCommand) -> str:
    parts, conjunctions = flatten(cmd)
    words = parts[0].words()
    for word, part in zip(conjunctions, parts[1:]):
        words.append(word)
        words.extend(part.words())
    return " ".join(words)


def part_phrases(cmd: ScanCommand) -> list[ScanPart]:
    """Leaf parts in execution order (the right side of ``after`` runs first)."""
    if isinstance(cmd, Part):
        return [cmd.part]
    if isinstance(cmd, After):
        return part_phrases(cmd.right) + part_phrases(cmd.left)
    return part_phrases(cmd.left) + part_phrases(cmd.right)


def translate(cmd: ScanCommand) -> ActionProgram:
    tokens: list[str] = []
    spans = []
    for part in part_phrases(cmd):
        start = len(tokens)
        tokens.extend(part.actions())
        spans.append((start, len(tokens)))
    return ActionProgram(tuple(tokens), tuple(spans))


def translate_text(text: str) -> ActionProgram:
    return translate(parse_command(text))


def num_parts(cmd: ScanCommand) -> int:
    if isinstance(cmd, Part):
        return 1
    return num_parts(cmd.left) + num_parts(cmd.right)


def all_parts() -> list[ScanPart]:
    """Every distinct part the grammar admits (102 of them)."""
    out = []
    for rep in (1, 2, 3):
        for action in ACTIONS:
            out.append(ScanPart(action, repetition=rep))
        for verb in VERBS:
            for direction in DIRECTIONS:
                for modifier in MODIFIERS:
                    out.append(ScanPart(verb, direction, modifier, rep))
    return out


def concept_of_scan_part(part: ScanPart) -> Concept:
    return part.concept
