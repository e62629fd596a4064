"""Seeded, constraint-guided sampling of SCAN commands and RobustFill tasks."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field

from compsynth import scan
from compsynth.robustfill import dsl
from compsynth.robustfill.dsl import Compose, ConstStr, IoExample, RfExpression, RfProgram
from compsynth.robustfill.interpreter import ExecutionError, execute_expression, execute_program
from compsynth.scan import Concept, ScanCommand, ScanPart, concept_of_scan_part  # noqa: F401

REJECTION_BUDGET = 1000
SUBSTRING_IN_COMPOSE = "Compose.substring"


class Domain(str, enum.Enum):
    SCAN = "scan"
    ROBUSTFILL = "robustfill"


class RfConcept(str, enum.Enum):
    SUBSTRING = "SUBSTRING"
    NONSUBSTRING = "NONSUBSTRING"
    COMPOSE = "COMPOSE"


class ConceptPattern(str, enum.Enum):
    ANY = "any"
    ALL_A = "all-A"
    ALL_B = "all-B"
    SAME = "same"  # all-A or all-B, picked uniformly per sample
    MIXED = "mixed"
    A_THEN_B = "A-then-B"
    B_THEN_A = "B-then-A"


# concept A / concept B per domain
CONCEPT_PAIRS = {
    Domain.SCAN: (Concept.LEFT, Concept.RIGHT),
    Domain.ROBUSTFILL: (RfConcept.SUBSTRING, RfConcept.NONSUBSTRING),
}


class ConstraintUnsatisfiable(RuntimeError):
    pass


class GenerationBudgetExhausted(RuntimeError):
    def __init__(self, message: str, partial: RfProgram | None = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SpecialForm:
    """A fixed-form sample injected into a stream, e.g. the isolated new operation."""

    length_range: tuple[int, int]
    constraints: "ConstraintSet"


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints on sampled programs.

    Operator names are SCAN phrases (``"jump"``, ``"around right"``) or
    RobustFill operator names (``"Compose"``, ``"GetToken"``, plus
    ``"Compose.substring"`` for a substring operation nested in a Compose).
    """

    required_ops: frozenset[str] = frozenset()
    forbidden_ops: frozenset[str] = frozenset()
    concept_pattern: ConceptPattern = ConceptPattern.ANY
    excluded_specs: frozenset[str] = frozenset()
    excluded_lengths: frozenset[int] = frozenset()
    special_ratio: float = 0.0
    special: SpecialForm | None = None

    def __post_init__(self):
        object.__setattr__(self, "required_ops", frozenset(self.required_ops))
        object.__setattr__(self, "forbidden_ops", frozenset(self.forbidden_ops))
        object.__setattr__(self, "excluded_specs", frozenset(self.excluded_specs))
        object.__setattr__(self, "excluded_lengths", frozenset(self.excluded_lengths))
        object.__setattr__(self, "concept_pattern", ConceptPattern(self.concept_pattern))
        if self.required_ops & self.forbidden_ops:
            raise ValueError(f"ops both required and forbidden: {sorted(self.required_ops & self.forbidden_ops)}")
        if not 0.0 <= self.special_ratio <= 1.0:
            raise ValueError("special_ratio must lie in [0, 1]")
        if self.special_ratio > 0 and self.special is None:
            raise ValueError("special_ratio > 0 needs a special form")


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    domain: Domain
    length_range: tuple[int, int] = (1, 6)
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    examples_per_task: int = 4
    input_length_range: tuple[int, int] = (4, 20)

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain))
        lo, hi = self.length_range
        if not 1 <= lo <= hi <= 10:
            raise ValueError(f"length_range must lie within [1, 10], got {self.length_range}")
        if self.examples_per_task < 1:
            raise ValueError("examples_per_task must be >= 1")
        ilo, ihi = self.input_length_range
        if not 1 <= ilo <= ihi:
            raise ValueError(f"bad input_length_range {self.input_length_range}")


# -- feature extraction -----------------------------------------------------


def scan_part_contains(part: ScanPart, phrase: str) -> bool:
    return f" {phrase} " in f" {part.text()} "


def rf_expression_ops(e: RfExpression) -> set[str]:
    if isinstance(e, Compose):
        ops = {Compose.NAME, e.outer.NAME, e.inner.NAME}
        if dsl.is_substring(e.inner):
            ops.add(SUBSTRING_IN_COMPOSE)
        return ops
    return {e.NAME}


def concept_of_rf_expression(e: RfExpression) -> RfConcept:
    if isinstance(e, Compose):
        return RfConcept.COMPOSE
    if dsl.is_substring(e):
        return RfConcept.SUBSTRING
    return RfConcept.NONSUBSTRING


def execution_order(conjunctions: list[str]) -> list[int]:
    """Textual part indices in the order their actions execute.

    ``after`` splits the command into clauses that run last-to-first; parts
    joined by ``and`` keep their order.
    """
    clauses = [[0]]
    for i, word in enumerate(conjunctions, start=1):
        if word == "after":
            clauses.append([i])
        else:
            clauses[-1].append(i)
    return [i for clause in reversed(clauses) for i in clause]


def _scan_has(cmd_parts: list[ScanPart], op: str) -> bool:
    return any(scan_part_contains(p, op) for p in cmd_parts)


def _rf_has(exprs: list[RfExpression], op: str) -> bool:
    return any(op in rf_expression_ops(e) for e in exprs)


# -- sampler ----------------------------------------------------------------


_TYPE_CHARS = {
    "NUMBER": ("0123456789",),
    "WORD": ("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz",),
    "ALPHANUM": ("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789",),
    "ALL_CAPS": ("ABCDEFGHIJKLMNOPQRSTUVWXYZ",),
    "PROP_CASE": ("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"),
    "LOWER": ("abcdefghijklmnopqrstuvwxyz",),
}
_MIN_PIECE = {t: len(chars) for t, chars in _TYPE_CHARS.items()}
_MIN_PIECE.update(DIGIT=1, CHAR=1)
_FILLER_TYPES = ("NUMBER", "WORD", "ALPHANUM", "ALL_CAPS", "PROP_CASE", "LOWER")


def _requirements(e: RfExpression) -> tuple[dict[str, int], int]:
    """Match counts and minimum input length that ``e`` needs from its input."""
    op = e.inner if isinstance(e, Compose) else e
    counts: dict[str, int] = {}
    min_len = 0
    cls = type(op)
    if cls is dsl.SubStr:
        min_len = max(abs(op.k1), abs(op.k2))
    elif cls is dsl.GetSpan:
        counts[op.r1] = abs(op.i1)
        counts[op.r2] = max(counts.get(op.r2, 0), abs(op.i2))
    elif cls in (dsl.GetUpto, dsl.GetFrom):
        counts[op.r] = 1
    elif cls in (dsl.GetToken, dsl.GetFirst, dsl.Substitute, dsl.Remove):
        counts[op.t] = abs(op.i)
    return counts, min_len


def _planted_length(counts: dict[str, int]) -> int:
    pieces = sum(c * _MIN_PIECE.get(r, 1) for r, c in counts.items())
    n = sum(counts.values())
    return pieces + max(n - 1, 0)


class Sampler:
    """Owns one deterministic RNG stream; not safe to share across threads."""

    def __init__(self, config: SamplerConfig):
        self.config = config
        self.rng = random.Random(config.seed)

    def sample(self, special: bool = False):
        """Draw one sample: a ScanCommand, or (RfProgram, examples) for RobustFill."""
        if self.config.domain is Domain.SCAN:
            return self.sample_scan(special)
        return self.sample_rf(special)

    def _target(self, special: bool) -> tuple[int, ConstraintSet]:
        """Part count and constraints for the next sample."""
        cs = self.config.constraints
        lo, hi = self.config.length_range
        if special:
            if cs.special is None:
                raise ValueError("no special form configured")
            (lo, hi), cs = cs.special.length_range, cs.special.constraints
        lengths = [n for n in range(lo, hi + 1) if n not in cs.excluded_lengths]
        if not lengths:
            raise ConstraintUnsatisfiable("every length in range is excluded")
        return self.rng.choice(lengths), cs

    # -- concepts --

    def _assign_concepts(self, n: int, pattern: ConceptPattern) -> list:
        a, b = CONCEPT_PAIRS[self.config.domain]
        rng = self.rng
        if pattern is ConceptPattern.ANY:
            return [None] * n
        if pattern is ConceptPattern.ALL_A:
            return [a] * n
        if pattern is ConceptPattern.ALL_B:
            return [b] * n
        if pattern is ConceptPattern.SAME:
            return [rng.choice((a, b))] * n
        if n < 2:
            raise ConstraintUnsatisfiable(f"pattern {pattern.value} needs at least 2 parts")
        if pattern is ConceptPattern.MIXED:
            while True:
                out = [rng.choice((a, b)) for _ in range(n)]
                if a in out and b in out:
                    return out
        head = math.ceil(n / 2)
        first, second = (a, b) if pattern is ConceptPattern.A_THEN_B else (b, a)
        return [first] * head + [second] * (n - head)

    # -- SCAN --

    def _scan_part(self, concept, forbidden: frozenset[str]) -> ScanPart:
        rng = self.rng
        for _ in range(REJECTION_BUDGET):
            if concept is None:
                template = rng.choice(("l", "r", "a"))
            else:
                template = "l" if concept is Concept.LEFT else "r"
            rep = rng.choice((1, 2, 3))
            if template == "a":
                part = ScanPart(rng.choice(scan.ACTIONS), repetition=rep)
            else:
                part = ScanPart(
                    rng.choice(scan.VERBS),
                    "left" if template == "l" else "right",
                    rng.choice(scan.MODIFIERS),
                    rep,
                )
            if not any(scan_part_contains(part, op) for op in forbidden):
                return part
        raise ConstraintUnsatisfiable(f"no part avoids {sorted(forbidden)}")

    def sample_scan(self, special: bool = False) -> ScanCommand:
        """Concept patterns apply to parts in execution order."""
        n, cs = self._target(special)
        rng = self.rng
        for _ in range(REJECTION_BUDGET):
            conjunctions = [rng.choice(scan.CONJUNCTIONS) for _ in range(n - 1)]
            concepts = self._assign_concepts(n, cs.concept_pattern)
            order = execution_order(conjunctions)
            parts: list[ScanPart] = [None] * n  # type: ignore[list-item]
            for concept, textual in zip(concepts, order):
                parts[textual] = self._scan_part(concept, cs.forbidden_ops)
            if not all(_scan_has(parts, op) for op in cs.required_ops):
                continue
            cmd = scan.build_command(parts, conjunctions)
            if cs.excluded_specs and scan.print_command(cmd) in cs.excluded_specs:
                continue
            return cmd
        raise ConstraintUnsatisfiable(
            f"no {n}-part command met the constraints in {REJECTION_BUDGET} attempts"
        )

    # -- RobustFill literals --

    def _position(self) -> int:
        hi = min(self.config.input_length_range[1], 100)
        k = self.rng.randint(1, hi)
        return k if self.rng.random() < 0.5 else -k

    def _index(self) -> int:
        i = self.rng.randint(1, 5)
        return i if self.rng.random() < 0.5 else -i

    def _regex(self) -> str:
        if self.rng.random() < 0.5:
            return self.rng.choice(dsl.TOKEN_TYPES)
        return self.rng.choice(dsl.DELIMITERS)

    def _substring_op(self):
        rng = self.rng
        cls = rng.choice(dsl.SUBSTRING_OPS)
        if cls is dsl.SubStr:
            return dsl.SubStr(self._position(), self._position())
        if cls is dsl.GetSpan:
            return dsl.GetSpan(
                self._regex(), self._index(), rng.choice(dsl.BOUNDARIES),
                self._regex(), self._index(), rng.choice(dsl.BOUNDARIES),
            )
        if cls is dsl.GetToken:
            return dsl.GetToken(rng.choice(dsl.TOKEN_TYPES), self._index())
        return cls(self._regex())

    def _modification_op(self):
        rng = self.rng
        cls = rng.choice(dsl.MODIFICATION_OPS)
        types = dsl.TOKEN_TYPES
        if cls is dsl.ToCase:
            return dsl.ToCase(rng.choice(dsl.CASES))
        if cls is dsl.Replace:
            d1, d2 = rng.sample(dsl.DELIMITERS, 2)
            return dsl.Replace(d1, d2)
        if cls is dsl.Trim:
            return dsl.Trim()
        if cls is dsl.GetFirst:
            return dsl.GetFirst(rng.choice(types), rng.randint(1, 5))
        if cls is dsl.Substitute:
            return dsl.Substitute(rng.choice(types), self._index(), rng.choice(dsl.CHARACTERS))
        if cls is dsl.SubstituteAll:
            return dsl.SubstituteAll(rng.choice(types), rng.choice(dsl.CHARACTERS))
        if cls is dsl.Remove:
            return dsl.Remove(rng.choice(types), self._index())
        return cls(rng.choice(types))  # GetAll, RemoveAll

    def _draw_expression(self, concept) -> RfExpression:
        rng = self.rng
        if concept is RfConcept.SUBSTRING:
            kind = "s"
        elif concept is RfConcept.NONSUBSTRING:
            kind = rng.choice(("m", "c"))
        else:
            kind = rng.choice(("s", "m", "o", "c"))
        if kind == "s":
            return self._substring_op()
        if kind == "m":
            return self._modification_op()
        if kind == "c":
            return ConstStr(rng.choice(dsl.CHARACTERS))
        inner = self._modification_op() if rng.random() < 0.5 else self._substring_op()
        return Compose(self._modification_op(), inner)

    # -- RobustFill inputs --

    def _piece(self, regex: str, max_len: int) -> str:
        rng = self.rng
        if regex in dsl.DELIMITERS:
            return regex
        if regex == "DIGIT":
            return rng.choice("0123456789")
        if regex == "CHAR":
            return rng.choice(dsl.CHARACTERS)
        alphabets = _TYPE_CHARS[regex]
        size = rng.randint(len(alphabets), max(len(alphabets), max_len))
        head = [rng.choice(a) for a in alphabets[:-1]]
        return "".join(head + [rng.choice(alphabets[-1]) for _ in range(size - len(head))])

    def _make_input(self, counts: dict[str, int], min_len: int) -> str | None:
        rng = self.rng
        lo, hi = self.config.input_length_range
        planted_len = _planted_length(counts)
        if planted_len > hi or min_len > hi:
            return None
        target = rng.randint(max(lo, min_len, planted_len), hi)
        planted = [r for r in sorted(counts) for _ in range(counts[r])]
        rng.shuffle(planted)
        room = target - planted_len
        pieces = []
        for r in planted:
            extra = rng.randint(0, min(room, 2)) if r in _TYPE_CHARS else 0
            piece = self._piece(r, _MIN_PIECE.get(r, 1) + extra)
            room -= len(piece) - _MIN_PIECE.get(r, 1)
            pieces.append(piece)
        length = sum(map(len, pieces)) + max(len(pieces) - 1, 0)
        while length + 2 <= target or (not pieces and length < target):
            budget = target - length - (1 if pieces else 0)
            kinds = [t for t in _FILLER_TYPES if _MIN_PIECE[t] <= budget]
            piece = self._piece(rng.choice(kinds), min(budget, 6))
            pieces.insert(rng.randint(0, len(pieces)), piece)
            length += len(piece) + (1 if len(pieces) > 1 else 0)
        seps = [" " if rng.random() < 0.7 else rng.choice(dsl.DELIMITERS) for _ in pieces[1:]]
        out = pieces[0]
        for sep, piece in zip(seps, pieces[1:]):
            out += sep + piece
        if len(out) < target:
            out = out + " " if rng.random() < 0.5 else " " + out
        return out

    def _viable(self, e: RfExpression) -> bool:
        counts, min_len = _requirements(e)
        for _ in range(3):
            s = self._make_input(counts, min_len)
            if s is None:
                return False
            try:
                execute_expression(e, s)
                return True
            except ExecutionError:
                continue
        return False

    def _rf_expression(self, concept, forbidden: frozenset[str], counts: dict[str, int], min_len: int):
        """Draw an expression that avoids ``forbidden`` and fits alongside ``counts``."""
        hi = self.config.input_length_range[1]
        for _ in range(REJECTION_BUDGET):
            e = self._draw_expression(concept)
            if forbidden and rf_expression_ops(e) & forbidden:
                continue
            need, need_len = _requirements(e)
            merged = dict(counts)
            for r, c in need.items():
                merged[r] = max(merged.get(r, 0), c)
            if _planted_length(merged) > hi or max(min_len, need_len) > hi:
                continue
            if not self._viable(e):
                continue
            return e, merged, max(min_len, need_len)
        raise ConstraintUnsatisfiable(f"no expression for concept {concept} avoids {sorted(forbidden)}")

    def _build_expressions(self, concepts, forbidden):
        counts: dict[str, int] = {}
        min_len = 0
        exprs = []
        for c in concepts:
            e, counts, min_len = self._rf_expression(c, forbidden, counts, min_len)
            exprs.append(e)
        return exprs, counts, min_len

    def _examples(self, program: RfProgram, counts, min_len) -> list[IoExample] | None:
        """Distinct-input examples on which every expression succeeds, or None."""
        want = self.config.examples_per_task
        examples: list[IoExample] = []
        seen = set()
        for _ in range(want * 8):
            s = self._make_input(counts, min_len)
            if s is None or s in seen:
                continue
            try:
                out = execute_program(program, s)
            except ExecutionError:
                continue
            if not out:
                continue
            seen.add(s)
            examples.append(IoExample(s, out))
            if len(examples) == want:
                return examples
        return None

    def sample_rf(self, special: bool = False) -> tuple[RfProgram, list[IoExample]]:
        n, cs = self._target(special)
        program = None
        for _ in range(REJECTION_BUDGET):
            concepts = self._assign_concepts(n, cs.concept_pattern)
            exprs, counts, min_len = self._build_expressions(concepts, cs.forbidden_ops)
            if not all(_rf_has(exprs, op) for op in cs.required_ops):
                continue
            program = RfProgram(tuple(exprs))
            examples = self._examples(program, counts, min_len)
            if examples is not None:
                return program, examples
        raise GenerationBudgetExhausted(
            f"no valid {n}-expression program in {REJECTION_BUDGET} attempts", partial=program
        )


def sample_scan(cfg: SamplerConfig) -> ScanCommand:
    if Domain(cfg.domain) is not Domain.SCAN:
        raise ValueError("sample_scan needs a SCAN config")
    return Sampler(cfg).sample_scan()


def sample_rf(cfg: SamplerConfig) -> tuple[RfProgram, list[IoExample]]:
    if Domain(cfg.domain) is not Domain.ROBUSTFILL:
        raise ValueError("sample_rf needs a RobustFill config")
    return Sampler(cfg).sample_rf()
