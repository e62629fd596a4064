"""Train/test/fine-tune split builders for the seven generalization tasks."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from compsynth import decomp, scan
from compsynth.robustfill import dsl
from compsynth.robustfill.dsl import IoExample
from compsynth.sampling import (
    ConceptPattern,
    ConstraintSet,
    Domain,
    Sampler,
    SamplerConfig,
    SpecialForm,
    SUBSTRING_IN_COMPOSE,
    concept_of_rf_expression,
)

logger = logging.getLogger(__name__)

TEST_SIZE = 10_000
TRAIN_SIZE = 10_000
FINETUNE_PER_ORIGIN = 20
DEDUP_BUDGET = 200


class Task(str, enum.Enum):
    LENGTH = "length"
    LENGTH_HARD = "length-hard"
    LENGTH_HARDEST = "length-hardest"
    COMPOSE_DIFFERENT_CONCEPTS = "compose-different-concepts"
    SWITCH_CONCEPT_ORDER = "switch-concept-order"
    COMPOSE_NEW_OPERATION = "compose-new-operation"
    ADD_OPERATION_FUNCTIONALITY = "add-operation-functionality"


class Role(str, enum.Enum):
    TRAIN = "train"
    TEST = "test"
    FINETUNE = "finetune"


class Origin(str, enum.Enum):
    TRAIN_DIST = "TRAIN_DIST"
    TEST_DIST = "TEST_DIST"


class UnsatisfiablePredicate(RuntimeError):
    pass


def derive_seed(root: int, *labels) -> int:
    """Stable 63-bit seed for a labeled sub-stream of ``root``."""
    payload = json.dumps([root, *[getattr(x, "value", x) for x in labels]])
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class SplitSpec:
    domain: Domain
    task: Task
    role: Role = Role.TEST
    seed: int = 0
    train_size: int = TRAIN_SIZE
    test_size: int = TEST_SIZE
    examples_per_task: int = 4
    input_length_range: tuple[int, int] = (4, 20)
    hardest_max_length: int = 6

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain))
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "input_length_range", tuple(self.input_length_range))
        if not 2 <= self.hardest_max_length <= 10:
            raise ValueError("hardest_max_length must lie in [2, 10]")

    def size(self, role: Role | None = None) -> int:
        role = self.role if role is None else Role(role)
        if role is Role.TRAIN:
            return self.train_size
        if role is Role.TEST:
            return self.test_size
        return 2 * FINETUNE_PER_ORIGIN

    def with_role(self, role: Role) -> "SplitSpec":
        from dataclasses import replace

        return replace(self, role=Role(role))


@dataclass(frozen=True)
class TaskInstance:
    domain: Domain
    task: Task
    role: Role
    spec: str | tuple[IoExample, ...]
    target_tokens: tuple[str, ...]
    part_spans: tuple[tuple[int, int], ...]
    concept_labels: tuple[str, ...]
    origin: Origin

    @property
    def length(self) -> int:
        return len(self.part_spans)

    @property
    def program_tokens(self) -> list[str]:
        return decomp.strip_separators(self.target_tokens)

    @property
    def spec_key(self):
        if self.domain is Domain.SCAN:
            return self.spec
        return tuple((ex.input, ex.output) for ex in self.spec)


def make_instance(domain, sample, task: Task, role: Role, origin: Origin) -> TaskInstance:
    """Wrap a raw sampler output as a benchmark record."""
    domain = Domain(domain)
    if domain is Domain.SCAN:
        program = scan.translate(sample)
        tokens, spans = program.tokens, program.part_spans
        concepts = [p.concept.value for p in scan.part_phrases(sample)]
        spec = scan.print_command(sample)
    else:
        rf_program, examples = sample
        tokens = dsl.tokenize_program(rf_program)
        spans = dsl.expression_spans(rf_program)
        concepts = [concept_of_rf_expression(e).value for e in rf_program.expressions]
        spec = tuple(examples)
    seq = decomp.insert_separators(tokens, spans)
    return TaskInstance(
        domain, task, role, spec, seq.tokens,
        tuple(tuple(s) for s in spans), tuple(concepts), origin,
    )


# -- distributions ----------------------------------------------------------


def distribution_constraints(spec: SplitSpec, origin: Origin) -> tuple[tuple[int, int], ConstraintSet]:
    """Length range and constraints that define one side of a task's split."""
    train = Origin(origin) is Origin.TRAIN_DIST
    task, domain = spec.task, spec.domain
    rf = domain is Domain.ROBUSTFILL
    if task is Task.LENGTH:
        return ((1, 6) if train else (7, 10)), ConstraintSet()
    if task is Task.LENGTH_HARD:
        return ((6, 6), ConstraintSet()) if train else ((1, 10), ConstraintSet(excluded_lengths={6}))
    if task is Task.LENGTH_HARDEST:
        return ((1, 1) if train else (2, spec.hardest_max_length)), ConstraintSet()
    if task is Task.COMPOSE_DIFFERENT_CONCEPTS:
        pattern = ConceptPattern.SAME if train else ConceptPattern.MIXED
        return (2, 6), ConstraintSet(concept_pattern=pattern)
    if task is Task.SWITCH_CONCEPT_ORDER:
        pattern = ConceptPattern.A_THEN_B if train else ConceptPattern.B_THEN_A
        return (2, 6), ConstraintSet(concept_pattern=pattern)
    if task is Task.COMPOSE_NEW_OPERATION:
        if rf:
            if train:
                special = SpecialForm((1, 1), ConstraintSet(required_ops={"Compose"}))
                return (2, 6), ConstraintSet(forbidden_ops={"Compose"}, special_ratio=0.25, special=special)
            return (2, 6), ConstraintSet(required_ops={"Compose"})
        if train:
            special = SpecialForm(
                (1, 1),
                ConstraintSet(required_ops={"jump"}, forbidden_ops={"left", "right", "twice", "thrice"}),
            )
            return (1, 6), ConstraintSet(forbidden_ops={"jump"}, special_ratio=0.10, special=special)
        return (1, 6), ConstraintSet(required_ops={"jump"}, excluded_specs={"jump"})
    if task is Task.ADD_OPERATION_FUNCTIONALITY:
        op = SUBSTRING_IN_COMPOSE if rf else "around right"
        if train:
            return (1, 6), ConstraintSet(forbidden_ops={op})
        return (1, 6), ConstraintSet(required_ops={op})
    raise ValueError(f"unknown task {task}")


def sampler_config(spec: SplitSpec, origin: Origin, seed: int) -> SamplerConfig:
    length_range, constraints = distribution_constraints(spec, origin)
    return SamplerConfig(
        seed=seed,
        domain=spec.domain,
        length_range=length_range,
        constraints=constraints,
        examples_per_task=spec.examples_per_task,
        input_length_range=spec.input_length_range,
    )


def _generate(
    spec: SplitSpec,
    origin: Origin,
    role: Role,
    n: int,
    seed: int,
    exclude: frozenset = frozenset(),
) -> Iterator[TaskInstance]:
    cfg = sampler_config(spec, origin, seed)
    sampler = Sampler(cfg)
    ratio = cfg.constraints.special_ratio
    special_slots = set(random.Random(derive_seed(seed, "special")).sample(range(n), round(ratio * n)))
    repeatable_special = spec.domain is Domain.SCAN
    seen: set = set()
    saturated = False
    for i in range(n):
        special = i in special_slots
        for _ in range(DEDUP_BUDGET):
            inst = make_instance(spec.domain, sampler.sample(special), spec.task, role, origin)
            key = inst.spec_key
            if key in exclude:
                continue
            if key not in seen or saturated or (special and repeatable_special):
                break
        else:
            if key in exclude:
                raise UnsatisfiablePredicate(
                    f"{spec.domain.value}/{spec.task.value}: no sample outside the excluded set"
                )
            saturated = True
            logger.warning(
                "%s/%s %s: specification space exhausted after %d records; allowing repeats",
                spec.domain.value, spec.task.value, role.value, len(seen),
            )
        seen.add(key)
        yield inst


def build_split(spec: SplitSpec, exclude: Iterable | None = None) -> Iterator[TaskInstance]:
    """Stream ``spec.size()`` records of ``spec.role``, deduplicated by specification.

    Repeats are only emitted for the fixed SCAN ``jump`` records, or once the
    role's specification space is exhausted (SCAN single-part commands).
    """
    if spec.role is Role.FINETUNE:
        yield from build_finetune_set(spec, exclude=exclude)
        return
    origin = Origin.TRAIN_DIST if spec.role is Role.TRAIN else Origin.TEST_DIST
    seed = derive_seed(spec.seed, spec.domain, spec.task, spec.role)
    yield from _generate(spec, origin, spec.role, spec.size(), seed, frozenset(exclude or ()))


def build_finetune_set(spec: SplitSpec, exclude: Iterable | None = None) -> list[TaskInstance]:
    """20 train-distribution plus 20 test-distribution records, disjoint from the test set.

    ``exclude`` holds specification keys to avoid; by default the test split for
    ``spec`` is rebuilt to obtain them.
    """
    if exclude is None:
        exclude = {inst.spec_key for inst in build_split(spec.with_role(Role.TEST))}
    exclude = frozenset(exclude)
    out = []
    for origin in (Origin.TRAIN_DIST, Origin.TEST_DIST):
        seed = derive_seed(spec.seed, spec.domain, spec.task, Role.FINETUNE, origin)
        batch = list(_generate(spec, origin, Role.FINETUNE, FINETUNE_PER_ORIGIN, seed, exclude))
        exclude |= {inst.spec_key for inst in batch if inst.spec_key}
        out.extend(batch)
    return out


# -- predicates (computed from the stored record, independent of the sampler) --


def _scan_clauses(command: str) -> list[list[str]]:
    """Part phrases of a command in execution order."""
    clauses = command.split(" after ")
    return [part.split(" ") for clause in reversed(clauses) for part in clause.split(" and ")]


def _scan_concept(words: list[str]) -> str:
    if "left" in words:
        return "LEFT"
    if "right" in words:
        return "RIGHT"
    return "NONE"


def record_features(inst: TaskInstance) -> dict:
    """Length, execution-order concepts and operator facts of a stored record."""
    if inst.domain is Domain.SCAN:
        parts = _scan_clauses(inst.spec)
        text = f" {inst.spec} "
        return {
            "length": len(parts),
            "concepts": [_scan_concept(p) for p in parts],
            "has_jump": any(p[0] == "jump" for p in parts),
            "is_jump": inst.spec == "jump",
            "has_around_right": " around right " in text,
        }
    program = dsl.parse_program(inst.program_tokens)
    concepts = []
    substring_in_compose = False
    for e in program.expressions:
        if isinstance(e, dsl.Compose):
            concepts.append("COMPOSE")
            substring_in_compose |= isinstance(e.inner, dsl.SUBSTRING_OPS)
        elif isinstance(e, dsl.SUBSTRING_OPS):
            concepts.append("SUBSTRING")
        else:
            concepts.append("NONSUBSTRING")
    return {
        "length": len(program.expressions),
        "concepts": concepts,
        "has_compose": "COMPOSE" in concepts,
        "substring_in_compose": substring_in_compose,
    }


def predicate_violation(inst: TaskInstance, origin: Origin, hardest_max_length: int = 6) -> str | None:
    """Why ``inst`` falls outside the ``origin`` side of its task, or None if it complies."""
    f = record_features(inst)
    n, concepts = f["length"], f["concepts"]
    train = Origin(origin) is Origin.TRAIN_DIST
    task = inst.task
    scan_domain = inst.domain is Domain.SCAN
    a, b = ("LEFT", "RIGHT") if scan_domain else ("SUBSTRING", "NONSUBSTRING")

    def bad(reason):
        return f"{task.value}/{'train' if train else 'test'}: {reason}"

    if task is Task.LENGTH:
        ok = 1 <= n <= 6 if train else 7 <= n <= 10
        return None if ok else bad(f"length {n}")
    if task is Task.LENGTH_HARD:
        ok = n == 6 if train else (1 <= n <= 10 and n != 6)
        return None if ok else bad(f"length {n}")
    if task is Task.LENGTH_HARDEST:
        ok = n == 1 if train else 2 <= n <= hardest_max_length
        return None if ok else bad(f"length {n}")
    if task in (Task.COMPOSE_DIFFERENT_CONCEPTS, Task.SWITCH_CONCEPT_ORDER):
        if not 2 <= n <= 6:
            return bad(f"length {n}")
        if any(c not in (a, b) for c in concepts):
            return bad(f"concept outside {a}/{b}: {concepts}")
        if task is Task.COMPOSE_DIFFERENT_CONCEPTS:
            uniform = len(set(concepts)) == 1
            return None if uniform == train else bad(f"concepts {concepts}")
        head = math.ceil(n / 2)
        first, second = (a, b) if train else (b, a)
        expected = [first] * head + [second] * (n - head)
        return None if concepts == expected else bad(f"concept order {concepts}")
    if task is Task.COMPOSE_NEW_OPERATION:
        if scan_domain:
            if train:
                ok = f["is_jump"] or (1 <= n <= 6 and not f["has_jump"])
            else:
                ok = 1 <= n <= 6 and f["has_jump"] and not f["is_jump"]
        else:
            if train:
                ok = (n == 1 and concepts == ["COMPOSE"]) or (2 <= n <= 6 and not f["has_compose"])
            else:
                ok = 2 <= n <= 6 and f["has_compose"]
        return None if ok else bad(f"length {n}, concepts {concepts}")
    if task is Task.ADD_OPERATION_FUNCTIONALITY:
        flag = f["has_around_right"] if scan_domain else f["substring_in_compose"]
        ok = 1 <= n <= 6 and flag != train
        return None if ok else bad(f"length {n}, new functionality present={flag}")
    raise ValueError(f"unknown task {task}")


def is_special(inst: TaskInstance) -> bool:
    """Whether a train record is the isolated new operation of compose-new-operation."""
    if inst.task is not Task.COMPOSE_NEW_OPERATION:
        return False
    if inst.domain is Domain.SCAN:
        return inst.spec == "jump"
    return inst.length == 1 and inst.concept_labels == ("COMPOSE",)


def concept_pattern_label(concepts: Sequence[str]) -> str:
    if not concepts:
        return "empty"
    kinds = list(dict.fromkeys(concepts))
    if len(kinds) == 1:
        return f"all-{kinds[0]}"
    n = len(concepts)
    head = math.ceil(n / 2)
    if len(kinds) == 2 and list(concepts) == [kinds[0]] * head + [kinds[1]] * (n - head):
        return f"{kinds[0]}-then-{kinds[1]}"
    return "mixed"


# -- audit ------------------------------------------------------------------


@dataclass
class AuditReport:
    domain: str
    task: str
    sizes: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    overlap: int = 0
    duplicates: dict = field(default_factory=dict)
    special_count: int = 0
    length_histograms: dict = field(default_factory=dict)
    concept_histograms: dict = field(default_factory=dict)
    examples: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.overlap == 0 and not any(self.violations.values())

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "task": self.task,
            "clean": self.clean,
            "sizes": self.sizes,
            "violations": self.violations,
            "overlap": self.overlap,
            "duplicates": self.duplicates,
            "special_count": self.special_count,
            "length_histograms": self.length_histograms,
            "concept_histograms": self.concept_histograms,
            "violation_examples": self.examples,
        }

    def to_text(self) -> str:
        roles = list(self.sizes)
        patterns = sorted({k for h in self.concept_histograms.values() for k in h})
        w = max([len(k) for k in patterns] + [24])
        lines = [f"audit {self.domain}/{self.task}: {'OK' if self.clean else 'VIOLATIONS'}"]
        lines.append(f"{'':{w}}" + "".join(f"{r:>12}" for r in roles))
        for name, table in (("records", self.sizes), ("predicate violations", self.violations),
                            ("duplicate specs", self.duplicates)):
            lines.append(f"{name:{w}}" + "".join(f"{table.get(r, 0):>12}" for r in roles))
        lines.append(f"{'train/test overlap':{w}}{self.overlap:>12}")
        if self.task == Task.COMPOSE_NEW_OPERATION.value:
            lines.append(f"{'isolated-op train recs':{w}}{self.special_count:>12}")
        lengths = sorted({k for h in self.length_histograms.values() for k in h}, key=int)
        for k in lengths:
            lines.append(f"{'length ' + str(k):{w}}" + "".join(
                f"{self.length_histograms[r].get(k, 0):>12}" for r in roles))
        for k in patterns:
            lines.append(f"{k:{w}}" + "".join(
                f"{self.concept_histograms[r].get(k, 0):>12}" for r in roles))
        for ex in self.examples:
            lines.append(f"  ! {ex}")
        return "\n".join(lines)


def audit_split(
    train: Iterable[TaskInstance],
    test: Iterable[TaskInstance],
    hardest_max_length: int = 6,
    max_examples: int = 10,
) -> AuditReport:
    """Predicate, overlap and histogram report for a train/test pair."""
    streams = {"train": list(train), "test": list(test)}
    first = next((r for s in streams.values() for r in s), None)
    report = AuditReport(
        domain=first.domain.value if first else "",
        task=first.task.value if first else "",
    )
    keys = {}
    for role, records in streams.items():
        origin = Origin.TRAIN_DIST if role == "train" else Origin.TEST_DIST
        lengths, patterns, counts = Counter(), Counter(), Counter()
        violations = 0
        for i, inst in enumerate(records):
            reason = predicate_violation(inst, origin, hardest_max_length)
            if reason:
                violations += 1
                if len(report.examples) < max_examples:
                    report.examples.append(f"{role}[{i}] {reason}")
            f = record_features(inst)
            lengths[str(f["length"])] += 1
            patterns[concept_pattern_label(f["concepts"])] += 1
            counts[inst.spec_key] += 1
            if role == "train" and is_special(inst):
                report.special_count += 1
        report.sizes[role] = len(records)
        report.violations[role] = violations
        report.duplicates[role] = sum(c - 1 for c in counts.values())
        report.length_histograms[role] = dict(sorted(lengths.items(), key=lambda kv: int(kv[0])))
        report.concept_histograms[role] = dict(sorted(patterns.items()))
        keys[role] = set(counts)
    report.overlap = len(keys["train"] & keys["test"])
    return report
