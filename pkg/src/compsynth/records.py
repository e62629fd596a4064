"""JSONL dataset records: serialization, ids, schema and invariant checks."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Iterator

import jsonschema

from compsynth import __version__, decomp, scan
from compsynth.robustfill import dsl
from compsynth.robustfill.dsl import IoExample
from compsynth.robustfill.interpreter import satisfies
from compsynth.sampling import Domain
from compsynth.tasks import Origin, Role, Task, TaskInstance

_ENUM = lambda cls: {"enum": [m.value for m in cls]}  # noqa: E731

RECORD_SCHEMA = {
    "type": "object",
    "required": [
        "id", "domain", "task", "role", "spec", "target_tokens", "part_spans",
        "length", "concept_labels", "origin", "generator_meta",
    ],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string", "pattern": "^[0-9a-f]{16}(-[0-9]+)?$"},
        "domain": _ENUM(Domain),
        "task": _ENUM(Task),
        "role": _ENUM(Role),
        "spec": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["command"],
                    "additionalProperties": False,
                    "properties": {"command": {"type": "string", "minLength": 1}},
                },
                {
                    "type": "object",
                    "required": ["examples"],
                    "additionalProperties": False,
                    "properties": {
                        "examples": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "required": ["input", "output"],
                                "additionalProperties": False,
                                "properties": {
                                    "input": {"type": "string", "minLength": 1},
                                    "output": {"type": "string"},
                                },
                            },
                        }
                    },
                },
            ]
        },
        "target_tokens": {"type": "array", "items": {"type": "string"}},
        "part_spans": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "integer", "minimum": 0},
            },
        },
        "length": {"type": "integer", "minimum": 1},
        "concept_labels": {"type": "array", "items": {"type": "string"}},
        "origin": _ENUM(Origin),
        "generator_meta": {
            "type": "object",
            "required": ["seed", "tool_version", "config_digest"],
            "properties": {
                "seed": {"type": "integer"},
                "tool_version": {"type": "string"},
                "config_digest": {"type": "string"},
            },
        },
    },
}

PREDICTION_SCHEMA = {
    "type": "object",
    "required": ["instance_id", "predicted_tokens"],
    "properties": {
        "instance_id": {"type": "string"},
        "predicted_tokens": {"type": "array", "items": {"type": "string"}},
    },
}

_record_validator = jsonschema.Draft7Validator(RECORD_SCHEMA)
_prediction_validator = jsonschema.Draft7Validator(PREDICTION_SCHEMA)


class SchemaError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def spec_json(inst: TaskInstance) -> dict:
    if inst.domain is Domain.SCAN:
        return {"command": inst.spec}
    return {"examples": [{"input": ex.input, "output": ex.output} for ex in inst.spec]}


def record_id(domain, task, role, spec: dict, occurrence: int = 0) -> str:
    base = digest([Domain(domain).value, Task(task).value, Role(role).value, spec])
    return base if occurrence == 0 else f"{base}-{occurrence}"


def to_records(instances: Iterable[TaskInstance], meta: dict) -> Iterator[dict]:
    """Serialize instances; repeated specifications get ``-k`` id suffixes."""
    occurrences: Counter = Counter()
    for inst in instances:
        spec = spec_json(inst)
        base = record_id(inst.domain, inst.task, inst.role, spec)
        k = occurrences[base]
        occurrences[base] += 1
        yield {
            "id": base if k == 0 else f"{base}-{k}",
            "domain": inst.domain.value,
            "task": inst.task.value,
            "role": inst.role.value,
            "spec": spec,
            "target_tokens": list(inst.target_tokens),
            "part_spans": [list(s) for s in inst.part_spans],
            "length": inst.length,
            "concept_labels": list(inst.concept_labels),
            "origin": inst.origin.value,
            "generator_meta": meta,
        }


def from_record(rec: dict) -> TaskInstance:
    domain = Domain(rec["domain"])
    if domain is Domain.SCAN:
        spec = rec["spec"]["command"]
    else:
        spec = tuple(IoExample(ex["input"], ex["output"]) for ex in rec["spec"]["examples"])
    return TaskInstance(
        domain=domain,
        task=Task(rec["task"]),
        role=Role(rec["role"]),
        spec=spec,
        target_tokens=tuple(rec["target_tokens"]),
        part_spans=tuple(tuple(s) for s in rec["part_spans"]),
        concept_labels=tuple(rec["concept_labels"]),
        origin=Origin(rec["origin"]),
    )


def generator_meta(seed: int, params: dict) -> dict:
    return {"seed": seed, "tool_version": __version__, "config_digest": digest(params)}


def dumps(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)``; malformed JSON raises SchemaError."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise SchemaError(f"invalid JSON: {err.msg}", lineno) from None
            yield lineno, obj


def schema_errors(rec: dict) -> list[str]:
    return [
        f"{'/'.join(map(str, e.absolute_path)) or '<record>'}: {e.message}"
        for e in _record_validator.iter_errors(rec)
    ]


def prediction_errors(obj: dict) -> list[str]:
    return [
        f"{'/'.join(map(str, e.absolute_path)) or '<prediction>'}: {e.message}"
        for e in _prediction_validator.iter_errors(obj)
    ]


def invariant_errors(rec: dict) -> list[str]:
    """Semantic checks beyond the schema: spans, separators, ids, re-execution."""
    errors = []
    tokens = rec["target_tokens"]
    program = decomp.strip_separators(tokens)
    spans = [tuple(s) for s in rec["part_spans"]]
    if rec["length"] != len(spans):
        errors.append(f"length {rec['length']} != {len(spans)} part spans")
    if len(rec["concept_labels"]) != len(spans):
        errors.append("concept_labels do not align with part_spans")
    try:
        expected = decomp.insert_separators(program, spans).tokens
        if list(expected) != list(tokens):
            errors.append("separators are not placed exactly at part boundaries")
    except ValueError as err:
        errors.append(str(err))
    base = rec["id"].split("-")[0]
    if base != record_id(rec["domain"], rec["task"], rec["role"], rec["spec"]):
        errors.append("id is not the digest of the record's specification")
    if rec["domain"] == Domain.SCAN.value:
        try:
            translated = scan.translate_text(rec["spec"]["command"])
        except (ValueError, KeyError) as err:
            errors.append(f"command does not parse: {err}")
        else:
            if list(translated.tokens) != program:
                errors.append("re-translating the command does not reproduce the target")
            if [list(s) for s in translated.part_spans] != [list(s) for s in spans]:
                errors.append("part spans differ from the translation's part spans")
    else:
        try:
            p = dsl.parse_program(program)
            examples = [IoExample(e["input"], e["output"]) for e in rec["spec"]["examples"]]
        except (ValueError, KeyError) as err:
            errors.append(f"program does not parse: {err}")
        else:
            if [list(s) for s in dsl.expression_spans(p)] != [list(s) for s in spans]:
                errors.append("part spans differ from the program's expression spans")
            if not satisfies(p, examples):
                errors.append("program does not satisfy its examples")
    return errors


def validate_file(path: str | Path) -> list[str]:
    """All schema and invariant problems in a dataset file, prefixed with line numbers."""
    problems = []
    seen: dict[str, int] = {}
    try:
        for lineno, rec in read_jsonl(path):
            errs = schema_errors(rec)
            if not errs:
                errs = invariant_errors(rec)
                if rec["id"] in seen:
                    errs.append(f"duplicate id (first on line {seen[rec['id']]})")
                seen.setdefault(rec["id"], lineno)
            problems.extend(f"line {lineno}: {e}" for e in errs)
    except SchemaError as err:
        problems.append(str(err))
    return problems


def load_dataset(path: str | Path) -> list[tuple[str, TaskInstance]]:
    """Read and schema-check a dataset; raises SchemaError naming the first bad line."""
    out = []
    for lineno, rec in read_jsonl(path):
        errs = schema_errors(rec)
        if errs:
            raise SchemaError(errs[0], lineno)
        out.append((rec["id"], from_record(rec)))
    return out
