"""Exact-match (SCAN) and functional (RobustFill) scoring of predicted programs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from compsynth import decomp
from compsynth.robustfill import dsl
from compsynth.robustfill.interpreter import ExecutionError, execute_program
from compsynth.sampling import Domain
from compsynth.tasks import TaskInstance

FAILURE_KINDS = ("parse_error", "exec_failure", "wrong_output", "token_mismatch")


class ScoringError(ValueError):
    def __init__(self, message: str, instance_id: str | None = None):
        super().__init__(f"{message}: {instance_id}" if instance_id is not None else message)
        self.instance_id = instance_id


@dataclass(frozen=True)
class Prediction:
    instance_id: str
    predicted_tokens: tuple[str, ...]


@dataclass(frozen=True)
class Verdict:
    correct: bool
    failure: str | None = None


def score_scan(instance: TaskInstance, prediction: Prediction) -> Verdict:
    predicted = decomp.strip_separators(prediction.predicted_tokens)
    if predicted == instance.program_tokens:
        return Verdict(True)
    return Verdict(False, "token_mismatch")


def score_rf(instance: TaskInstance, prediction: Prediction) -> Verdict:
    """Correct iff the predicted program reproduces every example output."""
    try:
        program = dsl.parse_program(decomp.strip_separators(prediction.predicted_tokens))
    except ValueError:
        return Verdict(False, "parse_error")
    for ex in instance.spec:
        try:
            out = execute_program(program, ex.input)
        except ExecutionError:
            return Verdict(False, "exec_failure")
        if out != ex.output:
            return Verdict(False, "wrong_output")
    return Verdict(True)


def score(instance: TaskInstance, prediction: Prediction) -> Verdict:
    if instance.domain is Domain.SCAN:
        return score_scan(instance, prediction)
    return score_rf(instance, prediction)


def _pct(correct: int, total: int) -> float:
    return correct / total if total else 0.0


@dataclass
class ScoreReport:
    total: int = 0
    correct: int = 0
    per_length: dict = field(default_factory=dict)  # length -> [total, correct]
    per_task: dict = field(default_factory=dict)  # "domain/task" -> [total, correct]
    failures: dict = field(default_factory=lambda: dict.fromkeys(FAILURE_KINDS, 0))

    @property
    def accuracy(self) -> float:
        return _pct(self.correct, self.total)

    def add(self, instance: TaskInstance, verdict: Verdict) -> None:
        self.total += 1
        self.correct += verdict.correct
        for table, key in ((self.per_length, instance.length),
                           (self.per_task, f"{instance.domain.value}/{instance.task.value}")):
            row = table.setdefault(key, [0, 0])
            row[0] += 1
            row[1] += verdict.correct
        if not verdict.correct:
            self.failures[verdict.failure] += 1

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_length": {
                str(k): {"total": t, "correct": c, "accuracy": _pct(c, t)}
                for k, (t, c) in sorted(self.per_length.items())
            },
            "per_task": {
                k: {"total": t, "correct": c, "accuracy": _pct(c, t)}
                for k, (t, c) in sorted(self.per_task.items())
            },
            "failures": dict(self.failures),
        }

    def to_text(self) -> str:
        lines = [f"accuracy {100 * self.accuracy:.1f}% ({self.correct}/{self.total})"]
        width = max([len(k) for k in self.per_task] + [12])
        lines.append(f"{'task':{width}} {'total':>8} {'correct':>8} {'acc%':>7}")
        for k, (t, c) in sorted(self.per_task.items()):
            lines.append(f"{k:{width}} {t:>8} {c:>8} {100 * _pct(c, t):>7.1f}")
        lines.append(f"{'length':{width}} {'total':>8} {'correct':>8} {'acc%':>7}")
        for k, (t, c) in sorted(self.per_length.items()):
            lines.append(f"{str(k):{width}} {t:>8} {c:>8} {100 * _pct(c, t):>7.1f}")
        lines.append("failures: " + ", ".join(f"{k}={v}" for k, v in self.failures.items()))
        return "\n".join(lines)


def score_file(
    dataset: Sequence[tuple[str, TaskInstance]], predictions: Iterable[Prediction]
) -> ScoreReport:
    """Score one prediction per dataset record.

    Raises ScoringError for unknown, duplicate or missing prediction ids.
    """
    by_id: dict[str, TaskInstance] = {}
    for instance_id, inst in dataset:
        if instance_id in by_id:
            raise ScoringError("duplicate dataset id", instance_id)
        by_id[instance_id] = inst
    seen: dict[str, Prediction] = {}
    for pred in predictions:
        if pred.instance_id not in by_id:
            raise ScoringError("prediction for unknown id", pred.instance_id)
        if pred.instance_id in seen:
            raise ScoringError("duplicate prediction id", pred.instance_id)
        seen[pred.instance_id] = pred
    report = ScoreReport()
    for instance_id, inst in dataset:
        pred = seen.get(instance_id)
        if pred is None:
            raise ScoringError("missing prediction for id", instance_id)
        report.add(inst, score(inst, pred))
    return report


def ground_truth_predictions(dataset: Iterable[tuple[str, TaskInstance]]) -> list[Prediction]:
    return [Prediction(i, tuple(inst.target_tokens)) for i, inst in dataset]
