import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compsynth import scoring
from compsynth.decomp import SEP
from compsynth.robustfill.dsl import IoExample
from compsynth.robustfill.interpreter import satisfies
from compsynth.robustfill import dsl
from compsynth.sampling import Domain
from compsynth.scoring import Prediction, ScoringError, score, score_file
from compsynth.tasks import Origin, Role, SplitSpec, Task, TaskInstance, build_split


def instances(domain, task=Task.LENGTH, n=60, seed=0):
    spec = SplitSpec(domain, task, role=Role.TEST, seed=seed, test_size=n)
    return list(build_split(spec))


def rf_instance(examples, program_tokens):
    return TaskInstance(
        Domain.ROBUSTFILL, Task.LENGTH, Role.TEST,
        tuple(IoExample(i, o) for i, o in examples),
        (SEP, *program_tokens, SEP), ((0, len(program_tokens)),), ("SUBSTRING",), Origin.TEST_DIST,
    )


SCAN_INST = instances(Domain.SCAN, n=5)[0]


def test_scan_verdicts():
    gold = SCAN_INST.target_tokens
    assert score(SCAN_INST, Prediction("x", gold)).correct
    assert score(SCAN_INST, Prediction("x", tuple(SCAN_INST.program_tokens))).correct
    wrong = list(SCAN_INST.program_tokens)
    wrong[0] = "LOOK" if wrong[0] != "LOOK" else "WALK"
    assert score(SCAN_INST, Prediction("x", tuple(wrong))) == scoring.Verdict(False, "token_mismatch")
    assert not score(SCAN_INST, Prediction("x", ())).correct


def test_rf_functionally_equivalent_program_is_correct():
    inst = rf_instance([("abc", "x"), ("de f", "x")], ["GetUpto", "x"])
    assert score(inst, Prediction("i", ("ConstStr", "x"))).correct
    assert score(inst, Prediction("i", ("ConstStr", "y"))) == scoring.Verdict(False, "wrong_output")
    assert score(inst, Prediction("i", ("GetToken", "NUMBER", "1"))).failure == "exec_failure"
    assert score(inst, Prediction("i", ("soup", "!!", "("))).failure == "parse_error"
    assert score(inst, Prediction("i", ())).failure == "parse_error"


def test_score_file_report_invariants():
    data = [(f"id{k}", inst) for k, inst in enumerate(instances(Domain.ROBUSTFILL, n=40))]
    preds = scoring.ground_truth_predictions(data)
    rng = random.Random(0)
    for k in rng.sample(range(40), 20):
        preds[k] = Prediction(preds[k].instance_id, ("ConstStr", SEP))
    report = score_file(data, preds)
    assert report.total == 40 and report.correct == 20 and report.accuracy == 0.5
    assert sum(t for t, _ in report.per_length.values()) == report.total
    assert sum(report.failures.values()) == report.total - report.correct
    d = report.to_dict()
    assert d["accuracy"] == 0.5 and d["per_task"]["robustfill/length"]["total"] == 40
    assert "accuracy 50.0%" in report.to_text()


def test_score_file_errors():
    data = [(f"id{k}", inst) for k, inst in enumerate(instances(Domain.SCAN, n=3))]
    gold = scoring.ground_truth_predictions(data)
    with pytest.raises(ScoringError, match="unknown") as info:
        score_file(data, gold + [Prediction("nope", ())])
    assert info.value.instance_id == "nope"
    with pytest.raises(ScoringError, match="duplicate prediction"):
        score_file(data, gold + gold[:1])
    with pytest.raises(ScoringError, match="missing") as info:
        score_file(data, gold[1:])
    assert info.value.instance_id == "id0"
    with pytest.raises(ScoringError, match="duplicate dataset"):
        score_file(data + data[:1], gold)


def test_ground_truth_is_perfect_on_every_task():
    for domain in Domain:
        for task in Task:
            data = [(str(k), i) for k, i in enumerate(instances(domain, task, n=30))]
            report = score_file(data, scoring.ground_truth_predictions(data))
            assert report.accuracy == 1.0, (domain, task)


RF_DATA = instances(Domain.ROBUSTFILL, n=30, seed=3)


@settings(max_examples=200)
@given(st.sampled_from(RF_DATA + [SCAN_INST]), st.data())
def test_separator_insensitive(inst, data):
    toks = list(inst.program_tokens)
    positions = data.draw(st.lists(st.integers(0, len(toks)), max_size=6))
    for p in sorted(positions, reverse=True):
        toks.insert(p, SEP)
    assert score(inst, Prediction("x", tuple(toks))).correct


@settings(max_examples=200)
@given(st.sampled_from(RF_DATA), st.randoms(use_true_random=False))
def test_rf_correct_verdicts_are_sound(inst, rng):
    # perturb the gold program by swapping one literal; whatever is judged
    # correct must satisfy the spec on a fresh interpreter pass
    toks = list(inst.program_tokens)
    k = rng.randrange(len(toks))
    if toks[k].lstrip("-").isdigit():
        toks[k] = str(rng.choice([1, 2, -1]))
    verdict = score(inst, Prediction("x", tuple(toks)))
    if verdict.correct:
        assert satisfies(dsl.parse_program(toks), inst.spec)
