import json
from argparse import Namespace

import pytest

from compsynth import cli, records
from compsynth.sampling import Domain
from compsynth.tasks import Role, SplitSpec, Task, build_split

GEN_SMALL = ["--train-size", "120", "--test-size", "120"]


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def instances(domain, task=Task.LENGTH, n=20):
    return list(build_split(SplitSpec(domain, task, role=Role.TEST, test_size=n)))


# -- records ----------------------------------------------------------------


@pytest.mark.parametrize("domain", list(Domain))
def test_round_trip(tmp_path, domain):
    insts = instances(domain)
    meta = records.generator_meta(0, {"x": 1})
    path = tmp_path / "d.jsonl"
    assert records.write_jsonl(path, records.to_records(insts, meta)) == len(insts)
    loaded = records.load_dataset(path)
    assert [i for _, i in loaded] == insts
    assert records.validate_file(path) == []
    again = tmp_path / "e.jsonl"
    records.write_jsonl(again, records.to_records([i for _, i in loaded], meta))
    assert again.read_bytes() == path.read_bytes()


def test_ids_are_content_digests_with_repeat_suffixes():
    insts = instances(Domain.SCAN, n=3)
    recs = list(records.to_records([insts[0], insts[0], insts[1]], {"seed": 0}))
    base = recs[0]["id"]
    assert [r["id"] for r in recs[:2]] == [base, base + "-1"]
    assert base == records.record_id("scan", "length", "test", {"command": insts[0].spec})
    assert len(base) == 16


def _write_records(tmp_path, insts):
    path = tmp_path / "d.jsonl"
    records.write_jsonl(path, records.to_records(insts, records.generator_meta(0, {})))
    return path


def test_validate_reports_broken_invariants(tmp_path):
    path = _write_records(tmp_path, instances(Domain.SCAN, n=4) + instances(Domain.ROBUSTFILL, n=4))
    lines = path.read_text().splitlines()
    scan_rec = json.loads(lines[1])
    scan_rec["target_tokens"] = scan_rec["target_tokens"][:-1]
    rf_rec = json.loads(lines[5])
    rf_rec["spec"]["examples"][0]["output"] += "Z"
    rf_rec["id"] = records.record_id("robustfill", rf_rec["task"], rf_rec["role"], rf_rec["spec"])
    lines[1], lines[5] = json.dumps(scan_rec), json.dumps(rf_rec)
    lines[2] = '{"id": 3}'
    path.write_text("\n".join(lines) + "\n")
    problems = records.validate_file(path)
    assert any(p.startswith("line 2:") and "separators" in p for p in problems)
    assert any(p.startswith("line 3:") for p in problems)
    assert any(p.startswith("line 6:") and "does not satisfy" in p for p in problems)
    assert not any(p.startswith("line 1:") for p in problems)


def test_invalid_json_line_number(tmp_path):
    path = _write_records(tmp_path, instances(Domain.SCAN, n=2))
    path.write_text(path.read_text() + "{nope\n")
    with pytest.raises(records.SchemaError) as info:
        records.load_dataset(path)
    assert info.value.line == 3


def _args(**kw):
    base = dict(domain="robustfill", task="length", seed=0, train_size=10, test_size=10,
                finetune=True, examples_per_task=4, input_length_min=4, input_length_max=20,
                hardest_max_length=6)
    base.update(kw)
    return Namespace(**base)


def test_config_digest_tracks_generation_parameters():
    digest = lambda **kw: records.generator_meta(0, cli.generation_params(_args(**kw)))["config_digest"]  # noqa: E731
    d0 = digest()
    assert digest() == d0
    for change in (dict(seed=1), dict(train_size=11), dict(task="length-hard"),
                   dict(input_length_max=19), dict(examples_per_task=5), dict(finetune=False)):
        assert digest(**change) != d0, change
    # parameters that cannot affect the output leave the digest alone
    assert digest(hardest_max_length=4) == d0
    scan0 = digest(domain="scan")
    assert digest(domain="scan", input_length_max=10) == scan0


# -- CLI --------------------------------------------------------------------


def test_exec(capsys):
    assert run(capsys, "exec", "--domain", "scan", "jump and run after walk")[:2] == (0, "WALK JUMP RUN\n")
    assert run(capsys, "exec", "--domain", "robustfill", "ConstStr x", "--input", "abc")[:2] == (0, "x\n")
    code, out, err = run(capsys, "exec", "--domain", "robustfill", "GetToken WORD 3", "--input", "one two")
    assert code != 0 and out == "" and "no match 3" in err
    code, _, err = run(capsys, "exec", "--domain", "scan", "jump jump")
    assert code != 0 and "token 1" in err
    code, _, err = run(capsys, "exec", "--domain", "robustfill", "SubStr 0 3", "--input", "abc")
    assert code != 0 and "position" in err


def test_translate(capsys):
    code, out, _ = run(capsys, "translate", "jump left twice and run right after walk thrice", "--spans")
    assert code == 0
    assert out.splitlines() == ["WALK WALK WALK LTURN JUMP LTURN JUMP RTURN RUN", "[0,3) [3,7) [7,9)"]


def test_mask(capsys):
    code, out, _ = run(capsys, "mask", "--variant", "sep-to-last", "--tokens", "SEP A SEP B SEP")
    assert code == 0
    lines = out.splitlines()
    assert lines[1:6] == ["10000", "11000", "01100", "00110", "01011"]
    assert lines[-1] == "4: 1 3 4"
    code, out, _ = run(capsys, "mask", "--json", "SEP", "A", "SEP")
    assert json.loads(out)["sparse"] == [[0], [0, 1], [0, 1, 2]]
    code, out, _ = run(capsys, "mask", "--json")
    assert code == 0 and json.loads(out)["dense"] == []


def test_gen_rejects_unknown_task(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["gen", "--domain", "scan", "--task", "bogus"])
    assert info.value.code != 0
    assert "invalid choice" in capsys.readouterr().err


def test_gen_writes_files_and_is_deterministic(tmp_path, capsys):
    argv = ["gen", "--domain", "scan", "--task", "compose-new-operation", *GEN_SMALL, "--seed", 7]
    code, out, _ = run(capsys, *argv, "--out", tmp_path / "a")
    assert code == 0 and "OK" in out
    run(capsys, *argv, "--out", tmp_path / "b")
    sub = "scan/compose-new-operation"
    for name in ("train.jsonl", "test.jsonl", "finetune.jsonl", "audit.txt", "audit.json"):
        assert (tmp_path / "a" / sub / name).read_bytes() == (tmp_path / "b" / sub / name).read_bytes()
    test_lines = (tmp_path / "a" / sub / "test.jsonl").read_text().splitlines()
    assert len(test_lines) == 120
    assert json.loads((tmp_path / "a" / sub / "audit.json").read_text())["clean"] is True
    assert run(capsys, "validate", *(tmp_path / "a" / sub).glob("*.jsonl"))[0] == 0


def test_gen_output_dir_from_environment_and_config(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path / "env"))
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"domain": "robustfill", "task": "length", "train-size": 30,
                                  "test_size": 30, "finetune": False}))
    code, _, _ = run(capsys, "--config", config, "gen", "--test-size", 25)
    assert code == 0
    out = tmp_path / "env" / "robustfill" / "length"
    assert len((out / "train.jsonl").read_text().splitlines()) == 30
    assert len((out / "test.jsonl").read_text().splitlines()) == 25
    assert not (out / "finetune.jsonl").exists()


def test_gen_io_failure(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(capsys, "gen", "--domain", "scan", "--task", "length", *GEN_SMALL,
                       "--no-finetune", "--out", blocker)
    assert code != 0 and "cannot write" in err


def _multi_task_dataset(tmp_path):
    insts = []
    for task in Task:
        insts += instances(Domain.ROBUSTFILL if task.value.startswith("c") else Domain.SCAN, task, 6)
    return _write_records(tmp_path, insts)


def _echo(dataset, path, corrupt=()):
    with open(path, "w") as fh:
        for k, line in enumerate(dataset.read_text().splitlines()):
            rec = json.loads(line)
            toks = ["<SEP>"] if k in corrupt else rec["target_tokens"]
            fh.write(json.dumps({"instance_id": rec["id"], "predicted_tokens": toks}) + "\n")


def test_score_command(tmp_path, capsys):
    dataset = _multi_task_dataset(tmp_path)
    preds = tmp_path / "p.jsonl"
    _echo(dataset, preds)
    code, out, _ = run(capsys, "score", dataset, preds)
    assert code == 0 and out.startswith("accuracy 100.0%")
    code, out, _ = run(capsys, "score", dataset, preds, "--json")
    report = json.loads(out)
    assert {k.split("/")[1] for k in report["per_task"]} == {t.value for t in Task}
    _echo(dataset, preds, corrupt=range(0, 42, 2))
    code, out, _ = run(capsys, "score", dataset, preds)
    assert code == 0 and out.startswith("accuracy 50.0%")


def test_score_reports_offending_line(tmp_path, capsys):
    dataset = _multi_task_dataset(tmp_path)
    preds = tmp_path / "p.jsonl"
    _echo(dataset, preds)
    lines = preds.read_text().splitlines()
    lines[3] = json.dumps({"instance_id": "feedfacefeedface", "predicted_tokens": []})
    preds.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "score", dataset, preds)
    assert code != 0 and "line 4" in err and "feedfacefeedface" in err
    lines[3] = json.dumps({"instance_id": 5})
    preds.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "score", dataset, preds)
    assert code != 0 and "line 4" in err
    bad = tmp_path / "bad.jsonl"
    bad.write_text(dataset.read_text().replace('"length": ', '"length": -', 1))
    code, _, err = run(capsys, "score", bad, preds)
    assert code != 0 and "line 1" in err


def test_audit_and_stats(tmp_path, capsys):
    out = tmp_path / "o"
    run(capsys, "gen", "--domain", "scan", "--task", "length-hard", *GEN_SMALL, "--no-finetune", "--out", out)
    d = out / "scan" / "length-hard"
    code, text, _ = run(capsys, "audit", d / "train.jsonl", d / "test.jsonl")
    assert code == 0 and "OK" in text
    code, text, _ = run(capsys, "audit", d / "test.jsonl", d / "train.jsonl")
    assert code == 1 and "VIOLATIONS" in text
    code, text, _ = run(capsys, "stats", d / "train.jsonl")
    assert code == 0 and "records 120" in text and "lengths: 6=120" in text
