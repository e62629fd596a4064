"""Command-line interface: ``compsynth {gen,exec,translate,mask,score,audit,stats,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from collections import Counter
from pathlib import Path

from compsynth import decomp, records, scan, scoring
from compsynth.robustfill import dsl
from compsynth.robustfill.interpreter import ExecutionError, execute_program
from compsynth.sampling import ConstraintUnsatisfiable, Domain, GenerationBudgetExhausted
from compsynth.tasks import (
    Role,
    SplitSpec,
    Task,
    UnsatisfiablePredicate,
    audit_split,
    build_finetune_set,
    build_split,
    concept_pattern_label,
)

OUTPUT_DIR_ENV = "COMPSYNTH_OUTPUT_DIR"

log = logging.getLogger("compsynth")


def _fail(message: str, code: int = 1) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# -- gen --------------------------------------------------------------------


def generation_params(args) -> dict:
    """The parameters that influence generated content (and nothing else)."""
    params = {
        "domain": args.domain,
        "task": args.task,
        "seed": args.seed,
        "train_size": args.train_size,
        "test_size": args.test_size,
        "finetune": args.finetune,
    }
    if args.domain == Domain.ROBUSTFILL.value:
        params["examples_per_task"] = args.examples_per_task
        params["input_length_range"] = [args.input_length_min, args.input_length_max]
    if args.task == Task.LENGTH_HARDEST.value:
        params["hardest_max_length"] = args.hardest_max_length
    return params


def cmd_gen(args) -> int:
    out_dir = Path(args.out or os.environ.get(OUTPUT_DIR_ENV) or "data") / args.domain / args.task
    spec = SplitSpec(
        domain=args.domain,
        task=args.task,
        role=Role.TRAIN,
        seed=args.seed,
        train_size=args.train_size,
        test_size=args.test_size,
        examples_per_task=args.examples_per_task,
        input_length_range=(args.input_length_min, args.input_length_max),
        hardest_max_length=args.hardest_max_length,
    )
    meta = records.generator_meta(args.seed, generation_params(args))
    start = time.perf_counter()
    try:
        train = list(build_split(spec))
        test = list(build_split(spec.with_role(Role.TEST)))
        finetune = []
        if args.finetune:
            finetune = build_finetune_set(
                spec.with_role(Role.FINETUNE), exclude={r.spec_key for r in test}
            )
    except (ConstraintUnsatisfiable, GenerationBudgetExhausted, UnsatisfiablePredicate) as err:
        return _fail(f"generation failed: {err}")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, insts in (("train", train), ("test", test), ("finetune", finetune)):
            if name == "finetune" and not args.finetune:
                continue
            n = records.write_jsonl(out_dir / f"{name}.jsonl", records.to_records(insts, meta))
            log.info("wrote %d records to %s", n, out_dir / f"{name}.jsonl")
        report = audit_split(train, test, hardest_max_length=args.hardest_max_length)
        (out_dir / "audit.txt").write_text(report.to_text() + "\n", encoding="utf-8")
        (out_dir / "audit.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as err:
        return _fail(f"cannot write output: {err}")
    print(report.to_text())
    log.info("generated in %.1fs", time.perf_counter() - start)
    return 0 if report.clean else 1


# -- exec / translate -------------------------------------------------------


def cmd_exec(args) -> int:
    if args.domain == Domain.SCAN.value:
        try:
            program = scan.translate_text(args.program)
        except ValueError as err:
            return _fail(str(err))
        print(program.text())
        return 0
    if args.input is None:
        return _fail("robustfill programs need --input")
    try:
        program = dsl.parse_program(args.program)
    except ValueError as err:
        return _fail(str(err))
    try:
        print(execute_program(program, args.input))
    except ExecutionError as err:
        return _fail(f"execution failed: {err}")
    except ValueError as err:
        return _fail(str(err))
    return 0


def cmd_translate(args) -> int:
    try:
        program = scan.translate_text(args.command)
    except ValueError as err:
        return _fail(str(err))
    if args.separators:
        print(" ".join(decomp.insert_separators(program.tokens, program.part_spans).tokens))
    else:
        print(program.text())
    if args.spans:
        print(" ".join(f"[{a},{b})" for a, b in program.part_spans))
    return 0


# -- mask -------------------------------------------------------------------


def cmd_mask(args) -> int:
    tokens = args.tokens.split() if args.tokens is not None else list(args.token)
    tokens = [decomp.SEP if t in ("SEP", "BOS") else t for t in tokens]
    mask = decomp.build_mask(tokens, args.variant)
    if args.json:
        print(json.dumps({"variant": mask.variant.value, "tokens": tokens,
                          "dense": mask.allow.astype(int).tolist(), "sparse": mask.sparse()}))
        return 0
    print(f"# {mask.variant.value}, {len(tokens)} tokens")
    if mask.dense():
        print(mask.dense())
    print("# sparse")
    for q, row in enumerate(mask.sparse()):
        print(f"{q}: {' '.join(map(str, row))}")
    return 0


# -- score ------------------------------------------------------------------


def _load_predictions(path, known_ids) -> list[scoring.Prediction]:
    preds = []
    for lineno, obj in records.read_jsonl(path):
        errs = records.prediction_errors(obj)
        if errs:
            raise records.SchemaError(errs[0], lineno)
        if obj["instance_id"] not in known_ids:
            raise records.SchemaError(f"unknown instance_id {obj['instance_id']}", lineno)
        preds.append(scoring.Prediction(obj["instance_id"], tuple(obj["predicted_tokens"])))
    return preds


def cmd_score(args) -> int:
    try:
        dataset = records.load_dataset(args.dataset)
    except records.SchemaError as err:
        return _fail(f"{args.dataset}: {err}")
    except OSError as err:
        return _fail(str(err))
    try:
        preds = _load_predictions(args.predictions, {i for i, _ in dataset})
        report = scoring.score_file(dataset, preds)
    except records.SchemaError as err:
        return _fail(f"{args.predictions}: {err}")
    except scoring.ScoringError as err:
        return _fail(str(err))
    except OSError as err:
        return _fail(str(err))
    print(json.dumps(report.to_dict(), indent=2) if args.json else report.to_text())
    return 0


# -- audit / stats / validate -----------------------------------------------


def cmd_audit(args) -> int:
    try:
        train = [inst for _, inst in records.load_dataset(args.train)]
        test = [inst for _, inst in records.load_dataset(args.test)]
    except (records.SchemaError, OSError) as err:
        return _fail(str(err))
    report = audit_split(train, test, hardest_max_length=args.hardest_max_length)
    print(json.dumps(report.to_dict(), indent=2) if args.json else report.to_text())
    return 0 if report.clean else 1


def cmd_stats(args) -> int:
    try:
        dataset = records.load_dataset(args.dataset)
    except (records.SchemaError, OSError) as err:
        return _fail(str(err))
    groups = Counter((i.domain.value, i.task.value, i.role.value) for _, i in dataset)
    lengths = Counter(i.length for _, i in dataset)
    patterns = Counter(concept_pattern_label(i.concept_labels) for _, i in dataset)
    origins = Counter(i.origin.value for _, i in dataset)
    tokens = [len(i.program_tokens) for _, i in dataset]
    print(f"records {len(dataset)}")
    for (d, t, r), n in sorted(groups.items()):
        print(f"  {d}/{t}/{r}: {n}")
    print("origins: " + ", ".join(f"{k}={v}" for k, v in sorted(origins.items())))
    print("lengths: " + ", ".join(f"{k}={v}" for k, v in sorted(lengths.items())))
    print("concept patterns: " + ", ".join(f"{k}={v}" for k, v in sorted(patterns.items())))
    if tokens:
        print(f"program tokens: min {min(tokens)}, mean {sum(tokens) / len(tokens):.1f}, max {max(tokens)}")
    return 0


def cmd_validate(args) -> int:
    bad = 0
    for path in args.files:
        try:
            problems = records.validate_file(path)
        except OSError as err:
            problems = [str(err)]
        for p in problems:
            print(f"{path}: {p}")
        bad += len(problems)
        if not problems:
            print(f"{path}: ok")
    return 0 if bad == 0 else 1


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compsynth", description=__doc__)
    parser.add_argument("--config", help="JSON file whose keys mirror the command-line flags")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate train/test/fine-tune files for one task")
    g.add_argument("--domain", required=True, choices=[d.value for d in Domain])
    g.add_argument("--task", required=True, choices=[t.value for t in Task])
    g.add_argument("--train-size", type=int, default=10_000)
    g.add_argument("--test-size", type=int, default=10_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help=f"output root (default: ${OUTPUT_DIR_ENV} or ./data)")
    g.add_argument("--examples-per-task", type=int, default=4)
    g.add_argument("--input-length-min", type=int, default=4)
    g.add_argument("--input-length-max", type=int, default=20)
    g.add_argument("--hardest-max-length", type=int, default=6)
    g.add_argument("--finetune", action=argparse.BooleanOptionalAction, default=True)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("exec", help="translate a SCAN command or run a RobustFill program")
    e.add_argument("--domain", required=True, choices=[d.value for d in Domain])
    e.add_argument("program", help="SCAN command, or space-separated RobustFill program tokens")
    e.add_argument("--input", help="input string (RobustFill)")
    e.set_defaults(func=cmd_exec)

    t = sub.add_parser("translate", help="translate a SCAN command to actions")
    t.add_argument("command")
    t.add_argument("--spans", action="store_true", help="also print part spans")
    t.add_argument("--separators", action="store_true", help="print with separator tokens")
    t.set_defaults(func=cmd_translate)

    m = sub.add_parser("mask", help="print a decoder attention mask")
    m.add_argument("--variant", default=decomp.MaskVariant.SEP_FULL.value,
                   choices=[v.value for v in decomp.MaskVariant])
    m.add_argument("--tokens", help="space-separated tokens; SEP/BOS/<SEP> mark separators")
    m.add_argument("token", nargs="*")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_mask)

    s = sub.add_parser("score", help="score predictions against a dataset")
    s.add_argument("dataset")
    s.add_argument("predictions")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_score)

    a = sub.add_parser("audit", help="audit a train/test pair")
    a.add_argument("train")
    a.add_argument("test")
    a.add_argument("--hardest-max-length", type=int, default=6)
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_audit)

    st = sub.add_parser("stats", help="summarize a dataset file")
    st.add_argument("dataset")
    st.set_defaults(func=cmd_stats)

    v = sub.add_parser("validate", help="check dataset files against the record schema and invariants")
    v.add_argument("files", nargs="+")
    v.set_defaults(func=cmd_validate)
    return parser


def _config_path(argv) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    """Use a JSON config's values as defaults; explicit flags still win."""
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        parser.error(f"cannot read config {path}: {err}")
    if not isinstance(config, dict):
        parser.error(f"config {path} must hold a JSON object")
    config = {k.replace("-", "_"): v for k, v in config.items()}
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for subparser in action.choices.values():
            known = {a.dest for a in subparser._actions}  # noqa: SLF001
            subparser.set_defaults(**{k: v for k, v in config.items() if k in known})
            for a in subparser._actions:  # noqa: SLF001
                if a.dest in config and a.required:
                    a.required = False


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    config = _config_path(argv)
    if config:
        _apply_config(parser, config)
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
