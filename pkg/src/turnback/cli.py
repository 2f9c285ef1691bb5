"""Command-line surface: inject, mix, evaluate, validate, stats.

Every command is deterministic given its flags; all randomness flows from
--seed. Exit codes: 0 success, 1 validation failure, 2 usage error,
3 IO/parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from collections import Counter
from pathlib import Path

from . import __version__
from .corpus import (
    PHASES,
    Dataset,
    load_canonical,
    load_multiwoz,
    load_ontology,
    serialize,
    validate_dataset,
)
from .errors import CoverageWarning, ParseError, SchemaError, StateError, TurnbackError
from .evaluation import format_report, joint_goal_accuracy, load_predictions, write_report
from .manifest import build_manifest, write_manifest
from .mixer import MixSpec, mix
from .scenarios import TurnbackScenario, inject, write_injection_log
from .templates import default_registry, load_registry, validate_registry

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _proportion(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"proportion must be an integer, got {text!r}")
    if not 0 <= value <= 100:
        raise argparse.ArgumentTypeError(f"proportion must be in 0..100, got {value}")
    return value


def _add_dataset_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="in_path", required=True, help="input dataset file")
    parser.add_argument(
        "--format",
        choices=("canonical", "multiwoz"),
        default="canonical",
        help="input layout (multiwoz reads raw MultiWOZ 2.1 annotations)",
    )


def _add_injection_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        required=True,
        choices=[s.value for s in TurnbackScenario],
        help="turnback scenario to inject",
    )
    parser.add_argument("--seed", required=True, type=int, help="seed for all randomness")
    parser.add_argument(
        "--phase",
        choices=PHASES,
        help="template phase (defaults to the dataset's phase; required for --format multiwoz)",
    )
    parser.add_argument("--ontology", required=True, help="ontology JSON file")
    parser.add_argument("--templates", help="template registry JSON (default: built-in)")
    _add_dataset_input(parser)
    parser.add_argument("--out", required=True, help="output dataset file")
    parser.add_argument("--log", help="JSONL audit log of per-dialogue injection records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turnback",
        description="Inject mind-changing turns into dialogue datasets and score predictions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_inject = sub.add_parser("inject", help="append turnback turns to every applicable dialogue")
    _add_injection_flags(p_inject)
    p_inject.set_defaults(func=cmd_inject)

    p_mix = sub.add_parser("mix", help="inject a seeded fraction of the dialogues")
    p_mix.add_argument(
        "--proportion", required=True, type=_proportion, help="percent of dialogues to inject"
    )
    _add_injection_flags(p_mix)
    p_mix.set_defaults(func=cmd_mix)

    p_eval = sub.add_parser("evaluate", help="score a prediction file against a gold dataset")
    p_eval.add_argument("--gold", required=True, help="gold dataset (canonical JSON)")
    p_eval.add_argument("--pred", required=True, help="predictions (JSONL)")
    p_eval.add_argument("--out", required=True, help="report JSON file")
    p_eval.set_defaults(func=cmd_evaluate)

    p_validate = sub.add_parser("validate", help="check corpus and registry invariants")
    p_validate.add_argument("--in", dest="in_path", help="dataset file to validate")
    p_validate.add_argument(
        "--format", choices=("canonical", "multiwoz"), default="canonical"
    )
    p_validate.add_argument("--phase", choices=PHASES, help="phase label for multiwoz input")
    p_validate.add_argument(
        "--templates", help="template registry to validate (default: built-in)"
    )
    p_validate.set_defaults(func=cmd_validate)

    p_stats = sub.add_parser("stats", help="print dataset statistics")
    _add_dataset_input(p_stats)
    p_stats.add_argument("--phase", choices=PHASES, help="phase label for multiwoz input")
    p_stats.set_defaults(func=cmd_stats)

    return parser


def _load_dataset(args: argparse.Namespace, parser_error) -> Dataset:
    if args.format == "multiwoz":
        phase = getattr(args, "phase", None)
        if phase is None:
            parser_error("--phase is required with --format multiwoz")
        return load_multiwoz(args.in_path, phase)
    return load_canonical(args.in_path)


def _load_registry(args: argparse.Namespace):
    if getattr(args, "templates", None):
        return load_registry(args.templates)
    return default_registry()


def _finish_outputs(args: argparse.Namespace, inputs: list[str], outputs: list[str]) -> None:
    manifest = build_manifest(
        command=["turnback"] + list(args.argv),
        seed=getattr(args, "seed", None),
        inputs=inputs,
        outputs=outputs,
        version=__version__,
    )
    write_manifest(manifest, outputs[0])


def cmd_inject(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args, build_parser().error)
    ontology = load_ontology(args.ontology)
    registry = _load_registry(args)
    scenario = TurnbackScenario.parse(args.scenario)
    injected, records = inject(
        dataset, scenario, ontology, registry, args.seed, phase=args.phase
    )
    serialize(injected, args.out)
    outputs = [args.out]
    if args.log:
        write_injection_log(records, args.log)
        outputs.append(args.log)
    inputs = [args.in_path, args.ontology] + ([args.templates] if args.templates else [])
    _finish_outputs(args, inputs, outputs)
    done = sum(r.injected for r in records)
    print(f"injected {done} of {len(records)} dialogues ({len(records) - done} skipped)")
    return EXIT_OK


def _mix_out_path(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    if out.is_dir():
        stem = Path(args.in_path).stem
        return out / f"{stem}.{args.scenario}.p{args.proportion}.s{args.seed}.json"
    return out


def cmd_mix(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args, build_parser().error)
    ontology = load_ontology(args.ontology)
    registry = _load_registry(args)
    spec = MixSpec(
        proportion=args.proportion,
        scenario=TurnbackScenario.parse(args.scenario),
        seed=args.seed,
        phase=args.phase,
    )
    mixed, records = mix(dataset, spec, ontology, registry)
    out_path = _mix_out_path(args)
    serialize(mixed, out_path)
    outputs = [str(out_path)]
    if args.log:
        write_injection_log(records, args.log)
        outputs.append(args.log)
    inputs = [args.in_path, args.ontology] + ([args.templates] if args.templates else [])
    _finish_outputs(args, inputs, outputs)
    done = sum(r.injected for r in records)
    total = len(dataset.dialogues)
    realized = done / total if total else 0.0
    print(
        f"selected {len(records)} of {total} dialogues ({args.proportion}%), "
        f"injected {done}, skipped {len(records) - done}, realized {realized:.1%}"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    gold = load_canonical(args.gold)
    predictions = load_predictions(args.pred)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CoverageWarning)
        report = joint_goal_accuracy(gold, predictions)
    for entry in caught:
        print(f"warning: {entry.message}", file=sys.stderr)
    write_report(report, args.out)
    _finish_outputs(args, [args.gold, args.pred], [args.out])
    print(format_report(report))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    if not args.in_path and not args.templates:
        build_parser().error("nothing to validate: give --in and/or --templates")
    violations: list[str] = []
    if args.in_path:
        dataset = _load_dataset(args, build_parser().error)
        violations += validate_dataset(dataset)
    registry = _load_registry(args)
    violations += list(validate_registry(registry).violations)
    for violation in violations:
        print(f"violation: {violation}")
    if violations:
        print(f"{len(violations)} violation(s) found")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args, build_parser().error)
    turn_count = sum(len(d.turns) for d in dataset.dialogues)
    injected_turns = [
        turn
        for dialogue in dataset.dialogues
        for turn in dialogue.turns
        if turn.provenance.is_injected
    ]
    per_scenario = Counter(turn.provenance.scenario for turn in injected_turns)
    slot_histogram = Counter(
        triple.slot_ref.key()
        for dialogue in dataset.dialogues
        for triple in dialogue.final_state
    )
    print(f"phase: {dataset.phase}")
    print(f"dialogues: {len(dataset.dialogues)}")
    print(f"turns: {turn_count}")
    print(f"injected turns: {len(injected_turns)}")
    for scenario, count in sorted(per_scenario.items()):
        print(f"  {scenario}: {count}")
    print("final-state slots:")
    for key, count in sorted(slot_histogram.items()):
        print(f"  {key}: {count}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TurnbackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
