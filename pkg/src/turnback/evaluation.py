"""Scoring of prediction files against gold datasets.

Joint goal accuracy marks a turn 1 when the predicted belief state
set-equals the gold state and 0 otherwise; the lower bound is the score a
model would get if every injected turn were wrong while its original-turn
outcomes were kept.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import BeliefState, Dataset
from .errors import (
    CoverageError,
    CoverageWarning,
    DuplicateError,
    ParseError,
    SchemaError,
    StateError,
    UnknownDialogueError,
)


@dataclass(frozen=True)
class Prediction:
    dialogue_id: str
    turn_index: int
    state: BeliefState


@dataclass(frozen=True)
class TurnOutcome:
    dialogue_id: str
    turn_index: int
    correct: bool
    provenance: str  # "original" or "injected"


@dataclass(frozen=True)
class EvaluationReport:
    """Aggregate scores plus the per-turn outcomes they were reduced from.

    Per-provenance fractions are None when the dataset has no turn of that
    provenance.
    """

    jga: float
    jga_original_turns: float | None
    jga_injected_turns: float | None
    lower_bound: float
    turn_count: int
    original_turn_count: int
    injected_turn_count: int
    missing_predictions: int
    outcomes: tuple[TurnOutcome, ...]

    def per_dialogue(self) -> dict[str, list[TurnOutcome]]:
        grouped: dict[str, list[TurnOutcome]] = {}
        for outcome in self.outcomes:
            grouped.setdefault(outcome.dialogue_id, []).append(outcome)
        return grouped

    def to_dict(self) -> dict:
        return {
            "jga": self.jga,
            "jga_original_turns": self.jga_original_turns,
            "jga_injected_turns": self.jga_injected_turns,
            "lower_bound": self.lower_bound,
            "turn_count": self.turn_count,
            "original_turn_count": self.original_turn_count,
            "injected_turn_count": self.injected_turn_count,
            "missing_predictions": self.missing_predictions,
            "per_dialogue": {
                dialogue_id: [
                    {
                        "turn_index": o.turn_index,
                        "correct": o.correct,
                        "provenance": o.provenance,
                    }
                    for o in outcomes
                ]
                for dialogue_id, outcomes in self.per_dialogue().items()
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvaluationReport":
        outcomes = tuple(
            TurnOutcome(dialogue_id, entry["turn_index"], entry["correct"], entry["provenance"])
            for dialogue_id, entries in payload["per_dialogue"].items()
            for entry in entries
        )
        return cls(
            jga=payload["jga"],
            jga_original_turns=payload["jga_original_turns"],
            jga_injected_turns=payload["jga_injected_turns"],
            lower_bound=payload["lower_bound"],
            turn_count=payload["turn_count"],
            original_turn_count=payload["original_turn_count"],
            injected_turn_count=payload["injected_turn_count"],
            missing_predictions=payload["missing_predictions"],
            outcomes=outcomes,
        )


def load_predictions(path: str | Path) -> list[Prediction]:
    """Load a JSONL prediction file, one object per line.

    Values are normalized on load so surface-form differences ("La Raza")
    still match gold. Repeated (dialogue_id, turn_index) pairs raise
    DuplicateError; malformed lines raise ParseError.
    """
    predictions: list[Prediction] = []
    seen: set[tuple[str, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{where}: prediction must be an object")
            missing = {"dialogue_id", "turn_index", "state"} - obj.keys()
            if missing:
                raise ParseError(f"{where}: missing field(s): {', '.join(sorted(missing))}")
            dialogue_id, turn_index = obj["dialogue_id"], obj["turn_index"]
            if not isinstance(dialogue_id, str) or not isinstance(turn_index, int):
                raise ParseError(f"{where}: dialogue_id must be a string, turn_index an int")
            try:
                state = BeliefState.from_list(obj["state"])
            except (SchemaError, StateError, ValueError) as exc:
                raise ParseError(f"{where}: {exc}") from exc
            key = (dialogue_id, turn_index)
            if key in seen:
                raise DuplicateError(f"{where}: duplicate prediction for {key}")
            seen.add(key)
            predictions.append(Prediction(dialogue_id, turn_index, state))
    return predictions


def turn_correct(gold: BeliefState, pred: BeliefState) -> bool:
    """Exact set equality of normalized triples; two empty states match."""
    return gold == pred


def joint_goal_accuracy(
    dataset: Dataset, predictions: Sequence[Prediction]
) -> EvaluationReport:
    """Score every turn of the dataset against the predictions.

    A turn with no prediction counts incorrect and raises CoverageWarning;
    a prediction for a turn absent from the dataset raises
    UnknownDialogueError. The lower bound keeps the original-turn outcomes
    and zeroes every injected turn.
    """
    index: dict[tuple[str, int], BeliefState] = {}
    for prediction in predictions:
        key = (prediction.dialogue_id, prediction.turn_index)
        if key in index:
            raise DuplicateError(f"duplicate prediction for {key}")
        index[key] = prediction.state

    known = {
        (dialogue.id, turn.index)
        for dialogue in dataset.dialogues
        for turn in dialogue.turns
    }
    unknown = sorted(set(index) - known)
    if unknown:
        shown = ", ".join(f"{d}#{t}" for d, t in unknown[:5])
        raise UnknownDialogueError(
            f"{len(unknown)} prediction(s) for turns absent from the gold set: {shown}"
        )

    outcomes: list[TurnOutcome] = []
    missing = 0
    for dialogue in dataset.dialogues:
        for turn in dialogue.turns:
            predicted = index.get((dialogue.id, turn.index))
            if predicted is None:
                missing += 1
                correct = False
            else:
                correct = turn_correct(turn.gold_state, predicted)
            provenance = "injected" if turn.provenance.is_injected else "original"
            outcomes.append(TurnOutcome(dialogue.id, turn.index, correct, provenance))
    if not outcomes:
        raise ValueError("nothing to report: dataset has no turns")
    if missing:
        warnings.warn(
            f"{missing} of {len(outcomes)} turns had no prediction; counted incorrect",
            CoverageWarning,
            stacklevel=2,
        )

    original = [o for o in outcomes if o.provenance == "original"]
    injected = [o for o in outcomes if o.provenance == "injected"]
    correct_total = sum(o.correct for o in outcomes)
    correct_original = sum(o.correct for o in original)
    return EvaluationReport(
        jga=correct_total / len(outcomes),
        jga_original_turns=correct_original / len(original) if original else None,
        jga_injected_turns=(
            sum(o.correct for o in injected) / len(injected) if injected else None
        ),
        lower_bound=correct_original / len(outcomes),
        turn_count=len(outcomes),
        original_turn_count=len(original),
        injected_turn_count=len(injected),
        missing_predictions=missing,
        outcomes=tuple(outcomes),
    )


def lower_bound(
    dataset_injected: Dataset, outcomes_on_original_turns: Iterable[TurnOutcome]
) -> float:
    """JGA when every injected turn is wrong and original outcomes are kept.

    The outcomes must cover exactly the original-provenance turns of the
    injected dataset; the denominator is the full turn count including the
    injected turns.
    """
    expected = {
        (dialogue.id, turn.index)
        for dialogue in dataset_injected.dialogues
        for turn in dialogue.turns
        if not turn.provenance.is_injected
    }
    outcomes = list(outcomes_on_original_turns)
    got = {(o.dialogue_id, o.turn_index) for o in outcomes}
    if len(got) != len(outcomes):
        raise CoverageError("outcomes repeat a (dialogue_id, turn_index) pair")
    if got != expected:
        raise CoverageError(
            f"outcomes must cover exactly the original turns: "
            f"{len(expected - got)} missing, {len(got - expected)} unexpected"
        )
    total = sum(len(dialogue.turns) for dialogue in dataset_injected.dialogues)
    if total == 0:
        raise ValueError("nothing to report: dataset has no turns")
    return sum(o.correct for o in outcomes) / total


def format_report(report: EvaluationReport) -> str:
    """Human-readable table of the aggregate scores."""

    def fraction(value: float | None) -> str:
        return "n/a" if value is None else f"{value:.4f}"

    rows = [
        ("turns scored", str(report.turn_count)),
        ("original turns", str(report.original_turn_count)),
        ("injected turns", str(report.injected_turn_count)),
        ("missing predictions", str(report.missing_predictions)),
        ("jga", fraction(report.jga)),
        ("jga original turns", fraction(report.jga_original_turns)),
        ("jga injected turns", fraction(report.jga_injected_turns)),
        ("lower bound", fraction(report.lower_bound)),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def write_report(report: EvaluationReport, path: str | Path) -> None:
    """Write the machine-readable JSON form of the report."""
    payload = json.dumps(report.to_dict(), indent=1, ensure_ascii=False)
    Path(path).write_text(payload + "\n", encoding="utf-8")
