"""The four turnback injectors.

Each injector appends relabeled turns to the END of a dialogue: the user
revises one or two previously stated slot values, the system acknowledges,
and the appended gold states carry the revision. A dialogue of t turns
grows to t+1 turns for a single turnback and t+2 for the multi-step
scenarios; inapplicable dialogues pass through unchanged with a skip
record, never silently.

Random consumption order is fixed and documented per injector (target
slot, then per appended turn: value, then template), so a pinned sampler
or a replayed seed reproduces outputs exactly.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .corpus import (
    BeliefState,
    Dataset,
    Dialogue,
    Ontology,
    Phase,
    Provenance,
    SlotRef,
    Turn,
    normalize_value,
)
from .errors import ExhaustedValuesError, NoEligibleSlotError
from .seeding import derive_rng
from .templates import (
    DEFAULT_DISPLAY_NAMES,
    SlotDisplayNames,
    TemplateRegistry,
    pick_template,
    render,
)


class TurnbackScenario(enum.Enum):
    """The four mind-changing patterns."""

    SINGLE = "single"
    RETURN = "return"
    DUAL_VALUE = "dual-value"
    DUAL_SLOT = "dual-slot"

    @property
    def appended_turns(self) -> int:
        return 1 if self is TurnbackScenario.SINGLE else 2

    @classmethod
    def parse(cls, text: str) -> "TurnbackScenario":
        for scenario in cls:
            if scenario.value == text:
                return scenario
        raise ValueError(f"unknown scenario {text!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class InjectionRecord:
    """Audit trail of one injection attempt (success or skip)."""

    dialogue_id: str
    scenario: TurnbackScenario
    target_slots: tuple[SlotRef, ...] = ()
    old_values: tuple[str, ...] = ()
    new_values: tuple[str, ...] = ()
    skipped: str | None = None

    @property
    def injected(self) -> bool:
        return self.skipped is None

    def to_dict(self) -> dict:
        return {
            "dialogue_id": self.dialogue_id,
            "scenario": self.scenario.value,
            "target_slots": [{"domain": s.domain, "slot": s.slot} for s in self.target_slots],
            "old_values": list(self.old_values),
            "new_values": list(self.new_values),
            "skipped": self.skipped,
        }


def write_injection_log(records: Iterable[InjectionRecord], path: str | Path) -> None:
    """One JSON object per line, in record order."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def eligible_slots(
    state: BeliefState,
    ontology: Ontology,
    min_values: int = 2,
    exclude: frozenset[SlotRef] | set[SlotRef] = frozenset(),
) -> list[SlotRef]:
    """Slots of the state that can be retargeted, in sorted order.

    A slot qualifies when it is not excluded and the ontology offers at
    least `min_values` values for it (2 guarantees an alternative to the
    current value, 3 guarantees two successive fresh values).
    """
    return [
        slot_ref
        for slot_ref in state.slot_refs()
        if slot_ref not in exclude and len(ontology.values_for(slot_ref)) >= min_values
    ]


def applicable(
    dialogue: Dialogue, scenario: TurnbackScenario, ontology: Ontology
) -> tuple[bool, str | None]:
    """Whether the scenario can be injected, with a reason when it cannot."""
    if any(turn.provenance.is_injected for turn in dialogue.turns):
        return False, "already injected"
    if not dialogue.turns:
        return False, "no turns"
    state = dialogue.final_state
    if not len(state):
        return False, "no belief state"
    if scenario in (TurnbackScenario.SINGLE, TurnbackScenario.RETURN):
        if not eligible_slots(state, ontology, 2):
            return False, "no slot with at least 2 ontology values"
    elif scenario is TurnbackScenario.DUAL_VALUE:
        if not eligible_slots(state, ontology, 3):
            return False, "no slot with at least 3 ontology values"
    else:  # DUAL_SLOT
        if len(eligible_slots(state, ontology, 2)) < 2:
            return False, "fewer than 2 slots with at least 2 ontology values"
    return True, None


def select_target_slot(
    state: BeliefState,
    ontology: Ontology,
    exclude: frozenset[SlotRef] | set[SlotRef],
    rng: random.Random,
    min_values: int = 2,
) -> SlotRef:
    """Uniform choice among eligible slots of the state."""
    candidates = eligible_slots(state, ontology, min_values, exclude)
    if not candidates:
        raise NoEligibleSlotError(
            f"no eligible slot (need >= {min_values} ontology values, "
            f"{len(exclude)} excluded)"
        )
    return rng.choice(candidates)


def sample_alternative_value(
    ontology: Ontology,
    slot_ref: SlotRef,
    exclude: Iterable[str],
    rng: random.Random,
) -> str:
    """Uniform choice among the slot's ontology values minus `exclude`."""
    banned = {normalize_value(v) for v in exclude}
    candidates = [v for v in ontology.values_for(slot_ref) if v not in banned]
    if not candidates:
        raise ExhaustedValuesError(
            f"all ontology values for {slot_ref.key()} are excluded"
        )
    return rng.choice(candidates)


def _skip(dialogue: Dialogue, scenario: TurnbackScenario, reason: str) -> InjectionRecord:
    return InjectionRecord(dialogue.id, scenario, skipped=reason)


def _appended_turn(
    dialogue: Dialogue,
    position: int,
    scenario: TurnbackScenario,
    state: BeliefState,
    slot_ref: SlotRef,
    value: str,
    registry: TemplateRegistry,
    phase: Phase,
    rng: random.Random,
    display_names: SlotDisplayNames,
) -> Turn:
    template = pick_template(registry, phase, "user", rng)
    return Turn(
        index=len(dialogue.turns) + position,
        system_utterance=registry.system_pattern(phase, position),
        user_utterance=render(template, slot_ref, value, display_names),
        gold_state=state,
        provenance=Provenance.injected(scenario.value, position),
    )


def inject_single(
    dialogue: Dialogue,
    ontology: Ontology,
    registry: TemplateRegistry,
    phase: Phase,
    rng: random.Random,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dialogue, InjectionRecord]:
    """Append one turn changing the value of one slot.

    Random order: slot, value, template.
    """
    scenario = TurnbackScenario.SINGLE
    ok, reason = applicable(dialogue, scenario, ontology)
    if not ok:
        return dialogue, _skip(dialogue, scenario, reason)
    names = display_names or DEFAULT_DISPLAY_NAMES
    final = dialogue.final_state
    try:
        slot = select_target_slot(final, ontology, frozenset(), rng)
        old = final.value_of(slot)
        new = sample_alternative_value(ontology, slot, {old}, rng)
    except (NoEligibleSlotError, ExhaustedValuesError) as exc:
        return dialogue, _skip(dialogue, scenario, str(exc))
    turn = _appended_turn(
        dialogue, 0, scenario, final.with_value(slot, new), slot, new, registry, phase, rng, names
    )
    record = InjectionRecord(dialogue.id, scenario, (slot,), (old,), (new,))
    return dialogue.with_turns_appended([turn]), record


def inject_return(
    dialogue: Dialogue,
    ontology: Ontology,
    registry: TemplateRegistry,
    phase: Phase,
    rng: random.Random,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dialogue, InjectionRecord]:
    """Append two turns: change one slot's value, then restore the original,
    so the final gold state equals the pre-injection final state.

    Random order: slot, value, template, template (the second value is
    forced back to the original).
    """
    scenario = TurnbackScenario.RETURN
    ok, reason = applicable(dialogue, scenario, ontology)
    if not ok:
        return dialogue, _skip(dialogue, scenario, reason)
    names = display_names or DEFAULT_DISPLAY_NAMES
    final = dialogue.final_state
    try:
        slot = select_target_slot(final, ontology, frozenset(), rng)
        old = final.value_of(slot)
        detour = sample_alternative_value(ontology, slot, {old}, rng)
    except (NoEligibleSlotError, ExhaustedValuesError) as exc:
        return dialogue, _skip(dialogue, scenario, str(exc))
    first = _appended_turn(
        dialogue, 0, scenario, final.with_value(slot, detour), slot, detour,
        registry, phase, rng, names,
    )
    second = _appended_turn(
        dialogue, 1, scenario, final, slot, old, registry, phase, rng, names
    )
    record = InjectionRecord(
        dialogue.id, scenario, (slot, slot), (old, detour), (detour, old)
    )
    return dialogue.with_turns_appended([first, second]), record


def inject_dual_value(
    dialogue: Dialogue,
    ontology: Ontology,
    registry: TemplateRegistry,
    phase: Phase,
    rng: random.Random,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dialogue, InjectionRecord]:
    """Append two turns changing the same slot to two fresh values, so the
    original value and both new values are pairwise distinct.

    Random order: slot, value, template, value, template.
    """
    scenario = TurnbackScenario.DUAL_VALUE
    ok, reason = applicable(dialogue, scenario, ontology)
    if not ok:
        return dialogue, _skip(dialogue, scenario, reason)
    names = display_names or DEFAULT_DISPLAY_NAMES
    final = dialogue.final_state
    try:
        slot = select_target_slot(final, ontology, frozenset(), rng, min_values=3)
        old = final.value_of(slot)
        first_value = sample_alternative_value(ontology, slot, {old}, rng)
    except (NoEligibleSlotError, ExhaustedValuesError) as exc:
        return dialogue, _skip(dialogue, scenario, str(exc))
    first = _appended_turn(
        dialogue, 0, scenario, final.with_value(slot, first_value), slot, first_value,
        registry, phase, rng, names,
    )
    second_value = sample_alternative_value(ontology, slot, {old, first_value}, rng)
    second = _appended_turn(
        dialogue, 1, scenario, final.with_value(slot, second_value), slot, second_value,
        registry, phase, rng, names,
    )
    record = InjectionRecord(
        dialogue.id, scenario, (slot, slot), (old, first_value), (first_value, second_value)
    )
    return dialogue.with_turns_appended([first, second]), record


def inject_dual_slot(
    dialogue: Dialogue,
    ontology: Ontology,
    registry: TemplateRegistry,
    phase: Phase,
    rng: random.Random,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dialogue, InjectionRecord]:
    """Append two turns, each changing a different slot (a single turnback
    applied twice); the final state differs from the original in exactly
    two triples.

    Random order: slot, value, template, slot, value, template.
    """
    scenario = TurnbackScenario.DUAL_SLOT
    ok, reason = applicable(dialogue, scenario, ontology)
    if not ok:
        return dialogue, _skip(dialogue, scenario, reason)
    names = display_names or DEFAULT_DISPLAY_NAMES
    final = dialogue.final_state
    try:
        first_slot = select_target_slot(final, ontology, frozenset(), rng)
        first_old = final.value_of(first_slot)
        first_new = sample_alternative_value(ontology, first_slot, {first_old}, rng)
    except (NoEligibleSlotError, ExhaustedValuesError) as exc:
        return dialogue, _skip(dialogue, scenario, str(exc))
    after_first = final.with_value(first_slot, first_new)
    first = _appended_turn(
        dialogue, 0, scenario, after_first, first_slot, first_new, registry, phase, rng, names
    )
    second_slot = select_target_slot(after_first, ontology, {first_slot}, rng)
    second_old = after_first.value_of(second_slot)
    second_new = sample_alternative_value(ontology, second_slot, {second_old}, rng)
    second = _appended_turn(
        dialogue, 1, scenario, after_first.with_value(second_slot, second_new),
        second_slot, second_new, registry, phase, rng, names,
    )
    record = InjectionRecord(
        dialogue.id,
        scenario,
        (first_slot, second_slot),
        (first_old, second_old),
        (first_new, second_new),
    )
    return dialogue.with_turns_appended([first, second]), record


_INJECTORS: dict[TurnbackScenario, Callable] = {
    TurnbackScenario.SINGLE: inject_single,
    TurnbackScenario.RETURN: inject_return,
    TurnbackScenario.DUAL_VALUE: inject_dual_value,
    TurnbackScenario.DUAL_SLOT: inject_dual_slot,
}


def inject_dialogue(
    dialogue: Dialogue,
    scenario: TurnbackScenario,
    ontology: Ontology,
    registry: TemplateRegistry,
    phase: Phase,
    rng: random.Random,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dialogue, InjectionRecord]:
    return _INJECTORS[scenario](dialogue, ontology, registry, phase, rng, display_names)


def inject(
    dataset: Dataset,
    scenario: TurnbackScenario,
    ontology: Ontology,
    registry: TemplateRegistry,
    seed: int,
    phase: Phase | None = None,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dataset, list[InjectionRecord]]:
    """Apply one scenario to every applicable dialogue of the dataset.

    Each dialogue gets its own random stream derived from (seed, id), so
    the output is a pure function of the inputs and does not depend on
    dialogue order or scheduling. Inapplicable dialogues pass through
    unchanged with a skip record.
    """
    template_phase: Phase = phase or dataset.phase
    dialogues: list[Dialogue] = []
    records: list[InjectionRecord] = []
    for dialogue in dataset.dialogues:
        rng = derive_rng(seed, dialogue.id)
        injected, record = inject_dialogue(
            dialogue, scenario, ontology, registry, template_phase, rng, display_names
        )
        dialogues.append(injected)
        records.append(record)
    return Dataset(dataset.phase, tuple(dialogues)), records
