"""Dialogue corpus model and ingestion.

Defines the canonical in-memory form (dialogues made of turns, each turn
carrying a cumulative belief state), the canonical JSON format, the
MultiWOZ 2.1 adapter, and the slot-value ontology. All types are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Literal, Mapping, Sequence

from .errors import ParseError, SchemaError, StateError, UnknownSlotError

logger = logging.getLogger(__name__)

Phase = Literal["train", "validation", "test"]
PHASES: tuple[Phase, ...] = ("train", "validation", "test")

# Annotation placeholders meaning "slot not set"; never stored in a state.
ABSENT_MARKERS = frozenset({"", "none", "not mentioned"})


def normalize_value(raw: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to single spaces."""
    return " ".join(raw.lower().split())


@dataclass(frozen=True, order=True)
class SlotRef:
    """A (domain, slot) pair in compact lowercase form, e.g. ("taxi", "leaveat")."""

    domain: str
    slot: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", normalize_value(self.domain))
        object.__setattr__(self, "slot", normalize_value(self.slot))
        if not self.domain or not self.slot:
            raise ValueError(f"slot reference needs a non-empty domain and slot: {self!r}")

    @classmethod
    def parse(cls, key: str) -> "SlotRef":
        """Parse a "domain-slot" key; the first dash separates the parts."""
        domain, sep, slot = key.partition("-")
        if not sep or not domain or not slot:
            raise SchemaError(f"slot key {key!r} is not of the form 'domain-slot'")
        return cls(domain, slot)

    def key(self) -> str:
        return f"{self.domain}-{self.slot}"


@dataclass(frozen=True, order=True)
class BeliefTriple:
    """One (domain, slot, value) element of a belief state."""

    slot_ref: SlotRef
    value: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", normalize_value(self.value))
        if self.value in ABSENT_MARKERS:
            raise ValueError(
                f"absent marker {self.value!r} cannot be stored for {self.slot_ref.key()}"
            )


class BeliefState:
    """Immutable set of belief triples, at most one value per slot.

    Equality is order-independent set equality of the triples, which is
    exactly the joint-goal-accuracy match criterion.
    """

    __slots__ = ("_values",)

    def __init__(self, triples: Iterable[BeliefTriple] = ()) -> None:
        values: dict[SlotRef, str] = {}
        for triple in triples:
            if triple.slot_ref in values:
                raise StateError(f"duplicate slot {triple.slot_ref.key()} in belief state")
            values[triple.slot_ref] = triple.value
        self._values = values

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str, str]]) -> "BeliefState":
        return cls(BeliefTriple(SlotRef(d, s), v) for d, s, v in pairs)

    @classmethod
    def from_list(cls, entries: object) -> "BeliefState":
        """Build a state from the canonical JSON list-of-objects form."""
        if not isinstance(entries, list):
            raise SchemaError(f"state must be a list, got {type(entries).__name__}")
        triples = []
        for entry in entries:
            if not isinstance(entry, dict):
                raise SchemaError("state entry must be an object")
            missing = {"domain", "slot", "value"} - entry.keys()
            if missing:
                raise SchemaError(f"state entry missing field(s): {', '.join(sorted(missing))}")
            triples.append(BeliefTriple(SlotRef(entry["domain"], entry["slot"]), entry["value"]))
        return cls(triples)

    def value_of(self, slot_ref: SlotRef) -> str:
        return self._values[slot_ref]

    def get(self, slot_ref: SlotRef, default: str | None = None) -> str | None:
        return self._values.get(slot_ref, default)

    def slot_refs(self) -> tuple[SlotRef, ...]:
        return tuple(sorted(self._values))

    def triples(self) -> tuple[BeliefTriple, ...]:
        return tuple(BeliefTriple(s, self._values[s]) for s in sorted(self._values))

    def with_value(self, slot_ref: SlotRef, value: str) -> "BeliefState":
        """New state with `slot_ref` set (or replaced) to `value`."""
        triples = [BeliefTriple(s, v) for s, v in self._values.items() if s != slot_ref]
        triples.append(BeliefTriple(slot_ref, value))
        return BeliefState(triples)

    def to_list(self) -> list[dict[str, str]]:
        return [
            {"domain": t.slot_ref.domain, "slot": t.slot_ref.slot, "value": t.value}
            for t in self.triples()
        ]

    def __contains__(self, slot_ref: SlotRef) -> bool:
        return slot_ref in self._values

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self) -> Iterator[BeliefTriple]:
        return iter(self.triples())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BeliefState):
            return NotImplemented
        return self._values == other._values

    def __hash__(self) -> int:
        return hash(frozenset(self._values.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{t.slot_ref.key()}={t.value!r}" for t in self.triples())
        return f"BeliefState({inner})"


@dataclass(frozen=True)
class Provenance:
    """Where a turn came from: the source corpus or a turnback injector."""

    scenario: str | None = None
    position: int | None = None

    def __post_init__(self) -> None:
        if (self.scenario is None) != (self.position is None):
            raise ValueError("injected provenance needs both a scenario and a position")
        if self.position is not None and self.position < 0:
            raise ValueError("injected position must be >= 0")

    @property
    def is_injected(self) -> bool:
        return self.scenario is not None

    @classmethod
    def original(cls) -> "Provenance":
        return cls()

    @classmethod
    def injected(cls, scenario: str, position: int) -> "Provenance":
        return cls(scenario, position)

    def to_json(self) -> object:
        if not self.is_injected:
            return "original"
        return {"injected": {"scenario": self.scenario, "position": self.position}}

    @classmethod
    def from_json(cls, obj: object) -> "Provenance":
        if obj == "original":
            return cls.original()
        if isinstance(obj, dict) and isinstance(obj.get("injected"), dict):
            inner = obj["injected"]
            scenario, position = inner.get("scenario"), inner.get("position")
            if isinstance(scenario, str) and scenario and isinstance(position, int):
                return cls.injected(scenario, position)
        raise SchemaError(f"bad provenance value: {obj!r}")


@dataclass(frozen=True)
class Turn:
    """One exchange: system utterance, user reply, cumulative gold state."""

    index: int
    system_utterance: str
    user_utterance: str
    gold_state: BeliefState
    provenance: Provenance = field(default_factory=Provenance.original)


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", tuple(self.turns))

    @property
    def final_state(self) -> BeliefState:
        return self.turns[-1].gold_state if self.turns else BeliefState()

    def with_turns_appended(self, extra: Sequence[Turn]) -> "Dialogue":
        return Dialogue(self.id, self.turns + tuple(extra))


@dataclass(frozen=True)
class Dataset:
    phase: Phase
    dialogues: tuple[Dialogue, ...]

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}, got {self.phase!r}")
        object.__setattr__(self, "dialogues", tuple(self.dialogues))


@dataclass(frozen=True)
class Ontology:
    """Catalog of legal values per slot; value lists are sorted and deduplicated."""

    entries: Mapping[SlotRef, tuple[str, ...]]

    @classmethod
    def from_dict(cls, mapping: Mapping[str, Sequence[str]]) -> "Ontology":
        entries: dict[SlotRef, tuple[str, ...]] = {}
        for key, values in mapping.items():
            slot_ref = SlotRef.parse(key)
            if not isinstance(values, (list, tuple)):
                raise SchemaError(f"ontology entry {key!r} must map to a list of values")
            normalized = sorted({normalize_value(str(v)) for v in values} - ABSENT_MARKERS)
            if not normalized:
                raise SchemaError(f"ontology entry {key!r} has no usable values")
            entries[slot_ref] = tuple(normalized)
        return cls(entries)

    def has(self, slot_ref: SlotRef) -> bool:
        return slot_ref in self.entries

    def values_for(self, slot_ref: SlotRef) -> tuple[str, ...]:
        """The legal values for a slot; empty when the slot is unknown."""
        return self.entries.get(slot_ref, ())

    def alternatives(self, slot_ref: SlotRef, exclude: Iterable[str]) -> tuple[str, ...]:
        banned = {normalize_value(v) for v in exclude}
        return tuple(v for v in self.values_for(slot_ref) if v not in banned)


def accumulated_state(dialogue: Dialogue, turn_index: int) -> BeliefState:
    """The cumulative gold state up to and including `turn_index`."""
    if not 0 <= turn_index < len(dialogue.turns):
        raise IndexError(
            f"turn index {turn_index} out of range for {dialogue.id} "
            f"({len(dialogue.turns)} turns)"
        )
    return dialogue.turns[turn_index].gold_state


# ---------------------------------------------------------------------------
# Canonical JSON format
# ---------------------------------------------------------------------------


def _read_json(path: str | Path) -> object:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _require(obj: dict, key: str, context: str) -> object:
    if key not in obj:
        raise SchemaError(f"{context}: missing field {key!r}")
    return obj[key]


def load_canonical(path: str | Path) -> Dataset:
    """Load a dataset in the canonical JSON format.

    Raises ParseError for malformed JSON, SchemaError for structural
    violations (missing fields, duplicate dialogue ids, non-contiguous turn
    indices, empty user utterances, injected turns before original ones),
    and StateError when a turn repeats a slot inside its state.
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    phase = _require(data, "phase", str(path))
    if phase not in PHASES:
        raise SchemaError(f"{path}: phase must be one of {PHASES}, got {phase!r}")
    raw_dialogues = _require(data, "dialogues", str(path))
    if not isinstance(raw_dialogues, list):
        raise SchemaError(f"{path}: 'dialogues' must be a list")

    dialogues: list[Dialogue] = []
    seen_ids: set[str] = set()
    for raw_dialogue in raw_dialogues:
        if not isinstance(raw_dialogue, dict):
            raise SchemaError(f"{path}: dialogue entries must be objects")
        dialogue_id = _require(raw_dialogue, "id", str(path))
        if not isinstance(dialogue_id, str) or not dialogue_id:
            raise SchemaError(f"{path}: dialogue id must be a non-empty string")
        if dialogue_id in seen_ids:
            raise SchemaError(f"{path}: duplicate dialogue id {dialogue_id!r}")
        seen_ids.add(dialogue_id)
        raw_turns = _require(raw_dialogue, "turns", dialogue_id)
        if not isinstance(raw_turns, list):
            raise SchemaError(f"{dialogue_id}: 'turns' must be a list")

        turns: list[Turn] = []
        past_injected = False
        for position, raw_turn in enumerate(raw_turns):
            if not isinstance(raw_turn, dict):
                raise SchemaError(f"{dialogue_id}: turn entries must be objects")
            context = f"{dialogue_id} turn {position}"
            index = _require(raw_turn, "index", context)
            if index != position:
                raise SchemaError(
                    f"{dialogue_id}: turn indices must be contiguous from 0, "
                    f"found {index!r} at position {position}"
                )
            system = _require(raw_turn, "system", context)
            user = _require(raw_turn, "user", context)
            if not isinstance(user, str) or not user:
                raise SchemaError(f"{context}: user utterance must be non-empty")
            if not isinstance(system, str):
                raise SchemaError(f"{context}: system utterance must be a string")
            try:
                state = BeliefState.from_list(_require(raw_turn, "state", context))
            except (SchemaError, StateError, ValueError) as exc:
                if isinstance(exc, StateError):
                    raise StateError(f"{context}: {exc}") from exc
                raise SchemaError(f"{context}: {exc}") from exc
            provenance = Provenance.from_json(_require(raw_turn, "provenance", context))
            if provenance.is_injected:
                past_injected = True
            elif past_injected:
                raise SchemaError(f"{context}: original turn after an injected turn")
            turns.append(Turn(position, system, user, state, provenance))
        dialogues.append(Dialogue(dialogue_id, tuple(turns)))
    return Dataset(phase, tuple(dialogues))


def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "phase": dataset.phase,
        "dialogues": [
            {
                "id": dialogue.id,
                "turns": [
                    {
                        "index": turn.index,
                        "system": turn.system_utterance,
                        "user": turn.user_utterance,
                        "state": turn.gold_state.to_list(),
                        "provenance": turn.provenance.to_json(),
                    }
                    for turn in dialogue.turns
                ],
            }
            for dialogue in dataset.dialogues
        ],
    }


def serialize(dataset: Dataset, path: str | Path) -> None:
    """Write canonical JSON such that load_canonical() reproduces the dataset.

    Output is deterministic: same dataset, same bytes.
    """
    payload = json.dumps(dataset_to_dict(dataset), indent=1, ensure_ascii=False)
    Path(path).write_text(payload + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Ontology file
# ---------------------------------------------------------------------------


def load_ontology(path: str | Path) -> Ontology:
    """Load an ontology file mapping "domain-slot" keys to value lists."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: ontology must be an object of slot keys")
    return Ontology.from_dict(data)


# ---------------------------------------------------------------------------
# MultiWOZ 2.1 adapter
# ---------------------------------------------------------------------------


def load_multiwoz(path: str | Path, phase: Phase, ontology: Ontology | None = None) -> Dataset:
    """Adapt a raw MultiWOZ 2.1 data file (dialogue id -> {"log": [...]}).

    The raw log alternates sides: entry 2i is user utterance i and entry
    2i+1 carries the system response together with the cumulative belief
    annotation for turn i. The canonical form pairs each user utterance
    with the PRECEDING system response, so turn 0 has an empty system side.

    Values are normalized; absent markers ("", "none", "not mentioned")
    are dropped. When an ontology is supplied, a dialogue containing a slot
    key absent from it is skipped with a logged warning; malformed dialogue
    entries are skipped the same way. Skipping never aborts the load.
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must map dialogue ids to records")
    dialogues: list[Dialogue] = []
    skipped = 0
    for dialogue_id, record in data.items():
        try:
            dialogues.append(_adapt_multiwoz_dialogue(dialogue_id, record, ontology))
        except (UnknownSlotError, SchemaError, StateError, ValueError) as exc:
            skipped += 1
            logger.warning("skipping dialogue %s: %s", dialogue_id, exc)
    if skipped:
        logger.warning("skipped %d of %d dialogues during ingestion", skipped, len(data))
    return Dataset(phase, tuple(dialogues))


def _adapt_multiwoz_dialogue(
    dialogue_id: str, record: object, ontology: Ontology | None
) -> Dialogue:
    if not isinstance(record, dict) or not isinstance(record.get("log"), list):
        raise SchemaError("record has no 'log' list")
    log = record["log"]
    if not log or len(log) % 2:
        raise SchemaError(f"log must hold user/system pairs, got {len(log)} entries")
    turns: list[Turn] = []
    for i in range(len(log) // 2):
        user_entry, system_entry = log[2 * i], log[2 * i + 1]
        if not isinstance(user_entry, dict) or not isinstance(system_entry, dict):
            raise SchemaError(f"log entries of turn {i} must be objects")
        user = str(user_entry.get("text", "")).strip()
        if not user:
            raise SchemaError(f"turn {i} has an empty user utterance")
        system = "" if i == 0 else str(log[2 * i - 1].get("text", "")).strip()
        metadata = system_entry.get("metadata", {})
        if not isinstance(metadata, dict):
            raise SchemaError(f"turn {i} metadata must be an object")
        state = _state_from_metadata(metadata, ontology)
        turns.append(Turn(i, system, user, state))
    return Dialogue(dialogue_id, tuple(turns))


def _state_from_metadata(metadata: dict, ontology: Ontology | None) -> BeliefState:
    triples: list[BeliefTriple] = []
    for domain in sorted(metadata):
        sections = metadata[domain]
        if not isinstance(sections, dict):
            raise SchemaError(f"domain {domain!r} annotation must be an object")
        for section, prefix in (("semi", ""), ("book", "book ")):
            slots = sections.get(section, {})
            if not isinstance(slots, dict):
                raise SchemaError(f"{domain}.{section} must be an object")
            for key, value in slots.items():
                if key == "booked":
                    continue
                if isinstance(value, list):  # rare multi-value annotation; keep the first
                    value = value[0] if value else ""
                normalized = normalize_value(str(value))
                if normalized in ABSENT_MARKERS:
                    continue
                slot_ref = SlotRef(domain, prefix + key)
                if ontology is not None and not ontology.has(slot_ref):
                    raise UnknownSlotError(f"slot {slot_ref.key()!r} not in ontology")
                triples.append(BeliefTriple(slot_ref, normalized))
    return BeliefState(triples)


# ---------------------------------------------------------------------------
# Invariant checking
# ---------------------------------------------------------------------------


def validate_dataset(dataset: Dataset) -> list[str]:
    """Check corpus invariants, returning one message per violation.

    Covers unique ids, contiguous indices, non-empty user utterances,
    injected-after-original ordering, and cumulative monotonicity (a turn
    never drops a slot present at the previous turn).
    """
    violations: list[str] = []
    seen_ids: set[str] = set()
    for dialogue in dataset.dialogues:
        if dialogue.id in seen_ids:
            violations.append(f"duplicate dialogue id {dialogue.id!r}")
        seen_ids.add(dialogue.id)
        past_injected = False
        for position, turn in enumerate(dialogue.turns):
            where = f"{dialogue.id} turn {position}"
            if turn.index != position:
                violations.append(f"{where}: index {turn.index} breaks contiguity")
            if not turn.user_utterance:
                violations.append(f"{where}: empty user utterance")
            if turn.provenance.is_injected:
                past_injected = True
            elif past_injected:
                violations.append(f"{where}: original turn after an injected turn")
            if position > 0:
                previous = dialogue.turns[position - 1].gold_state
                dropped = [s.key() for s in previous.slot_refs() if s not in turn.gold_state]
                if dropped:
                    violations.append(f"{where}: drops slot(s) {', '.join(dropped)}")
    return violations
