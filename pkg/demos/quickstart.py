#!/usr/bin/env python3
"""End-to-end walkthrough: build a toy corpus, inject turnbacks, mix, evaluate.

Run with `python3 demos/quickstart.py`. Everything is written to a
temporary directory whose path is printed at the end, so you can inspect
the produced files, audit log, and report.
"""

import json
import tempfile
from pathlib import Path

from turnback import (
    BeliefState,
    Dataset,
    Dialogue,
    MixSpec,
    Ontology,
    Prediction,
    SlotRef,
    Turn,
    TurnbackScenario,
    default_registry,
    format_report,
    inject,
    joint_goal_accuracy,
    load_canonical,
    mix,
    serialize,
    write_injection_log,
    write_report,
)

workdir = Path(tempfile.mkdtemp(prefix="turnback-demo-"))

# ---------------------------------------------------------------------------
# 1. A small corpus: two taxi bookings plus a dialogue without belief state
# ---------------------------------------------------------------------------

ontology = Ontology.from_dict(
    {
        "taxi-departure": ["la raza", "the copper kettle", "cityroomz"],
        "taxi-destination": ["restaurant 17", "finches bed and breakfast", "gonville hotel"],
        "taxi-leaveat": ["09:30", "11:45", "15:00"],
    }
)


def booking(dialogue_id: str, destination: str, leaveat: str) -> Dialogue:
    first = BeliefState.from_pairs([("taxi", "destination", destination)])
    second = first.with_value(SlotRef("taxi", "leaveat"), leaveat)
    return Dialogue(
        dialogue_id,
        (
            Turn(0, "", f"I need a taxi to {destination}.", first),
            Turn(1, "When would you like to leave?", f"At {leaveat}, please.", second),
        ),
    )


greeting = Dialogue("greeting.json", (Turn(0, "", "Hello! Are you open today?", BeliefState()),))
corpus = Dataset(
    "test",
    (
        booking("ride-001.json", "restaurant 17", "11:45"),
        booking("ride-002.json", "gonville hotel", "09:30"),
        greeting,
    ),
)
corpus_path = workdir / "corpus.json"
serialize(corpus, corpus_path)
print(f"corpus: {len(corpus.dialogues)} dialogues written to {corpus_path.name}")

# ---------------------------------------------------------------------------
# 2. Inject a dual-slot turnback at the end of every applicable dialogue
# ---------------------------------------------------------------------------

registry = default_registry()
injected, records = inject(corpus, TurnbackScenario.DUAL_SLOT, ontology, registry, seed=7)
write_injection_log(records, workdir / "audit.jsonl")
serialize(injected, workdir / "injected.json")

print("\nafter dual-slot injection:")
for dialogue, record in zip(injected.dialogues, records):
    if record.injected:
        for turn in dialogue.turns[-2:]:
            print(f"  {dialogue.id} turn {turn.index}: {turn.user_utterance}")
    else:
        print(f"  {dialogue.id}: skipped ({record.skipped})")

# ---------------------------------------------------------------------------
# 3. Mix: inject only 50% of the dialogues (seeded, exact count, nested)
# ---------------------------------------------------------------------------

mixed, mix_records = mix(
    corpus, MixSpec(50, TurnbackScenario.SINGLE, seed=7), ontology, registry
)
grown = sum(
    len(after.turns) > len(before.turns)
    for before, after in zip(corpus.dialogues, mixed.dialogues)
)
print(f"\nmixing at 50%: {len(mix_records)} selected, {grown} dialogues grew")

# ---------------------------------------------------------------------------
# 4. Evaluate a simulated model that never notices the injected turns
# ---------------------------------------------------------------------------

predictions = []
for dialogue in injected.dialogues:
    for turn in dialogue.turns:
        predicted = BeliefState() if turn.provenance.is_injected else turn.gold_state
        predictions.append(Prediction(dialogue.id, turn.index, predicted))

report = joint_goal_accuracy(injected, predictions)
write_report(report, workdir / "report.json")
print("\nevaluation of a turnback-blind model:")
print(format_report(report))

# Round-trip sanity: the serialized injected dataset reloads identically.
assert load_canonical(workdir / "injected.json") == injected

print(f"\nall files are under {workdir}")
print(json.dumps(sorted(p.name for p in workdir.iterdir()), indent=1))
