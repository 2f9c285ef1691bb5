#!/usr/bin/env python3
"""Proportion ablation demo: how JGA degrades as turnback density grows.

Builds Test-{0,30,50,70,100}% mixes of a synthetic corpus and scores a
simulated model that is perfect on original turns but never predicts the
injected ones. The printed column is the lower bound of that model: it
shrinks as the injected proportion grows, which is the whole point of
stress-testing with turnbacks.
"""

import random

from turnback import (
    BeliefState,
    Dataset,
    Dialogue,
    MixSpec,
    Ontology,
    Prediction,
    Turn,
    TurnbackScenario,
    default_registry,
    joint_goal_accuracy,
    mix,
)

ontology = Ontology.from_dict(
    {
        "hotel-area": ["north", "south", "east", "west", "centre"],
        "hotel-pricerange": ["cheap", "moderate", "expensive"],
        "hotel-stars": ["2", "3", "4", "5"],
    }
)

rng = random.Random(0)
slots = sorted(ontology.entries)
dialogues = []
for i in range(400):
    chosen = rng.sample(slots, rng.randint(1, 3))
    state = BeliefState()
    turns = []
    for t, slot in enumerate(chosen):
        state = state.with_value(slot, rng.choice(ontology.values_for(slot)))
        turns.append(Turn(t, "" if t == 0 else "Noted.", f"turn {t} request", state))
    dialogues.append(Dialogue(f"hotel-{i:03d}.json", tuple(turns)))
corpus = Dataset("test", tuple(dialogues))

registry = default_registry()
print(f"{'proportion':>10}  {'turns':>6}  {'injected':>8}  {'jga':>7}")
for proportion in (0, 30, 50, 70, 100):
    mixed, _ = mix(
        corpus, MixSpec(proportion, TurnbackScenario.DUAL_SLOT, seed=13), ontology, registry
    )
    predictions = [
        Prediction(
            d.id, t.index, BeliefState() if t.provenance.is_injected else t.gold_state
        )
        for d in mixed.dialogues
        for t in d.turns
    ]
    report = joint_goal_accuracy(mixed, predictions)
    print(
        f"{proportion:>9}%  {report.turn_count:>6}  {report.injected_turn_count:>8}  "
        f"{report.jga:>7.4f}"
    )
