import random

import pytest

from turnback.corpus import BeliefState, Dataset, Dialogue, SlotRef, Turn
from turnback.errors import ExhaustedValuesError, NoEligibleSlotError
from turnback.scenarios import (
    TurnbackScenario,
    applicable,
    inject,
    inject_dual_slot,
    inject_dual_value,
    inject_return,
    inject_single,
    sample_alternative_value,
    select_target_slot,
)
from turnback.seeding import derive_rng

from conftest import PinnedRng, make_synthetic_corpus

DEPARTURE = SlotRef("taxi", "departure")
LEAVEAT = SlotRef("taxi", "leaveat")
DESTINATION = SlotRef("taxi", "destination")

ALL_SCENARIOS = list(TurnbackScenario)


def empty_state_dialogue():
    return Dialogue("empty.json", (Turn(0, "", "hello", BeliefState()),))


class TestApplicable:
    def test_rich_dialogue_supports_dual_slot(self, taxi_dialogue, taxi_ontology):
        ok, reason = applicable(taxi_dialogue, TurnbackScenario.DUAL_SLOT, taxi_ontology)
        assert ok and reason is None

    def test_empty_state_skips(self, taxi_ontology):
        ok, reason = applicable(empty_state_dialogue(), TurnbackScenario.SINGLE, taxi_ontology)
        assert not ok
        assert reason == "no belief state"

    def test_dual_value_needs_three_values(self, taxi_ontology):
        # arriveby has exactly two ontology values
        dialogue = Dialogue(
            "d1",
            (Turn(0, "", "hi", BeliefState.from_pairs([("taxi", "arriveby", "18:00")])),),
        )
        ok, reason = applicable(dialogue, TurnbackScenario.DUAL_VALUE, taxi_ontology)
        assert not ok
        assert "3 ontology values" in reason
        ok, _ = applicable(dialogue, TurnbackScenario.SINGLE, taxi_ontology)
        assert ok

    def test_dual_slot_needs_two_slots(self, taxi_ontology):
        dialogue = Dialogue(
            "d1",
            (Turn(0, "", "hi", BeliefState.from_pairs([("taxi", "leaveat", "11:45")])),),
        )
        ok, reason = applicable(dialogue, TurnbackScenario.DUAL_SLOT, taxi_ontology)
        assert not ok
        assert "fewer than 2 slots" in reason

    def test_already_injected_dialogue_not_applicable(self, taxi_dialogue, taxi_ontology, registry):
        injected, _ = inject_single(
            taxi_dialogue, taxi_ontology, registry, "test", derive_rng(1, taxi_dialogue.id)
        )
        ok, reason = applicable(injected, TurnbackScenario.SINGLE, taxi_ontology)
        assert not ok
        assert reason == "already injected"


class TestSelectTargetSlot:
    def test_single_eligible_slot_forced(self, taxi_ontology):
        state = BeliefState.from_pairs([("taxi", "leaveat", "11:45")])
        assert (
            select_target_slot(state, taxi_ontology, frozenset(), random.Random(0)) == LEAVEAT
        )

    def test_all_excluded_raises(self, taxi_ontology):
        state = BeliefState.from_pairs([("taxi", "leaveat", "11:45")])
        with pytest.raises(NoEligibleSlotError):
            select_target_slot(state, taxi_ontology, {LEAVEAT}, random.Random(0))

    def test_uniform_over_eligible_slots(self, taxi_dialogue, taxi_ontology):
        rng = random.Random(13)
        counts = {DEPARTURE: 0, LEAVEAT: 0, DESTINATION: 0}
        draws = 10_000
        state = taxi_dialogue.final_state
        for _ in range(draws):
            counts[select_target_slot(state, taxi_ontology, frozenset(), rng)] += 1
        for count in counts.values():
            assert abs(count / draws - 1 / 3) <= 0.03


class TestSampleAlternativeValue:
    def test_excludes_current_value(self, taxi_ontology):
        rng = random.Random(2)
        for _ in range(100):
            value = sample_alternative_value(taxi_ontology, LEAVEAT, {"11:45"}, rng)
            assert value != "11:45"
            assert value in taxi_ontology.values_for(LEAVEAT)

    def test_forced_when_one_remains(self, taxi_ontology):
        exclude = set(taxi_ontology.values_for(LEAVEAT)) - {"15:00"}
        assert (
            sample_alternative_value(taxi_ontology, LEAVEAT, exclude, random.Random(0))
            == "15:00"
        )

    def test_exhausted_raises(self, taxi_ontology):
        exclude = set(taxi_ontology.values_for(LEAVEAT))
        with pytest.raises(ExhaustedValuesError):
            sample_alternative_value(taxi_ontology, LEAVEAT, exclude, random.Random(0))


class TestPinnedInjections:
    """Drive the injectors with a scripted sampler and check the exact
    gold-state evolution and rendered turns."""

    def test_single(self, taxi_dialogue, taxi_ontology, registry):
        rng = PinnedRng([DEPARTURE, "london liverpool street", lambda t: True])
        injected, record = inject_single(taxi_dialogue, taxi_ontology, registry, "test", rng)
        assert len(injected.turns) == 5
        assert injected.turns[4].gold_state == BeliefState.from_pairs(
            [
                ("taxi", "departure", "london liverpool street"),
                ("taxi", "leaveat", "11:45"),
                ("taxi", "destination", "restaurant 17"),
            ]
        )
        assert injected.turns[4].system_utterance == "Completed."
        assert "london liverpool street" in injected.turns[4].user_utterance
        assert record.injected
        assert record.target_slots == (DEPARTURE,)
        assert record.old_values == ("la raza",)
        assert record.new_values == ("london liverpool street",)
        assert rng.exhausted

    def test_return(self, taxi_dialogue, taxi_ontology, registry):
        rng = PinnedRng([DEPARTURE, "the copper kettle", lambda t: True, lambda t: True])
        injected, record = inject_return(taxi_dialogue, taxi_ontology, registry, "test", rng)
        assert len(injected.turns) == 6
        assert injected.turns[4].gold_state == BeliefState.from_pairs(
            [
                ("taxi", "departure", "the copper kettle"),
                ("taxi", "leaveat", "11:45"),
                ("taxi", "destination", "restaurant 17"),
            ]
        )
        assert injected.turns[5].gold_state == taxi_dialogue.final_state
        assert "the copper kettle" in injected.turns[4].user_utterance
        assert "la raza" in injected.turns[5].user_utterance
        assert record.old_values == ("la raza", "the copper kettle")
        assert record.new_values == ("the copper kettle", "la raza")

    def test_dual_value(self, taxi_dialogue, taxi_ontology, registry):
        rng = PinnedRng([LEAVEAT, "10:15", lambda t: True, "12:00", lambda t: True])
        injected, record = inject_dual_value(taxi_dialogue, taxi_ontology, registry, "test", rng)
        assert len(injected.turns) == 6
        assert injected.turns[4].gold_state.value_of(LEAVEAT) == "10:15"
        assert injected.turns[5].gold_state.value_of(LEAVEAT) == "12:00"
        # untouched slots carried through
        assert injected.turns[5].gold_state.value_of(DEPARTURE) == "la raza"
        assert injected.turns[5].gold_state.value_of(DESTINATION) == "restaurant 17"
        assert record.new_values == ("10:15", "12:00")

    def test_dual_slot(self, taxi_dialogue, taxi_ontology, registry):
        rng = PinnedRng(
            [
                LEAVEAT,
                "15:00",
                lambda t: t.pattern.startswith("Wait"),
                DESTINATION,
                "finches bed and breakfast",
                lambda t: t.pattern.startswith("Hold on"),
            ]
        )
        injected, record = inject_dual_slot(taxi_dialogue, taxi_ontology, registry, "test", rng)
        assert len(injected.turns) == 6
        turn5, turn6 = injected.turns[4], injected.turns[5]
        assert turn5.system_utterance == "Completed."
        assert turn5.user_utterance == (
            "Wait , it might be better to change taxi leave at to 15:00."
        )
        assert turn5.gold_state == BeliefState.from_pairs(
            [
                ("taxi", "departure", "la raza"),
                ("taxi", "leaveat", "15:00"),
                ("taxi", "destination", "restaurant 17"),
            ]
        )
        assert turn6.system_utterance == "Sure. Anything else?"
        assert turn6.user_utterance == (
            "Hold on , I've been thinking about it and I think changing "
            "taxi destination to finches bed and breakfast will be better."
        )
        assert turn6.gold_state == BeliefState.from_pairs(
            [
                ("taxi", "departure", "la raza"),
                ("taxi", "leaveat", "15:00"),
                ("taxi", "destination", "finches bed and breakfast"),
            ]
        )
        assert record.target_slots == (LEAVEAT, DESTINATION)


class TestScenarioProperties:
    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_skip_on_empty_state(self, scenario, taxi_ontology, registry):
        dialogue = empty_state_dialogue()
        dataset = Dataset("test", (dialogue,))
        out, records = inject(dataset, scenario, taxi_ontology, registry, seed=3)
        assert out.dialogues[0] == dialogue
        assert records[0].skipped == "no belief state"
        assert records[0].target_slots == ()

    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_empty_dataset_passes_through(self, scenario, taxi_ontology, registry):
        out, records = inject(Dataset("test", ()), scenario, taxi_ontology, registry, seed=1)
        assert out.dialogues == ()
        assert records == []

    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_turn_count_law(self, scenario, small_corpus, small_ontology, registry):
        out, records = inject(small_corpus, scenario, small_ontology, registry, seed=5)
        for before, after, record in zip(
            small_corpus.dialogues, out.dialogues, records
        ):
            if record.injected:
                assert len(after.turns) == len(before.turns) + scenario.appended_turns
            else:
                assert after == before

    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_prefix_preserved(self, scenario, small_corpus, small_ontology, registry):
        out, _ = inject(small_corpus, scenario, small_ontology, registry, seed=5)
        for before, after in zip(small_corpus.dialogues, out.dialogues):
            assert after.turns[: len(before.turns)] == before.turns

    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_changed_values_appear_in_utterances(
        self, scenario, small_corpus, small_ontology, registry
    ):
        out, records = inject(small_corpus, scenario, small_ontology, registry, seed=8)
        for before, after, record in zip(small_corpus.dialogues, out.dialogues, records):
            if not record.injected:
                continue
            appended = after.turns[len(before.turns) :]
            for turn, value, slot in zip(appended, record.new_values, record.target_slots):
                assert value in turn.user_utterance
                assert turn.gold_state.value_of(slot) == value

    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_sampled_values_come_from_ontology(
        self, scenario, small_corpus, small_ontology, registry
    ):
        _, records = inject(small_corpus, scenario, small_ontology, registry, seed=9)
        for record in records:
            if record.injected:
                for slot, value in zip(record.target_slots, record.new_values):
                    assert value in small_ontology.values_for(slot)

    def test_return_identity(self, small_corpus, small_ontology, registry):
        out, records = inject(
            small_corpus, TurnbackScenario.RETURN, small_ontology, registry, seed=6
        )
        hits = 0
        for before, after, record in zip(small_corpus.dialogues, out.dialogues, records):
            if record.injected:
                hits += 1
                assert after.final_state == before.final_state
                # the detour state in between differs
                assert after.turns[-2].gold_state != before.final_state
        assert hits > 10

    def test_dual_value_pairwise_distinct(self, small_ontology, registry):
        corpus = make_synthetic_corpus(100, seed=21, ontology=small_ontology)
        _, records = inject(
            corpus, TurnbackScenario.DUAL_VALUE, small_ontology, registry, seed=17
        )
        checked = 0
        for record in records:
            if not record.injected:
                continue
            checked += 1
            old, first = record.old_values
            _, second = record.new_values
            assert len({old, first, second}) == 3
        assert checked >= 50

    def test_dual_slot_targets_distinct(self, small_corpus, small_ontology, registry):
        out, records = inject(
            small_corpus, TurnbackScenario.DUAL_SLOT, small_ontology, registry, seed=18
        )
        for before, after, record in zip(small_corpus.dialogues, out.dialogues, records):
            if not record.injected:
                continue
            slot_a, slot_b = record.target_slots
            assert slot_a != slot_b
            # final state differs from the original in exactly two triples
            diff = {
                t for t in after.final_state.triples()
            } ^ {t for t in before.final_state.triples()}
            assert len(diff) == 4  # two replaced pairs

    def test_single_changes_exactly_one_triple(self, small_corpus, small_ontology, registry):
        out, records = inject(
            small_corpus, TurnbackScenario.SINGLE, small_ontology, registry, seed=19
        )
        for before, after, record in zip(small_corpus.dialogues, out.dialogues, records):
            if not record.injected:
                continue
            diff = set(after.final_state.triples()) ^ set(before.final_state.triples())
            assert len(diff) == 2  # one replaced pair
            assert after.final_state.slot_refs() == before.final_state.slot_refs()

    def test_dual_slot_skip_on_single_triple(self, taxi_ontology, registry):
        dialogue = Dialogue(
            "one-slot.json",
            (Turn(0, "", "hi", BeliefState.from_pairs([("taxi", "leaveat", "11:45")])),),
        )
        out, record = inject_dual_slot(
            dialogue, taxi_ontology, registry, "test", random.Random(0)
        )
        assert out == dialogue
        assert not record.injected


class TestDeterminism:
    @pytest.mark.parametrize("scenario", ALL_SCENARIOS)
    def test_same_seed_same_output(self, scenario, small_corpus, small_ontology, registry):
        first, _ = inject(small_corpus, scenario, small_ontology, registry, seed=123)
        second, _ = inject(small_corpus, scenario, small_ontology, registry, seed=123)
        assert first == second

    def test_different_seed_differs(self, small_corpus, small_ontology, registry):
        first, _ = inject(
            small_corpus, TurnbackScenario.SINGLE, small_ontology, registry, seed=1
        )
        second, _ = inject(
            small_corpus, TurnbackScenario.SINGLE, small_ontology, registry, seed=2
        )
        assert first != second

    def test_order_independent_per_dialogue(self, small_corpus, small_ontology, registry):
        shuffled = list(small_corpus.dialogues)
        random.Random(99).shuffle(shuffled)
        reordered = Dataset(small_corpus.phase, tuple(shuffled))
        straight, _ = inject(
            small_corpus, TurnbackScenario.DUAL_SLOT, small_ontology, registry, seed=7
        )
        shuffled_out, _ = inject(
            reordered, TurnbackScenario.DUAL_SLOT, small_ontology, registry, seed=7
        )
        by_id = {d.id: d for d in shuffled_out.dialogues}
        for dialogue in straight.dialogues:
            assert by_id[dialogue.id] == dialogue
