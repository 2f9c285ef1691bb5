import random
from pathlib import Path

import pytest

from turnback.corpus import (
    BeliefState,
    Dataset,
    Dialogue,
    Ontology,
    Turn,
    load_canonical,
    load_ontology,
)
from turnback.templates import default_registry

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_paths():
    return {
        "dataset": DATA_DIR / "sng01367.json",
        "ontology": DATA_DIR / "taxi_ontology.json",
        "multiwoz": DATA_DIR / "multiwoz_mini.json",
    }


@pytest.fixture(scope="session")
def taxi_ontology(fixture_paths):
    return load_ontology(fixture_paths["ontology"])


@pytest.fixture()
def taxi_dataset(fixture_paths):
    return load_canonical(fixture_paths["dataset"])


@pytest.fixture()
def taxi_dialogue(taxi_dataset):
    return taxi_dataset.dialogues[0]


@pytest.fixture(scope="session")
def registry():
    return default_registry()


class PinnedRng(random.Random):
    """random.Random whose choice() returns pre-scripted picks in order.

    Picks are matched against the offered candidates: a pick may be the
    exact item or a predicate selecting it. Anything not consumed through
    choice() behaves like a normal seeded stream.
    """

    def __new__(cls, picks):
        # random.Random.__new__ would try to use `picks` as the seed
        return super().__new__(cls, 0)

    def __init__(self, picks):
        super().__init__(0)
        self._picks = list(picks)

    def choice(self, seq):
        assert self._picks, "pinned rng ran out of scripted picks"
        want = self._picks.pop(0)
        items = list(seq)
        if callable(want):
            matching = [item for item in items if want(item)]
            assert matching, f"no candidate matches the pinned predicate among {items!r}"
            return matching[0]
        assert want in items, f"pinned pick {want!r} not offered among {items!r}"
        return want

    @property
    def exhausted(self):
        return not self._picks


def synthetic_ontology() -> Ontology:
    mapping = {}
    for domain in ("alpha", "beta"):
        mapping[f"{domain}-pair"] = ["red", "blue"]
        mapping[f"{domain}-trio"] = ["one", "two", "three"]
        mapping[f"{domain}-many"] = [f"choice {i}" for i in range(6)]
    mapping["alpha-lonely"] = ["only"]
    return Ontology.from_dict(mapping)


def make_synthetic_corpus(
    n_dialogues: int,
    seed: int,
    phase: str = "test",
    empty_fraction: float = 0.1,
    ontology: Ontology | None = None,
) -> Dataset:
    """Random but reproducible corpus with cumulative gold states.

    Around `empty_fraction` of the dialogues carry no belief state at all,
    to exercise the skip path.
    """
    onto = ontology or synthetic_ontology()
    slot_refs = sorted(onto.entries)
    rng = random.Random(seed)
    dialogues = []
    for i in range(n_dialogues):
        dialogue_id = f"dlg{i:05d}.json"
        turns = []
        if rng.random() < empty_fraction:
            turns.append(Turn(0, "", f"hello from {dialogue_id}", BeliefState()))
        else:
            n_slots = rng.randint(1, min(4, len(slot_refs)))
            chosen = rng.sample(slot_refs, n_slots)
            n_turns = rng.randint(n_slots, n_slots + 2)
            state = BeliefState()
            for t in range(n_turns):
                if t < len(chosen):
                    slot = chosen[t]
                    state = state.with_value(slot, rng.choice(onto.values_for(slot)))
                turns.append(
                    Turn(
                        t,
                        "" if t == 0 else "Certainly.",
                        f"turn {t} of {dialogue_id}",
                        state,
                    )
                )
        dialogues.append(Dialogue(dialogue_id, tuple(turns)))
    return Dataset(phase, tuple(dialogues))


@pytest.fixture(scope="session")
def small_ontology():
    return synthetic_ontology()


@pytest.fixture()
def small_corpus(small_ontology):
    return make_synthetic_corpus(40, seed=11, ontology=small_ontology)
