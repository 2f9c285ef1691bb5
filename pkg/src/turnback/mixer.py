"""Proportional turnback mixing.

Builds phase-N% datasets: a seeded fraction of dialogues receives the
injection while the rest pass through untouched. Selection ranks
dialogues by a per-id uniform draw and takes the lowest-ranked prefix, so
counts are exact and the selected set at a lower proportion nests inside
the set at a higher proportion under the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .corpus import Dataset, Dialogue, Ontology, Phase
from .scenarios import InjectionRecord, TurnbackScenario, inject_dialogue
from .seeding import derive_rng, selection_draw
from .templates import SlotDisplayNames, TemplateRegistry

GRID_PROPORTIONS = (0, 30, 50, 70, 100)


@dataclass(frozen=True)
class MixSpec:
    """Proportion (whole percent), scenario, seed, and template phase.

    phase=None uses the dataset's own phase when mixing.
    """

    proportion: int
    scenario: TurnbackScenario
    seed: int
    phase: Phase | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.proportion <= 100:
            raise ValueError(f"proportion must be in 0..100, got {self.proportion}")


def round_half_up(x: float) -> int:
    """round() with halves away from zero for non-negative x (builtin round
    is banker's and would send 2.5 to 2)."""
    return int(math.floor(x + 0.5))


def select_dialogue_ids(dialogues: Sequence[Dialogue], proportion: int, seed: int) -> set[str]:
    """Ids of the round(proportion/100 * N) dialogues with the lowest draws."""
    count = round_half_up(proportion * len(dialogues) / 100)
    ranked = sorted(dialogues, key=lambda d: (selection_draw(seed, d.id), d.id))
    return {dialogue.id for dialogue in ranked[:count]}


def mix(
    dataset: Dataset,
    spec: MixSpec,
    ontology: Ontology,
    registry: TemplateRegistry,
    display_names: SlotDisplayNames | None = None,
) -> tuple[Dataset, list[InjectionRecord]]:
    """Inject the scenario into an exact seeded fraction of the dialogues.

    Selected-but-inapplicable dialogues stay unmodified and are reported
    through their skip records, so the realized proportion can fall below
    the requested one; output order always matches input order.
    """
    if spec.proportion == 0:
        return dataset, []
    selected = select_dialogue_ids(dataset.dialogues, spec.proportion, spec.seed)
    phase: Phase = spec.phase or dataset.phase
    dialogues: list[Dialogue] = []
    records: list[InjectionRecord] = []
    for dialogue in dataset.dialogues:
        if dialogue.id in selected:
            rng = derive_rng(spec.seed, dialogue.id)
            injected, record = inject_dialogue(
                dialogue, spec.scenario, ontology, registry, phase, rng, display_names
            )
            dialogues.append(injected)
            records.append(record)
        else:
            dialogues.append(dialogue)
    return Dataset(dataset.phase, tuple(dialogues)), records


def build_proportion_grid(
    train: Dataset,
    test: Dataset,
    scenario: TurnbackScenario,
    seed: int,
    ontology: Ontology,
    registry: TemplateRegistry,
    proportions: Sequence[int] = GRID_PROPORTIONS,
    display_names: SlotDisplayNames | None = None,
) -> dict[tuple[int, int], tuple[Dataset, Dataset]]:
    """All (train proportion, test proportion) cells of the ablation grid.

    Each proportion is mixed once per split and the datasets are shared
    across cells, mirroring how the grid is consumed.
    """
    train_mixes = {
        p: mix(train, MixSpec(p, scenario, seed), ontology, registry, display_names)[0]
        for p in proportions
    }
    test_mixes = {
        p: mix(test, MixSpec(p, scenario, seed), ontology, registry, display_names)[0]
        for p in proportions
    }
    return {
        (train_p, test_p): (train_mixes[train_p], test_mixes[test_p])
        for train_p in proportions
        for test_p in proportions
    }


__all__ = [
    "GRID_PROPORTIONS",
    "MixSpec",
    "build_proportion_grid",
    "derive_rng",
    "mix",
    "round_half_up",
    "select_dialogue_ids",
    "selection_draw",
]
