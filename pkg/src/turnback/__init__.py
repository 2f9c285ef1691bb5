"""Turnback: corpus perturbation and evaluation for dialogue state tracking.

Appends mind-changing (turnback) turns to task-oriented dialogues with
correct gold belief-state relabeling, mixes them into datasets at seeded
proportions, and scores prediction files with joint goal accuracy and its
lower bound.
"""

__version__ = "0.1.0"

from .corpus import (
    ABSENT_MARKERS,
    PHASES,
    BeliefState,
    BeliefTriple,
    Dataset,
    Dialogue,
    Ontology,
    Phase,
    Provenance,
    SlotRef,
    Turn,
    accumulated_state,
    load_canonical,
    load_multiwoz,
    load_ontology,
    normalize_value,
    serialize,
    validate_dataset,
)
from .errors import (
    CoverageError,
    CoverageWarning,
    DuplicateError,
    EmptyGroupError,
    ExhaustedValuesError,
    MissingDisplayNameError,
    MissingPlaceholderError,
    NoEligibleSlotError,
    ParseError,
    SchemaError,
    StateError,
    TurnbackError,
    UnknownDialogueError,
    UnknownSlotError,
)
from .evaluation import (
    EvaluationReport,
    Prediction,
    TurnOutcome,
    format_report,
    joint_goal_accuracy,
    load_predictions,
    lower_bound,
    turn_correct,
    write_report,
)
from .mixer import GRID_PROPORTIONS, MixSpec, build_proportion_grid, mix
from .scenarios import (
    InjectionRecord,
    TurnbackScenario,
    applicable,
    inject,
    inject_dialogue,
    inject_dual_slot,
    inject_dual_value,
    inject_return,
    inject_single,
    sample_alternative_value,
    select_target_slot,
    write_injection_log,
)
from .seeding import derive_rng, selection_draw
from .templates import (
    DEFAULT_DISPLAY_NAMES,
    RegistryReport,
    SlotDisplayNames,
    Template,
    TemplateRegistry,
    default_registry,
    load_registry,
    pick_template,
    render,
    validate_registry,
)
