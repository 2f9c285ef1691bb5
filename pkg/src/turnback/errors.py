"""Exception and warning types shared across the toolkit."""


class TurnbackError(Exception):
    """Base class for every toolkit error."""


class ParseError(TurnbackError):
    """Input file is not well-formed (bad JSON, malformed line)."""


class SchemaError(TurnbackError):
    """Input parses but violates the expected structure."""


class StateError(TurnbackError):
    """A belief state carries more than one value for the same slot."""


class UnknownSlotError(TurnbackError):
    """A slot key cannot be mapped against the loaded ontology."""


class MissingPlaceholderError(TurnbackError):
    """Template pattern lacks (or repeats) a required placeholder."""


class MissingDisplayNameError(TurnbackError):
    """No display name for a slot and the table is strict."""


class EmptyGroupError(TurnbackError):
    """Template registry has no entry for the requested (phase, side)."""


class NoEligibleSlotError(TurnbackError):
    """No slot in the state can be targeted by the scenario."""


class ExhaustedValuesError(TurnbackError):
    """Every ontology value for the slot is excluded."""


class DuplicateError(TurnbackError):
    """Prediction file repeats a (dialogue_id, turn_index) pair."""


class UnknownDialogueError(TurnbackError):
    """Prediction refers to a dialogue or turn absent from the gold set."""


class CoverageError(TurnbackError):
    """Turn outcomes do not cover exactly the expected turn set."""


class CoverageWarning(UserWarning):
    """Some gold turns had no prediction and were counted incorrect."""
