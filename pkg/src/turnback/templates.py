"""Utterance templates for turnback turns.

User-side patterns mention the changed domain, slot, and value through the
placeholders {domain}, {slot}, and {value}; system-side patterns are fixed
acknowledgements. Templates are grouped by phase (train/validation/test)
and user patterns must not repeat across phases, so that turnback wording
never leaks between splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal, Mapping

from .corpus import PHASES, Phase, SlotRef
from .errors import (
    EmptyGroupError,
    MissingDisplayNameError,
    MissingPlaceholderError,
    ParseError,
    SchemaError,
)

Side = Literal["user", "system"]
SIDES: tuple[Side, ...] = ("user", "system")

PLACEHOLDERS = ("{domain}", "{slot}", "{value}")

# Compact slot keys whose human-readable form differs from the key itself.
# Slots not listed here render as their compact key.
SLOT_DISPLAY_NAMES: dict[str, str] = {
    "leaveat": "leave at",
    "arriveby": "arrive by",
    "pricerange": "price range",
}


@dataclass(frozen=True)
class SlotDisplayNames:
    """Slot key -> display name table used when rendering user utterances.

    With strict=False (the default) an unlisted slot falls back to its
    compact key; with strict=True it raises MissingDisplayNameError.
    """

    entries: Mapping[str, str]
    strict: bool = False

    def display(self, slot_ref: SlotRef) -> str:
        name = self.entries.get(slot_ref.slot)
        if name is not None:
            return name
        if self.strict:
            raise MissingDisplayNameError(f"no display name for slot {slot_ref.key()!r}")
        return slot_ref.slot


DEFAULT_DISPLAY_NAMES = SlotDisplayNames(SLOT_DISPLAY_NAMES)


@dataclass(frozen=True)
class Template:
    id: str
    phase: Phase
    side: Side
    pattern: str

    def placeholder_problems(self) -> list[str]:
        """Messages for every placeholder violation; empty when well-formed."""
        problems = []
        if not self.pattern:
            problems.append("empty pattern")
        for placeholder in PLACEHOLDERS:
            count = self.pattern.count(placeholder)
            if self.side == "user" and count != 1:
                problems.append(f"{placeholder} must appear exactly once, found {count}")
            if self.side == "system" and count:
                problems.append(f"system pattern must not contain {placeholder}")
        return problems


@dataclass(frozen=True)
class TemplateRegistry:
    templates: tuple[Template, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "templates", tuple(self.templates))

    def group(self, phase: Phase, side: Side) -> tuple[Template, ...]:
        return tuple(t for t in self.templates if t.phase == phase and t.side == side)

    def system_pattern(self, phase: Phase, appended_position: int) -> str:
        """System utterance for the appended turn at `appended_position`.

        The (phase, system) group is positional: the first template serves
        the first appended turn and the last template serves every later
        one, so a single entry covers all positions.
        """
        group = self.group(phase, "system")
        if not group:
            raise EmptyGroupError(f"no system templates for phase {phase!r}")
        return group[min(appended_position, len(group) - 1)].pattern


def render(
    template: Template,
    slot_ref: SlotRef,
    value: str,
    display_names: SlotDisplayNames = DEFAULT_DISPLAY_NAMES,
) -> str:
    """Substitute the placeholders; {slot} takes the display name.

    System-side templates pass through unchanged. The value is substituted
    last so that values containing placeholder-like text stay literal.
    """
    problems = template.placeholder_problems()
    if problems:
        raise MissingPlaceholderError(f"template {template.id!r}: {'; '.join(problems)}")
    if template.side == "system":
        return template.pattern
    text = template.pattern.replace("{domain}", slot_ref.domain)
    text = text.replace("{slot}", display_names.display(slot_ref))
    return text.replace("{value}", value)


def pick_template(registry: TemplateRegistry, phase: Phase, side: Side, rng) -> Template:
    """Uniform choice within the (phase, side) group, driven only by `rng`."""
    group = registry.group(phase, side)
    if not group:
        raise EmptyGroupError(f"no {side} templates for phase {phase!r}")
    return rng.choice(group)


@dataclass(frozen=True)
class RegistryReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_registry(registry: TemplateRegistry) -> RegistryReport:
    """Report empty groups, placeholder problems, and duplicate user patterns."""
    violations: list[str] = []
    for phase in PHASES:
        for side in SIDES:
            if not registry.group(phase, side):
                violations.append(f"empty group: ({phase}, {side})")
    for template in registry.templates:
        for problem in template.placeholder_problems():
            violations.append(f"template {template.id!r}: {problem}")
    first_seen: dict[str, Template] = {}
    for template in registry.templates:
        if template.side != "user":
            continue
        earlier = first_seen.get(template.pattern)
        if earlier is None:
            first_seen[template.pattern] = template
        elif earlier.phase != template.phase:
            violations.append(
                f"user pattern shared across phases {earlier.phase}/{template.phase}: "
                f"{earlier.id!r} and {template.id!r}"
            )
        else:
            violations.append(
                f"duplicate user pattern within phase {template.phase}: "
                f"{earlier.id!r} and {template.id!r}"
            )
    return RegistryReport(tuple(violations))


def registry_from_list(entries: object, source: str = "registry") -> TemplateRegistry:
    if not isinstance(entries, list):
        raise SchemaError(f"{source}: template registry must be a JSON list")
    templates: list[Template] = []
    seen_ids: set[str] = set()
    for entry in entries:
        if not isinstance(entry, dict):
            raise SchemaError(f"{source}: registry entries must be objects")
        missing = {"id", "phase", "side", "pattern"} - entry.keys()
        if missing:
            raise SchemaError(f"{source}: entry missing field(s): {', '.join(sorted(missing))}")
        template_id, phase, side, pattern = (
            entry["id"],
            entry["phase"],
            entry["side"],
            entry["pattern"],
        )
        if phase not in PHASES:
            raise SchemaError(f"{source}: bad phase {phase!r} in template {template_id!r}")
        if side not in SIDES:
            raise SchemaError(f"{source}: bad side {side!r} in template {template_id!r}")
        if not isinstance(pattern, str):
            raise SchemaError(f"{source}: pattern of {template_id!r} must be a string")
        if template_id in seen_ids:
            raise SchemaError(f"{source}: duplicate template id {template_id!r}")
        seen_ids.add(template_id)
        templates.append(Template(template_id, phase, side, pattern))
    return TemplateRegistry(tuple(templates))


def load_registry(path: str | Path) -> TemplateRegistry:
    """Load a template registry from a JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        entries = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return registry_from_list(entries, source=str(path))


_default_registry: TemplateRegistry | None = None


def default_registry() -> TemplateRegistry:
    """The registry shipped with the package (loaded once, then cached)."""
    global _default_registry
    if _default_registry is None:
        text = resources.files("turnback").joinpath("data/default_templates.json").read_text()
        _default_registry = registry_from_list(json.loads(text), source="default registry")
    return _default_registry
