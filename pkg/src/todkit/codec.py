"""Bidirectional codecs between structured dialogue annotations and flat text.

Belief states render as ``[domain] {slot = value, slot = value}`` segments
joined by ``"; "``; dialogue acts as ``[domain] [act_type] slot ...``; intent
labels as ``[name]``.  Serialization is canonical (lexicographic domain and
slot order), so equal values always produce byte-identical text, and parsing
is best-effort: malformed fragments are skipped and reported as warnings
instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ValidationError

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_INTENT_RE = re.compile(r"[a-z0-9_]+\Z")
_WS_RE = re.compile(r"\s+")

_STATE_SEGMENT_RE = re.compile(r"\[([a-z][a-z0-9_]*)\] \{([^{}]*)\}")
# Values may contain ", " only when it is not followed by what looks like the
# start of the next slot assignment; this lookahead is the single documented
# parsing ambiguity rule.
_SLOT_SPLIT_RE = re.compile(r", (?=[a-z][a-z0-9_]* = )")
_AMBIGUOUS_VALUE_RE = re.compile(r", [a-z][a-z0-9_]* = ")

_ACT_ITEM_RE = re.compile(r"\[([a-z][a-z0-9_]*)\]((?: +[a-z][a-z0-9_]*)*)")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends."""
    return _WS_RE.sub(" ", text).strip()


def _check_name(name: str, what: str) -> None:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ValidationError(
            f"{what} {name!r} must be lowercase, start with a letter, and use only [a-z0-9_]"
        )


def _check_value(value: str, domain: str, slot: str) -> str:
    if not isinstance(value, str):
        raise ValidationError(f"value for {domain}.{slot} must be a string")
    value = normalize_text(value)
    if not value:
        raise ValidationError(f"value for {domain}.{slot} must be non-empty")
    if "{" in value or "}" in value:
        raise ValidationError(f"value for {domain}.{slot} must not contain braces: {value!r}")
    if _AMBIGUOUS_VALUE_RE.search(value):
        raise ValidationError(
            f"value for {domain}.{slot} would be ambiguous to parse: {value!r}"
        )
    return value


@dataclass(frozen=True)
class BeliefState:
    """Accumulated user constraints as a domain -> slot -> value map."""

    entries: dict[str, dict[str, str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        canonical: dict[str, dict[str, str]] = {}
        for domain in sorted(self.entries):
            _check_name(domain, "domain")
            slots = self.entries[domain]
            if not slots:
                raise ValidationError(f"domain {domain!r} has no slots")
            canonical[domain] = {}
            for slot in sorted(slots):
                _check_name(slot, "slot")
                canonical[domain][slot] = _check_value(slots[slot], domain, slot)
        object.__setattr__(self, "entries", canonical)

    @classmethod
    def empty(cls) -> "BeliefState":
        return cls({})

    def is_empty(self) -> bool:
        return not self.entries

    def domains(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def constraints(self, domain: str) -> dict[str, str]:
        return dict(self.entries.get(domain, {}))

    def updated(self, domain: str, slot: str, value: str) -> "BeliefState":
        """Return a new state with one slot set (states are immutable)."""
        entries = {d: dict(s) for d, s in self.entries.items()}
        entries.setdefault(domain, {})[slot] = value
        return BeliefState(entries)

    def as_triples(self) -> frozenset[tuple[str, str, str]]:
        return frozenset(
            (domain, slot, value)
            for domain, slots in self.entries.items()
            for slot, value in slots.items()
        )


@dataclass(frozen=True)
class ActItem:
    """One communicative move: an act type with the slots it mentions."""

    act_type: str
    slots: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        _check_name(self.act_type, "act type")
        for slot in self.slots:
            _check_name(slot, "slot")
        object.__setattr__(self, "slots", tuple(sorted(set(self.slots))))


@dataclass(frozen=True)
class DialogueAct:
    """System move description as a domain -> act items map."""

    entries: dict[str, tuple[ActItem, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        canonical: dict[str, tuple[ActItem, ...]] = {}
        for domain in sorted(self.entries):
            _check_name(domain, "domain")
            items = self.entries[domain]
            if not items:
                raise ValidationError(f"domain {domain!r} has no act items")
            deduped = sorted(set(items), key=lambda item: (item.act_type, item.slots))
            canonical[domain] = tuple(deduped)
        object.__setattr__(self, "entries", canonical)

    @classmethod
    def empty(cls) -> "DialogueAct":
        return cls({})

    def is_empty(self) -> bool:
        return not self.entries

    def domains(self) -> tuple[str, ...]:
        return tuple(self.entries)


@dataclass(frozen=True)
class IntentLabel:
    """Intent name rendered in bracket form, e.g. ``[get_weather]``."""

    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not _INTENT_RE.match(self.name):
            raise ValidationError(f"intent name {self.name!r} must match [a-z0-9_]+")

    def render(self) -> str:
        return f"[{self.name}]"

    @classmethod
    def parse(cls, text: str) -> "IntentLabel | None":
        """Normalize free text into a label, or None if unrecognizable."""
        core = normalize_text(text)
        if core.startswith("[") and core.endswith("]"):
            core = core[1:-1].strip()
        if _INTENT_RE.match(core):
            return cls(core)
        return None


def serialize_state(state: BeliefState) -> str:
    """Render a belief state in canonical text form; empty state -> ""."""
    segments = []
    for domain, slots in state.entries.items():
        body = ", ".join(f"{slot} = {value}" for slot, value in slots.items())
        segments.append(f"[{domain}] {{{body}}}")
    return "; ".join(segments)


def parse_state(text: str) -> tuple[BeliefState, list[str]]:
    """Best-effort inverse of :func:`serialize_state`.

    Never raises: well-formed segments are recovered, anything else is
    skipped and described in the returned warnings list.
    """
    warnings: list[str] = []
    entries: dict[str, dict[str, str]] = {}
    if not isinstance(text, str) or not text.strip():
        return BeliefState.empty(), warnings

    consumed: list[tuple[int, int]] = []
    for match in _STATE_SEGMENT_RE.finditer(text):
        consumed.append(match.span())
        domain, body = match.group(1), match.group(2)
        slots: dict[str, str] = {}
        if not body.strip():
            warnings.append(f"domain [{domain}] has an empty slot block")
        else:
            for piece in _SLOT_SPLIT_RE.split(body):
                name, sep, value = piece.partition(" = ")
                name = name.strip()
                value = normalize_text(value)
                if not sep or not _NAME_RE.match(name) or not value:
                    warnings.append(f"skipped malformed slot {piece!r} in [{domain}]")
                    continue
                if "{" in value or "}" in value:
                    warnings.append(f"skipped braced value {piece!r} in [{domain}]")
                    continue
                if name in slots and slots[name] != value:
                    warnings.append(
                        f"duplicate slot {name!r} in [{domain}]; keeping the last value"
                    )
                slots[name] = value
        if not slots:
            continue
        if domain in entries:
            warnings.append(f"duplicate domain [{domain}]; merging slots")
        entries.setdefault(domain, {}).update(slots)

    _warn_leftovers(text, consumed, warnings)
    return BeliefState(entries), warnings


def serialize_act(act: DialogueAct) -> str:
    """Render a dialogue act in canonical text form; empty act -> ""."""
    segments = []
    for domain, items in act.entries.items():
        parts = [f"[{domain}]"]
        for item in items:
            parts.append(f"[{item.act_type}]")
            parts.extend(item.slots)
        segments.append(" ".join(parts))
    return "; ".join(segments)


def parse_act(text: str) -> tuple[DialogueAct, list[str]]:
    """Best-effort inverse of :func:`serialize_act`; never raises."""
    warnings: list[str] = []
    entries: dict[str, list[ActItem]] = {}
    if not isinstance(text, str) or not text.strip():
        return DialogueAct.empty(), warnings

    for segment in text.split("; "):
        segment = segment.strip()
        if not segment:
            continue
        matches = list(_ACT_ITEM_RE.finditer(segment))
        residue = segment
        for m in reversed(matches):
            residue = residue[: m.start()] + residue[m.end() :]
        if residue.strip():
            warnings.append(f"unparsed act text {residue.strip()!r}")
        if not matches or matches[0].start() != 0:
            warnings.append(f"act segment {segment!r} does not start with a domain marker")
            continue
        domain = matches[0].group(1)
        if matches[0].group(2).strip():
            warnings.append(
                f"tokens {matches[0].group(2).strip()!r} before the first act type in [{domain}]"
            )
        items = []
        for m in matches[1:]:
            items.append(ActItem(m.group(1), tuple(m.group(2).split())))
        if not items:
            warnings.append(f"domain [{domain}] has no act items")
            continue
        if domain in entries:
            warnings.append(f"duplicate domain [{domain}]; merging act items")
        entries.setdefault(domain, []).extend(items)

    return DialogueAct({d: tuple(v) for d, v in entries.items()}), warnings


def _warn_leftovers(text: str, consumed: list[tuple[int, int]], warnings: list[str]) -> None:
    """Report any non-separator text that no segment accounted for."""
    gaps: list[str] = []
    cursor = 0
    for start, end in consumed:
        gaps.append(text[cursor:start])
        cursor = end
    gaps.append(text[cursor:])
    for gap in gaps:
        residue = gap.strip().strip(";").strip()
        if residue:
            warnings.append(f"unparsed text {residue!r}")
