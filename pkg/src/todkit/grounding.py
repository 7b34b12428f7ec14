"""Entity database, belief-state-driven retrieval, and (de)lexicalization.

Retrieval reduces the matching entity count to a four-way bucketed token
(``[db_0]``/``[db_1]``/``[db_2]``/``[db_3]``, the last meaning "3 or more")
that grounds policy and response generation.  Delexicalization swaps entity
values for typed placeholders such as ``[value_name]`` so generation
generalizes across entities; lexicalization fills them back in from the
first retrieved match.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .codec import BeliefState, normalize_text
from .errors import SchemaError, ValidationError
from .jsonl import dump_record, read_records, require_keys, write_records

DONT_CARE = "don't care"
CHOICE_PLACEHOLDER = "[value_choice]"
DB_TOKENS = ("[db_0]", "[db_1]", "[db_2]", "[db_3]")

_PLACEHOLDER_RE = re.compile(r"\[value_[a-z_]+\]")

_DEFAULT_SLOT_PLACEHOLDERS: dict[str, str] = {
    "name": "[value_name]",
    "food": "[value_food]",
    "pricerange": "[value_price]",
    "price": "[value_price]",
    "area": "[value_area]",
    "phone": "[value_phone]",
    "address": "[value_address]",
    "postcode": "[value_postcode]",
    "stars": "[value_stars]",
    "type": "[value_type]",
    "reference": "[value_reference]",
}


@dataclass(frozen=True)
class DelexTokenSet:
    """Closed placeholder vocabulary plus the slot -> placeholder mapping."""

    slot_placeholders: dict[str, str] = field(
        default_factory=lambda: dict(_DEFAULT_SLOT_PLACEHOLDERS)
    )

    def __post_init__(self) -> None:
        for slot, placeholder in self.slot_placeholders.items():
            if not _PLACEHOLDER_RE.fullmatch(placeholder):
                raise ValidationError(
                    f"placeholder {placeholder!r} for slot {slot!r} must match [value_...]"
                )

    @classmethod
    def default(cls) -> "DelexTokenSet":
        return cls()

    def placeholders(self) -> frozenset[str]:
        return frozenset(self.slot_placeholders.values()) | {CHOICE_PLACEHOLDER}

    def placeholder_for(self, slot: str) -> str | None:
        return self.slot_placeholders.get(slot)

    def slots_for(self, placeholder: str) -> tuple[str, ...]:
        return tuple(
            slot for slot, token in self.slot_placeholders.items() if token == placeholder
        )


@dataclass(frozen=True)
class DBState:
    """Bucketed database match count for one domain."""

    domain: str
    match_count: int
    bucket: int = field(init=False)
    token: str = field(init=False)

    def __post_init__(self) -> None:
        if self.match_count < 0:
            raise ValidationError("match_count must be non-negative")
        bucket = min(self.match_count, 3)
        object.__setattr__(self, "bucket", bucket)
        object.__setattr__(self, "token", DB_TOKENS[bucket])


@dataclass(frozen=True)
class DomainTable:
    """All entities of one domain plus its declared informable slots."""

    domain: str
    informable: tuple[str, ...]
    entities: tuple[dict[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "informable", tuple(self.informable))
        names = set()
        normalized = []
        for entity in self.entities:
            if "name" not in entity:
                raise ValidationError(f"domain {self.domain!r}: every entity needs a name")
            clean = {slot: normalize_text(str(value)) for slot, value in entity.items()}
            for slot, value in clean.items():
                if not value:
                    raise ValidationError(
                        f"domain {self.domain!r}: entity {clean['name']!r} has an empty "
                        f"value for {slot!r}"
                    )
            missing = [slot for slot in self.informable if slot not in clean]
            if missing:
                raise ValidationError(
                    f"domain {self.domain!r}: entity {clean['name']!r} lacks informable "
                    f"slots {missing}"
                )
            if clean["name"] in names:
                raise ValidationError(
                    f"domain {self.domain!r}: duplicate entity name {clean['name']!r}"
                )
            names.add(clean["name"])
            normalized.append(clean)
        # Canonical entity order: lexicographic by name.  The first match in
        # this order is the "offered" entity everywhere downstream.
        normalized.sort(key=lambda entity: entity["name"])
        object.__setattr__(self, "entities", tuple(normalized))


@dataclass(frozen=True)
class EntityDB:
    domains: dict[str, DomainTable]

    def __post_init__(self) -> None:
        for domain, table in self.domains.items():
            if domain != table.domain:
                raise ValidationError(
                    f"domain key {domain!r} does not match table domain {table.domain!r}"
                )

    def domain_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.domains))

    def table(self, domain: str) -> DomainTable:
        if domain not in self.domains:
            raise KeyError(f"unknown domain {domain!r}; have {sorted(self.domains)}")
        return self.domains[domain]


def _norm(value: str) -> str:
    return normalize_text(str(value)).casefold()


def query(db: EntityDB, state: BeliefState, domain: str) -> tuple[list[dict[str, str]], DBState]:
    """Return the entities matching the state's constraints for one domain.

    Constraints compare exact strings after normalization; ``don't care``
    matches anything, unconstrained informable slots are unrestricted, and
    constraint slots that are not informable for the domain are ignored.
    """
    table = db.table(domain)
    constraints = {
        slot: _norm(value)
        for slot, value in state.constraints(domain).items()
        if slot in table.informable and _norm(value) != DONT_CARE
    }
    matches = [
        entity
        for entity in table.entities
        if all(_norm(entity[slot]) == value for slot, value in constraints.items())
    ]
    return matches, DBState(domain, len(matches))


def _boundary_pattern(value: str) -> re.Pattern[str]:
    return re.compile(rf"(?<!\w){re.escape(value)}(?!\w)", re.IGNORECASE)


def delexicalize(
    response: str,
    entity: dict[str, str],
    db_state: DBState | None = None,
    ontology: DelexTokenSet | None = None,
) -> str:
    """Replace entity slot values (and the match-count numeral) by placeholders.

    Longest value first, case-insensitive, word-boundary anchored; text that
    mentions none of the values passes through unchanged.
    """
    ontology = ontology or DelexTokenSet.default()
    candidates: list[tuple[str, str]] = []
    for slot, value in entity.items():
        placeholder = ontology.placeholder_for(slot)
        value = normalize_text(str(value))
        if placeholder and value:
            candidates.append((value, placeholder))
    if db_state is not None:
        candidates.append((str(db_state.match_count), CHOICE_PLACEHOLDER))
    candidates.sort(key=lambda pair: (-len(pair[0]), pair[1]))
    for value, placeholder in candidates:
        response = _boundary_pattern(value).sub(placeholder, response)
    return response


def lexicalize(
    delex_response: str,
    matches: list[dict[str, str]],
    db_state: DBState | None = None,
    ontology: DelexTokenSet | None = None,
) -> tuple[str, list[str]]:
    """Fill placeholders from the first matched entity and the match count.

    Returns the filled text plus the placeholders that could not be filled
    (left verbatim); this reports rather than fails.
    """
    ontology = ontology or DelexTokenSet.default()
    entity = matches[0] if matches else {}
    unfilled: list[str] = []

    def fill(match: re.Match[str]) -> str:
        placeholder = match.group(0)
        if placeholder == CHOICE_PLACEHOLDER and db_state is not None:
            return str(db_state.match_count)
        for slot in ontology.slots_for(placeholder):
            if slot in entity:
                return entity[slot]
        unfilled.append(placeholder)
        return placeholder

    return _PLACEHOLDER_RE.sub(fill, delex_response), unfilled


def load_db(path: str | Path) -> EntityDB:
    """Read a database file: one record per domain, unknown fields rejected."""
    tables: dict[str, DomainTable] = {}
    for lineno, record in read_records(path):
        require_keys(
            record,
            ("domain", "informable", "entities"),
            path=str(path),
            line=lineno,
            what="database record",
        )
        domain = record["domain"]
        if not isinstance(domain, str):
            raise SchemaError("domain must be a string", path=str(path), line=lineno)
        if domain in tables:
            raise SchemaError(f"duplicate domain {domain!r}", path=str(path), line=lineno)
        try:
            tables[domain] = DomainTable(
                domain,
                tuple(record["informable"]),
                tuple(dict(entity) for entity in record["entities"]),
            )
        except (ValidationError, TypeError) as exc:
            raise SchemaError(str(exc), path=str(path), line=lineno) from exc
    return EntityDB(tables)


def save_db(db: EntityDB, path: str | Path) -> int:
    records = []
    for domain in db.domain_names():
        table = db.domains[domain]
        records.append(
            {
                "domain": domain,
                "informable": list(table.informable),
                "entities": [dict(entity) for entity in table.entities],
            }
        )
    return write_records(path, records)


def db_digest(db: EntityDB) -> str:
    """Stable content digest used by determinism tests and run snapshots."""
    import hashlib

    payload = "\n".join(
        dump_record(
            {
                "domain": d,
                "informable": list(db.domains[d].informable),
                "entities": [dict(e) for e in db.domains[d].entities],
            }
        )
        for d in db.domain_names()
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
