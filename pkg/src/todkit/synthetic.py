"""Seeded synthetic dialogue generator with a paired entity database.

Every pipeline stage is testable without licensed data: the generator draws
a goal per session from a small configurable ontology, scripts the turns
with accumulating belief states, dialogue acts, and delexicalized responses,
and lexicalizes system turns against the database it generated, so gold
annotations, database contents, and goals are mutually consistent by
construction.  Identical configuration always yields identical output.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .codec import ActItem, BeliefState, DialogueAct, IntentLabel
from .corpus import AnnotationMask, Corpus, register_adapter
from .dialogue import DialogueSession, Speaker, TaskTag, TurnAnnotations, Utterance
from .errors import SchemaError, ValidationError
from .evaluation import DomainGoal, GoalSpec
from .grounding import DelexTokenSet, DomainTable, EntityDB, lexicalize, query

_NAME_ADJECTIVES = (
    "golden", "silver", "royal", "old", "happy", "quiet", "little", "grand",
    "blue", "green", "red", "white", "crooked", "lucky", "merry", "plain",
)
_NAME_NOUNS = (
    "palace", "garden", "house", "corner", "table", "lantern", "anchor",
    "bridge", "mill", "gate", "crown", "harbour", "orchard", "star",
)

_DOMAIN_ONTOLOGY: dict[str, dict[str, tuple[str, ...]]] = {
    "restaurant": {
        "food": ("indian", "chinese", "italian", "british", "french", "thai"),
        "pricerange": ("cheap", "moderate", "expensive"),
        "area": ("north", "south", "centre", "east", "west"),
    },
    "hotel": {
        "stars": ("2", "3", "4", "5"),
        "type": ("hotel", "guest house"),
        "area": ("north", "south", "centre", "east", "west"),
    },
    "attraction": {
        "type": ("museum", "park", "cinema", "theatre"),
        "area": ("north", "south", "centre", "east", "west"),
    },
}

_REQUESTABLE = ("phone", "address")


@dataclass(frozen=True)
class SyntheticConfig:
    seed: int = 0
    sessions: int = 50
    corpus_id: str = "synthetic"
    mask: AnnotationMask = field(default_factory=AnnotationMask.all_tasks)
    domains: tuple[str, ...] = ("restaurant", "hotel")
    entities_per_domain: int = 12

    def __post_init__(self) -> None:
        if self.sessions < 1:
            raise ValidationError("sessions must be >= 1")
        unknown = [d for d in self.domains if d not in _DOMAIN_ONTOLOGY]
        if unknown:
            raise ValidationError(
                f"unknown synthetic domains {unknown}; available: {sorted(_DOMAIN_ONTOLOGY)}"
            )
        if not 1 <= self.entities_per_domain <= len(_NAME_ADJECTIVES) * len(_NAME_NOUNS):
            raise ValidationError("entities_per_domain out of range")


def generate_db(config: SyntheticConfig) -> EntityDB:
    """Entity database paired with :func:`generate_corpus` for the same config."""
    rng = random.Random(f"db:{config.seed}")
    tables: dict[str, DomainTable] = {}
    for domain in config.domains:
        slots = _DOMAIN_ONTOLOGY[domain]
        name_pool = [f"{a} {n}" for a in _NAME_ADJECTIVES for n in _NAME_NOUNS]
        names = rng.sample(name_pool, config.entities_per_domain)
        entities = []
        for name in names:
            entity = {"name": name}
            for slot, values in slots.items():
                entity[slot] = rng.choice(values)
            entity["phone"] = "0" + "".join(str(rng.randrange(10)) for _ in range(10))
            entity["address"] = f"{rng.randrange(1, 99)} {rng.choice(_NAME_NOUNS)} road"
            entities.append(entity)
        tables[domain] = DomainTable(domain, tuple(slots), tuple(entities))
    return EntityDB(tables)


def _mask_annotations(ann: TurnAnnotations, mask: AnnotationMask) -> TurnAnnotations:
    return TurnAnnotations(
        belief_state=ann.belief_state if TaskTag.DST in mask else None,
        dialogue_act=ann.dialogue_act if TaskTag.POL in mask else None,
        intent=ann.intent if TaskTag.NLU in mask else None,
        delex_response=ann.delex_response if TaskTag.NLG in mask else None,
    )


def _constraint_phrase(domain: str, slot: str, value: str, first: bool) -> str:
    if first:
        return f"i am looking for a {domain} with {slot} {value} ."
    return f"i would prefer {slot} {value} ."


def generate_corpus(
    config: SyntheticConfig,
) -> tuple[Corpus, EntityDB, dict[str, GoalSpec]]:
    """Generate (corpus, paired database, per-session goals) deterministically."""
    db = generate_db(config)
    ontology = DelexTokenSet.default()
    rng = random.Random(f"corpus:{config.seed}")
    sessions: list[DialogueSession] = []
    goals: dict[str, GoalSpec] = {}
    for index in range(config.sessions):
        session_id = f"syn{index:05d}"
        domain = rng.choice(config.domains)
        table = db.domains[domain]
        target = rng.choice(table.entities)
        slot_names = list(table.informable)
        constraint_slots = rng.sample(slot_names, rng.randint(1, min(3, len(slot_names))))
        constraints = {slot: target[slot] for slot in constraint_slots}
        requested = tuple(rng.sample(_REQUESTABLE, rng.randint(0, len(_REQUESTABLE))))
        intent = IntentLabel(f"find_{domain}")

        utterances: list[Utterance] = []
        annotations: list[TurnAnnotations] = []
        state = BeliefState.empty()
        for turn_number, slot in enumerate(constraint_slots):
            value = constraints[slot]
            state = state.updated(domain, slot, value)
            user_text = _constraint_phrase(domain, slot, value, turn_number == 0)
            utterances.append(Utterance(Speaker.USER, user_text, len(utterances)))
            annotations.append(TurnAnnotations(belief_state=state, intent=intent))

            last_constraint = turn_number == len(constraint_slots) - 1
            if not last_constraint:
                next_slot = constraint_slots[turn_number + 1]
                act = DialogueAct({domain: (ActItem("request", (next_slot,)),)})
                delex = f"what {next_slot} do you prefer ?"
                matches, db_state = None, None
            else:
                matches, db_state = query(db, state, domain)
                act_items = [ActItem("inform", ("choice", "name"))]
                if requested:
                    act_items.append(ActItem("inform", tuple(sorted(requested))))
                act = DialogueAct({domain: tuple(act_items)})
                pieces = [
                    "there are [value_choice] matches .",
                    f"[value_name] is a nice {domain} .",
                ]
                for request in sorted(requested):
                    placeholder = ontology.placeholder_for(request)
                    pieces.append(f"their {request} is {placeholder} .")
                delex = " ".join(pieces)
            if matches is not None:
                system_text, unfilled = lexicalize(delex, matches, db_state, ontology)
                if unfilled:
                    raise AssertionError(f"generator left placeholders unfilled: {unfilled}")
            else:
                system_text = delex
            utterances.append(Utterance(Speaker.SYSTEM, system_text, len(utterances)))
            annotations.append(TurnAnnotations(dialogue_act=act, delex_response=delex))

        if rng.random() < 0.5:
            utterances.append(Utterance(Speaker.USER, "thank you , goodbye .", len(utterances)))
            annotations.append(
                TurnAnnotations(belief_state=state, intent=IntentLabel("goodbye"))
            )
            farewell = "you are welcome . have a great day !"
            utterances.append(Utterance(Speaker.SYSTEM, farewell, len(utterances)))
            annotations.append(
                TurnAnnotations(
                    dialogue_act=DialogueAct({"general": (ActItem("bye"),)}),
                    delex_response=farewell,
                )
            )

        annotations = [_mask_annotations(ann, config.mask) for ann in annotations]
        sessions.append(DialogueSession(session_id, tuple(utterances), tuple(annotations)))
        goals[session_id] = GoalSpec(
            {domain: DomainGoal(constraints, frozenset(requested))}
        )
    corpus = Corpus(config.corpus_id, config.mask, tuple(sessions))
    return corpus, db, goals


_CONFIG_KEYS = ("seed", "sessions", "corpus_id", "mask", "domains", "entities_per_domain")


def config_from_file(path: str | Path) -> SyntheticConfig:
    """Read a generator config (JSON object); unknown keys are rejected."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", path=str(path)) from exc
    if not isinstance(raw, dict):
        raise SchemaError("generator config must be a JSON object", path=str(path))
    unknown = set(raw) - set(_CONFIG_KEYS)
    if unknown:
        raise SchemaError(f"unknown generator config keys: {sorted(unknown)}", path=str(path))
    kwargs = dict(raw)
    if "mask" in kwargs:
        kwargs["mask"] = AnnotationMask.of(*kwargs["mask"])
    if "domains" in kwargs:
        kwargs["domains"] = tuple(kwargs["domains"])
    try:
        return SyntheticConfig(**kwargs)
    except (TypeError, ValidationError) as exc:
        raise SchemaError(str(exc), path=str(path)) from exc


def _synthetic_adapter(path: Path) -> Corpus:
    corpus, _, _ = generate_corpus(config_from_file(path))
    return corpus


register_adapter(
    "synthetic",
    _synthetic_adapter,
    "seeded grammar generator; the source file is a JSON config "
    "{seed, sessions, corpus_id?, mask?, domains?, entities_per_domain?}",
)
