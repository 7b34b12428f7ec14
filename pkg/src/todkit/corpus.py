"""Canonical on-disk dialogue format, adapters, and sample conversion.

The canonical corpus file is UTF-8 JSON lines, one session per record:

    {"session_id": ..., "corpus_id": ..., "mask": ["NLU", ...],
     "turns": [{"speaker": "user"|"system", "text": ...,
                "belief_state"?, "intent"?,          # user turns
                "dialogue_act"?, "delex_response"?}, # system turns
               ...]}

Field names are part of the contract and unknown fields are rejected.
Annotation fields hold the codec text forms and must be non-empty when
present (an empty accumulated state is encoded by omitting the field), which
keeps training targets non-empty by construction.  Heterogeneous sources are
partially annotated: each corpus carries an annotation mask naming the tasks
its sessions may be annotated for.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .codec import IntentLabel, parse_act, parse_state, serialize_act, serialize_state
from .dialogue import (
    DialogueSession,
    Speaker,
    TaskTag,
    TrainingSample,
    TurnAnnotations,
    Utterance,
    render_context,
)
from .errors import AdapterError, CapabilityError, SchemaError, ValidationError
from .jsonl import read_records, require_keys, write_records

TASK_ORDER = (TaskTag.NLU, TaskTag.DST, TaskTag.POL, TaskTag.NLG)

_RECORD_FIELDS = ("session_id", "corpus_id", "mask", "turns")
_TURN_REQUIRED = ("speaker", "text")
_TURN_OPTIONAL = ("belief_state", "dialogue_act", "intent", "delex_response")

_TASK_FOR_FIELD = {
    "belief_state": TaskTag.DST,
    "dialogue_act": TaskTag.POL,
    "intent": TaskTag.NLU,
    "delex_response": TaskTag.NLG,
}


@dataclass(frozen=True)
class AnnotationMask:
    """Which tasks a corpus may carry annotations for."""

    flags: frozenset[TaskTag]

    def __post_init__(self) -> None:
        object.__setattr__(self, "flags", frozenset(TaskTag(f) for f in self.flags))
        if not self.flags:
            raise ValidationError("annotation mask must be non-empty")

    @classmethod
    def of(cls, *tasks: TaskTag | str) -> "AnnotationMask":
        return cls(frozenset(TaskTag(t) for t in tasks))

    @classmethod
    def all_tasks(cls) -> "AnnotationMask":
        return cls(frozenset(TASK_ORDER))

    def names(self) -> list[str]:
        return [task.value for task in TASK_ORDER if task in self.flags]

    def __contains__(self, task: TaskTag) -> bool:
        return task in self.flags


@dataclass(frozen=True)
class Corpus:
    corpus_id: str
    mask: AnnotationMask
    sessions: tuple[DialogueSession, ...]
    domains: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sessions", tuple(self.sessions))
        domains: set[str] = set(self.domains)
        for session in self.sessions:
            for position, ann in enumerate(session.annotations):
                annotated = {
                    task
                    for task, value in (
                        (TaskTag.DST, ann.belief_state),
                        (TaskTag.POL, ann.dialogue_act),
                        (TaskTag.NLU, ann.intent),
                        (TaskTag.NLG, ann.delex_response),
                    )
                    if value is not None
                }
                outside = annotated - self.mask.flags
                if outside:
                    raise ValidationError(
                        f"session {session.session_id!r} turn {position} carries "
                        f"{sorted(t.value for t in outside)} annotations outside the "
                        f"corpus mask {self.mask.names()}"
                    )
                if ann.belief_state is not None:
                    domains.update(ann.belief_state.domains())
                if ann.dialogue_act is not None:
                    domains.update(ann.dialogue_act.domains())
        object.__setattr__(self, "domains", frozenset(domains))

    def __len__(self) -> int:
        return len(self.sessions)


@dataclass(frozen=True)
class SampleSet:
    samples: tuple[TrainingSample, ...]
    counts: dict[TaskTag, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        counts = {task: 0 for task in TASK_ORDER}
        for sample in self.samples:
            counts[sample.task] += 1
        counts = {task: n for task, n in counts.items() if n}
        if self.counts and dict(self.counts) != counts:
            raise ValidationError("per-task counts do not sum to the sample list")
        object.__setattr__(self, "counts", counts)

    def __len__(self) -> int:
        return len(self.samples)

    @classmethod
    def concat(cls, sample_sets: list["SampleSet"]) -> "SampleSet":
        merged: list[TrainingSample] = []
        for sample_set in sample_sets:
            merged.extend(sample_set.samples)
        return cls(tuple(merged))


def _session_from_record(record: dict[str, Any], path: str, lineno: int) -> DialogueSession:
    require_keys(record, _RECORD_FIELDS, path=path, line=lineno, what="session record")
    session_id = record["session_id"]
    if not isinstance(session_id, str) or not session_id:
        raise SchemaError("session_id must be a non-empty string", path=path, line=lineno)
    turns = record["turns"]
    if not isinstance(turns, list) or not turns:
        raise SchemaError(
            f"session {session_id!r}: turns must be a non-empty list", path=path, line=lineno
        )
    utterances: list[Utterance] = []
    annotations: list[TurnAnnotations] = []
    for position, turn in enumerate(turns):
        if not isinstance(turn, dict):
            raise SchemaError(
                f"session {session_id!r}: turn {position} is not an object",
                path=path,
                line=lineno,
            )
        require_keys(
            turn,
            _TURN_REQUIRED,
            _TURN_OPTIONAL,
            path=path,
            line=lineno,
            what=f"session {session_id!r} turn {position}",
        )
        for name in _TURN_OPTIONAL:
            if name in turn and (not isinstance(turn[name], str) or not turn[name]):
                raise SchemaError(
                    f"session {session_id!r} turn {position}: {name} must be a non-empty "
                    "string when present",
                    path=path,
                    line=lineno,
                )
        belief = intent = act = None
        if "belief_state" in turn:
            belief, warnings = parse_state(turn["belief_state"])
            if warnings:
                raise SchemaError(
                    f"session {session_id!r} turn {position}: malformed belief_state: "
                    f"{warnings[0]}",
                    path=path,
                    line=lineno,
                )
        if "dialogue_act" in turn:
            act, warnings = parse_act(turn["dialogue_act"])
            if warnings:
                raise SchemaError(
                    f"session {session_id!r} turn {position}: malformed dialogue_act: "
                    f"{warnings[0]}",
                    path=path,
                    line=lineno,
                )
        if "intent" in turn:
            intent = IntentLabel.parse(turn["intent"])
            if intent is None:
                raise SchemaError(
                    f"session {session_id!r} turn {position}: malformed intent "
                    f"{turn['intent']!r}",
                    path=path,
                    line=lineno,
                )
        try:
            utterances.append(Utterance(Speaker(turn["speaker"]), turn["text"], position))
        except (ValueError, ValidationError) as exc:
            raise SchemaError(
                f"session {session_id!r} turn {position}: {exc}", path=path, line=lineno
            ) from exc
        annotations.append(
            TurnAnnotations(
                belief_state=belief,
                dialogue_act=act,
                intent=intent,
                delex_response=turn.get("delex_response"),
            )
        )
    try:
        return DialogueSession(session_id, tuple(utterances), tuple(annotations))
    except ValidationError as exc:
        raise SchemaError(str(exc), path=path, line=lineno) from exc


def read_canonical(path: str | Path) -> Corpus:
    """Load and fully validate a canonical corpus file."""
    path = Path(path)
    corpus_id: str | None = None
    mask: AnnotationMask | None = None
    sessions: list[DialogueSession] = []
    seen_ids: set[str] = set()
    for lineno, record in read_records(path):
        session = _session_from_record(record, str(path), lineno)
        record_mask = record["mask"]
        if not isinstance(record_mask, list):
            raise SchemaError("mask must be a list of task names", path=str(path), line=lineno)
        try:
            record_mask = AnnotationMask.of(*record_mask)
        except (ValueError, ValidationError) as exc:
            raise SchemaError(f"invalid mask: {exc}", path=str(path), line=lineno) from exc
        record_corpus_id = record["corpus_id"]
        if corpus_id is None:
            corpus_id, mask = record_corpus_id, record_mask
        elif record_corpus_id != corpus_id or record_mask != mask:
            raise SchemaError(
                "corpus_id/mask differ between records of one file",
                path=str(path),
                line=lineno,
            )
        if session.session_id in seen_ids:
            raise SchemaError(
                f"duplicate session_id {session.session_id!r}", path=str(path), line=lineno
            )
        seen_ids.add(session.session_id)
        sessions.append(session)
    if corpus_id is None or mask is None:
        raise SchemaError("corpus file contains no records", path=str(path))
    try:
        return Corpus(corpus_id, mask, tuple(sessions))
    except ValidationError as exc:
        raise SchemaError(str(exc), path=str(path)) from exc


def corpus_records(corpus: Corpus) -> list[dict[str, Any]]:
    """Canonical record form of a corpus (the exact on-disk layout)."""
    records = []
    for session in corpus.sessions:
        turns = []
        for utterance, ann in zip(session.utterances, session.annotations):
            turn: dict[str, Any] = {"speaker": utterance.speaker.value, "text": utterance.text}
            if ann.intent is not None:
                turn["intent"] = ann.intent.render()
            if ann.belief_state is not None:
                turn["belief_state"] = serialize_state(ann.belief_state)
            if ann.dialogue_act is not None:
                turn["dialogue_act"] = serialize_act(ann.dialogue_act)
            if ann.delex_response is not None:
                turn["delex_response"] = ann.delex_response
            turns.append(turn)
        records.append(
            {
                "session_id": session.session_id,
                "corpus_id": corpus.corpus_id,
                "mask": corpus.mask.names(),
                "turns": turns,
            }
        )
    return records


def write_canonical(corpus: Corpus, path: str | Path) -> int:
    """Write the canonical form; loading it back is byte-identical."""
    return write_records(path, corpus_records(corpus))


Adapter = Callable[[Path], Corpus]

_ADAPTERS: dict[str, tuple[Adapter, str]] = {}


def register_adapter(adapter_id: str, fn: Adapter, description: str) -> None:
    _ADAPTERS[adapter_id] = (fn, description)


def registered_adapters() -> dict[str, str]:
    return {adapter_id: desc for adapter_id, (_, desc) in sorted(_ADAPTERS.items())}


def load_corpus(path: str | Path, adapter_id: str = "canonical") -> Corpus:
    """Ingest a source file through a registered adapter."""
    if adapter_id not in _ADAPTERS:
        raise AdapterError(
            f"unknown adapter {adapter_id!r}; registered: {sorted(_ADAPTERS)}"
        )
    fn, _ = _ADAPTERS[adapter_id]
    return fn(Path(path))


def _stub_adapter(source_name: str, mask: tuple[str, ...]) -> Adapter:
    def load(_: Path) -> Corpus:
        raise AdapterError(
            f"adapter {source_name!r} is a stub (source annotations: {list(mask)}); "
            "convert the source release to the canonical format and ingest it with "
            "the 'canonical' adapter"
        )

    return load


# External multi-turn sources this toolkit knows by name.  Only the mask each
# source would contribute is recorded; the data itself is never shipped.
STUB_SOURCES: dict[str, tuple[str, ...]] = {
    "metalwoz": ("NLG",),
    "snips": ("NLU",),
    "clinc": ("NLU",),
    "atis": ("NLU",),
    "kvret": ("DST", "NLG"),
    "woz": ("DST", "NLG"),
    "camrest676": ("DST", "NLG"),
    "msr-e2e": ("DST", "POL", "NLG"),
    "frames": ("DST", "POL", "NLG"),
    "taskmaster": ("DST", "POL", "NLG"),
    "schema-guided": ("DST", "POL", "NLG"),
}

register_adapter("canonical", read_canonical, "canonical JSONL corpus format (identity load)")
for _name, _mask in STUB_SOURCES.items():
    register_adapter(
        _name, _stub_adapter(_name, _mask), f"stub for the {_name} source (mask {list(_mask)})"
    )


def to_training_samples(
    corpus: Corpus, tasks: frozenset[TaskTag] | set[TaskTag]
) -> SampleSet:
    """Expand a corpus into task-tagged text-to-text samples.

    One sample per (user turn, requested task with a present annotation);
    a target is never fabricated for a missing annotation.  The context is
    the rendered dialogue up to and including that user turn.
    """
    tasks = frozenset(TaskTag(t) for t in tasks)
    outside = tasks - corpus.mask.flags
    if outside:
        raise CapabilityError(
            f"tasks {sorted(t.value for t in outside)} are outside the corpus mask "
            f"{corpus.mask.names()}"
        )
    samples: list[TrainingSample] = []
    for session in corpus.sessions:
        for position in session.user_turn_positions():
            context = render_context(session, position)
            user_ann = session.annotations[position]
            system_ann = (
                session.annotations[position + 1]
                if position + 1 < len(session.annotations)
                else TurnAnnotations()
            )
            for task in TASK_ORDER:
                if task not in tasks:
                    continue
                target: str | None = None
                if task is TaskTag.NLU and user_ann.intent is not None:
                    target = user_ann.intent.render()
                elif task is TaskTag.DST and user_ann.belief_state is not None:
                    target = serialize_state(user_ann.belief_state)
                elif task is TaskTag.POL and system_ann.dialogue_act is not None:
                    target = serialize_act(system_ann.dialogue_act)
                elif task is TaskTag.NLG and system_ann.delex_response is not None:
                    target = system_ann.delex_response
                if target is not None:
                    samples.append(
                        TrainingSample.build(task, context, target, corpus.corpus_id)
                    )
    return SampleSet(tuple(samples))


def subsample(corpus: Corpus, fraction: float, seed: int) -> Corpus:
    """Select ceil(fraction * N) whole sessions uniformly without replacement.

    Deterministic for a fixed (fraction, seed); the annotation mask is
    preserved and the selected sessions keep their original order.
    """
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    total = len(corpus.sessions)
    k = math.ceil(fraction * total)
    if k < 1 or total == 0:
        raise ValidationError("subsample selection is empty")
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(total), k))
    sessions = tuple(corpus.sessions[i] for i in picked)
    return Corpus(corpus.corpus_id, corpus.mask, sessions)
