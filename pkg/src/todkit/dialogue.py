"""Core dialogue types and deterministic rendering of model inputs.

Every generation task shares one input recipe: a fixed task prompt, an
optional database-state token, and the dialogue context rendered as
``[user] u1 [system] s1 ... [user] u_k``.  All types here are immutable and
all functions are pure, so they are safe for unrestricted concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .codec import BeliefState, DialogueAct, IntentLabel, normalize_text
from .errors import ValidationError


class Speaker(str, Enum):
    USER = "user"
    SYSTEM = "system"


class TaskTag(str, Enum):
    NLU = "NLU"
    DST = "DST"
    POL = "POL"
    NLG = "NLG"


# Fixed, injective prompt mapping; pinned byte-for-byte by tests.
PROMPT_TEXTS: dict[TaskTag, str] = {
    TaskTag.NLU: "translate dialogue to user intent:",
    TaskTag.DST: "translate dialogue to belief state:",
    TaskTag.POL: "translate dialogue to dialogue act:",
    TaskTag.NLG: "translate dialogue to system response:",
}


@dataclass(frozen=True)
class TaskPrompt:
    """Task-selecting prefix plugged in front of the dialogue context."""

    task: TaskTag
    text: str = ""

    def __post_init__(self) -> None:
        expected = PROMPT_TEXTS[self.task]
        if self.text == "":
            object.__setattr__(self, "text", expected)
        elif self.text != expected:
            raise ValidationError(
                f"prompt text for {self.task.value} must be {expected!r}, got {self.text!r}"
            )

    @classmethod
    def for_task(cls, task: TaskTag) -> "TaskPrompt":
        return cls(task)


@dataclass(frozen=True)
class MarkerStyle:
    """Speaker markers used when flattening a dialogue into one string."""

    user: str = "[user]"
    system: str = "[system]"

    def marker(self, speaker: Speaker) -> str:
        return self.user if speaker is Speaker.USER else self.system


DEFAULT_MARKERS = MarkerStyle()


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str
    turn_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "speaker", Speaker(self.speaker))
        normalized = normalize_text(self.text)
        if not normalized:
            raise ValidationError(f"utterance {self.turn_index} is empty after normalization")
        object.__setattr__(self, "text", normalized)
        if self.turn_index < 0:
            raise ValidationError("turn_index must be non-negative")


@dataclass(frozen=True)
class TurnAnnotations:
    """Optional task annotations carried by one turn.

    Belief states and intents belong to user turns; dialogue acts and
    delexicalized responses to system turns.
    """

    belief_state: BeliefState | None = None
    dialogue_act: DialogueAct | None = None
    intent: IntentLabel | None = None
    delex_response: str | None = None

    def is_empty(self) -> bool:
        return (
            self.belief_state is None
            and self.dialogue_act is None
            and self.intent is None
            and self.delex_response is None
        )


_NO_ANNOTATIONS = TurnAnnotations()


@dataclass(frozen=True)
class DialogueSession:
    """A validated multi-turn session: alternating speakers, user first."""

    session_id: str
    utterances: tuple[Utterance, ...]
    annotations: tuple[TurnAnnotations, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if not self.annotations:
            object.__setattr__(
                self, "annotations", tuple(_NO_ANNOTATIONS for _ in self.utterances)
            )
        else:
            object.__setattr__(self, "annotations", tuple(self.annotations))
        if not self.session_id:
            raise ValidationError("session_id must be non-empty")
        if len(self.annotations) != len(self.utterances):
            raise ValidationError(
                f"session {self.session_id!r}: {len(self.annotations)} annotation slots "
                f"for {len(self.utterances)} utterances"
            )
        previous_index = -1
        for position, utterance in enumerate(self.utterances):
            expected = Speaker.USER if position % 2 == 0 else Speaker.SYSTEM
            if utterance.speaker is not expected:
                raise ValidationError(
                    f"session {self.session_id!r}: speakers must alternate starting with "
                    f"user; turn {position} is {utterance.speaker.value!r}"
                )
            if utterance.turn_index <= previous_index:
                raise ValidationError(
                    f"session {self.session_id!r}: turn_index must strictly increase"
                )
            previous_index = utterance.turn_index
        for position, ann in enumerate(self.annotations):
            is_user = position % 2 == 0
            if is_user and (ann.dialogue_act is not None or ann.delex_response is not None):
                raise ValidationError(
                    f"session {self.session_id!r}: turn {position} is a user turn and may "
                    "not carry act/response annotations"
                )
            if not is_user and (ann.belief_state is not None or ann.intent is not None):
                raise ValidationError(
                    f"session {self.session_id!r}: turn {position} is a system turn and may "
                    "not carry state/intent annotations"
                )

    def __len__(self) -> int:
        return len(self.utterances)

    def user_turn_positions(self) -> tuple[int, ...]:
        return tuple(range(0, len(self.utterances), 2))

    @classmethod
    def from_texts(
        cls,
        session_id: str,
        texts: list[str] | tuple[str, ...],
        annotations: tuple[TurnAnnotations, ...] = (),
    ) -> "DialogueSession":
        """Build a session from alternating raw texts (user first)."""
        utterances = tuple(
            Utterance(Speaker.USER if i % 2 == 0 else Speaker.SYSTEM, text, i)
            for i, text in enumerate(texts)
        )
        return cls(session_id, utterances, annotations)


@dataclass(frozen=True)
class TrainingSample:
    """One text-to-text training triple: task prompt, context, target."""

    task: TaskTag
    prompt: TaskPrompt
    context: str
    target: str
    source_corpus_id: str = ""

    def __post_init__(self) -> None:
        if self.prompt.task is not self.task:
            raise ValidationError(
                f"prompt task {self.prompt.task.value} does not match sample task "
                f"{self.task.value}"
            )
        if not self.target:
            raise ValidationError("training target must be non-empty")

    @classmethod
    def build(
        cls, task: TaskTag, context: str, target: str, source_corpus_id: str = ""
    ) -> "TrainingSample":
        return cls(task, TaskPrompt.for_task(task), context, target, source_corpus_id)


def render_context(
    session: DialogueSession,
    upto_turn: int,
    markers: MarkerStyle = DEFAULT_MARKERS,
) -> str:
    """Flatten all utterances up to and including the user turn ``upto_turn``.

    Deterministic, no trailing whitespace; raises IndexError for an
    out-of-range position and ValidationError when the position is not a
    user turn (sessions themselves are validated at construction).
    """
    if not 0 <= upto_turn < len(session.utterances):
        raise IndexError(
            f"turn {upto_turn} out of range for session of length {len(session.utterances)}"
        )
    if session.utterances[upto_turn].speaker is not Speaker.USER:
        raise ValidationError(f"turn {upto_turn} is not a user turn")
    parts = []
    for utterance in session.utterances[: upto_turn + 1]:
        parts.append(markers.marker(utterance.speaker))
        parts.append(utterance.text)
    return " ".join(parts)


def build_input(
    prompt: TaskPrompt,
    context: str,
    db_token: str | None = None,
    max_tokens: int = 1024,
    markers: MarkerStyle = DEFAULT_MARKERS,
) -> str:
    """Assemble one model input: prompt, optional DB token, then context.

    The whitespace token count of the result never exceeds ``max_tokens``.
    The prompt and DB token are never truncated; the context loses its
    oldest turns first (turn boundaries are the speaker markers), and only
    when the newest turn alone exceeds the remaining budget are tokens
    dropped from inside that turn.
    """
    if max_tokens < 16:
        raise ValidationError(f"max_tokens must be >= 16, got {max_tokens}")
    prefix = prompt.text.split()
    if db_token:
        prefix.append(db_token)
    budget = max_tokens - len(prefix)
    tokens = context.split()
    if len(tokens) > budget:
        tokens = _truncate_oldest(tokens, budget, markers)
    return " ".join(prefix + tokens)


def _truncate_oldest(tokens: list[str], budget: int, markers: MarkerStyle) -> list[str]:
    if budget <= 0:
        return []
    marker_set = {markers.user, markers.system}
    starts = [i for i, token in enumerate(tokens) if token in marker_set]
    if not starts or starts[0] != 0:
        starts = [0] + starts
    for start in starts:
        if len(tokens) - start <= budget:
            return tokens[start:]
    return tokens[len(tokens) - budget :]
