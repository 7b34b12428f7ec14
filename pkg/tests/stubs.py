"""Deterministic stand-in backends used across the test suite."""

from __future__ import annotations

import threading
import time

from todkit.backend import GenerationRequest, GenerationResult
from todkit.codec import serialize_act, serialize_state
from todkit.corpus import Corpus
from todkit.dialogue import PROMPT_TEXTS, TaskTag, render_context
from todkit.grounding import DB_TOKENS


def _result(output: str, started: float) -> GenerationResult:
    return GenerationResult(
        output_text=output,
        token_count=len(output.split()),
        duration=time.perf_counter() - started,
    )


class ConstBackend:
    """Input-independent: always answers the same text."""

    def __init__(self, output: str = "ok"):
        self.output = output

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.perf_counter()
        return _result(self.output, started)


class EchoBackend:
    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.perf_counter()
        return _result(request.input_text, started)


class FixedDelayBackend:
    """Sleeps a fixed time per call; output may depend on the task prompt."""

    def __init__(self, delay: float, outputs: dict[TaskTag, str] | None = None):
        self.delay = delay
        self.outputs = outputs or {}

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.perf_counter()
        time.sleep(self.delay)
        task = split_prompt(request.input_text)[0]
        output = self.outputs.get(task, "ok") if task else "ok"
        return _result(output, started)


class MappingBackend:
    """Exact input-text lookup; unknown inputs yield the default."""

    def __init__(self, mapping: dict[str, str], default: str = ""):
        self.mapping = dict(mapping)
        self.default = default

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.perf_counter()
        return _result(self.mapping.get(request.input_text, self.default), started)


class RecordingBackend:
    """Wraps another backend and records every request, thread-safely."""

    def __init__(self, inner):
        self.inner = inner
        self.requests: list[GenerationRequest] = []
        self._lock = threading.Lock()

    def generate(self, request: GenerationRequest) -> GenerationResult:
        with self._lock:
            self.requests.append(request)
        return self.inner.generate(request)

    def inputs_for(self, task: TaskTag) -> list[str]:
        return [
            request.input_text
            for request in self.requests
            if split_prompt(request.input_text)[0] is task
        ]


class FailingBackend:
    def generate(self, request: GenerationRequest) -> GenerationResult:
        raise RuntimeError("backend exploded")


def split_prompt(input_text: str) -> tuple[TaskTag | None, str]:
    """Split '<prompt> [db_N]? <context>' into (task, context)."""
    for task, prompt in PROMPT_TEXTS.items():
        if input_text == prompt or input_text.startswith(prompt + " "):
            rest = input_text[len(prompt) :].strip()
            first, _, remainder = rest.partition(" ")
            if first in DB_TOKENS:
                rest = remainder
            return task, rest
    return None, input_text


class GoldBackend:
    """Answers every prompt with the corpus' gold target for that turn.

    Keyed on the gold-rendered context, so it behaves like a perfectly
    overfit model in both gold- and generated-history runs.
    """

    def __init__(self, corpus: Corpus):
        self.targets: dict[tuple[TaskTag, str], str] = {}
        for session in corpus.sessions:
            for position in session.user_turn_positions():
                context = render_context(session, position)
                user_ann = session.annotations[position]
                system_ann = (
                    session.annotations[position + 1]
                    if position + 1 < len(session.annotations)
                    else None
                )
                if user_ann.intent is not None:
                    self.targets[(TaskTag.NLU, context)] = user_ann.intent.render()
                if user_ann.belief_state is not None:
                    self.targets[(TaskTag.DST, context)] = serialize_state(
                        user_ann.belief_state
                    )
                if system_ann is not None and system_ann.dialogue_act is not None:
                    self.targets[(TaskTag.POL, context)] = serialize_act(
                        system_ann.dialogue_act
                    )
                if system_ann is not None and system_ann.delex_response is not None:
                    self.targets[(TaskTag.NLG, context)] = system_ann.delex_response

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.perf_counter()
        task, context = split_prompt(request.input_text)
        output = self.targets.get((task, context), "") if task is not None else ""
        return _result(output, started)
