"""End-to-end turn inference in two generation modes, plus latency benchmarks.

Plug-and-play mode issues decoupled prompts: without database grounding the
state/act/response generations all run concurrently; with grounding the state
is generated first (retrieval needs it), then act and response run
concurrently with the DB token injected.  Cascaded mode chains the calls,
appending each generated output to the next input, so errors propagate
observably.  End-to-end durations reflect the critical path in parallel mode
and the sum in cascaded mode; parallel stages are genuinely issued
concurrently whenever the backend allows concurrent calls.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .backend import GenerationBackend, GenerationRequest
from .codec import BeliefState, parse_state
from .dialogue import (
    DEFAULT_MARKERS,
    DialogueSession,
    MarkerStyle,
    Speaker,
    TaskPrompt,
    TaskTag,
    build_input,
)
from .errors import ValidationError
from .evaluation import SessionOutcome
from .grounding import DBState, DelexTokenSet, EntityDB, lexicalize, query


class GenerationMode(str, Enum):
    PLUG_AND_PLAY = "plug_and_play"
    CASCADED = "cascaded"


class HistorySource(str, Enum):
    GENERATED = "generated"
    GOLD = "gold"


@dataclass(frozen=True)
class PipelineMode:
    """One cell of the generation-mode / DB-grounding ablation grid."""

    mode: GenerationMode = GenerationMode.PLUG_AND_PLAY
    use_db: bool = False
    history_source: HistorySource = HistorySource.GENERATED

    def label(self) -> str:
        kind = "pnp" if self.mode is GenerationMode.PLUG_AND_PLAY else "cascaded"
        return f"{kind}/{'db' if self.use_db else 'nodb'}"


def standard_bench_modes() -> tuple[PipelineMode, ...]:
    """The four ablation cells: both generation modes, with and without DB."""
    return (
        PipelineMode(GenerationMode.CASCADED, use_db=True),
        PipelineMode(GenerationMode.CASCADED, use_db=False),
        PipelineMode(GenerationMode.PLUG_AND_PLAY, use_db=True),
        PipelineMode(GenerationMode.PLUG_AND_PLAY, use_db=False),
    )


@dataclass(frozen=True)
class TurnResult:
    state_text: str
    state: BeliefState
    db_state: DBState | None
    act_text: str
    delex_response: str
    response: str
    intent_text: str | None
    active_domain: str | None
    call_durations: dict[str, float]
    duration: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.duration < 0 or any(d < 0 for d in self.call_durations.values()):
            raise ValidationError("durations must be non-negative")


@dataclass(frozen=True)
class SessionResult:
    session_id: str
    turns: tuple[TurnResult, ...]

    @property
    def final_state(self) -> BeliefState:
        return self.turns[-1].state if self.turns else BeliefState.empty()

    def outcome(self) -> SessionOutcome:
        return SessionOutcome(
            session_id=self.session_id,
            final_state=self.final_state,
            delex_responses=tuple(t.delex_response for t in self.turns),
            responses=tuple(t.response for t in self.turns),
        )


def select_active_domain(
    state: BeliefState,
    previous_state: BeliefState | None = None,
    previous_domain: str | None = None,
    db: EntityDB | None = None,
) -> str | None:
    """Deterministic rule for which domain the current turn is about.

    The domain whose constraints changed since the previous turn wins
    (lexicographically first if several); otherwise the carried previous
    domain, the first constrained domain, or the first database domain.
    """
    if previous_state is not None:
        changed = sorted(
            domain
            for domain in state.domains()
            if state.constraints(domain) != previous_state.constraints(domain)
        )
        if changed:
            return changed[0]
    if previous_domain is not None:
        return previous_domain
    if state.domains():
        return state.domains()[0]
    if db is not None and db.domain_names():
        return db.domain_names()[0]
    return None


@dataclass
class _TurnSettings:
    backend: GenerationBackend
    db: EntityDB | None
    max_input_tokens: int
    max_new_tokens: int
    ontology: DelexTokenSet
    markers: MarkerStyle

    def call(self, task: TaskTag, context: str, db_token: str | None = None):
        input_text = build_input(
            TaskPrompt.for_task(task), context, db_token, self.max_input_tokens, self.markers
        )
        return self.backend.generate(GenerationRequest(input_text, self.max_new_tokens))


def _ground(
    settings: _TurnSettings,
    state: BeliefState,
    warnings: list[str],
    previous_state: BeliefState | None,
    previous_domain: str | None,
) -> tuple[str | None, list[dict[str, str]], DBState | None]:
    domain = select_active_domain(state, previous_state, previous_domain, settings.db)
    if settings.db is None or domain is None or domain not in settings.db.domains:
        if domain is not None and settings.db is not None:
            warnings.append(f"active domain {domain!r} is not in the database")
        return domain, [], None
    if state.is_empty():
        warnings.append("predicted state is empty; querying with no constraints")
    matches, db_state = query(settings.db, state, domain)
    return domain, matches, db_state


def _finish_turn(
    settings: _TurnSettings,
    *,
    state_result,
    act_result,
    nlg_result,
    intent_result,
    matches,
    db_state,
    domain,
    warnings: list[str],
    started: float,
) -> TurnResult:
    state, parse_warnings = parse_state(state_result.output_text)
    warnings = [*(f"dst: {w}" for w in parse_warnings), *warnings]
    response, unfilled = lexicalize(
        nlg_result.output_text, matches, db_state, settings.ontology
    )
    warnings.extend(f"unfilled placeholder {p}" for p in unfilled)
    call_durations = {
        "dst": state_result.duration,
        "pol": act_result.duration,
        "nlg": nlg_result.duration,
    }
    if intent_result is not None:
        call_durations["nlu"] = intent_result.duration
    return TurnResult(
        state_text=state_result.output_text,
        state=state,
        db_state=db_state,
        act_text=act_result.output_text,
        delex_response=nlg_result.output_text,
        response=response,
        intent_text=intent_result.output_text if intent_result is not None else None,
        active_domain=domain,
        call_durations=call_durations,
        duration=time.perf_counter() - started,
        warnings=tuple(warnings),
    )


def run_plug_and_play(
    backend: GenerationBackend,
    context: str,
    db: EntityDB | None = None,
    mode: PipelineMode = PipelineMode(),
    *,
    max_input_tokens: int = 256,
    max_new_tokens: int = 64,
    ontology: DelexTokenSet | None = None,
    markers: MarkerStyle = DEFAULT_MARKERS,
    include_intent: bool = False,
    previous_state: BeliefState | None = None,
    previous_domain: str | None = None,
) -> TurnResult:
    """Decoupled prompts; the end-to-end duration is the critical path."""
    settings = _TurnSettings(
        backend, db if mode.use_db else None, max_input_tokens, max_new_tokens,
        ontology or DelexTokenSet.default(), markers,
    )
    warnings: list[str] = []
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=4) as pool:
        intent_future = (
            pool.submit(settings.call, TaskTag.NLU, context) if include_intent else None
        )
        if mode.use_db and db is not None:
            state_result = settings.call(TaskTag.DST, context)
            state, _ = parse_state(state_result.output_text)
            domain, matches, db_state = _ground(
                settings, state, warnings, previous_state, previous_domain
            )
            token = db_state.token if db_state is not None else None
            act_future = pool.submit(settings.call, TaskTag.POL, context, token)
            nlg_future = pool.submit(settings.call, TaskTag.NLG, context, token)
        else:
            state_future = pool.submit(settings.call, TaskTag.DST, context)
            act_future = pool.submit(settings.call, TaskTag.POL, context)
            nlg_future = pool.submit(settings.call, TaskTag.NLG, context)
            state_result = state_future.result()
            state, _ = parse_state(state_result.output_text)
            domain = select_active_domain(state, previous_state, previous_domain, db)
            matches, db_state = [], None
        act_result = act_future.result()
        nlg_result = nlg_future.result()
        intent_result = intent_future.result() if intent_future is not None else None
    return _finish_turn(
        settings,
        state_result=state_result,
        act_result=act_result,
        nlg_result=nlg_result,
        intent_result=intent_result,
        matches=matches,
        db_state=db_state,
        domain=domain,
        warnings=warnings,
        started=started,
    )


def run_cascaded(
    backend: GenerationBackend,
    context: str,
    db: EntityDB | None = None,
    mode: PipelineMode = PipelineMode(GenerationMode.CASCADED),
    *,
    max_input_tokens: int = 256,
    max_new_tokens: int = 64,
    ontology: DelexTokenSet | None = None,
    markers: MarkerStyle = DEFAULT_MARKERS,
    include_intent: bool = False,
    previous_state: BeliefState | None = None,
    previous_domain: str | None = None,
) -> TurnResult:
    """Sequential sub-tasks, each conditioned on the previous raw outputs."""
    settings = _TurnSettings(
        backend, db if mode.use_db else None, max_input_tokens, max_new_tokens,
        ontology or DelexTokenSet.default(), markers,
    )
    warnings: list[str] = []
    started = time.perf_counter()
    intent_result = settings.call(TaskTag.NLU, context) if include_intent else None
    state_result = settings.call(TaskTag.DST, context)
    state, _ = parse_state(state_result.output_text)
    if mode.use_db and db is not None:
        domain, matches, db_state = _ground(
            settings, state, warnings, previous_state, previous_domain
        )
    else:
        domain = select_active_domain(state, previous_state, previous_domain, db)
        matches, db_state = [], None
    token = db_state.token if db_state is not None else None
    # Generated text is appended verbatim, so malformed intermediate output
    # remains observable downstream instead of being repaired or dropped.
    act_result = settings.call(
        TaskTag.POL, f"{context} {state_result.output_text}".strip(), token
    )
    nlg_result = settings.call(
        TaskTag.NLG,
        f"{context} {state_result.output_text} {act_result.output_text}".strip(),
        token,
    )
    return _finish_turn(
        settings,
        state_result=state_result,
        act_result=act_result,
        nlg_result=nlg_result,
        intent_result=intent_result,
        matches=matches,
        db_state=db_state,
        domain=domain,
        warnings=warnings,
        started=started,
    )


def run_turn(
    backend: GenerationBackend,
    context: str,
    db: EntityDB | None = None,
    mode: PipelineMode = PipelineMode(),
    **kwargs,
) -> TurnResult:
    runner = (
        run_plug_and_play if mode.mode is GenerationMode.PLUG_AND_PLAY else run_cascaded
    )
    return runner(backend, context, db, mode, **kwargs)


def run_session(
    backend: GenerationBackend,
    session: DialogueSession,
    db: EntityDB | None = None,
    mode: PipelineMode = PipelineMode(),
    *,
    max_input_tokens: int = 256,
    max_new_tokens: int = 64,
    ontology: DelexTokenSet | None = None,
    markers: MarkerStyle = DEFAULT_MARKERS,
    include_intent: bool = False,
) -> SessionResult:
    """Run every user turn of one session.

    User utterances always come from the session; system turns in the
    rendered history are the model's own responses (generated mode, the
    fully end-to-end setting) or the session's reference responses (gold
    mode, for oracle-history comparisons).
    """
    generated: dict[int, str] = {}
    turns: list[TurnResult] = []
    previous_state: BeliefState | None = None
    previous_domain: str | None = None
    for position in session.user_turn_positions():
        parts: list[str] = []
        for j in range(position + 1):
            utterance = session.utterances[j]
            text = utterance.text
            if (
                utterance.speaker is Speaker.SYSTEM
                and mode.history_source is HistorySource.GENERATED
            ):
                text = generated.get(j, text)
            parts.append(markers.marker(utterance.speaker))
            parts.append(text)
        context = " ".join(parts)
        result = run_turn(
            backend,
            context,
            db,
            mode,
            max_input_tokens=max_input_tokens,
            max_new_tokens=max_new_tokens,
            ontology=ontology,
            markers=markers,
            include_intent=include_intent,
            previous_state=previous_state,
            previous_domain=previous_domain,
        )
        turns.append(result)
        generated[position + 1] = result.response
        previous_state = result.state
        previous_domain = result.active_domain
    return SessionResult(session.session_id, tuple(turns))


@dataclass(frozen=True)
class ModeLatency:
    label: str
    turns: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    speedup: float

    def to_record(self) -> dict:
        return {
            "mode": self.label,
            "turns": self.turns,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "speedup": self.speedup,
        }


@dataclass(frozen=True)
class LatencyReport:
    rows: tuple[ModeLatency, ...]
    baseline_label: str
    repetitions: int

    def row(self, label: str) -> ModeLatency:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)

    def to_records(self) -> list[dict]:
        return [row.to_record() for row in self.rows]

    def format_table(self) -> str:
        header = (
            f"{'Mode':<14}{'Turns':>7}{'Mean (ms)':>12}{'Median (ms)':>13}"
            f"{'p95 (ms)':>11}{'Speedup':>9}"
        )
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row.label:<14}{row.turns:>7}{row.mean_ms:>12.2f}"
                f"{row.median_ms:>13.2f}{row.p95_ms:>11.2f}{row.speedup:>8.2f}x"
            )
        lines.append(f"baseline: {self.baseline_label} (batch size 1)")
        return "\n".join(lines)


def _p95(values: list[float]) -> float:
    ordered = sorted(values)
    rank = max(0, -(-len(ordered) * 95 // 100) - 1)  # nearest-rank, 1-indexed
    return ordered[rank]


def benchmark_latency(
    backend: GenerationBackend,
    sessions: Sequence[DialogueSession],
    modes: Sequence[PipelineMode],
    repetitions: int = 3,
    *,
    db: EntityDB | None = None,
    baseline: PipelineMode | None = None,
    max_input_tokens: int = 256,
    max_new_tokens: int = 64,
) -> LatencyReport:
    """Per-mode latency over every turn, batch size 1, plus speedup ratios.

    Speedups are relative to the declared baseline mode (by default the
    first mode requested); with one mode the speedup is 1.0 by definition.
    """
    if repetitions < 3:
        raise ValidationError(f"repetitions must be >= 3, got {repetitions}")
    if not modes:
        raise ValidationError("at least one mode is required")
    if not sessions:
        raise ValidationError("at least one session is required")
    baseline = baseline or modes[0]
    if baseline.label() not in {m.label() for m in modes}:
        raise ValidationError(f"baseline {baseline.label()} is not among the modes")
    samples: dict[str, list[float]] = {}
    for mode in modes:
        latencies: list[float] = []
        for _ in range(repetitions):
            for session in sessions:
                result = run_session(
                    backend,
                    session,
                    db,
                    mode,
                    max_input_tokens=max_input_tokens,
                    max_new_tokens=max_new_tokens,
                )
                latencies.extend(turn.duration for turn in result.turns)
        samples[mode.label()] = latencies
    baseline_mean = statistics.fmean(samples[baseline.label()])
    rows = []
    for mode in modes:
        latencies = samples[mode.label()]
        mean = statistics.fmean(latencies)
        rows.append(
            ModeLatency(
                label=mode.label(),
                turns=len(latencies),
                mean_ms=1000 * mean,
                median_ms=1000 * statistics.median(latencies),
                p95_ms=1000 * _p95(latencies),
                speedup=baseline_mean / mean if mean > 0 else float("inf"),
            )
        )
    return LatencyReport(tuple(rows), baseline.label(), repetitions)
