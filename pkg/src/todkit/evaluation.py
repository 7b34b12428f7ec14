"""Benchmark metric stack: BLEU, Inform, Success, Combined, JGA, intent accuracy.

Inform/Success follow the strict deterministic reading used throughout the
toolkit: a session is informed iff, for every goal domain, the offered entity
(first database match in canonical order under the session's final predicted
state) satisfies all goal constraints; it is successful iff it is informed
and every requested slot shows up in some system response, either as its
delexicalized placeholder or as the offered entity's value.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .codec import BeliefState, IntentLabel
from .errors import SchemaError, ValidationError
from .grounding import DelexTokenSet, EntityDB, _boundary_pattern, query
from .jsonl import read_records, require_keys, write_records

BLEU_MAX_ORDER = 4


def _ngram_counts(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def bleu(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Corpus-level BLEU-4 on a 0-100 scale.

    Clipped n-gram precision with brevity penalty; orders with zero possible
    n-grams are excluded from the geometric mean, and higher orders (n >= 2)
    with zero matches get add-one smoothing so short outputs never zero out
    the whole corpus score.
    """
    if len(hypotheses) != len(references):
        raise ValidationError(
            f"hypothesis/reference length mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise ValidationError("bleu needs at least one pair")
    matches = [0] * BLEU_MAX_ORDER
    possible = [0] * BLEU_MAX_ORDER
    hyp_length = 0
    ref_length = 0
    for hypothesis, reference in zip(hypotheses, references):
        hyp_tokens = hypothesis.split()
        ref_tokens = reference.split()
        hyp_length += len(hyp_tokens)
        ref_length += len(ref_tokens)
        for order in range(1, BLEU_MAX_ORDER + 1):
            spots = len(hyp_tokens) - order + 1
            if spots <= 0:
                continue
            possible[order - 1] += spots
            overlap = _ngram_counts(hyp_tokens, order) & _ngram_counts(ref_tokens, order)
            matches[order - 1] += sum(overlap.values())
    if hyp_length == 0:
        return 0.0
    log_precisions: list[float] = []
    for order in range(1, BLEU_MAX_ORDER + 1):
        p = possible[order - 1]
        m = matches[order - 1]
        if p == 0:
            continue
        if m == 0:
            if order == 1:
                return 0.0
            m, p = m + 1, p + 1
        log_precisions.append(math.log(m / p))
    if not log_precisions:
        return 0.0
    geo_mean = math.exp(sum(log_precisions) / len(log_precisions))
    brevity = 1.0 if hyp_length >= ref_length else math.exp(1.0 - ref_length / hyp_length)
    return 100.0 * geo_mean * brevity


def combined(inform: float, success: float, bleu_score: float) -> float:
    """Overall end-to-end measure: (Inform + Success) * 0.5 + BLEU."""
    for name, value in (("inform", inform), ("success", success), ("bleu", bleu_score)):
        if not 0.0 <= value <= 100.0:
            raise ValidationError(f"{name} must be in [0, 100], got {value}")
    return (inform + success) * 0.5 + bleu_score


def joint_goal_accuracy(
    predicted: Sequence[BeliefState], gold: Sequence[BeliefState]
) -> float:
    """Fraction of turns whose full predicted state equals gold exactly.

    Equality is map equality (equivalently, equality of (domain, slot, value)
    triple sets), so slot ordering and serialization order never matter.
    """
    if len(predicted) != len(gold):
        raise ValidationError(
            f"misaligned turn sequences: {len(predicted)} predicted vs {len(gold)} gold"
        )
    if not gold:
        raise ValidationError("joint goal accuracy needs at least one turn")
    exact = sum(1 for p, g in zip(predicted, gold) if p.as_triples() == g.as_triples())
    return exact / len(gold)


def _normalize_label(text: str | IntentLabel) -> str | None:
    if isinstance(text, IntentLabel):
        return text.render()
    label = IntentLabel.parse(text)
    return label.render() if label is not None else None


def intent_accuracy(
    predicted_texts: Sequence[str],
    gold_labels: Sequence[str | IntentLabel],
    known_labels: Iterable[str | IntentLabel] | None = None,
) -> float:
    """Exact-match fraction after bracket/whitespace normalization.

    Predictions outside the known label set count as wrong even if they
    happen to normalize to gold-like text.
    """
    if len(predicted_texts) != len(gold_labels):
        raise ValidationError(
            f"misaligned lists: {len(predicted_texts)} predictions vs {len(gold_labels)} gold"
        )
    if not gold_labels:
        raise ValidationError("intent accuracy needs at least one pair")
    gold_normalized = [_normalize_label(g) for g in gold_labels]
    if any(g is None for g in gold_normalized):
        raise ValidationError("gold labels must be valid intent labels")
    known = set(gold_normalized)
    if known_labels is not None:
        known.update(n for n in (_normalize_label(k) for k in known_labels) if n)
    correct = 0
    for prediction, gold_label in zip(predicted_texts, gold_normalized):
        normalized = _normalize_label(prediction)
        if normalized is not None and normalized in known and normalized == gold_label:
            correct += 1
    return correct / len(gold_labels)


@dataclass(frozen=True)
class DomainGoal:
    constraints: dict[str, str] = field(default_factory=dict)
    requested: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", dict(self.constraints))
        object.__setattr__(self, "requested", frozenset(self.requested))


@dataclass(frozen=True)
class GoalSpec:
    """Per-session goal: informable constraints and requested slots by domain."""

    domains: dict[str, DomainGoal]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domains", dict(self.domains))
        if not self.domains:
            raise ValidationError("a goal must cover at least one domain")


@dataclass(frozen=True)
class SessionOutcome:
    """What a finished session contributes to Inform/Success scoring."""

    session_id: str
    final_state: BeliefState
    delex_responses: tuple[str, ...]
    responses: tuple[str, ...]


def _norm(value: str) -> str:
    return " ".join(str(value).split()).casefold()


def inform_success(
    results: Sequence[SessionOutcome],
    goals: Mapping[str, GoalSpec],
    db: EntityDB,
    ontology: DelexTokenSet | None = None,
) -> tuple[float, float]:
    """Compute (Inform %, Success %) over sessions; every session needs a goal."""
    if not results:
        raise ValidationError("inform/success needs at least one session")
    ontology = ontology or DelexTokenSet.default()
    informed_count = 0
    successful_count = 0
    for result in results:
        if result.session_id not in goals:
            raise ValidationError(f"session {result.session_id!r} has no goal")
        goal = goals[result.session_id]
        informed = True
        requests_met = True
        for domain, domain_goal in goal.domains.items():
            matches, _ = query(db, result.final_state, domain)
            offered = matches[0] if matches else None
            if offered is None:
                informed = False
                break
            for slot, value in domain_goal.constraints.items():
                if _norm(value) == "don't care":
                    continue
                if _norm(offered.get(slot, "")) != _norm(value):
                    informed = False
                    break
            if not informed:
                break
            for slot in domain_goal.requested:
                if not _request_satisfied(slot, offered, result, ontology):
                    requests_met = False
        if informed:
            informed_count += 1
            if requests_met:
                successful_count += 1
    total = len(results)
    return 100.0 * informed_count / total, 100.0 * successful_count / total


def _request_satisfied(
    slot: str,
    offered: dict[str, str],
    result: SessionOutcome,
    ontology: DelexTokenSet,
) -> bool:
    placeholder = ontology.placeholder_for(slot)
    if placeholder and any(placeholder in response for response in result.delex_responses):
        return True
    value = offered.get(slot)
    if value:
        pattern = _boundary_pattern(value)
        if any(pattern.search(response) for response in result.responses):
            return True
    return False


def load_goals(path: str | Path) -> dict[str, GoalSpec]:
    goals: dict[str, GoalSpec] = {}
    for lineno, record in read_records(path):
        require_keys(
            record, ("session_id", "domains"), path=str(path), line=lineno, what="goal record"
        )
        session_id = record["session_id"]
        if session_id in goals:
            raise SchemaError(
                f"duplicate goal for session {session_id!r}", path=str(path), line=lineno
            )
        domains = {}
        for domain, spec in record["domains"].items():
            require_keys(
                spec,
                (),
                ("constraints", "requested"),
                path=str(path),
                line=lineno,
                what=f"goal domain {domain!r}",
            )
            domains[domain] = DomainGoal(
                dict(spec.get("constraints", {})), frozenset(spec.get("requested", ()))
            )
        try:
            goals[session_id] = GoalSpec(domains)
        except ValidationError as exc:
            raise SchemaError(str(exc), path=str(path), line=lineno) from exc
    return goals


def save_goals(goals: Mapping[str, GoalSpec], path: str | Path) -> int:
    records = []
    for session_id in goals:
        spec = goals[session_id]
        records.append(
            {
                "session_id": session_id,
                "domains": {
                    domain: {
                        "constraints": dict(domain_goal.constraints),
                        "requested": sorted(domain_goal.requested),
                    }
                    for domain, domain_goal in spec.domains.items()
                },
            }
        )
    return write_records(path, records)


_PERCENT_FIELDS = ("inform", "success", "bleu")
_FRACTION_FIELDS = ("jga", "intent_accuracy")


@dataclass(frozen=True)
class EvalReport:
    """Full benchmark readout; unavailable metrics stay None."""

    inform: float | None = None
    success: float | None = None
    bleu: float | None = None
    combined: float | None = None
    jga: float | None = None
    intent_accuracy: float | None = None
    counts: dict[str, int] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name in _PERCENT_FIELDS:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 100.0:
                raise ValidationError(f"{name} must be in [0, 100], got {value}")
        for name in _FRACTION_FIELDS:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value}")
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @classmethod
    def assemble(
        cls,
        *,
        inform: float | None = None,
        success: float | None = None,
        bleu: float | None = None,
        jga: float | None = None,
        intent_accuracy: float | None = None,
        counts: dict[str, int] | None = None,
        warnings: Sequence[str] = (),
    ) -> "EvalReport":
        """Build a report; Combined is derived from this report's own fields."""
        combined_score = None
        if inform is not None and success is not None and bleu is not None:
            combined_score = combined(inform, success, bleu)
        return cls(
            inform=inform,
            success=success,
            bleu=bleu,
            combined=combined_score,
            jga=jga,
            intent_accuracy=intent_accuracy,
            counts=dict(counts or {}),
            warnings=tuple(warnings),
        )

    def to_record(self) -> dict[str, Any]:
        return {
            "inform": self.inform,
            "success": self.success,
            "bleu": self.bleu,
            "combined": self.combined,
            "jga": self.jga,
            "intent_accuracy": self.intent_accuracy,
            "counts": dict(self.counts),
            "warnings": list(self.warnings),
        }

    def format_table(self) -> str:
        columns = ("Inform", "Success", "BLEU", "Combined", "JGA", "Intent")
        values = (
            self.inform,
            self.success,
            self.bleu,
            self.combined,
            self.jga,
            self.intent_accuracy,
        )
        cells = ["-" if v is None else f"{v:.2f}" for v in values[:4]]
        cells += ["-" if v is None else f"{v:.4f}" for v in values[4:]]
        header = "".join(f"{c:>10}" for c in columns)
        row = "".join(f"{c:>10}" for c in cells)
        return header + "\n" + row
