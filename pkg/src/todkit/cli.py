"""Command-line surface: ingest, train, eval, bench, lowres, chat.

Every run writes a resolved-config snapshot next to its outputs; reloading a
snapshot with ``--config`` reproduces the run bit-for-bit (flags set to
non-default values still override the file).  Exit codes: 0 success, 1
runtime failure, 2 usage or validation error.  Structured single-line JSON
logs go to stderr; reports go to ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from pathlib import Path
from typing import Any, Sequence

from .backend import GenerationBackend, GenerationRequest
from .backend.model import (
    ModelConfig,
    ReferenceBackend,
    build_model,
    load_checkpoint,
    sample_pair,
    save_checkpoint,
)
from .backend.remote import RemoteBackend
from .backend.tokenizer import Tokenizer
from .corpus import (
    SampleSet,
    load_corpus,
    registered_adapters,
    subsample,
    to_training_samples,
    write_canonical,
)
from .dialogue import TaskTag
from .errors import (
    AdapterError,
    CapabilityError,
    SchemaError,
    TodkitError,
    ValidationError,
)
from .evaluation import EvalReport, inform_success, intent_accuracy, joint_goal_accuracy
from .evaluation import bleu as bleu_metric
from .evaluation import load_goals, save_goals
from .grounding import load_db, save_db
from .jsonl import dump_record, write_records
from .orchestrator import (
    GenerationMode,
    HistorySource,
    PipelineMode,
    benchmark_latency,
    run_session,
    run_turn,
    standard_bench_modes,
)
from .synthetic import SyntheticConfig, generate_corpus
from .trainer import TrainerConfig, fine_tune, train
from .corpus import AnnotationMask

ENDPOINT_ENV = "TODKIT_ENDPOINT"
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

_MODE_LABELS = {
    "pnp/nodb": PipelineMode(GenerationMode.PLUG_AND_PLAY, use_db=False),
    "pnp/db": PipelineMode(GenerationMode.PLUG_AND_PLAY, use_db=True),
    "cascaded/nodb": PipelineMode(GenerationMode.CASCADED, use_db=False),
    "cascaded/db": PipelineMode(GenerationMode.CASCADED, use_db=True),
}


def _log(event: str, **fields: Any) -> None:
    print(dump_record({"event": event, **fields}), file=sys.stderr)


def _csv(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_tasks(text: str | None) -> frozenset[TaskTag]:
    if not text or text == "all":
        return frozenset(TaskTag)
    return frozenset(TaskTag(name) for name in _csv(text.upper()))


def _write_snapshot(out: Path, command: str, args: argparse.Namespace) -> Path:
    payload = {
        "command": command,
        "args": {
            key: (str(value) if isinstance(value, Path) else value)
            for key, value in vars(args).items()
            if key not in {"handler", "command", "config"}
        },
    }
    out.mkdir(parents=True, exist_ok=True)
    snapshot = out / f"{command}_config.json"
    snapshot.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return snapshot


def _apply_config_file(args: argparse.Namespace, defaults: dict[str, Any]) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if raw.get("command") != args.command:
        raise ValidationError(
            f"config snapshot is for {raw.get('command')!r}, not {args.command!r}"
        )
    unknown = set(raw.get("args", {})) - set(defaults)
    if unknown:
        raise ValidationError(f"config snapshot has unknown keys: {sorted(unknown)}")
    for key, value in raw.get("args", {}).items():
        if getattr(args, key, None) == defaults.get(key):
            setattr(args, key, value)
    return args


def _make_backend(args: argparse.Namespace) -> GenerationBackend:
    if args.backend == "remote":
        endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ValidationError(
                f"remote backend needs --endpoint or the {ENDPOINT_ENV} environment variable"
            )
        return RemoteBackend(endpoint)
    if not args.checkpoint:
        raise ValidationError("reference backend needs --checkpoint")
    model, tokenizer = load_checkpoint(args.checkpoint)
    return ReferenceBackend(model, tokenizer)


def _pipeline_mode(args: argparse.Namespace) -> PipelineMode:
    mode = GenerationMode.PLUG_AND_PLAY if args.mode == "pnp" else GenerationMode.CASCADED
    return PipelineMode(mode, use_db=args.use_db, history_source=HistorySource(args.history))


# --------------------------------------------------------------------------- #
# ingest
# --------------------------------------------------------------------------- #


def cmd_ingest(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.synthetic:
        config = SyntheticConfig(
            seed=args.seed,
            sessions=args.sessions,
            corpus_id=args.corpus_id,
            mask=AnnotationMask.of(*_csv(args.mask.upper())),
            domains=tuple(_csv(args.domains)),
            entities_per_domain=args.entities_per_domain,
        )
        corpus, db, goals = generate_corpus(config)
        out.mkdir(parents=True, exist_ok=True)
        write_canonical(corpus, out / "corpus.jsonl")
        save_db(db, out / "db.jsonl")
        save_goals(goals, out / "goals.jsonl")
        summary = {
            "sessions": len(corpus),
            "mask": corpus.mask.names(),
            "domains": sorted(corpus.domains),
            "files": ["corpus.jsonl", "db.jsonl", "goals.jsonl"],
        }
    else:
        if not args.source:
            raise ValidationError("ingest needs --source unless --synthetic is given")
        corpus = load_corpus(args.source, args.adapter)
        out.mkdir(parents=True, exist_ok=True)
        write_canonical(corpus, out / "corpus.jsonl")
        summary = {
            "sessions": len(corpus),
            "mask": corpus.mask.names(),
            "domains": sorted(corpus.domains),
            "files": ["corpus.jsonl"],
        }
    _write_snapshot(out, "ingest", args)
    _log("ingested", **summary)
    print(dump_record(summary))
    return EXIT_OK


# --------------------------------------------------------------------------- #
# train
# --------------------------------------------------------------------------- #


def _assemble_samples(paths: Sequence[str], tasks: frozenset[TaskTag]) -> SampleSet:
    sample_sets = []
    for path in paths:
        corpus = load_corpus(path, "canonical")
        sample_sets.append(to_training_samples(corpus, tasks & corpus.mask.flags))
    merged = SampleSet.concat(sample_sets)
    if not len(merged):
        raise ValidationError("no training samples: check --data and --tasks against the masks")
    return merged


def _trainer_config(args: argparse.Namespace) -> TrainerConfig:
    return TrainerConfig(
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        max_tokens=args.max_tokens,
        seed=args.seed,
        checkpoint_interval=args.checkpoint_interval,
    )


def cmd_train(args: argparse.Namespace) -> int:
    out = Path(args.out)
    samples = _assemble_samples(args.data, _parse_tasks(args.tasks))
    config = _trainer_config(args)
    out.mkdir(parents=True, exist_ok=True)
    if args.from_checkpoint:
        model, tokenizer, history = fine_tune(
            args.from_checkpoint, samples, config, checkpoint_dir=out
        )
    else:
        texts: list[str] = []
        for sample in samples.samples:
            input_text, target = sample_pair(sample, config.max_tokens)
            texts.extend((input_text, target))
        tokenizer = Tokenizer.build(texts)
        model = build_model(
            ModelConfig(
                vocab_size=len(tokenizer),
                d_model=args.d_model,
                heads=args.heads,
                layers=args.layers,
                ff_width=args.ff_width,
                max_positions=max(args.max_tokens, 32),
            ),
            seed=args.seed,
        )
        history = train(model, tokenizer, samples, config, checkpoint_dir=out)
    checkpoint_path = out / "checkpoint.pt"
    save_checkpoint(checkpoint_path, model, tokenizer)
    write_records(out / "history.jsonl", (record.to_record() for record in history))
    _write_snapshot(out, "train", args)
    summary = {
        "samples": len(samples),
        "per_task": {task.value: n for task, n in samples.counts.items()},
        "epochs": len(history),
        "final_loss": history[-1].mean_loss if history else None,
        "parameters": model.parameter_count(),
        "checkpoint": str(checkpoint_path),
    }
    _log("trained", **summary)
    print(dump_record(summary))
    return EXIT_OK


# --------------------------------------------------------------------------- #
# eval
# --------------------------------------------------------------------------- #


def run_evaluation(
    backend: GenerationBackend,
    corpus,
    db=None,
    goals=None,
    mode: PipelineMode = PipelineMode(),
    *,
    max_input_tokens: int = 256,
    max_new_tokens: int = 64,
) -> tuple[EvalReport, list[dict[str, Any]]]:
    """Run the pipeline over a corpus and score every computable metric."""
    include_intent = TaskTag.NLU in corpus.mask
    predicted_states = []
    gold_states = []
    hypotheses = []
    references = []
    predicted_intents = []
    gold_intents = []
    outcomes = []
    prediction_rows: list[dict[str, Any]] = []
    warnings: list[str] = []
    turn_total = 0
    for session in corpus.sessions:
        result = run_session(
            backend,
            session,
            db,
            mode,
            max_input_tokens=max_input_tokens,
            max_new_tokens=max_new_tokens,
            include_intent=include_intent,
        )
        outcomes.append(result.outcome())
        for turn, position in zip(result.turns, session.user_turn_positions()):
            turn_total += 1
            warnings.extend(turn.warnings)
            user_ann = session.annotations[position]
            system_ann = (
                session.annotations[position + 1]
                if position + 1 < len(session.annotations)
                else None
            )
            if user_ann.belief_state is not None:
                predicted_states.append(turn.state)
                gold_states.append(user_ann.belief_state)
            if system_ann is not None and system_ann.delex_response is not None:
                hypotheses.append(turn.delex_response)
                references.append(system_ann.delex_response)
            if include_intent and user_ann.intent is not None and turn.intent_text is not None:
                predicted_intents.append(turn.intent_text)
                gold_intents.append(user_ann.intent)
            prediction_rows.append(
                {
                    "session_id": session.session_id,
                    "turn": position,
                    "state": turn.state_text,
                    "act": turn.act_text,
                    "delex_response": turn.delex_response,
                    "response": turn.response,
                    "intent": turn.intent_text,
                    "db": turn.db_state.token if turn.db_state else None,
                    "duration": turn.duration,
                }
            )
    inform = success = None
    if goals is not None and db is not None:
        inform, success = inform_success(outcomes, goals, db)
    report = EvalReport.assemble(
        inform=inform,
        success=success,
        bleu=bleu_metric(hypotheses, references) if hypotheses else None,
        jga=joint_goal_accuracy(predicted_states, gold_states) if gold_states else None,
        intent_accuracy=(
            intent_accuracy(predicted_intents, gold_intents) if gold_intents else None
        ),
        counts={
            "sessions": len(corpus.sessions),
            "turns": turn_total,
            "jga_turns": len(gold_states),
            "bleu_pairs": len(hypotheses),
            "intent_turns": len(gold_intents),
        },
        warnings=warnings[:50],
    )
    return report, prediction_rows


def cmd_eval(args: argparse.Namespace) -> int:
    out = Path(args.out)
    corpus = load_corpus(args.data, "canonical")
    db = load_db(args.db) if args.db else None
    goals = load_goals(args.goals) if args.goals else None
    backend = _make_backend(args)
    mode = _pipeline_mode(args)
    report, rows = run_evaluation(
        backend,
        corpus,
        db,
        goals,
        mode,
        max_input_tokens=args.max_tokens,
        max_new_tokens=args.max_new_tokens,
    )
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.to_record(), indent=2) + "\n", encoding="utf-8"
    )
    (out / "report.txt").write_text(report.format_table() + "\n", encoding="utf-8")
    write_records(out / "predictions.jsonl", rows)
    _write_snapshot(out, "eval", args)
    _log("evaluated", mode=mode.label(), sessions=len(corpus.sessions))
    print(report.format_table())
    return EXIT_OK


# --------------------------------------------------------------------------- #
# bench
# --------------------------------------------------------------------------- #


def cmd_bench(args: argparse.Namespace) -> int:
    out = Path(args.out)
    corpus = load_corpus(args.data, "canonical")
    db = load_db(args.db) if args.db else None
    backend = _make_backend(args)
    sessions = corpus.sessions[: args.limit] if args.limit else corpus.sessions
    if args.modes:
        try:
            modes = [_MODE_LABELS[label] for label in _csv(args.modes)]
        except KeyError as exc:
            raise ValidationError(
                f"unknown mode cell {exc.args[0]!r}; choose from {sorted(_MODE_LABELS)}"
            ) from exc
    else:
        modes = list(standard_bench_modes())
    if any(m.use_db for m in modes) and db is None:
        raise ValidationError("benchmark includes DB-grounded modes but no --db was given")
    baseline = _MODE_LABELS.get(args.baseline)
    if args.baseline and baseline is None:
        raise ValidationError(f"unknown baseline {args.baseline!r}")
    report = benchmark_latency(
        backend,
        sessions,
        modes,
        repetitions=args.repetitions,
        db=db,
        baseline=baseline,
        max_input_tokens=args.max_tokens,
        max_new_tokens=args.max_new_tokens,
    )
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "bench.jsonl", report.to_records())
    (out / "bench.txt").write_text(report.format_table() + "\n", encoding="utf-8")
    _write_snapshot(out, "bench", args)
    _log("benchmarked", modes=[m.label() for m in modes], repetitions=args.repetitions)
    print(report.format_table())
    return EXIT_OK


# --------------------------------------------------------------------------- #
# lowres
# --------------------------------------------------------------------------- #


def cmd_lowres(args: argparse.Namespace) -> int:
    out = Path(args.out)
    corpus = load_corpus(args.data, "canonical")
    test_corpus = load_corpus(args.test_data, "canonical") if args.test_data else corpus
    db = load_db(args.db) if args.db else None
    goals = load_goals(args.goals) if args.goals else None
    if not args.checkpoint:
        raise ValidationError("lowres needs --checkpoint (the base model to fine-tune)")
    fractions = [float(f) / 100.0 for f in _csv(args.fractions)]
    seeds = [int(s) for s in _csv(args.seeds)]
    tasks = _parse_tasks(args.tasks)
    mode = _pipeline_mode(args)
    metrics = ("inform", "success", "bleu", "combined", "jga", "intent_accuracy")
    rows: list[dict[str, Any]] = []
    for fraction in fractions:
        for seed in seeds:
            selection = subsample(corpus, fraction, seed)
            samples = to_training_samples(selection, tasks & selection.mask.flags)
            config = TrainerConfig(
                max_epochs=args.epochs,
                batch_size=args.batch_size,
                lr=args.lr,
                max_tokens=args.max_tokens,
                seed=seed,
            )
            model, tokenizer, history = fine_tune(args.checkpoint, samples, config)
            report, _ = run_evaluation(
                ReferenceBackend(model, tokenizer),
                test_corpus,
                db,
                goals,
                mode,
                max_input_tokens=args.max_tokens,
                max_new_tokens=args.max_new_tokens,
            )
            row = {
                "fraction": fraction,
                "seed": seed,
                "sessions": len(selection),
                "samples": len(samples),
                "final_loss": history[-1].mean_loss if history else None,
                **{name: getattr(report, name) for name in metrics},
            }
            rows.append(row)
            _log("lowres_cell", fraction=fraction, seed=seed, jga=report.jga)
    aggregates: list[dict[str, Any]] = []
    for fraction in fractions:
        cell = [row for row in rows if row["fraction"] == fraction]
        aggregate: dict[str, Any] = {"fraction": fraction, "runs": len(cell)}
        for name in metrics:
            values = [row[name] for row in cell if row[name] is not None]
            aggregate[f"{name}_mean"] = statistics.fmean(values) if values else None
            aggregate[f"{name}_std"] = statistics.pstdev(values) if values else None
        aggregates.append(aggregate)
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "lowres_runs.jsonl", rows)
    write_records(out / "lowres_summary.jsonl", aggregates)
    _write_snapshot(out, "lowres", args)
    for aggregate in aggregates:
        print(dump_record(aggregate))
    return EXIT_OK


# --------------------------------------------------------------------------- #
# chat
# --------------------------------------------------------------------------- #


def cmd_chat(args: argparse.Namespace) -> int:
    backend = _make_backend(args)
    db = load_db(args.db) if args.db else None
    mode = _pipeline_mode(args)
    from .codec import BeliefState
    from .dialogue import DEFAULT_MARKERS

    history: list[tuple[str, str]] = []  # (marker, text)
    previous_state: BeliefState | None = None
    previous_domain: str | None = None
    last_state_text = ""

    print("type a message; meta-commands: /state /reset /mode <pnp|cascaded> /quit")
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("/"):
            command, _, argument = line.partition(" ")
            if command == "/quit":
                break
            if command == "/reset":
                history.clear()
                previous_state = None
                previous_domain = None
                last_state_text = ""
                print("(context cleared)")
                continue
            if command == "/state":
                print(f"state: {last_state_text or '(empty)'}")
                continue
            if command == "/mode":
                if argument not in ("pnp", "cascaded"):
                    print("usage: /mode pnp|cascaded")
                    continue
                mode = PipelineMode(
                    GenerationMode.PLUG_AND_PLAY
                    if argument == "pnp"
                    else GenerationMode.CASCADED,
                    use_db=mode.use_db,
                    history_source=mode.history_source,
                )
                print(f"(mode set to {mode.label()})")
                continue
            print(f"unknown command {command!r}")
            continue
        history.append((DEFAULT_MARKERS.user, line))
        context = " ".join(part for pair in history for part in pair)
        result = run_turn(
            backend,
            context,
            db,
            mode,
            max_input_tokens=args.max_tokens,
            max_new_tokens=args.max_new_tokens,
            previous_state=previous_state,
            previous_domain=previous_domain,
        )
        history.append((DEFAULT_MARKERS.system, result.response))
        previous_state = result.state
        previous_domain = result.active_domain
        last_state_text = result.state_text
        print(f"state: {result.state_text or '(empty)'}")
        if result.db_state is not None:
            print(f"db: {result.db_state.match_count} matches {result.db_state.token}")
        print(f"act: {result.act_text}")
        print(f"system: {result.response}")
    return EXIT_OK


# --------------------------------------------------------------------------- #
# parser
# --------------------------------------------------------------------------- #


def _add_backend_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=("reference", "remote"), default="reference")
    parser.add_argument("--checkpoint", default=None, help="reference model checkpoint")
    parser.add_argument("--endpoint", default=None, help=f"host:port (or ${ENDPOINT_ENV})")
    parser.add_argument("--max-new-tokens", type=int, default=64, dest="max_new_tokens")
    parser.add_argument("--max-tokens", type=int, default=256, dest="max_tokens",
                        help="input token budget")


def _add_pipeline_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=("pnp", "cascaded"), default="pnp")
    parser.add_argument("--use-db", action="store_true", dest="use_db")
    parser.add_argument("--history", choices=("generated", "gold"), default="generated")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, dict[str, Any]]]:
    parser = argparse.ArgumentParser(
        prog="todkit",
        description="Prompt-driven multi-task task-oriented dialogue toolkit.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    defaults: dict[str, dict[str, Any]] = {}

    def register(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler, command=name)
        sub.add_argument("--out", required=name != "chat", help="output directory")
        sub.add_argument("--config", default=None, help="resolved-config snapshot to reload")
        return sub

    ingest = register("ingest", cmd_ingest, "convert or synthesize a canonical corpus")
    ingest.add_argument("--source", default=None, help="source file for the adapter")
    ingest.add_argument(
        "--adapter",
        default="canonical",
        help=f"one of: {', '.join(registered_adapters())}",
    )
    ingest.add_argument("--synthetic", action="store_true")
    ingest.add_argument("--seed", type=int, default=0)
    ingest.add_argument("--sessions", type=int, default=50)
    ingest.add_argument("--corpus-id", default="synthetic", dest="corpus_id")
    ingest.add_argument("--mask", default="NLU,DST,POL,NLG")
    ingest.add_argument("--domains", default="restaurant,hotel")
    ingest.add_argument(
        "--entities-per-domain", type=int, default=12, dest="entities_per_domain"
    )

    train_parser = register("train", cmd_train, "train or fine-tune the reference model")
    train_parser.add_argument("--data", nargs="+", required=True)
    train_parser.add_argument("--tasks", default="all", help="e.g. DST,NLG")
    train_parser.add_argument("--epochs", type=int, default=10)
    train_parser.add_argument("--batch-size", type=int, default=16, dest="batch_size")
    train_parser.add_argument("--lr", type=float, default=3e-4)
    train_parser.add_argument("--max-tokens", type=int, default=256, dest="max_tokens")
    train_parser.add_argument("--seed", type=int, default=0)
    train_parser.add_argument(
        "--checkpoint-interval", type=int, default=0, dest="checkpoint_interval"
    )
    train_parser.add_argument("--from-checkpoint", default=None, dest="from_checkpoint")
    train_parser.add_argument("--d-model", type=int, default=128, dest="d_model")
    train_parser.add_argument("--heads", type=int, default=4)
    train_parser.add_argument("--layers", type=int, default=2)
    train_parser.add_argument("--ff-width", type=int, default=256, dest="ff_width")

    eval_parser = register("eval", cmd_eval, "run the pipeline over a corpus and score it")
    eval_parser.add_argument("--data", required=True)
    eval_parser.add_argument("--db", default=None)
    eval_parser.add_argument("--goals", default=None)
    _add_backend_options(eval_parser)
    _add_pipeline_options(eval_parser)

    bench = register("bench", cmd_bench, "latency benchmark across generation modes")
    bench.add_argument("--data", required=True)
    bench.add_argument("--db", default=None)
    bench.add_argument("--modes", default=None, help=f"csv of {sorted(_MODE_LABELS)}")
    bench.add_argument("--baseline", default=None)
    bench.add_argument("--repetitions", type=int, default=3)
    bench.add_argument("--limit", type=int, default=0, help="cap the number of sessions")
    _add_backend_options(bench)

    lowres = register("lowres", cmd_lowres, "seeded low-resource fine-tuning sweep")
    lowres.add_argument("--data", required=True)
    lowres.add_argument("--test-data", default=None, dest="test_data")
    lowres.add_argument("--db", default=None)
    lowres.add_argument("--goals", default=None)
    lowres.add_argument("--tasks", default="all")
    lowres.add_argument("--fractions", default="1,5,10,20", help="percentages")
    lowres.add_argument("--seeds", default="11,12,13,14,15")
    lowres.add_argument("--epochs", type=int, default=5)
    lowres.add_argument("--batch-size", type=int, default=16, dest="batch_size")
    lowres.add_argument("--lr", type=float, default=3e-4)
    _add_backend_options(lowres)
    _add_pipeline_options(lowres)

    chat = register("chat", cmd_chat, "interactive turn-by-turn pipeline")
    chat.add_argument("--db", default=None)
    _add_backend_options(chat)
    _add_pipeline_options(chat)

    for name, sub in subparsers.choices.items():
        defaults[name] = {
            action.dest: action.default
            for action in sub._actions
            if action.dest not in {"help", "handler"}
        }
    return parser, defaults


def main(argv: Sequence[str] | None = None) -> int:
    parser, defaults = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _apply_config_file(args, defaults[args.command])
        return args.handler(args)
    except (ValidationError, SchemaError, AdapterError, CapabilityError) as exc:
        _log("usage_error", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        _log("usage_error", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TodkitError as exc:
        _log("runtime_error", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
