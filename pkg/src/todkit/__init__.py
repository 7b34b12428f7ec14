"""Prompt-driven multi-task toolkit for task-oriented dialogue.

One text-to-text model serves understanding, state tracking, policy, and
response generation: a fixed task prompt is plugged in front of the shared
dialogue context, so heterogeneous partially-annotated corpora can train a
single model, and the sub-tasks can be generated in parallel instead of
cascaded.  The package also carries database grounding, the benchmark metric
stack, a desk-scale reference seq2seq backend, and a CLI covering ingestion,
training, evaluation, latency benchmarks, low-resource sweeps, and chat.
"""

from .codec import (
    ActItem,
    BeliefState,
    DialogueAct,
    IntentLabel,
    parse_act,
    parse_state,
    serialize_act,
    serialize_state,
)
from .corpus import (
    AnnotationMask,
    Corpus,
    SampleSet,
    load_corpus,
    read_canonical,
    register_adapter,
    registered_adapters,
    subsample,
    to_training_samples,
    write_canonical,
)
from .dialogue import (
    DialogueSession,
    MarkerStyle,
    Speaker,
    TaskPrompt,
    TaskTag,
    TrainingSample,
    TurnAnnotations,
    Utterance,
    build_input,
    render_context,
)
from .evaluation import (
    DomainGoal,
    EvalReport,
    GoalSpec,
    SessionOutcome,
    bleu,
    combined,
    inform_success,
    intent_accuracy,
    joint_goal_accuracy,
    load_goals,
    save_goals,
)
from .grounding import (
    DBState,
    DelexTokenSet,
    DomainTable,
    EntityDB,
    delexicalize,
    lexicalize,
    load_db,
    query,
    save_db,
)
from .orchestrator import (
    GenerationMode,
    HistorySource,
    LatencyReport,
    PipelineMode,
    SessionResult,
    TurnResult,
    benchmark_latency,
    run_cascaded,
    run_plug_and_play,
    run_session,
    run_turn,
    standard_bench_modes,
)
from .synthetic import SyntheticConfig, generate_corpus, generate_db
from .trainer import (
    EpochPlan,
    EpochRecord,
    TrainerConfig,
    fine_tune,
    full_scale_defaults,
    plan_epoch,
    train,
    train_step,
)
from . import backend, errors

__version__ = "0.1.0"
