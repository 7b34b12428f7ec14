"""Multi-task training loop: cross-task shuffling, mini-batch MLE, checkpoints.

Every epoch reshuffles the full sample set uniformly, mixing tasks at the
sample level (no batch-level task segregation), then walks contiguous
batches; the short final batch is kept so each sample appears exactly once
per epoch.  Fine-tuning reuses the identical objective, initialized from a
checkpoint.  A single training thread owns the model; (seed, data, config)
fully determine the final parameters.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import torch

from .backend.model import (
    Seq2SeqModel,
    load_checkpoint,
    sample_pair,
    save_checkpoint,
    sequence_loss,
)
from .backend.tokenizer import Tokenizer
from .corpus import SampleSet
from .dialogue import PROMPT_TEXTS, TrainingSample
from .errors import CheckpointError, TrainingError, ValidationError


@dataclass(frozen=True)
class TrainerConfig:
    max_epochs: int = 10
    batch_size: int = 16
    lr: float = 3e-4
    max_tokens: int = 256
    seed: int = 0
    checkpoint_interval: int = 0  # 0 disables periodic checkpoints

    def __post_init__(self) -> None:
        if self.max_epochs < 0:
            raise ValidationError("max_epochs must be >= 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if self.lr <= 0:
            raise ValidationError("lr must be positive")
        if self.max_tokens < 16:
            raise ValidationError("max_tokens must be >= 16")
        if self.checkpoint_interval < 0:
            raise ValidationError("checkpoint_interval must be >= 0")


def full_scale_defaults() -> TrainerConfig:
    """The documented full-scale recipe (large-batch Adam, long inputs).

    Desk-scale runs use the dataclass defaults instead.
    """
    return TrainerConfig(max_epochs=10, batch_size=128, lr=5e-5, max_tokens=1024)


@dataclass(frozen=True)
class EpochPlan:
    permutation: tuple[int, ...]
    batches: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        flattened = [i for batch in self.batches for i in batch]
        if list(self.permutation) != flattened:
            raise ValidationError("batches must partition the permutation in order")
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValidationError("permutation must be a bijection over the sample set")


def plan_epoch(samples: SampleSet, config: TrainerConfig, epoch: int = 0) -> EpochPlan:
    """Uniform seeded shuffle of all samples regardless of task, then batches."""
    total = len(samples)
    if total == 0:
        raise ValidationError("cannot plan an epoch over an empty sample set")
    order = list(range(total))
    random.Random(f"{config.seed}:{epoch}").shuffle(order)
    batches = tuple(
        tuple(order[start : start + config.batch_size])
        for start in range(0, total, config.batch_size)
    )
    return EpochPlan(tuple(order), batches)


@dataclass
class TrainState:
    """Optimizer state owned by one training run; persists across epochs."""

    optimizer: torch.optim.Adam
    tokenizer: Tokenizer
    max_input_tokens: int
    steps: int = 0


def init_train_state(
    model: Seq2SeqModel, tokenizer: Tokenizer, config: TrainerConfig
) -> TrainState:
    limit = min(config.max_tokens, model.config.max_positions)
    return TrainState(
        optimizer=torch.optim.Adam(model.parameters(), lr=config.lr),
        tokenizer=tokenizer,
        max_input_tokens=limit,
    )


def train_step(
    model: Seq2SeqModel,
    batch: Sequence[TrainingSample],
    state: TrainState,
    lr: float,
) -> tuple[float, TrainState]:
    """One Adam update from the analytic gradients of the MLE objective."""
    if lr < 0:
        raise ValidationError("lr must be non-negative")
    if not batch:
        raise ValidationError("batch must be non-empty")
    pairs = [sample_pair(sample, state.max_input_tokens) for sample in batch]
    for group in state.optimizer.param_groups:
        group["lr"] = lr
    state.optimizer.zero_grad()
    batch_loss = sequence_loss(model, state.tokenizer, pairs)
    value = float(batch_loss.item())
    if not torch.isfinite(batch_loss):
        raise TrainingError(
            f"non-finite loss {value} on a batch of {len(batch)} samples "
            f"(tasks: {sorted({s.task.value for s in batch})})"
        )
    batch_loss.backward()
    state.optimizer.step()
    state.steps += 1
    if not model.all_finite():
        raise TrainingError("parameters became non-finite after the update")
    return value, state


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    duration: float

    def to_record(self) -> dict:
        return {"epoch": self.epoch, "mean_loss": self.mean_loss, "duration": self.duration}


Callback = Callable[[EpochRecord, Seq2SeqModel], None]


def train(
    model: Seq2SeqModel,
    tokenizer: Tokenizer,
    samples: SampleSet,
    config: TrainerConfig,
    callbacks: Sequence[Callback] = (),
    checkpoint_dir: str | Path | None = None,
) -> list[EpochRecord]:
    """Run max_epochs of plan_epoch + train_step over the mixed-task set.

    Records the per-epoch mean loss (sample-weighted), emits periodic
    checkpoints when a directory and interval are configured, and re-raises
    optimization failures with epoch/batch coordinates attached.
    """
    if config.max_epochs > 0 and len(samples) == 0:
        raise ValidationError("cannot train on an empty sample set")
    torch.manual_seed(config.seed)
    state = init_train_state(model, tokenizer, config)
    history: list[EpochRecord] = []
    for epoch in range(config.max_epochs):
        started = time.perf_counter()
        plan = plan_epoch(samples, config, epoch)
        model.train()
        loss_sum = 0.0
        for batch_index, batch_ids in enumerate(plan.batches):
            batch = [samples.samples[i] for i in batch_ids]
            try:
                value, state = train_step(model, batch, state, config.lr)
            except TrainingError as exc:
                raise TrainingError(str(exc), epoch=epoch, batch=batch_index) from exc
            loss_sum += value * len(batch)
        record = EpochRecord(epoch, loss_sum / len(samples), time.perf_counter() - started)
        history.append(record)
        if (
            checkpoint_dir is not None
            and config.checkpoint_interval > 0
            and (epoch + 1) % config.checkpoint_interval == 0
        ):
            save_checkpoint(
                Path(checkpoint_dir) / f"checkpoint_epoch{epoch:04d}.pt", model, tokenizer
            )
        for callback in callbacks:
            callback(record, model)
    model.eval()
    return history


def _bracketed_tokens(samples: SampleSet, max_input_tokens: int) -> set[str]:
    tokens: set[str] = set()
    for sample in samples.samples:
        input_text, target = sample_pair(sample, max_input_tokens)
        for chunk in (*input_text.split(), *target.split()):
            if chunk.startswith("[") and chunk.endswith("]"):
                tokens.add(chunk)
    for text in PROMPT_TEXTS.values():
        tokens.update(text.split())
    return tokens


def fine_tune(
    checkpoint_path: str | Path,
    samples: SampleSet,
    config: TrainerConfig,
    callbacks: Sequence[Callback] = (),
    checkpoint_dir: str | Path | None = None,
) -> tuple[Seq2SeqModel, Tokenizer, list[EpochRecord]]:
    """Same objective as train, initialized from a checkpoint.

    The checkpoint vocabulary must cover the new samples' special tokens
    (markers, prompts, bracketed labels/placeholders); plain unseen words
    merely map to the unknown token.
    """
    model, tokenizer = load_checkpoint(checkpoint_path)
    limit = min(config.max_tokens, model.config.max_positions)
    missing = sorted(t for t in _bracketed_tokens(samples, limit) if t not in tokenizer)
    if missing:
        raise CheckpointError(
            f"checkpoint vocabulary does not cover required special tokens: {missing}"
        )
    history = train(model, tokenizer, samples, config, callbacks, checkpoint_dir)
    return model, tokenizer, history


def dev_loss_checkpoint_callback(
    dev_samples: SampleSet,
    tokenizer: Tokenizer,
    path: str | Path,
    max_input_tokens: int = 256,
) -> Callback:
    """Optional callback: keep the checkpoint with the best dev loss."""
    best = float("inf")

    def callback(record: EpochRecord, model: Seq2SeqModel) -> None:
        nonlocal best
        model.eval()
        with torch.no_grad():
            pairs = [sample_pair(s, max_input_tokens) for s in dev_samples.samples]
            value = float(sequence_loss(model, tokenizer, pairs).item())
        if value < best:
            best = value
            save_checkpoint(path, model, tokenizer)
        model.train()

    return callback
