"""Pluggable text-to-text generation backends.

The orchestrator only sees the :class:`GenerationBackend` protocol; behind it
sit the built-in reference encoder-decoder (:mod:`todkit.backend.model`) and
a wire-protocol client for external models (:mod:`todkit.backend.remote`).
``generate`` must be safe to call concurrently: backends may not mutate
shared state while serving requests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..errors import ValidationError


@dataclass(frozen=True)
class GenerationRequest:
    input_text: str
    max_tokens: int
    mode: str = "greedy"

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be >= 1")
        if self.mode != "greedy":
            raise ValidationError(f"unsupported decode mode {self.mode!r}")


@dataclass(frozen=True)
class GenerationResult:
    output_text: str
    token_count: int
    duration: float

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValidationError("duration must be >= 0")
        if self.token_count < 0:
            raise ValidationError("token_count must be >= 0")


@runtime_checkable
class GenerationBackend(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResult:
        ...


from .tokenizer import Tokenizer  # noqa: E402
from .model import (  # noqa: E402
    ModelConfig,
    ReferenceBackend,
    Seq2SeqModel,
    build_model,
    gradient_check,
    loss,
    generate,
    load_checkpoint,
    save_checkpoint,
    sequence_loss,
)
from .remote import BackendServer, RemoteBackend, serve  # noqa: E402

__all__ = [
    "BackendServer",
    "GenerationBackend",
    "GenerationRequest",
    "GenerationResult",
    "ModelConfig",
    "ReferenceBackend",
    "RemoteBackend",
    "Seq2SeqModel",
    "Tokenizer",
    "build_model",
    "generate",
    "gradient_check",
    "load_checkpoint",
    "loss",
    "save_checkpoint",
    "sequence_loss",
    "serve",
]
