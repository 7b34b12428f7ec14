"""Reference encoder-decoder written out from first principles.

A small pre-norm transformer (multi-head attention, GELU feed-forward,
learned positions) trained from random initialization.  The prompted
multi-task mechanism is the subject under test, not the backbone, so the
model stays deliberately tiny and CPU-friendly.  Gradients come from
autograd and are verified against central finite differences by
:func:`gradient_check`.

Generation is read-only over the parameters (safe for concurrent callers);
training mutates them and must stay single-writer.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import torch
from torch import Tensor, nn

from ..dialogue import TrainingSample, build_input
from ..errors import CheckpointError, ValidationError
from . import GenerationRequest, GenerationResult
from .tokenizer import Tokenizer

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 128
    heads: int = 4
    layers: int = 2
    ff_width: int = 256
    max_positions: int = 256

    def __post_init__(self) -> None:
        if self.vocab_size < 5:
            raise ValidationError("vocab_size must cover the control tokens")
        if self.d_model % self.heads != 0:
            raise ValidationError("d_model must be divisible by heads")
        for name in ("d_model", "heads", "layers", "ff_width", "max_positions"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = d_model // heads
        self.query = nn.Linear(d_model, d_model)
        self.key = nn.Linear(d_model, d_model)
        self.value = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)

    def forward(
        self,
        queries: Tensor,
        keys: Tensor,
        values: Tensor,
        key_padding: Tensor | None = None,
        causal: bool = False,
    ) -> Tensor:
        batch, q_len, _ = queries.shape
        k_len = keys.shape[1]

        def split(t: Tensor) -> Tensor:
            return t.view(batch, -1, self.heads, self.head_dim).transpose(1, 2)

        q = split(self.query(queries))
        k = split(self.key(keys))
        v = split(self.value(values))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if causal:
            future = torch.triu(
                torch.ones(q_len, k_len, dtype=torch.bool, device=scores.device), diagonal=1
            )
            scores = scores.masked_fill(future, float("-inf"))
        if key_padding is not None:
            scores = scores.masked_fill(key_padding[:, None, None, :], float("-inf"))
        attended = torch.softmax(scores, dim=-1) @ v
        merged = attended.transpose(1, 2).reshape(batch, q_len, -1)
        return self.out(merged)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, ff_width: int):
        super().__init__()
        self.up = nn.Linear(d_model, ff_width)
        self.down = nn.Linear(ff_width, d_model)

    def forward(self, x: Tensor) -> Tensor:
        return self.down(torch.nn.functional.gelu(self.up(x)))


class EncoderLayer(nn.Module):
    def __init__(self, d_model: int, heads: int, ff_width: int):
        super().__init__()
        self.attn_norm = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, heads)
        self.ff_norm = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_width)

    def forward(self, x: Tensor, padding: Tensor | None) -> Tensor:
        normed = self.attn_norm(x)
        x = x + self.attn(normed, normed, normed, key_padding=padding)
        return x + self.ff(self.ff_norm(x))


class DecoderLayer(nn.Module):
    def __init__(self, d_model: int, heads: int, ff_width: int):
        super().__init__()
        self.self_norm = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, heads)
        self.cross_norm = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, heads)
        self.ff_norm = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_width)

    def forward(self, x: Tensor, memory: Tensor, memory_padding: Tensor | None) -> Tensor:
        normed = self.self_norm(x)
        x = x + self.self_attn(normed, normed, normed, causal=True)
        normed = self.cross_norm(x)
        x = x + self.cross_attn(normed, memory, memory, key_padding=memory_padding)
        return x + self.ff(self.ff_norm(x))


class Seq2SeqModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.d_model
        self.token_embedding = nn.Embedding(config.vocab_size, d)
        self.encoder_positions = nn.Embedding(config.max_positions, d)
        self.decoder_positions = nn.Embedding(config.max_positions, d)
        self.encoder_layers = nn.ModuleList(
            EncoderLayer(d, config.heads, config.ff_width) for _ in range(config.layers)
        )
        self.decoder_layers = nn.ModuleList(
            DecoderLayer(d, config.heads, config.ff_width) for _ in range(config.layers)
        )
        self.encoder_norm = nn.LayerNorm(d)
        self.decoder_norm = nn.LayerNorm(d)
        self.projection = nn.Linear(d, config.vocab_size)

    def _embed(self, ids: Tensor, positions: nn.Embedding) -> Tensor:
        length = ids.shape[1]
        if length > self.config.max_positions:
            raise ValidationError(
                f"sequence length {length} exceeds max_positions {self.config.max_positions}"
            )
        pos = torch.arange(length, device=ids.device)
        return self.token_embedding(ids) + positions(pos)[None, :, :]

    def encode(self, src_ids: Tensor, src_padding: Tensor | None) -> Tensor:
        x = self._embed(src_ids, self.encoder_positions)
        for layer in self.encoder_layers:
            x = layer(x, src_padding)
        return self.encoder_norm(x)

    def decode(
        self, tgt_ids: Tensor, memory: Tensor, memory_padding: Tensor | None
    ) -> Tensor:
        """Logits over the vocabulary for every target position."""
        x = self._embed(tgt_ids, self.decoder_positions)
        for layer in self.decoder_layers:
            x = layer(x, memory, memory_padding)
        return self.projection(self.decoder_norm(x))

    def forward(
        self, src_ids: Tensor, src_padding: Tensor | None, tgt_ids: Tensor
    ) -> Tensor:
        memory = self.encode(src_ids, src_padding)
        return self.decode(tgt_ids, memory, src_padding)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def all_finite(self) -> bool:
        return all(torch.isfinite(p).all().item() for p in self.parameters())


def build_model(config: ModelConfig, seed: int = 0) -> Seq2SeqModel:
    """Deterministically initialized model; same (config, seed) -> same weights."""
    torch.manual_seed(seed)
    return Seq2SeqModel(config)


def _pad_batch(seqs: Sequence[Sequence[int]], pad_id: int) -> Tensor:
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), pad_id, dtype=torch.long)
    for row, seq in enumerate(seqs):
        out[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
    return out


def loss_from_ids(
    model: Seq2SeqModel,
    src_seqs: Sequence[Sequence[int]],
    tgt_seqs: Sequence[Sequence[int]],
    *,
    pad_id: int,
    bos_id: int,
    eos_id: int,
) -> Tensor:
    """Mean over the batch of token-summed teacher-forced NLL.

    Each target supervises its tokens plus the end marker; padding positions
    contribute exactly zero.
    """
    if not src_seqs or len(src_seqs) != len(tgt_seqs):
        raise ValidationError("batch must be non-empty and aligned")
    if any(len(t) == 0 for t in tgt_seqs):
        raise ValidationError("targets must be non-empty")
    device = next(model.parameters()).device
    src = _pad_batch(src_seqs, pad_id).to(device)
    tgt_in = _pad_batch([[bos_id, *t] for t in tgt_seqs], pad_id).to(device)
    tgt_out = _pad_batch([[*t, eos_id] for t in tgt_seqs], pad_id).to(device)
    src_padding = src.eq(pad_id)
    if src_padding.all(dim=1).any():
        raise ValidationError("inputs must contain at least one token")
    logits = model(src, src_padding, tgt_in)
    log_probs = torch.log_softmax(logits, dim=-1)
    token_nll = -log_probs.gather(-1, tgt_out.unsqueeze(-1)).squeeze(-1)
    mask = tgt_out.ne(pad_id)
    return (token_nll * mask).sum(dim=1).mean()


def sequence_loss(
    model: Seq2SeqModel, tokenizer: Tokenizer, pairs: Sequence[tuple[str, str]]
) -> Tensor:
    """Eq-style MLE objective over (input text, target text) pairs."""
    if not pairs:
        raise ValidationError("batch must be non-empty")
    src_seqs = [tokenizer.encode(inp) for inp, _ in pairs]
    tgt_seqs = [tokenizer.encode(out) for _, out in pairs]
    return loss_from_ids(
        model,
        src_seqs,
        tgt_seqs,
        pad_id=tokenizer.pad_id,
        bos_id=tokenizer.bos_id,
        eos_id=tokenizer.eos_id,
    )


def sample_pair(sample: TrainingSample, max_input_tokens: int) -> tuple[str, str]:
    return build_input(sample.prompt, sample.context, None, max_input_tokens), sample.target


def loss(
    model: Seq2SeqModel,
    tokenizer: Tokenizer,
    samples: Sequence[TrainingSample],
    max_input_tokens: int | None = None,
) -> Tensor:
    """Objective over task-tagged samples (prompt-prefixed inputs)."""
    if not samples:
        raise ValidationError("batch must be non-empty")
    limit = max_input_tokens or model.config.max_positions
    limit = min(limit, model.config.max_positions)
    return sequence_loss(model, tokenizer, [sample_pair(s, limit) for s in samples])


@torch.no_grad()
def greedy_ids(model: Seq2SeqModel, src_ids: list[int], max_tokens: int, *,
               pad_id: int, bos_id: int, eos_id: int) -> list[int]:
    """Greedy argmax decoding until the end marker or the token budget."""
    device = next(model.parameters()).device
    if len(src_ids) > model.config.max_positions:
        src_ids = src_ids[-model.config.max_positions :]
    src = torch.tensor([src_ids], dtype=torch.long, device=device)
    memory = model.encode(src, None)
    generated: list[int] = []
    ys = [bos_id]
    for _ in range(max_tokens):
        if len(ys) > model.config.max_positions:
            break
        tgt = torch.tensor([ys], dtype=torch.long, device=device)
        logits = model.decode(tgt, memory, None)
        next_id = int(torch.argmax(logits[0, -1]).item())
        if next_id == eos_id:
            break
        generated.append(next_id)
        ys.append(next_id)
    return generated


def generate(
    model: Seq2SeqModel, tokenizer: Tokenizer, request: GenerationRequest
) -> GenerationResult:
    """Deterministic greedy generation with wall-clock accounting."""
    started = time.perf_counter()
    was_training = model.training
    model.eval()
    try:
        src_ids = tokenizer.encode(request.input_text)
        if not src_ids:
            src_ids = [tokenizer.bos_id]
        ids = greedy_ids(
            model,
            src_ids,
            request.max_tokens,
            pad_id=tokenizer.pad_id,
            bos_id=tokenizer.bos_id,
            eos_id=tokenizer.eos_id,
        )
    finally:
        if was_training:
            model.train()
    return GenerationResult(
        output_text=tokenizer.decode(ids),
        token_count=len(ids),
        duration=time.perf_counter() - started,
    )


class ReferenceBackend:
    """The built-in model behind the generation protocol."""

    def __init__(self, model: Seq2SeqModel, tokenizer: Tokenizer):
        self.model = model
        self.tokenizer = tokenizer
        self.model.eval()

    def generate(self, request: GenerationRequest) -> GenerationResult:
        return generate(self.model, self.tokenizer, request)


def tiny_config(vocab_size: int = 31) -> ModelConfig:
    """Config small enough (<1e4 parameters) for finite-difference checks."""
    return ModelConfig(
        vocab_size=vocab_size, d_model=16, heads=2, layers=1, ff_width=24, max_positions=24
    )


def gradient_check(
    config: ModelConfig | None = None,
    epsilon: float = 1e-4,
    *,
    seed: int = 0,
    coordinates: int = 200,
    batch_size: int = 3,
) -> float:
    """Max relative error between autograd and central finite differences.

    Runs in float64 on a random batch over a random parameter subset of at
    least ``coordinates`` coordinates; fully deterministic for a fixed seed.
    """
    if not 1e-6 <= epsilon <= 1e-3:
        raise ValidationError("epsilon must be within [1e-6, 1e-3]")
    config = config or tiny_config()
    model = build_model(config, seed=seed).double()
    if model.parameter_count() > 10_000:
        raise ValidationError(
            f"gradient_check expects a tiny model, got {model.parameter_count()} parameters"
        )
    rng = torch.Generator().manual_seed(seed)
    first_regular = 4  # ids 0..3 are control tokens
    src_seqs = [
        torch.randint(
            first_regular, config.vocab_size, (int(torch.randint(4, 9, (1,), generator=rng)),),
            generator=rng,
        ).tolist()
        for _ in range(batch_size)
    ]
    tgt_seqs = [
        torch.randint(
            first_regular, config.vocab_size, (int(torch.randint(2, 6, (1,), generator=rng)),),
            generator=rng,
        ).tolist()
        for _ in range(batch_size)
    ]

    def objective() -> Tensor:
        return loss_from_ids(model, src_seqs, tgt_seqs, pad_id=0, bos_id=1, eos_id=2)

    model.zero_grad()
    objective().backward()
    parameters = [p for p in model.parameters() if p.requires_grad]
    sizes = [p.numel() for p in parameters]
    total = sum(sizes)
    count = min(coordinates, total)
    flat_indices = torch.randperm(total, generator=rng)[:count].tolist()

    max_relative_error = 0.0
    with torch.no_grad():
        for flat in flat_indices:
            param_index = 0
            while flat >= sizes[param_index]:
                flat -= sizes[param_index]
                param_index += 1
            param = parameters[param_index]
            original = param.view(-1)[flat].item()
            param.view(-1)[flat] = original + epsilon
            plus = objective().item()
            param.view(-1)[flat] = original - epsilon
            minus = objective().item()
            param.view(-1)[flat] = original
            numeric = (plus - minus) / (2 * epsilon)
            analytic = param.grad.view(-1)[flat].item()
            scale = max(1.0, abs(numeric), abs(analytic))
            max_relative_error = max(max_relative_error, abs(numeric - analytic) / scale)
    return max_relative_error


def save_checkpoint(path: str | Path, model: Seq2SeqModel, tokenizer: Tokenizer) -> None:
    """Versioned container: config + parameters + tokenizer vocabulary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "state": {k: v.clone() for k, v in model.state_dict().items()},
        "vocabulary": list(tokenizer.id_to_token),
        "vocab_hash": tokenizer.vocab_hash(),
    }
    torch.save(payload, path)


def load_checkpoint(
    path: str | Path, expected_vocab_hash: str | None = None
) -> tuple[Seq2SeqModel, Tokenizer]:
    path = Path(path)
    try:
        payload = torch.load(path, weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint container: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {payload.get('version') if isinstance(payload, dict) else '?'}"
        )
    tokenizer = Tokenizer(payload["vocabulary"])
    if tokenizer.vocab_hash() != payload["vocab_hash"]:
        raise CheckpointError(f"{path}: stored vocabulary does not match its recorded hash")
    if expected_vocab_hash is not None and expected_vocab_hash != payload["vocab_hash"]:
        raise CheckpointError(
            f"{path}: checkpoint vocabulary hash {payload['vocab_hash'][:12]}... does not "
            f"match the expected {expected_vocab_hash[:12]}..."
        )
    model = Seq2SeqModel(ModelConfig(**payload["config"]))
    model.load_state_dict(payload["state"])
    model.eval()
    return model, tokenizer
