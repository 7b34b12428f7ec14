"""Whitespace-plus-special-token tokenizer with a corpus-built vocabulary.

Tokens are whitespace-delimited chunks, so encode/decode round-trips exactly
on any whitespace-normalized, in-vocabulary text and special tokens can never
be split.  Subword modeling is deliberately out of scope.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Sequence

from ..dialogue import DEFAULT_MARKERS, PROMPT_TEXTS
from ..errors import ValidationError
from ..grounding import DB_TOKENS, DelexTokenSet

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"

_PUNCTUATION = ("[", "]", "{", "}", ",", ";", "=", ".", "?", "!")


def base_special_tokens(ontology: DelexTokenSet | None = None) -> list[str]:
    """Control tokens, speaker markers, prompt words, DB tokens, placeholders."""
    ontology = ontology or DelexTokenSet.default()
    tokens: list[str] = [PAD, BOS, EOS, UNK, DEFAULT_MARKERS.user, DEFAULT_MARKERS.system]
    for text in PROMPT_TEXTS.values():
        tokens.extend(text.split())
    tokens.extend(DB_TOKENS)
    tokens.extend(sorted(ontology.placeholders()))
    tokens.extend(_PUNCTUATION)
    seen: dict[str, None] = {}
    for token in tokens:
        seen.setdefault(token)
    return list(seen)


class Tokenizer:
    def __init__(self, vocabulary: Sequence[str]):
        self.id_to_token: tuple[str, ...] = tuple(vocabulary)
        if len(set(self.id_to_token)) != len(self.id_to_token):
            raise ValidationError("vocabulary contains duplicate tokens")
        for required in (PAD, BOS, EOS, UNK):
            if required not in self.id_to_token:
                raise ValidationError(f"vocabulary is missing the {required} token")
        self.token_to_id = {token: i for i, token in enumerate(self.id_to_token)}
        self.pad_id = self.token_to_id[PAD]
        self.bos_id = self.token_to_id[BOS]
        self.eos_id = self.token_to_id[EOS]
        self.unk_id = self.token_to_id[UNK]

    @classmethod
    def build(
        cls,
        texts: Iterable[str],
        extra_special_tokens: Sequence[str] = (),
        ontology: DelexTokenSet | None = None,
    ) -> "Tokenizer":
        """Specials first, then every corpus chunk in lexicographic order."""
        specials = base_special_tokens(ontology)
        specials.extend(t for t in extra_special_tokens if t not in specials)
        seen = set(specials)
        corpus_tokens: set[str] = set()
        for text in texts:
            corpus_tokens.update(text.split())
        vocabulary = specials + sorted(corpus_tokens - seen)
        return cls(vocabulary)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, text: str, add_bos: bool = False, add_eos: bool = False) -> list[int]:
        ids = [self.token_to_id.get(token, self.unk_id) for token in text.split()]
        if add_bos:
            ids.insert(0, self.bos_id)
        if add_eos:
            ids.append(self.eos_id)
        return ids

    def decode(self, ids: Iterable[int], skip_special: bool = True) -> str:
        skip = {self.pad_id, self.bos_id, self.eos_id} if skip_special else set()
        return " ".join(self.id_to_token[i] for i in ids if i not in skip)

    def count(self, text: str) -> int:
        return len(text.split())

    def vocab_hash(self) -> str:
        payload = "\n".join(self.id_to_token).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()
