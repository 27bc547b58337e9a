"""Tiny causal decoder language model over the 260-token byte vocabulary.

The output projection is tied to the token embedding. Forward takes a
pre-embedded [T, d] sequence so multimodal composition can splice image
features in before any position information is added.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from ..data.tokenizer import VOCAB_SIZE
from ..errors import ValidationError
from ..numerics import Rng, Tensor, add, causal_mask, embedding, matmul, narrow, transpose
from .layers import INIT_STD, LayerNorm, Module, TransformerBlock
from .vision import _config_from_dict


@dataclass(frozen=True)
class LLMConfig:
    width: int = 64
    depth: int = 2
    heads: int = 4
    max_positions: int = 256
    vocab_size: int = VOCAB_SIZE

    def __post_init__(self):
        if self.width % self.heads:
            raise ValidationError(f"width {self.width} not divisible by heads {self.heads}")

    @classmethod
    def from_dict(cls, cfg: dict) -> "LLMConfig":
        return _config_from_dict(cls, cfg)


class LanguageModel(Module):
    def __init__(self, config: LLMConfig, rng: Rng):
        self.config = config
        d = config.width
        self.tok_embed = Tensor(rng.split("tok").normal((config.vocab_size, d), std=INIT_STD),
                                requires_grad=True)
        self.pos_embed = Tensor(rng.split("pos").normal((config.max_positions, d), std=INIT_STD),
                                requires_grad=True)
        self.blocks: List[TransformerBlock] = [
            TransformerBlock(d, config.heads, rng.split(f"block{i}"))
            for i in range(config.depth)
        ]
        self.final_norm = LayerNorm(d)

    @property
    def width(self) -> int:
        return self.config.width

    def embed_ids(self, ids: np.ndarray) -> Tensor:
        return embedding(self.tok_embed, np.asarray(ids, dtype=np.int64))

    def forward_embeds(self, embeds: Tensor) -> Tensor:
        """Causal forward over [T, d] input embeddings; returns [T, vocab] logits."""
        t = embeds.shape[0]
        if t > self.config.max_positions:
            raise ValidationError(
                f"sequence length {t} exceeds max positions {self.config.max_positions}")
        x = add(embeds, narrow(self.pos_embed, 0, 0, t))
        mask = causal_mask(t)
        for block in self.blocks:
            x = block(x, mask)
        x = self.final_norm(x)
        # Weight tying: logits share the token embedding matrix.
        return matmul(x, transpose(self.tok_embed))

    __call__ = forward_embeds
