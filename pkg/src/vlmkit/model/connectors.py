"""Connectors: map vision features [N, d_v] into LLM space [M, d_m].

Five kinds: identity, linear, mlp (two linear layers with GELU), and two
fixed-query designs, resampler (cross-attention only) and qformer
(self-attention over queries, then cross-attention). The fixed-query kinds
output exactly `queries` tokens regardless of N.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import List

from ..errors import DimensionError, ValidationError
from ..numerics import Rng, Tensor, add, gelu
from .layers import INIT_STD, FeedForward, LayerNorm, Linear, Module, MultiHeadAttention
from .vision import _config_from_dict


@dataclass(frozen=True)
class ConnectorConfig:
    d_v: int = 64
    d_m: int = 64
    queries: int = 4      # resampler / qformer only
    depth: int = 1        # resampler / qformer only
    heads: int = 4        # resampler / qformer only

    @classmethod
    def from_dict(cls, cfg: dict) -> "ConnectorConfig":
        return _config_from_dict(cls, cfg)


class Connector(Module):
    kind = "?"

    def __init__(self, config: ConnectorConfig):
        self.config = config

    @property
    def d_v(self) -> int:
        return self.config.d_v

    @property
    def d_m(self) -> int:
        return self.config.d_m

    def _check_input(self, feats: Tensor):
        if feats.ndim != 2 or feats.shape[1] != self.d_v:
            raise DimensionError(
                f"{self.kind} connector expects [N, {self.d_v}] features, got {feats.shape}")


class IdentityConnector(Connector):
    kind = "identity"

    def __init__(self, config: ConnectorConfig, rng: Rng = None):
        if config.d_v != config.d_m:
            raise ValidationError(
                f"identity connector requires d_v == d_m, got {config.d_v} vs {config.d_m}")
        super().__init__(config)

    def forward(self, feats: Tensor) -> Tensor:
        self._check_input(feats)
        return feats

    __call__ = forward


class LinearConnector(Connector):
    kind = "linear"

    def __init__(self, config: ConnectorConfig, rng: Rng):
        super().__init__(config)
        self.proj = Linear(config.d_v, config.d_m, rng.split("proj"))

    def forward(self, feats: Tensor) -> Tensor:
        self._check_input(feats)
        return self.proj(feats)

    __call__ = forward


class MlpConnector(Connector):
    kind = "mlp"

    def __init__(self, config: ConnectorConfig, rng: Rng):
        super().__init__(config)
        self.l1 = Linear(config.d_v, config.d_m, rng.split("l1"))
        self.l2 = Linear(config.d_m, config.d_m, rng.split("l2"))

    def forward(self, feats: Tensor) -> Tensor:
        self._check_input(feats)
        return self.l2(gelu(self.l1(feats)))

    __call__ = forward


class _CrossBlock(Module):
    """Pre-norm cross-attention to the image features plus feed-forward."""

    def __init__(self, d_m: int, d_v: int, heads: int, rng: Rng):
        self.ln_q = LayerNorm(d_m)
        self.cross = MultiHeadAttention(d_m, heads, rng.split("cross"), d_kv_in=d_v)
        self.ln_ff = LayerNorm(d_m)
        self.ff = FeedForward(d_m, rng.split("ff"))

    def forward(self, q: Tensor, feats: Tensor) -> Tensor:
        q = add(q, self.cross(self.ln_q(q), feats))
        q = add(q, self.ff(self.ln_ff(q)))
        return q

    __call__ = forward


class _QFormerBlock(Module):
    """Self-attention over the queries, then cross-attention, then FF."""

    def __init__(self, d_m: int, d_v: int, heads: int, rng: Rng):
        self.ln_self = LayerNorm(d_m)
        self.self_attn = MultiHeadAttention(d_m, heads, rng.split("self"))
        self.ln_q = LayerNorm(d_m)
        self.cross = MultiHeadAttention(d_m, heads, rng.split("cross"), d_kv_in=d_v)
        self.ln_ff = LayerNorm(d_m)
        self.ff = FeedForward(d_m, rng.split("ff"))

    def forward(self, q: Tensor, feats: Tensor) -> Tensor:
        normed = self.ln_self(q)
        q = add(q, self.self_attn(normed, normed))
        q = add(q, self.cross(self.ln_q(q), feats))
        q = add(q, self.ff(self.ln_ff(q)))
        return q

    __call__ = forward


class ResamplerConnector(Connector):
    kind = "resampler"

    def __init__(self, config: ConnectorConfig, rng: Rng):
        super().__init__(config)
        self.query_embed = Tensor(
            rng.split("queries").normal((config.queries, config.d_m), std=INIT_STD),
            requires_grad=True)
        self.blocks: List[_CrossBlock] = [
            _CrossBlock(config.d_m, config.d_v, config.heads, rng.split(f"block{i}"))
            for i in range(config.depth)
        ]

    def forward(self, feats: Tensor) -> Tensor:
        self._check_input(feats)
        q = self.query_embed
        for block in self.blocks:
            q = block(q, feats)
        return q

    __call__ = forward


class QFormerConnector(Connector):
    kind = "qformer"

    def __init__(self, config: ConnectorConfig, rng: Rng):
        super().__init__(config)
        self.query_embed = Tensor(
            rng.split("queries").normal((config.queries, config.d_m), std=INIT_STD),
            requires_grad=True)
        self.blocks: List[_QFormerBlock] = [
            _QFormerBlock(config.d_m, config.d_v, config.heads, rng.split(f"block{i}"))
            for i in range(config.depth)
        ]

    def forward(self, feats: Tensor) -> Tensor:
        self._check_input(feats)
        q = self.query_embed
        for block in self.blocks:
            q = block(q, feats)
        return q

    __call__ = forward


CONNECTOR_CLASSES = {
    cls.kind: cls
    for cls in (IdentityConnector, LinearConnector, MlpConnector,
                ResamplerConnector, QFormerConnector)
}
