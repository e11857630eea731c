"""Trainable input adapter: character embedding plus a ConvNeXt-1D stack.

Each block is depthwise conv -> channel norm -> pointwise expand -> GELU ->
pointwise project, added back residually. Projections start at zero, so a
freshly initialized adapter is exactly the embedding lookup; training
moves away from that identity.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .nn import (
    Parameter,
    Tensor,
    add,
    conv1d_depthwise,
    embedding,
    gelu,
    layer_norm,
    linear,
    mul,
)
from .text import LanguageMask, TextSequence

INIT_STD = 0.02


@dataclass(frozen=True)
class AdapterConfig:
    vocab_size: int
    embed_dim: int = 32
    hidden_dim: int = 32
    n_blocks: int = 2
    kernel_size: int = 7
    expansion_factor: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.embed_dim != self.hidden_dim:
            raise ConfigError(
                f"embed_dim {self.embed_dim} must equal hidden_dim {self.hidden_dim} "
                "(no input projection is configured)"
            )
        if self.kernel_size % 2 != 1:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.n_blocks < 1:
            raise ConfigError(f"n_blocks must be at least 1, got {self.n_blocks}")
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be positive")

    @property
    def receptive_radius(self) -> int:
        return self.n_blocks * (self.kernel_size - 1) // 2

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "AdapterConfig":
        return cls(**json.loads(text))


def seeded_normal(rng: np.random.Generator, shape, std: float, dtype) -> np.ndarray:
    """Canonical float32 values regardless of the runtime float width."""
    vals = (rng.standard_normal(shape) * std).astype(np.float32)
    return vals.astype(dtype)


class AdapterParams:
    """All trainable parameters: E_R plus the per-block ConvNeXt weights."""

    def __init__(self, config: AdapterConfig, dtype=np.float32):
        self.config = config
        rng = np.random.default_rng(config.seed)
        c = config.hidden_dim
        e = config.expansion_factor * c
        k = config.kernel_size

        def param(name, array):
            return Parameter(name, Tensor(array, requires_grad=True))

        def zeros(shape):
            return np.zeros(shape, dtype=dtype)

        self.embed_table = param(
            "embedding", seeded_normal(rng, (config.vocab_size, config.embed_dim), INIT_STD, dtype)
        )
        self.blocks = []
        for b in range(config.n_blocks):
            self.blocks.append(
                {
                    "dw_kernel": param(f"block{b}.dw_kernel", seeded_normal(rng, (c, k), INIT_STD, dtype)),
                    "dw_bias": param(f"block{b}.dw_bias", zeros(c)),
                    "norm_gain": param(f"block{b}.norm_gain", np.ones(c, dtype=dtype)),
                    "norm_shift": param(f"block{b}.norm_shift", zeros(c)),
                    "expand_w": param(f"block{b}.expand_w", seeded_normal(rng, (c, e), INIT_STD, dtype)),
                    "expand_b": param(f"block{b}.expand_b", zeros(e)),
                    # Zero-initialized projection makes every block the identity
                    # at initialization.
                    "project_w": param(f"block{b}.project_w", zeros((e, c))),
                    "project_b": param(f"block{b}.project_b", zeros(c)),
                }
            )

    def parameters(self) -> list[Parameter]:
        out = [self.embed_table]
        for block in self.blocks:
            out.extend(block.values())
        return out

    def param_count(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.tensor.zero_grad()


def embed(seq: TextSequence, params: AdapterParams) -> Tensor:
    """Row t of the output is row seq[t] of the embedding table."""
    return embedding(params.embed_table.tensor, seq.ids)


def _mask_column(mask: LanguageMask, dtype) -> Tensor:
    col = np.asarray(mask.romanian, dtype=dtype).reshape(-1, 1)
    return Tensor(col)


def contextualize(h0: Tensor, params: AdapterParams, mask: LanguageMask | None = None) -> Tensor:
    """Run the ConvNeXt-1D stack; an optional mask zeroes the input first."""
    x = h0
    if mask is not None:
        if len(mask) != h0.shape[0]:
            raise ConfigError(
                f"mask length {len(mask)} does not match sequence length {h0.shape[0]}"
            )
        x = mul(x, _mask_column(mask, h0.data.dtype))
    for block in params.blocks:
        h = conv1d_depthwise(x, block["dw_kernel"].tensor, block["dw_bias"].tensor)
        h = layer_norm(h, block["norm_gain"].tensor, block["norm_shift"].tensor)
        h = gelu(linear(h, block["expand_w"].tensor, block["expand_b"].tensor))
        h = linear(h, block["project_w"].tensor, block["project_b"].tensor)
        x = add(x, h)
    return x


def forward(seq: TextSequence, params: AdapterParams, mask: LanguageMask | None = None) -> Tensor:
    """Contextual embeddings for the frozen backbone: blocks over E_R rows."""
    return contextualize(embed(seq, params), params, mask)
