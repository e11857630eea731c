"""Frozen, seeded stand-in for the synthesis model.

Holds a frozen character embedding, a small conditional velocity-field
network over [noisy-mel | text-embedding | time] channels, the
flow-matching training objective, and an Euler sampler. None of its
parameters are ever updated; a content hash over the canonical float32
bytes pins that down.
"""

from __future__ import annotations

import hashlib
import json
import string
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .nn import (
    Parameter,
    Tensor,
    add,
    concat_cols,
    conv1d_depthwise,
    embedding,
    gelu,
    layer_norm,
    linear,
    mul,
    sub,
    tsum,
)
from .text import SWITCH_CHAR, LanguageMask, TextSequence, Vocab, build_vocab


def default_tts_charset() -> str:
    """Printable ASCII minus the switch control character."""
    return "".join(c for c in map(chr, range(32, 127)) if c != SWITCH_CHAR)


def default_tts_vocab() -> Vocab:
    return build_vocab(list(default_tts_charset()), filler="_")


@dataclass(frozen=True)
class BackboneConfig:
    hidden_dim: int = 32
    mel_dim: int = 16
    time_dim: int = 16
    n_blocks: int = 2
    kernel_size: int = 3
    expansion_factor: int = 2
    seed: int = 0
    charset: str = field(default_factory=default_tts_charset)
    filler: str = "_"

    def __post_init__(self):
        if self.kernel_size % 2 != 1:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.time_dim % 2 != 0:
            raise ConfigError(f"time_dim must be even, got {self.time_dim}")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "BackboneConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class MelSample:
    """Mel frames for one utterance, frame count matching the padded text."""

    frames: np.ndarray

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ConfigError(f"mel frames must be [T, mel_dim] with T >= 1, got {self.frames.shape}")
        if not np.all(np.isfinite(self.frames)):
            raise ConfigError("mel frames contain non-finite values")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def _xavier(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    vals = (rng.standard_normal(shape) / np.sqrt(fan_in)).astype(np.float32)
    return vals.astype(dtype)


class FrozenTTSBackbone:
    """Immutable after construction; safe for concurrent forward evaluation."""

    def __init__(self, config: BackboneConfig = BackboneConfig(), dtype=np.float32):
        self.config = config
        self.dtype = dtype
        self.vocab = build_vocab(list(config.charset), filler=config.filler)
        rng = np.random.default_rng(config.seed)
        d = config.hidden_dim
        width = config.mel_dim + d + config.time_dim
        e = config.expansion_factor * width
        k = config.kernel_size

        def frozen(name, array):
            return Parameter(name, Tensor(array, requires_grad=True), trainable=False)

        self.embed_table = frozen(
            "embedding", _xavier(rng, (len(self.vocab), d), 1, dtype)
        )
        self.blocks = []
        for b in range(config.n_blocks):
            self.blocks.append(
                {
                    "dw_kernel": frozen(f"block{b}.dw_kernel", _xavier(rng, (width, k), k, dtype)),
                    "dw_bias": frozen(f"block{b}.dw_bias", np.zeros(width, dtype=dtype)),
                    "norm_gain": frozen(f"block{b}.norm_gain", np.ones(width, dtype=dtype)),
                    "norm_shift": frozen(f"block{b}.norm_shift", np.zeros(width, dtype=dtype)),
                    "expand_w": frozen(f"block{b}.expand_w", _xavier(rng, (width, e), width, dtype)),
                    "expand_b": frozen(f"block{b}.expand_b", np.zeros(e, dtype=dtype)),
                    "project_w": frozen(f"block{b}.project_w", _xavier(rng, (e, width), e, dtype)),
                    "project_b": frozen(f"block{b}.project_b", np.zeros(width, dtype=dtype)),
                }
            )
        self.head_w = frozen("head_w", _xavier(rng, (width, config.mel_dim), width, dtype))
        self.head_b = frozen("head_b", np.zeros(config.mel_dim, dtype=dtype))
        # Angular frequencies for the sinusoidal time features, pi * 2^i.
        half = config.time_dim // 2
        self._time_freqs = np.pi * (2.0 ** np.arange(half))
        self.content_hash = self.compute_content_hash()

    def parameters(self) -> list[Parameter]:
        out = [self.embed_table]
        for block in self.blocks:
            out.extend(block.values())
        out.extend([self.head_w, self.head_b])
        return out

    def compute_content_hash(self) -> str:
        """SHA-256 over name-sorted canonical float32 little-endian bytes."""
        h = hashlib.sha256()
        for p in sorted(self.parameters(), key=lambda p: p.name):
            h.update(p.name.encode())
            h.update(np.asarray(p.tensor.shape, dtype="<i8").tobytes())
            h.update(np.ascontiguousarray(p.data, dtype="<f4").tobytes())
        return h.hexdigest()

    def _time_row(self, t: float, n_rows: int) -> Tensor:
        angles = self._time_freqs * t
        row = np.concatenate([np.sin(angles), np.cos(angles)]).astype(self.dtype)
        return Tensor(np.tile(row, (n_rows, 1)))

    def embed_frozen(self, seq: TextSequence, mask: LanguageMask) -> Tensor:
        """Frozen embedding of the full sequence, zeroed outside the English mask."""
        if len(mask) != len(seq):
            raise ConfigError(f"mask length {len(mask)} does not match sequence length {len(seq)}")
        rows = embedding(self.embed_table.tensor, seq.ids)
        col = np.asarray(mask.english, dtype=self.dtype).reshape(-1, 1)
        return mul(rows, Tensor(col))

    def predict_velocity(self, xt: Tensor, t: float, h_text: Tensor) -> Tensor:
        """Velocity estimate at (xt, t) conditioned on the text embedding."""
        if not 0.0 <= t <= 1.0:
            raise ConfigError(f"time must lie in [0, 1], got {t}")
        if xt.shape[0] != h_text.shape[0]:
            raise ConfigError(
                f"frame count {xt.shape[0]} does not match conditioning length {h_text.shape[0]}"
            )
        x = concat_cols([xt, h_text, self._time_row(t, xt.shape[0])])
        for block in self.blocks:
            h = conv1d_depthwise(x, block["dw_kernel"].tensor, block["dw_bias"].tensor)
            h = layer_norm(h, block["norm_gain"].tensor, block["norm_shift"].tensor)
            h = gelu(linear(h, block["expand_w"].tensor, block["expand_b"].tensor))
            h = linear(h, block["project_w"].tensor, block["project_b"].tensor)
            x = add(x, h)
        return linear(x, self.head_w.tensor, self.head_b.tensor)

    def cfm_loss(self, batch, h_texts, rng: np.random.Generator, velocity_fn=None):
        """Flow-matching objective over one batch.

        For each sample draws x0 ~ N(0, I) and t ~ U(0, 1), forms the
        linear path x_t = (1-t) x0 + t x1, and regresses the predicted
        velocity onto the path derivative x1 - x0. Returns the mean over
        every (sample, position, channel) element.
        """
        batch = list(batch)
        h_texts = list(h_texts)
        if not batch:
            raise ConfigError("cfm_loss called with an empty batch")
        if len(batch) != len(h_texts):
            raise ConfigError(f"batch size {len(batch)} does not match {len(h_texts)} conditionings")
        if velocity_fn is None:
            velocity_fn = self.predict_velocity

        total = None
        count = 0
        for mel, h_text in zip(batch, h_texts):
            x1 = mel.frames if isinstance(mel, MelSample) else np.asarray(mel)
            x1 = x1.astype(self.dtype)
            if x1.shape[0] != h_text.shape[0]:
                raise ConfigError(
                    f"mel frame count {x1.shape[0]} does not match conditioning length {h_text.shape[0]}"
                )
            t = float(rng.uniform(0.0, 1.0))
            x0 = rng.standard_normal(x1.shape).astype(self.dtype)
            xt = (1.0 - t) * x0 + t * x1
            u = x1 - x0
            v = velocity_fn(Tensor(xt), t, h_text)
            err = sub(v, Tensor(u))
            sq = tsum(mul(err, err))
            total = sq if total is None else add(total, sq)
            count += u.size
        return mul(total, 1.0 / count)

    def sample(self, h_text: Tensor, n_frames: int, n_steps: int, seed: int) -> MelSample:
        """Euler integration from noise at t=0 to a mel estimate at t=1."""
        if n_steps < 1:
            raise ConfigError(f"n_steps must be at least 1, got {n_steps}")
        if h_text.shape[0] != n_frames:
            raise ConfigError(
                f"conditioning length {h_text.shape[0]} does not match n_frames {n_frames}"
            )
        cond = Tensor(h_text.data)  # inference only: detach from any training graph
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n_frames, self.config.mel_dim)).astype(self.dtype)
        dt = 1.0 / n_steps
        for i in range(n_steps):
            t = i / n_steps
            v = self.predict_velocity(Tensor(x), t, cond)
            x = x + dt * v.data
        return MelSample(x)
