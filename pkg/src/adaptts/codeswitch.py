"""Merge the trainable Romanian path with the frozen English path.

h_cs = h_R + h_E, where h_R runs the full adapter with its input zeroed at
English positions and h_E is the frozen embedding zeroed at Romanian
positions. Parsed sequences carry per-position vocabulary spaces, so each
table is gathered with out-of-range ids clamped to its filler id; the
clamped rows sit under a zero mask and never reach the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import adapter as adapter_mod
from .adapter import AdapterParams
from .backbone import FrozenTTSBackbone, MelSample
from .errors import ConfigError
from .nn import Tensor, add
from .text import (
    LanguageMask,
    TextSequence,
    Vocab,
    pad_mask,
    pad_to_frames,
    parse_code_switch,
)


@dataclass(frozen=True)
class MergedEmbedding:
    """Combined conditioning sequence with per-position language tags."""

    h_cs: Tensor
    provenance: tuple[str, ...]  # "R" or "E" per position

    def __post_init__(self):
        if self.h_cs.shape[0] != len(self.provenance):
            raise ConfigError(
                f"embedding rows {self.h_cs.shape[0]} do not match provenance length {len(self.provenance)}"
            )


def _clamped(ids, active, table_size: int, filler_id: int) -> TextSequence:
    """Replace ids at inactive or out-of-range positions with the filler id."""
    out = []
    for idx, is_active in zip(ids, active):
        if is_active and not 0 <= idx < table_size:
            raise ConfigError(f"id {idx} out of range for a table of {table_size} rows")
        out.append(idx if (is_active and 0 <= idx < table_size) else filler_id)
    return TextSequence(tuple(out))


def merge(
    seq: TextSequence,
    mask: LanguageMask,
    adapter_params: AdapterParams,
    backbone: FrozenTTSBackbone,
) -> MergedEmbedding:
    """h_R + h_E over one parsed sequence."""
    if len(mask) != len(seq):
        raise ConfigError(f"mask length {len(mask)} does not match sequence length {len(seq)}")

    if all(e == 0 for e in mask.english):
        # Monolingual reduction: identical to the plain adapter forward.
        h_r = adapter_mod.forward(seq, adapter_params, mask)
        return MergedEmbedding(h_r, tuple("R" for _ in mask.romanian))

    # Row 0 stands in on the adapter side (it has no vocabulary handle);
    # every clamped row sits under a zero mask either way.
    seq_r = _clamped(seq.ids, mask.romanian, adapter_params.config.vocab_size, 0)
    h_r = adapter_mod.forward(seq_r, adapter_params, mask)

    seq_e = _clamped(seq.ids, mask.english, len(backbone.vocab), backbone.vocab.filler_id)
    h_e = backbone.embed_frozen(seq_e, mask)

    h_cs = add(h_r, h_e)
    tags = tuple("R" if r else "E" for r in mask.romanian)
    return MergedEmbedding(h_cs, tags)


def synthesize_cs(
    text: str,
    vocab_r: Vocab,
    adapter_params: AdapterParams,
    backbone: FrozenTTSBackbone,
    n_steps: int,
    seed: int,
    n_frames: int | None = None,
) -> MelSample:
    """Parse -> merge -> Euler sampling; deterministic for a fixed seed."""
    seq, mask = parse_code_switch(text, vocab_r, backbone.vocab)
    if n_frames is not None:
        seq = pad_to_frames(seq, n_frames, vocab_r)
        mask = pad_mask(mask, n_frames)
    merged = merge(seq, mask, adapter_params, backbone)
    return backbone.sample(merged.h_cs, len(seq), n_steps, seed)


def contextualize_zero_rows(
    adapter_params: AdapterParams, length: int, dtype=np.float32
) -> Tensor:
    """The adapter stack applied to an all-zero input of the given length."""
    zeros = Tensor(np.zeros((length, adapter_params.config.hidden_dim), dtype=dtype))
    return adapter_mod.contextualize(zeros, adapter_params)
