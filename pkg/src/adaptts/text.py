"""Character vocabulary, encoding, filler padding, and code-switch parsing.

The switch character ``~`` is control-only: it never receives an id, is
consumed during parsing, and toggles the active language (sequences start
in Romanian mode). Language masks partition positions between the two
vocabularies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SWITCH_CHAR = "~"


@dataclass(frozen=True)
class Vocab:
    """Dense character-to-id map with a designated filler (padding) id."""

    chars: tuple[str, ...]
    filler: str
    char_to_id: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "char_to_id", {c: i for i, c in enumerate(self.chars)}
        )

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, ch: str) -> bool:
        return ch in self.char_to_id

    @property
    def filler_id(self) -> int:
        return self.char_to_id[self.filler]

    def id_of(self, ch: str) -> int:
        return self.char_to_id[ch]

    def char_of(self, idx: int) -> str:
        return self.chars[idx]

    def to_json(self) -> str:
        return json.dumps({"chars": list(self.chars), "filler": self.filler}, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Vocab":
        obj = json.loads(text)
        return build_vocab(obj["chars"], obj["filler"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TextSequence:
    """Token ids for one utterance; at least one position."""

    ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class LanguageMask:
    """Per-position Romanian/English membership; the two masks partition."""

    romanian: tuple[int, ...]
    english: tuple[int, ...]

    def __post_init__(self):
        if len(self.romanian) != len(self.english):
            raise ConfigError(
                f"mask lengths disagree: {len(self.romanian)} vs {len(self.english)}"
            )
        for t, (r, e) in enumerate(zip(self.romanian, self.english)):
            if r + e != 1 or r not in (0, 1):
                raise ConfigError(f"masks do not partition position {t}: ({r}, {e})")

    def __len__(self) -> int:
        return len(self.romanian)

    @classmethod
    def all_romanian(cls, length: int) -> "LanguageMask":
        return cls(tuple([1] * length), tuple([0] * length))


def build_vocab(charset, filler: str) -> Vocab:
    """Deterministic vocabulary: code-point-sorted charset plus the filler."""
    chars = list(charset)
    if not chars:
        raise ConfigError("charset is empty")
    if SWITCH_CHAR in chars or filler == SWITCH_CHAR:
        raise ConfigError(f"{SWITCH_CHAR!r} is the switch control token and cannot be in a vocabulary")
    seen = set()
    for c in chars:
        if c in seen:
            raise ConfigError(f"duplicate character {c!r} in charset")
        seen.add(c)
    if filler not in seen:
        chars.append(filler)
    return Vocab(tuple(sorted(chars)), filler)


def encode(text: str, vocab: Vocab) -> TextSequence:
    """One id per character; switch characters are dropped."""
    ids = []
    for pos, ch in enumerate(text):
        if ch == SWITCH_CHAR:
            continue
        if ch not in vocab:
            raise ConfigError(f"character {ch!r} at position {pos} is not in the vocabulary")
        ids.append(vocab.id_of(ch))
    if not ids:
        raise ConfigError("text is empty after parsing")
    return TextSequence(tuple(ids))


def decode(seq: TextSequence, vocab: Vocab) -> str:
    return "".join(vocab.char_of(i) for i in seq.ids)


def parse_code_switch(text: str, vocab_r: Vocab, vocab_tts: Vocab) -> tuple[TextSequence, LanguageMask]:
    """Split an annotated utterance into ids and language masks.

    Parsing starts in Romanian mode; every switch character flips the mode
    and produces no position. Each position is encoded against the active
    vocabulary; characters missing from it take that vocabulary's filler
    id, so the returned ids live in per-position vocabulary spaces.
    """
    ids: list[int] = []
    m_r: list[int] = []
    in_english = False
    for ch in text:
        if ch == SWITCH_CHAR:
            in_english = not in_english
            continue
        vocab = vocab_tts if in_english else vocab_r
        ids.append(vocab.id_of(ch) if ch in vocab else vocab.filler_id)
        m_r.append(0 if in_english else 1)
    if not ids:
        raise ConfigError("text is empty after parsing")
    m_e = tuple(1 - r for r in m_r)
    return TextSequence(tuple(ids)), LanguageMask(tuple(m_r), m_e)


def pad_to_frames(seq: TextSequence, n_frames: int, vocab: Vocab) -> TextSequence:
    """Extend with filler ids to the mel frame count."""
    if n_frames < len(seq):
        raise ConfigError(
            f"cannot pad sequence of length {len(seq)} down to {n_frames} frames"
        )
    return TextSequence(seq.ids + (vocab.filler_id,) * (n_frames - len(seq)))


def pad_mask(mask: LanguageMask, n_frames: int) -> LanguageMask:
    """Filler positions join the Romanian mask so padding flows through the
    trained adapter path, matching monolingual training."""
    if n_frames < len(mask):
        raise ConfigError(
            f"cannot pad mask of length {len(mask)} down to {n_frames} frames"
        )
    extra = n_frames - len(mask)
    return LanguageMask(mask.romanian + (1,) * extra, mask.english + (0,) * extra)
