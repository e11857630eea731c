"""Flow-matching training of the adapter against the frozen backbone.

Includes the synthetic letter-to-sound corpus generator (each character
owns a fixed seeded mel template, so the text-to-mel map is learnable),
frame-budget batching, the warmup learning-rate schedule, a decoupled
weight-decay Adam optimizer that touches trainable parameters only, and
the checkpoint container format.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adapter import AdapterConfig, AdapterParams, forward
from .backbone import BackboneConfig, FrozenTTSBackbone, MelSample
from .errors import ConfigError, TrainingAborted
from .nn import Parameter, backward
from .text import Vocab, build_vocab, encode, pad_to_frames

CHECKPOINT_MAGIC = b"ATCK"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    max_steps: int = 40500
    warmup_updates: int = 50
    frame_budget: int = 16384
    max_samples_per_batch: int = 128
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    checkpoint_every: int = 1000

    def __post_init__(self):
        if self.warmup_updates < 0:
            raise ConfigError("warmup_updates must be non-negative")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if self.frame_budget < 1 or self.max_samples_per_batch < 1:
            raise ConfigError("frame_budget and max_samples_per_batch must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    text: str
    mel_path: str
    n_frames: int


@dataclass
class CorpusManifest:
    entries: list[CorpusEntry]
    base_dir: Path

    def __len__(self) -> int:
        return len(self.entries)

    def mel_file(self, entry: CorpusEntry) -> Path:
        p = Path(entry.mel_path)
        return p if p.is_absolute() else self.base_dir / p


def save_mel(path: str | Path, frames: np.ndarray) -> None:
    """Raw little-endian float32 rows plus a {frames, channels} sidecar."""
    path = Path(path)
    data = np.ascontiguousarray(frames, dtype="<f4")
    path.write_bytes(data.tobytes())
    sidecar = {"frames": int(data.shape[0]), "channels": int(data.shape[1])}
    path.with_suffix(".json").write_text(json.dumps(sidecar))


def load_mel(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        sidecar = json.loads(path.with_suffix(".json").read_text())
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read mel file {path}: {exc}") from exc
    frames = np.frombuffer(raw, dtype="<f4").reshape(sidecar["frames"], sidecar["channels"])
    return frames.astype(np.float32)


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    lines = [json.dumps(asdict(e), ensure_ascii=False) for e in manifest.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    entries = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    for line in text.splitlines():
        if line.strip():
            entries.append(CorpusEntry(**json.loads(line)))
    return CorpusManifest(entries, path.parent)


def make_synthetic_corpus(
    n_sentences: int,
    charset: str,
    mel_dim: int,
    frames_per_char: int,
    noise_std: float,
    seed: int,
    out_dir: str | Path,
    min_len: int = 4,
    max_len: int = 8,
    template_std: float = 1.0,
) -> CorpusManifest:
    """Sentences of random characters; each character contributes its fixed
    random template for ``frames_per_char`` frames, plus gaussian noise."""
    out_dir = Path(out_dir)
    mel_dir = out_dir / "mels"
    mel_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    chars = sorted(set(charset))
    if not chars:
        raise ConfigError("charset is empty")
    templates = {
        c: (rng.standard_normal(mel_dim) * template_std).astype(np.float32) for c in chars
    }

    entries = []
    for i in range(n_sentences):
        length = int(rng.integers(min_len, max_len + 1))
        text = "".join(rng.choice(chars) for _ in range(length))
        frames = np.concatenate(
            [np.tile(templates[c], (frames_per_char, 1)) for c in text]
        )
        if noise_std > 0:
            frames = frames + (rng.standard_normal(frames.shape) * noise_std).astype(np.float32)
        frames = frames.astype(np.float32)
        entry_id = f"s{i:04d}"
        try:
            save_mel(mel_dir / f"{entry_id}.bin", frames)
        except OSError as exc:
            raise ConfigError(f"cannot write mel for {entry_id} under {mel_dir}: {exc}") from exc
        entries.append(
            CorpusEntry(entry_id, text, f"mels/{entry_id}.bin", frames.shape[0])
        )

    manifest = CorpusManifest(entries, out_dir)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    vocab = build_vocab(chars + ["_"], filler="_")
    vocab.save(out_dir / "vocab.json")
    return manifest


def batch_by_frames(
    manifest: CorpusManifest,
    frame_budget: int,
    max_samples: int,
    seed,
) -> list[list[CorpusEntry]]:
    """Seeded-shuffle partition: each batch stays within the frame budget
    and the sample cap; every entry appears exactly once."""
    for e in manifest.entries:
        if e.n_frames > frame_budget:
            raise ConfigError(
                f"sample {e.id} has {e.n_frames} frames, above the budget of {frame_budget}"
            )
    order = np.random.default_rng(seed).permutation(len(manifest.entries))
    batches: list[list[CorpusEntry]] = []
    current: list[CorpusEntry] = []
    current_frames = 0
    for idx in order:
        e = manifest.entries[idx]
        if current and (
            current_frames + e.n_frames > frame_budget or len(current) >= max_samples
        ):
            batches.append(current)
            current, current_frames = [], 0
        current.append(e)
        current_frames += e.n_frames
    if current:
        batches.append(current)
    return batches


def lr_at(step: int, config: TrainConfig) -> float:
    """Linear ramp from zero over the warmup, constant afterwards."""
    if step < 0:
        raise ConfigError("step must be non-negative")
    if config.warmup_updates == 0 or step >= config.warmup_updates:
        return config.learning_rate
    return config.learning_rate * step / config.warmup_updates


class AdamW:
    """Decoupled weight-decay adaptive moments over trainable parameters."""

    def __init__(self, params: list[Parameter], config: TrainConfig):
        self.params = [p for p in params if p.trainable]
        self.config = config
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float) -> None:
        c = self.config
        self.t += 1
        for p, m, v in zip(self.params, self._m, self._v):
            assert p.trainable, f"optimizer touched frozen parameter {p.name}"
            g = p.tensor.grad
            if g is None:
                continue
            m[:] = c.beta1 * m + (1 - c.beta1) * g
            v[:] = c.beta2 * v + (1 - c.beta2) * g * g
            m_hat = m / (1 - c.beta1**self.t)
            v_hat = v / (1 - c.beta2**self.t)
            update = m_hat / (np.sqrt(v_hat) + c.eps) + c.weight_decay * p.data
            p.tensor.data = (p.data - lr * update).astype(p.data.dtype)


@dataclass
class Checkpoint:
    adapter_config: AdapterConfig
    adapter_state: dict[str, np.ndarray]
    backbone_config: BackboneConfig
    backbone_hash: str
    train_config: TrainConfig
    step: int
    loss_history: list[float] = field(default_factory=list)

    def restore_adapter(self, dtype=np.float32) -> AdapterParams:
        params = AdapterParams(self.adapter_config, dtype=dtype)
        for p in params.parameters():
            stored = self.adapter_state[p.name]
            if stored.shape != p.tensor.shape:
                raise ConfigError(
                    f"checkpoint blob {p.name} has shape {stored.shape}, expected {p.tensor.shape}"
                )
            p.tensor.data = stored.astype(dtype)
        return params

    def restore_backbone(self, dtype=np.float32) -> FrozenTTSBackbone:
        backbone = FrozenTTSBackbone(self.backbone_config, dtype=dtype)
        if backbone.content_hash != self.backbone_hash:
            raise ConfigError(
                "backbone content hash mismatch: checkpoint expects "
                f"{self.backbone_hash}, rebuilt {backbone.content_hash}"
            )
        return backbone


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    header = {
        "adapter": {
            "config": json.loads(ckpt.adapter_config.to_json()),
            "params": list(ckpt.adapter_state.keys()),
        },
        "backbone": {
            "config": json.loads(ckpt.backbone_config.to_json()),
            "seed": ckpt.backbone_config.seed,
            "content_hash": ckpt.backbone_hash,
        },
        "train": {
            "config": json.loads(ckpt.train_config.to_json()),
            "step": ckpt.step,
            "loss_history": ckpt.loss_history,
        },
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for name, arr in ckpt.adapter_state.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path} is not a checkpoint file")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {version}")
    (header_len,) = struct.unpack_from("<Q", raw, 8)
    offset = 16
    header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    offset += header_len

    state: dict[str, np.ndarray] = {}
    for _ in header["adapter"]["params"]:
        (name_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape)
        offset += 4 * count
        state[name] = arr.astype(np.float32)

    ckpt = Checkpoint(
        adapter_config=AdapterConfig(**header["adapter"]["config"]),
        adapter_state=state,
        backbone_config=BackboneConfig(**header["backbone"]["config"]),
        backbone_hash=header["backbone"]["content_hash"],
        train_config=TrainConfig(**header["train"]["config"]),
        step=header["train"]["step"],
        loss_history=list(header["train"]["loss_history"]),
    )
    # Loading always verifies the frozen section is reconstructible.
    ckpt.restore_backbone()
    return ckpt


def snapshot_state(params: AdapterParams) -> dict[str, np.ndarray]:
    return {p.name: np.array(p.data, dtype=np.float32) for p in params.parameters()}


def train(
    config: TrainConfig,
    manifest: CorpusManifest,
    vocab: Vocab,
    adapter_params: AdapterParams,
    backbone: FrozenTTSBackbone,
    out_dir: str | Path | None = None,
    log_every: int = 0,
) -> Checkpoint:
    """Update adapter parameters only; loss is recorded every step."""
    if not manifest.entries:
        raise ConfigError("manifest is empty")
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    mel_cache = {e.id: load_mel(manifest.mel_file(e)) for e in manifest.entries}
    seq_cache = {
        e.id: pad_to_frames(encode(e.text, vocab), e.n_frames, vocab)
        for e in manifest.entries
    }
    optimizer = AdamW(adapter_params.parameters(), config)
    noise_rng = np.random.default_rng([config.seed, 1])
    loss_history: list[float] = []

    def checkpoint_now() -> Checkpoint:
        return Checkpoint(
            adapter_config=adapter_params.config,
            adapter_state=snapshot_state(adapter_params),
            backbone_config=backbone.config,
            backbone_hash=backbone.content_hash,
            train_config=config,
            step=len(loss_history),
            loss_history=list(loss_history),
        )

    step = 0
    epoch = 0
    while step < config.max_steps:
        batches = batch_by_frames(
            manifest, config.frame_budget, config.max_samples_per_batch, [config.seed, 0, epoch]
        )
        epoch += 1
        for batch in batches:
            if step >= config.max_steps:
                break
            mels = [mel_cache[e.id] for e in batch]
            h_texts = [forward(seq_cache[e.id], adapter_params) for e in batch]
            loss = backbone.cfm_loss(mels, h_texts, noise_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingAborted(step, [e.id for e in batch], value)
            adapter_params.zero_grads()
            backward(loss)
            optimizer.step(lr_at(step, config))
            loss_history.append(value)
            step += 1
            if log_every and step % log_every == 0:
                recent = loss_history[-log_every:]
                print(f"step {step}: loss {np.mean(recent):.4f}")
            if (
                out_dir is not None
                and config.checkpoint_every
                and step % config.checkpoint_every == 0
                and step < config.max_steps
            ):
                save_checkpoint(checkpoint_now(), out_dir / f"ckpt_{step:06d}.bin")

    final = checkpoint_now()
    if out_dir is not None:
        save_checkpoint(final, out_dir / "checkpoint.bin")
    return final
