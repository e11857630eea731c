"""Command-line surface: corpus generation, training, synthesis, metrics,
and the listening-campaign service.

Exit codes: 0 success, 1 validation or usage problems, 2 runtime failures.
"""

from __future__ import annotations

import json
import struct
import sys
from pathlib import Path

import click
import numpy as np

from .adapter import AdapterConfig, AdapterParams, contextualize, embed as embed_rows, forward
from .backbone import BackboneConfig, FrozenTTSBackbone
from .codeswitch import merge, synthesize_cs
from .errors import ConfigError, TrainingAborted
from .evalsvc.campaign import aggregate_csv, build_campaign, load_campaign_manifest
from .evalsvc.server import create_app
from .evalsvc.store import RatingStore
from .metrics import align, cosine, report, summarize, tokenize
from .text import Vocab, encode, pad_to_frames, parse_code_switch
from .training import (
    Checkpoint,
    TrainConfig,
    load_checkpoint,
    load_manifest,
    make_synthetic_corpus,
    save_checkpoint,
    save_mel,
    snapshot_state,
    train as run_training,
)


def write_shaped_floats(path: Path, arr: np.ndarray) -> None:
    """Shape-prefixed little-endian float32 dump: ndim, dims..., data."""
    with open(path, "wb") as f:
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def emit(payload: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(payload, ensure_ascii=False))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


@click.group()
def cli():
    """Frozen-backbone TTS adapter toolkit."""


@cli.command("gen-corpus")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--sentences", default=20, show_default=True)
@click.option("--charset", default="abcdef", show_default=True)
@click.option("--mel-dim", default=16, show_default=True)
@click.option("--frames-per-char", default=2, show_default=True)
@click.option("--noise-std", default=0.05, show_default=True)
@click.option("--min-len", default=3, show_default=True)
@click.option("--max-len", default=6, show_default=True)
@click.option("--template-std", default=2.0, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def gen_corpus(out_dir, sentences, charset, mel_dim, frames_per_char, noise_std,
               min_len, max_len, template_std, seed, as_json):
    """Generate a seeded synthetic letter-to-sound corpus."""
    manifest = make_synthetic_corpus(
        sentences, charset, mel_dim, frames_per_char, noise_std, seed, out_dir,
        min_len=min_len, max_len=max_len, template_std=template_std,
    )
    emit(
        {
            "manifest": str(out_dir / "manifest.jsonl"),
            "vocab": str(out_dir / "vocab.json"),
            "sentences": len(manifest),
            "total_frames": sum(e.n_frames for e in manifest.entries),
        },
        as_json,
    )


@cli.command("train")
@click.option("--config", "config_path", type=click.Path(path_type=Path))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path))
@click.option("--lr", type=float)
@click.option("--max-steps", type=int)
@click.option("--warmup", type=int)
@click.option("--seed", type=int)
@click.option("--hidden-dim", default=32, show_default=True)
@click.option("--adapter-blocks", default=2, show_default=True)
@click.option("--adapter-kernel", default=7, show_default=True)
@click.option("--adapter-seed", default=0, show_default=True)
@click.option("--mel-dim", default=16, show_default=True)
@click.option("--backbone-blocks", default=2, show_default=True)
@click.option("--backbone-seed", default=0, show_default=True)
@click.option("--dry-run", is_flag=True, help="Echo the effective config and exit.")
@click.option("--json", "as_json", is_flag=True)
def train_cmd(config_path, corpus_path, out_dir, vocab_path, lr, max_steps, warmup,
              seed, hidden_dim, adapter_blocks, adapter_kernel, adapter_seed,
              mel_dim, backbone_blocks, backbone_seed, dry_run, as_json):
    """Train the adapter against the frozen backbone. Precedence: flags >
    config file > defaults."""
    base = {}
    if config_path is not None:
        base = json.loads(Path(config_path).read_text())
    overrides = {"learning_rate": lr, "max_steps": max_steps, "warmup_updates": warmup, "seed": seed}
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    config = TrainConfig(**base)

    corpus_path = Path(corpus_path)
    manifest_file = corpus_path / "manifest.jsonl" if corpus_path.is_dir() else corpus_path
    manifest = load_manifest(manifest_file)
    vocab_file = vocab_path or manifest_file.parent / "vocab.json"
    vocab = Vocab.load(vocab_file)

    echo = {k: v for k, v in json.loads(config.to_json()).items()}
    echo.update({"corpus": str(manifest_file), "vocab": str(vocab_file), "out": str(out_dir)})
    emit(echo, as_json)
    if dry_run:
        return

    adapter_params = AdapterParams(
        AdapterConfig(
            vocab_size=len(vocab), embed_dim=hidden_dim, hidden_dim=hidden_dim,
            n_blocks=adapter_blocks, kernel_size=adapter_kernel, seed=adapter_seed,
        )
    )
    backbone = FrozenTTSBackbone(
        BackboneConfig(hidden_dim=hidden_dim, mel_dim=mel_dim, n_blocks=backbone_blocks, seed=backbone_seed)
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab.save(out_dir / "vocab.json")  # so embed/merge-cs/synth find it next to the checkpoint
    ckpt = run_training(config, manifest, vocab, adapter_params, backbone, out_dir=out_dir)
    emit(
        {
            "checkpoint": str(Path(out_dir) / "checkpoint.bin"),
            "steps": ckpt.step,
            "final_loss": ckpt.loss_history[-1],
            "backbone_hash": ckpt.backbone_hash,
        },
        as_json,
    )


def _load_ckpt_models(ckpt_path: Path):
    ckpt = load_checkpoint(ckpt_path)
    return ckpt, ckpt.restore_adapter(), ckpt.restore_backbone()


def _vocab_near_checkpoint(ckpt_path: Path, vocab_path: Path | None) -> Vocab:
    if vocab_path is not None:
        return Vocab.load(vocab_path)
    candidate = Path(ckpt_path).parent / "vocab.json"
    if candidate.exists():
        return Vocab.load(candidate)
    raise ConfigError(
        f"no vocab.json next to {ckpt_path}; pass --vocab explicitly"
    )


@cli.command("embed")
@click.option("--text", required=True)
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(path_type=Path))
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def embed_cmd(text, ckpt_path, vocab_path, out_path, as_json):
    """Dump the contextualized embeddings for a text."""
    _, adapter_params, _ = _load_ckpt_models(ckpt_path)
    vocab = _vocab_near_checkpoint(ckpt_path, vocab_path)
    h = forward(encode(text, vocab), adapter_params)
    write_shaped_floats(out_path, h.data)
    emit({"out": str(out_path), "shape": list(h.shape)}, as_json)


@cli.command("merge-cs")
@click.option("--text", required=True)
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(path_type=Path))
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def merge_cs_cmd(text, ckpt_path, vocab_path, out_path, as_json):
    """Dump the merged bilingual conditioning sequence for annotated text."""
    _, adapter_params, backbone = _load_ckpt_models(ckpt_path)
    vocab = _vocab_near_checkpoint(ckpt_path, vocab_path)
    seq, mask = parse_code_switch(text, vocab, backbone.vocab)
    merged = merge(seq, mask, adapter_params, backbone)
    write_shaped_floats(out_path, merged.h_cs.data)
    emit(
        {
            "out": str(out_path),
            "shape": list(merged.h_cs.shape),
            "english_positions": sum(mask.english),
        },
        as_json,
    )


@cli.command("synth")
@click.option("--text", required=True)
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(path_type=Path))
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--steps", default=32, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--n-frames", type=int, help="Pad the text with filler up to this frame count.")
@click.option("--json", "as_json", is_flag=True)
def synth_cmd(text, ckpt_path, vocab_path, out_path, steps, seed, n_frames, as_json):
    """Text to mel frames via Euler sampling; '~' switches language."""
    _, adapter_params, backbone = _load_ckpt_models(ckpt_path)
    vocab = _vocab_near_checkpoint(ckpt_path, vocab_path)
    if "~" in text:
        mel = synthesize_cs(text, vocab, adapter_params, backbone, steps, seed, n_frames=n_frames)
    else:
        seq = encode(text, vocab)
        if n_frames is not None:
            seq = pad_to_frames(seq, n_frames, vocab)
        mel = backbone.sample(forward(seq, adapter_params), len(seq), steps, seed)
    save_mel(out_path, mel.frames)
    emit({"out": str(out_path), "frames": mel.n_frames, "channels": mel.frames.shape[1]}, as_json)


@cli.command("eval-wer")
@click.option("--ref", "ref_path", required=True, type=click.Path(path_type=Path))
@click.option("--hyp", "hyp_path", required=True, type=click.Path(path_type=Path))
@click.option("--lowercase", is_flag=True)
@click.option("--strip-punct", is_flag=True)
@click.option("--csv", "csv_path", type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def eval_wer_cmd(ref_path, hyp_path, lowercase, strip_punct, csv_path, as_json):
    """Word-level metrics over parallel line-aligned transcript files."""
    try:
        ref_lines = Path(ref_path).read_text(encoding="utf-8").splitlines()
        hyp_lines = Path(hyp_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read transcripts: {exc}") from exc
    if len(ref_lines) != len(hyp_lines):
        raise ConfigError(
            f"line counts disagree: {len(ref_lines)} references vs {len(hyp_lines)} hypotheses"
        )
    total = None
    for ref_line, hyp_line in zip(ref_lines, hyp_lines):
        counts = align(
            tokenize(ref_line, lowercase, strip_punct),
            tokenize(hyp_line, lowercase, strip_punct),
        )
        total = counts if total is None else total + counts
    result = report(total)
    pct = result.as_percentages()
    payload = {k: round(v, 2) for k, v in pct.items()}
    payload["lines"] = len(ref_lines)
    if csv_path is not None:
        Path(csv_path).write_text(
            "wer,mer,wil,wip\n{wer:.2f},{mer:.2f},{wil:.2f},{wip:.2f}\n".format(**pct)
        )
        payload["csv"] = str(csv_path)
    if as_json:
        emit(payload, True)
    else:
        click.echo(
            "WER {wer:.2f}%  MER {mer:.2f}%  WIL {wil:.2f}%  WIP {wip:.2f}%".format(**pct)
        )


@cli.command("eval-sim")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(path_type=Path))
@click.option("--csv", "csv_path", type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def eval_sim_cmd(pairs_path, csv_path, as_json):
    """Cosine-similarity statistics over {ref_embedding, gen_embedding} lines."""
    values = []
    try:
        lines = Path(pairs_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read pairs file: {exc}") from exc
    for n, line in enumerate(lines):
        if not line.strip():
            continue
        pair = json.loads(line)
        try:
            values.append(cosine(pair["ref_embedding"], pair["gen_embedding"]))
        except KeyError as exc:
            raise ConfigError(f"line {n + 1} is missing field {exc}") from exc
    stats = summarize(values)
    payload = {
        "n": len(values),
        "mean": round(stats.mean, 4),
        "std": round(stats.std, 4),
        "min": round(stats.minimum, 4),
        "max": round(stats.maximum, 4),
        "median": round(stats.median, 4),
    }
    if csv_path is not None:
        Path(csv_path).write_text(
            "mean,std,min,max,median\n"
            f"{stats.mean:.4f},{stats.std:.4f},{stats.minimum:.4f},{stats.maximum:.4f},{stats.median:.4f}\n"
        )
        payload["csv"] = str(csv_path)
    emit(payload, as_json)


@cli.group()
def campaign():
    """Blind listening-test campaigns."""


@campaign.command("build")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def campaign_build(manifest_path, out_path, as_json):
    """Validate a campaign manifest and freeze its trial list."""
    built = load_campaign_manifest(manifest_path)
    summary = {
        "id": built.campaign_id,
        "task": built.task,
        "prompt": built.prompt,
        "trials": len(built.trials),
        "systems": len(built.systems),
    }
    if out_path is not None:
        frozen = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        frozen["prompt_override"] = built.prompt
        frozen["_trials"] = [
            {"trial_id": t.trial_id, "sentence": t.sentence} for t in built.trials
        ]
        Path(out_path).write_text(json.dumps(frozen, ensure_ascii=False, indent=2), encoding="utf-8")
        summary["out"] = str(out_path)
    emit(summary, as_json)


@campaign.command("serve")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path))
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def campaign_serve(manifest_path, log_path, ui_dir, host, port):
    """Serve the blinded campaign API (and the rating UI when built)."""
    import uvicorn

    built = load_campaign_manifest(manifest_path)
    app = create_app(built, log_path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@campaign.command("report")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path))
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path))
def campaign_report(manifest_path, log_path, out_path):
    """Aggregate the rating log into per-system, per-trial CSV."""
    built = load_campaign_manifest(manifest_path)
    store = RatingStore(log_path)
    text = aggregate_csv(built, store.scores)
    if out_path is not None:
        Path(out_path).write_text(text)
        click.echo(str(out_path))
    else:
        click.echo(text, nl=False)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as err:
        err.show()
        return 1
    except click.ClickException as err:
        err.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except ConfigError as err:
        click.echo(f"error: {err}", err=True)
        return 1
    except (TrainingAborted, OSError) as err:
        click.echo(f"runtime failure: {err}", err=True)
        return 2
    except Exception as err:  # surfaced, not raised: exit code is the contract
        click.echo(f"runtime failure: {err!r}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
