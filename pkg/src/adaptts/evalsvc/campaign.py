"""Campaign construction, blinded stimulus derivation, and aggregation.

Stimulus order and opaque keys are derived deterministically from
(campaign seed, listener, trial), so a refresh re-serves the same blinded
view and the server can resolve keys back to systems without storing a
mapping.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean, median

import numpy as np

from ..errors import ConfigError

TASK_PROMPTS = {
    "speaker_similarity": (
        "Please rate each audio sample according to how similar the speaker "
        "sounds to the reference speaker"
    ),
    "naturalness": (
        "Please rate each audio sample based on the pronunciation of the "
        "words and how natural it sounds"
    ),
    "code_switching": (
        "Please rate each audio sample based on how natural the transition "
        "between Romanian and English is"
    ),
}

ROLES = {"candidate", "low_anchor", "high_anchor", "natural"}
MIN_STIMULI = 3
MAX_STIMULI = 4


@dataclass(frozen=True)
class SystemSpec:
    name: str
    role: str
    files: dict[str, str]  # sentence -> audio path


@dataclass(frozen=True)
class Trial:
    trial_id: str
    sentence: str
    reference_path: str | None = None


@dataclass(frozen=True)
class Campaign:
    campaign_id: str
    task: str
    prompt: str
    seed: int
    systems: tuple[SystemSpec, ...]
    trials: tuple[Trial, ...]
    base_dir: Path = field(compare=False, default=Path("."))

    @property
    def system_names(self) -> list[str]:
        return [s.name for s in self.systems]


def build_campaign(manifest: dict, base_dir: str | Path = ".") -> Campaign:
    """Validate a campaign manifest and freeze it into trials."""
    task = manifest.get("task")
    if task not in TASK_PROMPTS:
        raise ConfigError(f"unknown task {task!r}; expected one of {sorted(TASK_PROMPTS)}")
    prompt = manifest.get("prompt_override") or TASK_PROMPTS[task]
    sentences = manifest.get("sentences") or []
    if not sentences:
        raise ConfigError("campaign needs at least one sentence")

    systems = []
    for spec in manifest.get("systems", []):
        role = spec.get("role", "candidate")
        if role not in ROLES:
            raise ConfigError(f"unknown system role {role!r}")
        systems.append(SystemSpec(spec["name"], role, dict(spec.get("files", {}))))
    names = [s.name for s in systems]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate system names in roster: {names}")
    if not MIN_STIMULI <= len(systems) <= MAX_STIMULI:
        raise ConfigError(
            f"a trial serves {MIN_STIMULI} to {MAX_STIMULI} parallel stimuli; "
            f"manifest lists {len(systems)} systems"
        )

    missing = [
        (sentence, system.name)
        for sentence in sentences
        for system in systems
        if sentence not in system.files
    ]
    if missing:
        raise ConfigError(f"missing audio files for (sentence, system): {missing}")

    references = manifest.get("references", {})
    if task == "speaker_similarity":
        unreferenced = [s for s in sentences if s not in references]
        if unreferenced:
            raise ConfigError(
                f"speaker_similarity trials need a reference sample; missing for {unreferenced}"
            )

    trials = tuple(
        Trial(f"t{i:03d}", sentence, references.get(sentence))
        for i, sentence in enumerate(sentences)
    )
    return Campaign(
        campaign_id=manifest.get("id", "campaign"),
        task=task,
        prompt=prompt,
        seed=int(manifest.get("seed", 0)),
        systems=tuple(systems),
        trials=tuple(trials),
        base_dir=Path(base_dir),
    )


def load_campaign_manifest(path: str | Path) -> Campaign:
    path = Path(path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read campaign manifest {path}: {exc}") from exc
    return build_campaign(manifest, base_dir=path.parent)


def _digest(*parts) -> bytes:
    return hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()


def opaque_key(campaign: Campaign, listener: str, trial_id: str, slot: str) -> str:
    return _digest(campaign.campaign_id, campaign.seed, listener, trial_id, slot).hex()[:16]


def stimulus_order(campaign: Campaign, listener: str, trial_id: str) -> list[int]:
    """Listener-specific seeded permutation of the system roster."""
    seed = int.from_bytes(_digest(campaign.campaign_id, campaign.seed, listener, trial_id)[:8], "little")
    return list(np.random.default_rng(seed).permutation(len(campaign.systems)))


def blinded_stimuli(campaign: Campaign, listener: str, trial: Trial) -> list[dict]:
    """[{key, system, path}] in the listener's order; key carries no identity."""
    order = stimulus_order(campaign, listener, trial.trial_id)
    out = []
    for slot, sys_index in enumerate(order):
        system = campaign.systems[sys_index]
        out.append(
            {
                "key": opaque_key(campaign, listener, trial.trial_id, str(slot)),
                "system": system.name,
                "path": system.files[trial.sentence],
            }
        )
    return out


def reference_key(campaign: Campaign, listener: str, trial: Trial) -> str:
    return opaque_key(campaign, listener, trial.trial_id, "ref")


def aggregate(campaign: Campaign, scores_by_trial: dict[tuple[str, str], dict[str, int]]):
    """Per-(system, trial) mean/median cells plus unweighted overall rows.

    ``scores_by_trial`` maps (listener, trial_id) to {system: score}.
    """
    cells: dict[tuple[str, str], list[int]] = {}
    for (_, trial_id), by_system in scores_by_trial.items():
        for system, score in by_system.items():
            cells.setdefault((system, trial_id), []).append(score)

    rows = []
    for system in campaign.system_names:
        cell_means = []
        cell_medians = []
        for trial in campaign.trials:
            values = cells.get((system, trial.trial_id))
            if values:
                m, md = mean(values), median(values)
                rows.append(
                    {
                        "system": system,
                        "trial": trial.trial_id,
                        "n": len(values),
                        "mean": m,
                        "median": md,
                    }
                )
                cell_means.append(m)
                cell_medians.append(md)
            else:
                rows.append(
                    {"system": system, "trial": trial.trial_id, "n": 0, "mean": "", "median": ""}
                )
        if cell_means:
            rows.append(
                {
                    "system": system,
                    "trial": "OVERALL",
                    "n": sum(r["n"] for r in rows if r["system"] == system and r["trial"] != "OVERALL"),
                    "mean": mean(cell_means),
                    "median": median(cell_medians),
                }
            )
    return rows


def aggregate_csv(campaign: Campaign, scores_by_trial) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["system", "trial", "n", "mean", "median"])
    writer.writeheader()
    for row in aggregate(campaign, scores_by_trial):
        writer.writerow(row)
    return buf.getvalue()
