"""HTTP surface for the blind listening campaign.

Every listener-facing payload is blinded: stimuli travel as opaque keys
and /audio/{key} URLs only; system identities stay server-side and are
resolved at submission time.
"""

from __future__ import annotations

import secrets
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .campaign import Campaign, aggregate_csv, blinded_stimuli, reference_key
from .store import RatingStore

AUDIO_TYPES = {".wav": "audio/wav", ".ogg": "audio/ogg", ".mp3": "audio/mpeg"}


class RegisterRequest(BaseModel):
    handle: str


class RatingsRequest(BaseModel):
    listener_id: str
    trial_id: str
    scores: dict[str, object]


def create_app(campaign: Campaign, log_path: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="listening-campaign")
    store = RatingStore(log_path)
    audio_keys: dict[str, Path] = {}

    def resolve_path(path_str: str) -> Path:
        p = Path(path_str)
        return p if p.is_absolute() else campaign.base_dir / p

    def trial_view(listener: str):
        done = store.completed_trials(listener)
        for trial in campaign.trials:
            if trial.trial_id not in done:
                return trial, len(done)
        return None, len(done)

    @app.post("/listeners")
    def register(req: RegisterRequest):
        handle = req.handle.strip()
        if not handle:
            raise HTTPException(status_code=400, detail="handle must be non-empty")
        listener_id = f"{handle}-{secrets.token_hex(4)}"
        store.add_listener(listener_id)
        return {"listener_id": listener_id}

    @app.get("/campaigns/{campaign_id}/next")
    def next_trial(campaign_id: str, listener: str):
        if campaign_id != campaign.campaign_id:
            raise HTTPException(status_code=404, detail="unknown campaign")
        if listener not in store.listeners:
            raise HTTPException(status_code=404, detail="unregistered listener")
        trial, completed = trial_view(listener)
        if trial is None:
            return {"done": True, "completed": completed, "total": len(campaign.trials)}
        stimuli = blinded_stimuli(campaign, listener, trial)
        for s in stimuli:
            audio_keys[s["key"]] = resolve_path(s["path"])
        payload = {
            "done": False,
            "campaign": campaign.campaign_id,
            "task": campaign.task,
            "prompt": campaign.prompt,
            "trial_id": trial.trial_id,
            "sentence": trial.sentence,
            "progress": {"completed": completed, "total": len(campaign.trials)},
            "stimuli": [{"key": s["key"], "url": f"/audio/{s['key']}"} for s in stimuli],
            "reference_url": None,
        }
        if trial.reference_path is not None:
            ref = reference_key(campaign, listener, trial)
            audio_keys[ref] = resolve_path(trial.reference_path)
            payload["reference_url"] = f"/audio/{ref}"
        return payload

    @app.post("/campaigns/{campaign_id}/ratings")
    def submit(campaign_id: str, req: RatingsRequest):
        if campaign_id != campaign.campaign_id:
            raise HTTPException(status_code=404, detail="unknown campaign")
        if req.listener_id not in store.listeners:
            raise HTTPException(status_code=404, detail="unregistered listener")
        trial = next((t for t in campaign.trials if t.trial_id == req.trial_id), None)
        if trial is None:
            raise HTTPException(status_code=404, detail=f"unknown trial {req.trial_id}")

        stimuli = blinded_stimuli(campaign, req.listener_id, trial)
        key_to_system = {s["key"]: s["system"] for s in stimuli}
        unknown = sorted(set(req.scores) - set(key_to_system))
        if unknown:
            raise HTTPException(status_code=400, detail=f"unknown stimulus key {unknown[0]}")
        missing = sorted(set(key_to_system) - set(req.scores))
        if missing:
            raise HTTPException(
                status_code=400,
                detail=f"incomplete submission: stimulus {missing[0]} is unrated",
            )
        by_system = {}
        for key, value in req.scores.items():
            if isinstance(value, bool) or not isinstance(value, int):
                raise HTTPException(status_code=400, detail=f"score for {key} must be an integer")
            if not 0 <= value <= 100:
                raise HTTPException(
                    status_code=400, detail=f"score for {key} must lie in [0, 100], got {value}"
                )
            by_system[key_to_system[key]] = value
        store.record_ratings(req.listener_id, req.trial_id, by_system)
        return {"accepted": True, "trial_id": req.trial_id}

    @app.get("/campaigns/{campaign_id}/report.csv")
    def report(campaign_id: str):
        if campaign_id != campaign.campaign_id:
            raise HTTPException(status_code=404, detail="unknown campaign")
        return PlainTextResponse(aggregate_csv(campaign, store.scores), media_type="text/csv")

    @app.get("/audio/{key}")
    def audio(key: str):
        path = audio_keys.get(key)
        if path is None or not path.exists():
            raise HTTPException(status_code=404, detail="unknown audio key")
        media_type = AUDIO_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return FileResponse(path, media_type=media_type)

    app.state.store = store
    app.state.campaign = campaign
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
