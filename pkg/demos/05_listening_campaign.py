"""Run a blind listening campaign end to end, in process.

Builds a three-system naturalness campaign, registers two simulated
listeners, walks them through every blinded trial over the HTTP API, and
prints the aggregated report. Nothing a listener receives ever names a
system.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from adaptts.evalsvc import aggregate_csv, build_campaign, create_app

workdir = Path(tempfile.mkdtemp(prefix="campaign-demo-"))
sentences = [
    "Nu sunt sigur dacă are sens, dar hai să încercăm oricum.",
    "Mă duc să iau o cafea și revin imediat.",
    "Îți voi trimite un raport complet mâine dimineață.",
]

systems = []
for i, (name, role) in enumerate([
    ("adapter-tts", "candidate"),
    ("fully-finetuned", "candidate"),
    ("unadapted-base", "low_anchor"),
]):
    files = {}
    for j, sentence in enumerate(sentences):
        path = workdir / f"{name}-{j}.wav"
        path.write_bytes(b"RIFF" + bytes(8))  # placeholder audio payloads
        files[sentence] = str(path)
    systems.append({"name": name, "role": role, "files": files})

campaign = build_campaign(
    {"id": "demo", "task": "naturalness", "sentences": sentences, "systems": systems, "seed": 11},
    base_dir=workdir,
)
print(f"prompt shown to listeners: {campaign.prompt!r}")

client = TestClient(create_app(campaign, workdir / "ratings.jsonl"))

for handle, base_score in [("ana", 55), ("bogdan", 75)]:
    listener = client.post("/listeners", json={"handle": handle}).json()["listener_id"]
    while True:
        trial = client.get("/campaigns/demo/next", params={"listener": listener}).json()
        if trial.get("done"):
            print(f"{handle}: completed {trial['completed']}/{trial['total']} trials")
            break
        assert all(name not in json.dumps(trial) for name in campaign.system_names)
        scores = {s["key"]: base_score + 5 * i for i, s in enumerate(trial["stimuli"])}
        ack = client.post(
            "/campaigns/demo/ratings",
            json={"listener_id": listener, "trial_id": trial["trial_id"], "scores": scores},
        )
        assert ack.status_code == 200

print("\nper-system, per-trial means and medians:")
print(client.get("/campaigns/demo/report.csv").text)
print(f"raw append-only log: {workdir / 'ratings.jsonl'}")
