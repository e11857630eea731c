"""Campaign service tests: blinding, validation, durability, aggregation."""

import json
from statistics import mean

import pytest
from fastapi.testclient import TestClient

from adaptts.errors import ConfigError
from adaptts.evalsvc import (
    TASK_PROMPTS,
    RatingStore,
    aggregate,
    build_campaign,
    create_app,
    stimulus_order,
)

NATURALNESS_SENTENCES = [
    "Nu sunt sigur dacă are sens, dar hai să încercăm oricum, chiar dacă există riscul să nu funcționeze perfect.",
    "Mă duc să iau o cafea de la cafenea și revin imediat, ca să putem continua discuția fără întreruperi.",
    "Îți voi trimite un raport complet mâine dimineață, imediat după ce reușesc să vorbesc cu toți colegii implicați în proiect.",
]

SYSTEM_NAMES = ["adapter-tts", "baseline-ro", "frozen-base"]


def make_manifest(tmp_path, task="naturalness", sentences=None, n_systems=3, with_refs=False):
    sentences = sentences if sentences is not None else NATURALNESS_SENTENCES
    systems = []
    for i in range(n_systems):
        name = SYSTEM_NAMES[i % len(SYSTEM_NAMES)] + ("" if i < len(SYSTEM_NAMES) else str(i))
        files = {}
        for j, sentence in enumerate(sentences):
            p = tmp_path / f"sys{i}_utt{j}.wav"
            p.write_bytes(b"RIFF" + bytes([i, j]) * 8)
            files[sentence] = str(p)
        role = ["candidate", "low_anchor", "natural", "candidate"][i % 4]
        systems.append({"name": name, "role": role, "files": files})
    manifest = {
        "id": "camp1",
        "task": task,
        "sentences": list(sentences),
        "systems": systems,
        "seed": 7,
    }
    if with_refs:
        refs = {}
        for j, sentence in enumerate(sentences):
            p = tmp_path / f"ref_utt{j}.wav"
            p.write_bytes(b"RIFFref" + bytes([j]) * 4)
            refs[sentence] = str(p)
        manifest["references"] = refs
    return manifest


@pytest.fixture
def client_and_paths(tmp_path):
    manifest = make_manifest(tmp_path)
    campaign = build_campaign(manifest, base_dir=tmp_path)
    log = tmp_path / "ratings.jsonl"
    app = create_app(campaign, log)
    return TestClient(app), campaign, log


def register(client, handle="vol1"):
    res = client.post("/listeners", json={"handle": handle})
    assert res.status_code == 200
    return res.json()["listener_id"]


def rate_all(client, listener, scores_fn=lambda i: 70):
    """Drive one listener through the whole campaign; returns payloads."""
    payloads = []
    while True:
        res = client.get("/campaigns/camp1/next", params={"listener": listener})
        payload = res.json()
        if payload.get("done"):
            payloads.append(payload)
            return payloads
        scores = {s["key"]: scores_fn(i) for i, s in enumerate(payload["stimuli"])}
        ack = client.post(
            "/campaigns/camp1/ratings",
            json={"listener_id": listener, "trial_id": payload["trial_id"], "scores": scores},
        )
        assert ack.status_code == 200, ack.text
        payloads.append(payload)


class TestBuildCampaign:
    def test_one_trial_per_sentence_with_canonical_prompt(self, tmp_path):
        campaign = build_campaign(make_manifest(tmp_path))
        assert len(campaign.trials) == 3
        assert campaign.prompt == TASK_PROMPTS["naturalness"]

    def test_similarity_requires_references(self, tmp_path):
        manifest = make_manifest(tmp_path, task="speaker_similarity")
        with pytest.raises(ConfigError, match="reference"):
            build_campaign(manifest)
        with_refs = make_manifest(tmp_path, task="speaker_similarity", with_refs=True)
        campaign = build_campaign(with_refs)
        assert all(t.reference_path for t in campaign.trials)

    def test_two_systems_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="3 to 4"):
            build_campaign(make_manifest(tmp_path, n_systems=2))

    def test_five_systems_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="3 to 4"):
            build_campaign(make_manifest(tmp_path, n_systems=5))

    def test_missing_audio_named(self, tmp_path):
        manifest = make_manifest(tmp_path)
        del manifest["systems"][1]["files"][NATURALNESS_SENTENCES[2]]
        with pytest.raises(ConfigError) as err:
            build_campaign(manifest)
        assert manifest["systems"][1]["name"] in str(err.value)

    def test_unknown_task_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            build_campaign(make_manifest(tmp_path, task="emotion"))


class TestBlinding:
    def test_payload_never_names_a_system(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        res = client.get("/campaigns/camp1/next", params={"listener": listener})
        serialized = json.dumps(res.json())
        for name in campaign.system_names:
            assert name not in serialized

    def test_two_listeners_get_different_orders(self, tmp_path):
        campaign = build_campaign(make_manifest(tmp_path), base_dir=tmp_path)
        trial = campaign.trials[0].trial_id
        orders = {tuple(stimulus_order(campaign, f"listener-{i}", trial)) for i in range(30)}
        assert len(orders) > 1

    def test_same_listener_same_order_on_refresh(self, client_and_paths):
        client, _, _ = client_and_paths
        listener = register(client)
        a = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        b = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        assert [s["key"] for s in a["stimuli"]] == [s["key"] for s in b["stimuli"]]

    def test_audio_streams_bytes_verbatim(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        res = client.get(payload["stimuli"][0]["url"])
        assert res.status_code == 200
        assert res.content.startswith(b"RIFF")


class TestSubmission:
    def test_boundary_scores_accepted(self, client_and_paths):
        client, _, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        scores = {s["key"]: (0 if i == 0 else 100) for i, s in enumerate(payload["stimuli"])}
        res = client.post(
            "/campaigns/camp1/ratings",
            json={"listener_id": listener, "trial_id": payload["trial_id"], "scores": scores},
        )
        assert res.status_code == 200

    def test_out_of_range_rejected_naming_key(self, client_and_paths):
        client, _, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        keys = [s["key"] for s in payload["stimuli"]]
        scores = dict.fromkeys(keys, 50)
        scores[keys[1]] = 101
        res = client.post(
            "/campaigns/camp1/ratings",
            json={"listener_id": listener, "trial_id": payload["trial_id"], "scores": scores},
        )
        assert res.status_code == 400
        assert keys[1] in res.json()["detail"]

    def test_partial_submission_rejected(self, client_and_paths):
        client, _, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        keys = [s["key"] for s in payload["stimuli"]]
        res = client.post(
            "/campaigns/camp1/ratings",
            json={
                "listener_id": listener,
                "trial_id": payload["trial_id"],
                "scores": {keys[0]: 50},
            },
        )
        assert res.status_code == 400
        assert "unrated" in res.json()["detail"]

    def test_unknown_key_rejected(self, client_and_paths):
        client, _, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        scores = {s["key"]: 50 for s in payload["stimuli"]}
        scores["feedbeef00000000"] = 50
        res = client.post(
            "/campaigns/camp1/ratings",
            json={"listener_id": listener, "trial_id": payload["trial_id"], "scores": scores},
        )
        assert res.status_code == 400

    def test_non_integer_score_rejected(self, client_and_paths):
        client, _, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        scores = {s["key"]: 50 for s in payload["stimuli"]}
        scores[payload["stimuli"][0]["key"]] = 49.5
        res = client.post(
            "/campaigns/camp1/ratings",
            json={"listener_id": listener, "trial_id": payload["trial_id"], "scores": scores},
        )
        assert res.status_code == 400

    def test_completion_marker_after_all_trials(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        payloads = rate_all(client, listener)
        assert payloads[-1] == {"done": True, "completed": 3, "total": 3}
        progress = [p["progress"]["completed"] for p in payloads[:-1]]
        assert progress == [0, 1, 2]

    def test_resubmission_replaces_scores(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        payload = client.get("/campaigns/camp1/next", params={"listener": listener}).json()
        keys = [s["key"] for s in payload["stimuli"]]
        for value in (40, 90):
            res = client.post(
                "/campaigns/camp1/ratings",
                json={
                    "listener_id": listener,
                    "trial_id": payload["trial_id"],
                    "scores": dict.fromkeys(keys, value),
                },
            )
            assert res.status_code == 200
        store = client.app.state.store
        assert all(v == 90 for v in store.scores[(listener, payload["trial_id"])].values())


class TestAggregation:
    def test_single_rating_cell(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        rate_all(client, listener, scores_fn=lambda i: 70)
        rows = aggregate(campaign, client.app.state.store.scores)
        data_rows = [r for r in rows if r["trial"] != "OVERALL"]
        assert all(r["mean"] == 70 for r in data_rows)

    def test_two_ratings_average(self, client_and_paths):
        client, campaign, _ = client_and_paths
        a, b = register(client, "ana"), register(client, "bob")
        rate_all(client, a, scores_fn=lambda i: 60)
        rate_all(client, b, scores_fn=lambda i: 80)
        rows = aggregate(campaign, client.app.state.store.scores)
        for r in rows:
            if r["trial"] != "OVERALL":
                assert r["mean"] == 70
                assert r["n"] == 2

    def test_aggregate_matches_independent_recompute_from_log(self, client_and_paths):
        client, campaign, log = client_and_paths
        a, b = register(client, "ana"), register(client, "bob")
        rate_all(client, a, scores_fn=lambda i: 10 * (i + 1))
        rate_all(client, b, scores_fn=lambda i: 100 - 10 * i)
        rows = aggregate(campaign, client.app.state.store.scores)

        # Oracle: re-read the raw JSONL and average by (system, trial).
        raw = {}
        for line in log.read_text().splitlines():
            rec = json.loads(line)
            if rec["type"] == "rating":
                raw.setdefault((rec["system"], rec["trial"]), {})[rec["listener"]] = rec["score"]
        for r in rows:
            if r["trial"] == "OVERALL" or r["n"] == 0:
                continue
            expected = mean(raw[(r["system"], r["trial"])].values())
            assert r["mean"] == expected

    def test_restart_replay_preserves_aggregates(self, tmp_path):
        manifest = make_manifest(tmp_path)
        campaign = build_campaign(manifest, base_dir=tmp_path)
        log = tmp_path / "ratings.jsonl"
        client = TestClient(create_app(campaign, log))
        a = register(client, "ana")
        rate_all(client, a, scores_fn=lambda i: 42 + i)
        before = aggregate(campaign, client.app.state.store.scores)

        reborn = TestClient(create_app(campaign, log))
        after = aggregate(campaign, reborn.app.state.store.scores)
        assert before == after
        # The replayed listener can keep going where they stopped.
        res = reborn.get("/campaigns/camp1/next", params={"listener": a})
        assert res.json()["done"] is True

    def test_report_csv_has_overall_rows(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        rate_all(client, listener)
        res = client.get("/campaigns/camp1/report.csv")
        assert res.status_code == 200
        lines = res.text.strip().splitlines()
        assert lines[0] == "system,trial,n,mean,median"
        assert sum(1 for line in lines if ",OVERALL," in line) == 3


class TestStoreDurability:
    def test_every_score_persisted_in_range(self, client_and_paths):
        client, _, log = client_and_paths
        listener = register(client)
        rate_all(client, listener, scores_fn=lambda i: 33 * i)
        for line in log.read_text().splitlines():
            rec = json.loads(line)
            if rec["type"] == "rating":
                assert 0 <= rec["score"] <= 100
                assert isinstance(rec["score"], int)

    def test_rating_count(self, client_and_paths):
        client, campaign, _ = client_and_paths
        listener = register(client)
        rate_all(client, listener)
        assert client.app.state.store.rating_count() == 3 * len(campaign.systems)

    def test_unregistered_listener_404(self, client_and_paths):
        client, _, _ = client_and_paths
        res = client.get("/campaigns/camp1/next", params={"listener": "ghost-0000"})
        assert res.status_code == 404
