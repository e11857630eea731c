"""Append-only JSON-lines log of listeners and ratings.

A submission appends one line per stimulus under a single writer lock and
flushes before acknowledging. Replaying the file from the top rebuilds the
exact service state; resubmissions overwrite earlier scores for the same
(listener, trial).
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from ..errors import ConfigError


class RatingStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.listeners: set[str] = set()
        # (listener, trial_id) -> {system: score}
        self.scores: dict[tuple[str, str], dict[str, int]] = {}
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if record["type"] == "listener":
                self.listeners.add(record["listener"])
            elif record["type"] == "rating":
                cell = self.scores.setdefault((record["listener"], record["trial"]), {})
                cell[record["system"]] = record["score"]
            else:
                raise ConfigError(f"unknown log record type {record['type']!r} in {self.path}")

    def _append_lines(self, records: list[dict]) -> None:
        payload = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(payload)
            f.flush()

    def add_listener(self, listener_id: str) -> None:
        with self._lock:
            self.listeners.add(listener_id)
            self._append_lines([{"type": "listener", "listener": listener_id, "ts": time.time()}])

    def record_ratings(self, listener: str, trial_id: str, by_system: dict[str, int]) -> None:
        """Last write wins for a (listener, trial) pair."""
        now = time.time()
        records = [
            {
                "type": "rating",
                "listener": listener,
                "trial": trial_id,
                "system": system,
                "score": score,
                "ts": now,
            }
            for system, score in by_system.items()
        ]
        with self._lock:
            self.scores[(listener, trial_id)] = dict(by_system)
            self._append_lines(records)

    def completed_trials(self, listener: str) -> set[str]:
        return {trial for (who, trial) in self.scores if who == listener}

    def rating_count(self) -> int:
        return sum(len(v) for v in self.scores.values())
