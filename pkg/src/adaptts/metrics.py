"""Word-level alignment metrics and speaker-similarity statistics.

Alignment uses minimum edit distance with unit substitution, deletion and
insertion costs; among minimum-cost alignments the backtrace prefers
hit > substitution > deletion > insertion. Reports enforce the
wil + wip = 1 identity at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class AlignmentCounts:
    hits: int
    substitutions: int
    deletions: int
    insertions: int

    def __post_init__(self):
        for value in (self.hits, self.substitutions, self.deletions, self.insertions):
            if value < 0:
                raise ConfigError("alignment counts must be non-negative")

    @property
    def n_ref(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def n_hyp(self) -> int:
        return self.hits + self.substitutions + self.insertions

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "AlignmentCounts") -> "AlignmentCounts":
        return AlignmentCounts(
            self.hits + other.hits,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )


@dataclass(frozen=True)
class MetricReport:
    wer: float
    mer: float
    wil: float
    wip: float

    def __post_init__(self):
        if abs((self.wil + self.wip) - 1.0) > 1e-12:
            raise ConfigError(
                f"wil + wip must equal 1, got {self.wil} + {self.wip} = {self.wil + self.wip}"
            )
        if self.wer < 0 or not 0 <= self.mer <= 1:
            raise ConfigError("wer must be non-negative and mer within [0, 1]")

    def as_percentages(self) -> dict[str, float]:
        return {
            "wer": 100.0 * self.wer,
            "mer": 100.0 * self.mer,
            "wil": 100.0 * self.wil,
            "wip": 100.0 * self.wip,
        }


@dataclass(frozen=True)
class SimilarityStats:
    mean: float
    std: float
    minimum: float
    maximum: float
    median: float

    def __post_init__(self):
        if not self.minimum <= self.median <= self.maximum:
            raise ConfigError("min <= median <= max violated")
        if self.std < 0:
            raise ConfigError("standard deviation must be non-negative")


def align(ref: list[str], hyp: list[str]) -> AlignmentCounts:
    """Counts from a minimum-edit-distance alignment of two word lists."""
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same = ref[i - 1] == hyp[j - 1]
            dist[i][j] = min(
                dist[i - 1][j - 1] + (0 if same else 1),
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
            )

    hits = subs = dels = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            hits += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentCounts(hits, subs, dels, ins)


def report(counts: AlignmentCounts) -> MetricReport:
    """WER, MER, WIL and WIP from alignment counts."""
    if counts.n_ref < 1:
        raise ConfigError("report requires at least one reference word")
    wer = counts.errors / counts.n_ref
    denom = counts.hits + counts.errors
    mer = counts.errors / denom if denom else 0.0
    if counts.n_hyp == 0:
        wip = 0.0
    else:
        # Single division keeps (H/N_ref)(H/N_hyp) exact for small counts.
        wip = (counts.hits * counts.hits) / (counts.n_ref * counts.n_hyp)
    return MetricReport(wer=wer, mer=mer, wil=1.0 - wip, wip=wip)


def cosine(a, b) -> float:
    """dot(a, b) / (|a| |b|), clipped to [-1, 1] against roundoff."""
    if len(a) != len(b):
        raise ConfigError(f"vector dimensions disagree: {len(a)} vs {len(b)}")
    na2 = sum(x * x for x in a)
    nb2 = sum(x * x for x in b)
    if na2 == 0.0 or nb2 == 0.0:
        raise ConfigError("cosine of a zero vector is undefined")
    value = sum(x * y for x, y in zip(a, b)) / math.sqrt(na2 * nb2)
    return max(-1.0, min(1.0, value))


def summarize(values: list[float]) -> SimilarityStats:
    """Mean, sample (n-1) standard deviation, extremes, and median."""
    if not values:
        raise ConfigError("cannot summarize an empty list")
    n = len(values)
    mean = sum(values) / n
    if n > 1:
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    else:
        std = 0.0
    ordered = sorted(values)
    mid = n // 2
    median = ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2.0
    return SimilarityStats(mean, std, ordered[0], ordered[-1], median)


def tokenize(line: str, lowercase: bool = False, strip_punct: bool = False) -> list[str]:
    """Whitespace split after trimming; optional normalization."""
    if lowercase:
        line = line.lower()
    words = line.split()
    if strip_punct:
        words = [w.strip(".,;:!?\"'()[]") for w in words]
        words = [w for w in words if w]
    return words


def wil_wip_identity_holds(wil_pct: float, wip_pct: float, tol: float = 0.01) -> bool:
    """Audit a published WIL/WIP percentage pair against wil + wip = 100.

    The tolerance covers two-decimal rounding of each value.
    """
    return abs((wil_pct + wip_pct) - 100.0) <= tol
