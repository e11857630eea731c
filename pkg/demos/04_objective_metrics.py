"""Word-level error metrics and speaker-similarity statistics.

Aligns hypothesis transcripts against references with the unit-cost edit
model, reports WER / MER / WIL / WIP, audits published WIL/WIP pairs
against the wil + wip = 1 identity, and summarizes cosine similarities
the way the similarity table lays them out.
"""

import numpy as np

from adaptts.metrics import align, cosine, report, summarize, tokenize, wil_wip_identity_holds

refs = [
    "am avut astăzi o întâlnire foarte lungă cu clientul",
    "poți să-mi trimiți și mie documentul respectiv",
    "mă duc să iau o cafea de la cafenea și revin imediat",
]
hyps = [
    "am avut astăzi o întâlnire foarte lungă cu clientul",
    "poți să-mi trimiți și mie un documentul respectiv",   # one insertion
    "mă duc să iau o cafea de cafenea și revin imediat",   # one deletion
]

total = None
for ref_line, hyp_line in zip(refs, hyps):
    counts = align(tokenize(ref_line), tokenize(hyp_line))
    total = counts if total is None else total + counts
    print(f"H={counts.hits} S={counts.substitutions} D={counts.deletions} "
          f"I={counts.insertions} | {hyp_line[:48]}")

r = report(total)
pct = r.as_percentages()
print("\noverall: WER {wer:.2f}%  MER {mer:.2f}%  WIL {wil:.2f}%  WIP {wip:.2f}%".format(**pct))
assert r.wil + r.wip == 1.0

# Audit published WIL/WIP pairs: a pair that does not sum to 100 cannot
# come from a single alignment, so it is flagged instead of reproduced.
for system, wil_pct, wip_pct in [
    ("system A", 9.52, 90.48),
    ("system B", 8.23, 91.77),
    ("system C", 5.39, 96.92),
]:
    verdict = "consistent" if wil_wip_identity_holds(wil_pct, wip_pct) else "INCONSISTENT"
    print(f"{system}: WIL {wil_pct} + WIP {wip_pct} = {wil_pct + wip_pct:.2f} -> {verdict}")

# Speaker-similarity statistics over embedding cosine values.
rng = np.random.default_rng(0)
reference = rng.normal(size=64)
cosines = []
for _ in range(1000):
    generated = reference + rng.normal(size=64) * 0.35
    cosines.append(cosine(reference.tolist(), generated.tolist()))
stats = summarize(cosines)
print(f"\ncosine similarity over {len(cosines)} pairs:")
for row, value in [("Mean", stats.mean), ("Standard Deviation", stats.std),
                   ("Minimum", stats.minimum), ("Maximum", stats.maximum),
                   ("Median", stats.median)]:
    print(f"  {row:20s} {value:.4f}")
