"""Exhaustive alignment-search oracle shared by metric and acceptance tests."""

from adaptts.metrics import AlignmentCounts

OP_RANK = {"hit": 0, "sub": 1, "del": 2, "ins": 3}


def enumerate_alignments(ref, hyp):
    """All complete alignments as (cost, op-sequence) pairs."""
    out = []

    def walk(i, j, ops):
        if i == len(ref) and j == len(hyp):
            out.append((sum(1 for o in ops if o != "hit"), tuple(ops)))
            return
        if i < len(ref) and j < len(hyp):
            walk(i + 1, j + 1, ops + ["hit" if ref[i] == hyp[j] else "sub"])
        if i < len(ref):
            walk(i + 1, j, ops + ["del"])
        if j < len(hyp):
            walk(i, j + 1, ops + ["ins"])

    walk(0, 0, [])
    return out


def exhaustive_counts(ref, hyp, require_unique=False):
    """Oracle mirroring the backtrace tie-break globally: among minimum-cost
    alignments, take the one whose op sequence read from the end is
    lexicographically smallest under hit < sub < del < ins."""
    alignments = enumerate_alignments(ref, hyp)
    best_cost = min(c for c, _ in alignments)
    candidates = [ops for c, ops in alignments if c == best_cost]
    if require_unique:
        profiles = {
            tuple(sum(1 for o in ops if o == kind) for kind in ("hit", "sub", "del", "ins"))
            for ops in candidates
        }
        if len(profiles) != 1:
            return None
    chosen = min(candidates, key=lambda ops: [OP_RANK[o] for o in reversed(ops)])
    return AlignmentCounts(
        sum(1 for o in chosen if o == "hit"),
        sum(1 for o in chosen if o == "sub"),
        sum(1 for o in chosen if o == "del"),
        sum(1 for o in chosen if o == "ins"),
    )
