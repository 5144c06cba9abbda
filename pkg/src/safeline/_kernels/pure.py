"""Pure-Python reference implementation of the analysis hot kernels.

Cut sets are encoded as integer bitmasks over an event index; the compiled
twin in ``_fast.pyx`` implements the same contracts.
"""

from __future__ import annotations


def minimize_cut_sets(masks: list[int]) -> list[int]:
    """Keep only inclusion-minimal masks (subsumption elimination).

    A mask ``a`` subsumes ``b`` when ``a & b == a`` (a is a subset of b).
    Returns masks sorted by (popcount, value).
    """
    kept: list[int] = []
    for m in sorted(set(masks), key=lambda m: (m.bit_count(), m)):
        subsumed = False
        for k in kept:
            if k & m == k:
                subsumed = True
                break
        if not subsumed:
            kept.append(m)
    return kept


def dnf_probability(masks: list[int], probs: list[float]) -> float:
    """Exact probability of a monotone DNF over independent events.

    Shannon decomposition on the most frequent variable, memoized on the
    reduced term set. ``probs[i]`` is the probability of the event at bit i.
    """
    if not masks:
        return 0.0

    memo: dict[tuple[int, ...], float] = {}

    def rec(terms: tuple[int, ...]) -> float:
        if not terms:
            return 0.0
        if terms[0] == 0:  # empty conjunction: certainty
            return 1.0
        cached = memo.get(terms)
        if cached is not None:
            return cached
        counts: dict[int, int] = {}
        for t in terms:
            while t:
                bit = t & -t
                counts[bit] = counts.get(bit, 0) + 1
                t ^= bit
        # Most frequent variable; lowest bit breaks ties deterministically.
        var = min(counts, key=lambda b: (-counts[b], b))
        hi = minimize_cut_sets([t & ~var for t in terms])
        lo = [t for t in terms if not t & var]
        p = probs[var.bit_length() - 1]
        result = p * rec(tuple(hi)) + (1.0 - p) * rec(tuple(lo))
        memo[terms] = result
        return result

    return rec(tuple(minimize_cut_sets(masks)))


def rare_event_probability(masks: list[int], probs: list[float]) -> float:
    """First-order (rare-event) approximation: sum of cut-set products."""
    total = 0.0
    for m in masks:
        prod = 1.0
        while m:
            bit = m & -m
            prod *= probs[bit.bit_length() - 1]
            m ^= bit
        total += prod
    return total
