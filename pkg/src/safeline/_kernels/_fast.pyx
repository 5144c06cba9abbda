# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of the analysis hot kernels (see ``pure.py`` for contracts).

Masks are Python ints (arbitrary width); the win over the pure version comes
from compiled loop and list handling plus a fast path for masks < 2^64.
"""

from cpython.list cimport PyList_GET_ITEM, PyList_GET_SIZE

from libc.stdint cimport uint64_t


cdef int _popcount64(uint64_t x) noexcept nogil:
    cdef int n = 0
    while x:
        x &= x - 1
        n += 1
    return n


def minimize_cut_sets(masks):
    """Keep only inclusion-minimal masks, sorted by (popcount, value)."""
    cdef list ordered = sorted(set(masks), key=_popcount_key)
    cdef Py_ssize_t n = PyList_GET_SIZE(ordered)
    cdef Py_ssize_t i, j, nkept
    cdef bint small = True
    for i in range(n):
        if <object>PyList_GET_ITEM(ordered, i) >= (1 << 64):
            small = False
            break
    cdef list kept = []
    cdef uint64_t[::1] kept64
    cdef uint64_t m64, k64
    cdef bint subsumed
    if small:
        import array
        buf = array.array("Q", [0] * n)
        kept64 = buf
        nkept = 0
        for i in range(n):
            m64 = <uint64_t>(<object>PyList_GET_ITEM(ordered, i))
            subsumed = False
            for j in range(nkept):
                k64 = kept64[j]
                if (k64 & m64) == k64:
                    subsumed = True
                    break
            if not subsumed:
                kept64[nkept] = m64
                nkept += 1
                kept.append(<object>PyList_GET_ITEM(ordered, i))
        return kept
    for m in ordered:
        subsumed = False
        for k in kept:
            if (k & m) == k:
                subsumed = True
                break
        if not subsumed:
            kept.append(m)
    return kept


def _popcount_key(m):
    return (m.bit_count(), m)


def dnf_probability(masks, probs):
    """Exact probability of a monotone DNF via memoized Shannon decomposition."""
    if not masks:
        return 0.0
    cdef dict memo = {}
    cdef list p = list(probs)
    return _shannon(tuple(minimize_cut_sets(list(masks))), p, memo)


cdef double _shannon(tuple terms, list probs, dict memo) except -1.0:
    if not terms:
        return 0.0
    if terms[0] == 0:
        return 1.0
    cached = memo.get(terms)
    if cached is not None:
        return <double>cached
    cdef dict counts = {}
    for t in terms:
        tt = t
        while tt:
            bit = tt & -tt
            counts[bit] = counts.get(bit, 0) + 1
            tt ^= bit
    var = min(counts, key=lambda b: (-counts[b], b))
    inv = ~var
    # hi: var fixed true (dropped from terms); lo: only terms without var.
    cdef list hi_raw = [t & inv for t in terms]
    cdef list lo = [t for t in terms if not (t & var)]
    cdef list hi = minimize_cut_sets(hi_raw)
    cdef double p = <double>probs[var.bit_length() - 1]
    cdef double result = p * _shannon(tuple(hi), probs, memo) + (1.0 - p) * _shannon(
        tuple(lo), probs, memo
    )
    memo[terms] = result
    return result


def rare_event_probability(masks, probs):
    """Sum over cut sets of the product of member probabilities."""
    cdef double total = 0.0
    cdef double prod
    for m in masks:
        prod = 1.0
        mm = m
        while mm:
            bit = mm & -mm
            prod *= <double>probs[bit.bit_length() - 1]
            mm ^= bit
        total += prod
    return total
