"""Pure-Python BM25 accumulation kernel.

Must stay expression-for-expression identical to the compiled twin in
_bm25_cy.pyx so both produce bit-equal scores.
"""

from __future__ import annotations


def accumulate(scores, slots, tfs, lengths, idf, k1, b, avgdl):
    """Add one query term's BM25 contribution to `scores` in place.

    scores:  per-chunk accumulator, indexed by slot
    slots:   chunk slot per posting
    tfs:     term frequency per posting
    lengths: token count per chunk slot
    """
    for i in range(len(slots)):
        slot = slots[i]
        tf = tfs[i]
        denom = tf + k1 * (1.0 - b + b * (lengths[slot] / avgdl))
        scores[slot] += idf * (tf * (k1 + 1.0)) / denom
