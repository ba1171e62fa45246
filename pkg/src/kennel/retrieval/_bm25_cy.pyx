# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled BM25 accumulation kernel.

Expression-for-expression identical to _bm25_py.accumulate; the build turns
FP contraction off so the two kernels produce bit-equal scores.
"""


def accumulate(double[::1] scores, long long[::1] slots, double[::1] tfs,
               double[::1] lengths, double idf, double k1, double b, double avgdl):
    cdef Py_ssize_t i, n = slots.shape[0]
    cdef Py_ssize_t slot
    cdef double tf, denom
    for i in range(n):
        slot = <Py_ssize_t> slots[i]
        tf = tfs[i]
        denom = tf + k1 * (1.0 - b + b * (lengths[slot] / avgdl))
        scores[slot] += idf * (tf * (k1 + 1.0)) / denom
