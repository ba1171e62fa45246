"""BM25 kernel selection: compiled extension when built, pure Python otherwise."""

from __future__ import annotations

from kennel.retrieval import _bm25_py

_KERNELS = {"python": _bm25_py.accumulate}

try:
    from kennel.retrieval import _bm25_cy

    _KERNELS["compiled"] = _bm25_cy.accumulate
    _active = "compiled"
except ImportError:
    _active = "python"


def active_kernel() -> str:
    return _active


def available_kernels() -> list[str]:
    return sorted(_KERNELS)


def use_kernel(name: str) -> None:
    """Force a kernel (mainly for benchmarking). Not thread-safe with searches."""
    global _active
    if name not in _KERNELS:
        raise ValueError(f"unknown kernel {name!r}; available: {sorted(_KERNELS)}")
    _active = name


def accumulate(scores, slots, tfs, lengths, idf, k1, b, avgdl) -> None:
    _KERNELS[_active](scores, slots, tfs, lengths, idf, k1, b, avgdl)
