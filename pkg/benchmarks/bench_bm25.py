"""Compare the compiled BM25 kernel against the pure-Python fallback.

Builds a synthetic corpus, runs the same query batch through both kernels,
and reports wall time plus speedup. Also cross-checks that both kernels
return identical rankings and scores, so the fallback is a true twin.

Usage: python benchmarks/bench_bm25.py [--chunks 20000] [--queries 200]
"""

from __future__ import annotations

import argparse
import random
import time

from kennel.retrieval import InvertedIndex, chunk_document
from kennel.retrieval import scoring

WORDS = [
    "cat", "dog", "bird", "fish", "tree", "river", "stone", "cloud",
    "light", "shadow", "engine", "signal", "cache", "index", "query",
    "token", "model", "prompt", "session", "window", "vector", "graph",
    "table", "column", "stream", "buffer", "socket", "thread", "branch",
    "merge", "commit", "parse", "score", "rank", "field", "value",
]


def build_corpus(n_chunks: int, rng: random.Random) -> InvertedIndex:
    index = InvertedIndex()
    chunks = []
    doc = 0
    while len(chunks) < n_chunks:
        length = rng.randint(40, 200)
        text = " ".join(rng.choice(WORDS) for _ in range(length))
        chunks.extend(chunk_document(f"doc{doc:05d}", text))
        doc += 1
    index.add(chunks[:n_chunks])
    return index


def run_queries(index: InvertedIndex, queries: list[str]) -> tuple[float, list]:
    started = time.perf_counter()
    results = [index.search(q, 10) for q in queries]
    return time.perf_counter() - started, results


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--chunks", type=int, default=20000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    print(f"building corpus: {args.chunks} chunks ...")
    index = build_corpus(args.chunks, rng)
    queries = [
        " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 5)))
        for _ in range(args.queries)
    ]
    index.search(queries[0], 10)  # warm up the posting arrays

    timings = {}
    outputs = {}
    for kernel in scoring.available_kernels():
        scoring.use_kernel(kernel)
        elapsed, results = run_queries(index, queries)
        timings[kernel] = elapsed
        outputs[kernel] = [
            [(s.chunk.doc_id, s.chunk.chunk_index, s.score) for s in hit]
            for hit in results
        ]
        rate = args.queries / elapsed
        print(f"{kernel:>8}: {elapsed * 1000:8.1f} ms total  ({rate:8.1f} queries/s)")

    kernels = sorted(timings)
    if len(kernels) == 2:
        a, b = kernels
        if outputs[a] == outputs[b]:
            print("results: identical rankings and scores across kernels")
        else:
            print("results: MISMATCH between kernels")
            raise SystemExit(1)
        slow, fast = sorted(kernels, key=lambda k: -timings[k])
        print(f"speedup: {kernels_label(fast)} is {timings[slow] / timings[fast]:.1f}x"
              f" faster than {kernels_label(slow)}")
    else:
        print("only one kernel available; build the extension to compare")


def kernels_label(name: str) -> str:
    return {"compiled": "compiled kernel", "python": "pure Python"}.get(name, name)


if __name__ == "__main__":
    main()
