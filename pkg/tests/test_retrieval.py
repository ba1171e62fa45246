import json
import math
from array import array

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kennel.errors import CacheError, InvalidInputError
from kennel.retrieval import (
    DocumentChunk,
    InvertedIndex,
    chunk_document,
    chunk_tokens,
    scoring,
    tokenize,
)

from tests._helpers import bm25_reference


def build_index(corpus: dict[str, str], k1: float = 1.2, b: float = 0.75) -> InvertedIndex:
    index = InvertedIndex(k1=k1, b=b)
    for doc_id, text in corpus.items():
        index.add(chunk_document(doc_id, text))
    return index


HAND_CORPUS = {"d1": "cat sat", "d2": "dog sat", "d3": "cat cat"}


class TestTokenize:
    def test_lowercases_and_splits_on_nonword(self):
        assert tokenize("The CAT, sat!") == ["the", "cat", "sat"]

    def test_unicode_word_chars_kept(self):
        assert tokenize("Crème brûlée 42") == ["crème", "brûlée", "42"]

    def test_empty_and_punctuation_only(self):
        assert tokenize("") == []
        assert tokenize("?!... --- ") == []


class TestChunkTokens:
    def test_short_input_single_window(self):
        toks = [f"t{i}" for i in range(10)]
        assert chunk_tokens(toks, 256, 32) == [toks]

    def test_exact_boundary_single_window(self):
        toks = [f"t{i}" for i in range(256)]
        assert chunk_tokens(toks, 256, 32) == [toks]

    def test_300_tokens_two_windows_default_stride(self):
        toks = [f"t{i}" for i in range(300)]
        windows = chunk_tokens(toks, 256, 32)
        # stride = 256 - 32 = 224
        assert len(windows) == 2
        assert windows[0] == toks[0:256]
        assert windows[1] == toks[224:300]

    def test_overlap_shared_suffix_prefix(self):
        toks = [f"t{i}" for i in range(20)]
        windows = chunk_tokens(toks, 8, 3)
        # stride 5: [0:8], [5:13], [10:18], [15:20]
        assert [w[0] for w in windows] == ["t0", "t5", "t10", "t15"]
        assert windows[0][-3:] == windows[1][:3]

    def test_zero_overlap_partitions(self):
        toks = list("abcdefghij")
        windows = chunk_tokens(toks, 4, 0)
        assert windows == [list("abcd"), list("efgh"), list("ij")]
        assert [t for w in windows for t in w] == toks

    def test_empty_input_no_windows(self):
        assert chunk_tokens([], 256, 32) == []

    @pytest.mark.parametrize("max_tokens,overlap", [(0, 0), (-1, 0), (8, 8), (8, 9), (8, -1)])
    def test_invalid_geometry_rejected(self, max_tokens, overlap):
        with pytest.raises(InvalidInputError):
            chunk_tokens(["a"], max_tokens, overlap)

    @given(
        st.lists(st.sampled_from("abcdef"), min_size=1, max_size=120),
        st.integers(min_value=1, max_value=20),
        st.integers(min_value=0, max_value=19),
    )
    def test_every_token_covered(self, toks, max_tokens, overlap):
        if overlap >= max_tokens:
            overlap = max_tokens - 1
        windows = chunk_tokens(toks, max_tokens, overlap)
        stride = max_tokens - overlap
        # windows sit at the stated stride and, minus overlaps, rebuild the input
        flat = []
        for i, w in enumerate(windows):
            start = i * stride
            assert w == toks[start : start + max_tokens]
            flat.extend(w[:stride] if i < len(windows) - 1 else w)
        assert flat == toks


class TestChunkDocument:
    def test_chunks_carry_ids_and_counts(self):
        text = " ".join(f"w{i}" for i in range(300))
        chunks = chunk_document("doc", text)
        assert [(c.doc_id, c.chunk_index) for c in chunks] == [("doc", 0), ("doc", 1)]
        assert [c.token_count for c in chunks] == [256, 76]

    def test_chunk_text_retokenizes_to_itself(self):
        text = "The Cat SAT; on the mat, twice. " * 40
        for chunk in chunk_document("d", text, max_tokens=50, overlap=10):
            assert tokenize(chunk.text) == chunk.text.split(" ")
            assert len(tokenize(chunk.text)) == chunk.token_count

    def test_empty_text_no_chunks(self):
        assert chunk_document("d", "...") == []


class TestIndexStats:
    def test_counts_and_avgdl(self):
        index = build_index(HAND_CORPUS)
        assert index.doc_count == 3
        assert index.avgdl == pytest.approx(2.0)
        assert sorted(index.doc_ids()) == ["d1", "d2", "d3"]

    def test_idf_matches_closed_form(self):
        index = build_index(HAND_CORPUS)
        # df(cat)=2 of N=3
        assert index._idf("cat") == pytest.approx(math.log(1 + (3 - 2 + 0.5) / (2 + 0.5)))
        # df(sat)=2, df(dog)=1
        assert index._idf("dog") == pytest.approx(math.log(1 + (3 - 1 + 0.5) / (1 + 0.5)))
        assert index._idf("missing") == 0.0

    def test_idf_positive_even_for_ubiquitous_terms(self):
        index = build_index({"a": "x", "b": "x", "c": "x"})
        assert index._idf("x") > 0


class TestSearch:
    def test_hand_case_scores(self):
        index = build_index(HAND_CORPUS)
        hits = index.search("cat", k=10)
        assert [(h.chunk.doc_id, h.chunk.chunk_index) for h in hits] == [("d3", 0), ("d1", 0)]
        assert hits[0].score == pytest.approx(0.646255, abs=1e-6)
        assert hits[1].score == pytest.approx(math.log(1.6), abs=1e-12)

    def test_zero_score_chunks_excluded(self):
        index = build_index(HAND_CORPUS)
        hits = index.search("cat", k=10)
        assert all(h.chunk.doc_id != "d2" for h in hits)
        assert index.search("zebra", k=10) == []

    def test_k_truncates(self):
        index = build_index(HAND_CORPUS)
        assert len(index.search("cat", k=1)) == 1

    def test_k_below_one_rejected(self):
        index = build_index(HAND_CORPUS)
        with pytest.raises(InvalidInputError):
            index.search("cat", k=0)

    def test_empty_query_empty_result(self):
        index = build_index(HAND_CORPUS)
        assert index.search("", k=5) == []
        assert index.search("!!!", k=5) == []

    def test_empty_index_empty_result(self):
        assert InvertedIndex().search("cat", k=5) == []

    def test_ties_break_by_doc_id_then_chunk_index(self):
        index = build_index({"b": "same words here", "a": "same words here", "c": "other stuff"})
        hits = index.search("same words", k=10)
        assert [h.chunk.doc_id for h in hits] == ["a", "b"]
        assert hits[0].score == hits[1].score

    def test_duplicate_query_terms_counted_once(self):
        index = build_index(HAND_CORPUS)
        single = index.search("cat", k=10)
        doubled = index.search("cat cat CAT", k=10)
        assert [(h.chunk.key, h.score) for h in single] == [
            (h.chunk.key, h.score) for h in doubled
        ]

    def test_multi_term_scores_sum(self):
        index = build_index(HAND_CORPUS)
        combined = {h.chunk.key: h.score for h in index.search("cat sat", k=10)}
        cat = {h.chunk.key: h.score for h in index.search("cat", k=10)}
        sat = {h.chunk.key: h.score for h in index.search("sat", k=10)}
        for key, score in combined.items():
            assert score == pytest.approx(cat.get(key, 0.0) + sat.get(key, 0.0), abs=1e-12)


class TestScoreSingle:
    def test_matches_search_scores(self):
        index = build_index(HAND_CORPUS)
        for hit in index.search("cat sat", k=10):
            assert index.score(["cat", "sat"], hit.chunk.key) == pytest.approx(
                hit.score, abs=1e-12
            )

    def test_unknown_chunk_rejected(self):
        index = build_index(HAND_CORPUS)
        with pytest.raises(InvalidInputError):
            index.score(["cat"], ("nope", 0))

    def test_empty_index_rejected(self):
        with pytest.raises(InvalidInputError):
            InvertedIndex().score(["cat"], ("d", 0))


class TestMutation:
    def test_add_replaces_existing_doc(self):
        index = build_index(HAND_CORPUS)
        index.add(chunk_document("d3", "dog dog dog"))
        assert index.doc_count == 3
        assert index.search("cat", k=10)[0].chunk.doc_id == "d1"
        assert index.search("dog", k=1)[0].chunk.doc_id == "d3"

    def test_remove_then_unknown_is_noop(self):
        index = build_index(HAND_CORPUS)
        index.remove("d3")
        assert index.doc_count == 2
        assert [h.chunk.doc_id for h in index.search("cat", k=10)] == ["d1"]
        index.remove("never-there")
        assert index.doc_count == 2

    def test_remove_cleans_dead_terms(self):
        index = build_index(HAND_CORPUS)
        index.remove("d2")
        assert index.search("dog", k=5) == []
        assert index._idf("dog") == 0.0

    def test_duplicate_keys_in_one_add_rejected(self):
        chunk = DocumentChunk("d", 0, "cat", 1)
        with pytest.raises(InvalidInputError):
            InvertedIndex().add([chunk, DocumentChunk("d", 0, "dog", 1)])

    def test_token_count_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            InvertedIndex().add([DocumentChunk("d", 0, "cat sat", 5)])

    def test_avgdl_tracks_mutations(self):
        index = build_index({"a": "one two three four", "b": "one two"})
        assert index.avgdl == pytest.approx(3.0)
        index.remove("b")
        assert index.avgdl == pytest.approx(4.0)


class TestPersistence:
    def test_document_shape(self):
        doc = build_index(HAND_CORPUS).to_document()
        assert doc["version"] == 1
        assert doc["k1"] == 1.2 and doc["b"] == 0.75
        assert {c["doc_id"] for c in doc["chunks"]} == {"d1", "d2", "d3"}
        assert doc["postings"]["cat"] == [["d1", 0, 1], ["d3", 0, 2]]
        first = doc["chunks"][0]
        assert set(first) == {"doc_id", "chunk_index", "text", "token_count"}

    def test_save_is_byte_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        build_index(HAND_CORPUS).save(a)
        # different insertion order, same content
        index2 = InvertedIndex()
        for doc_id in ("d3", "d1", "d2"):
            index2.add(chunk_document(doc_id, HAND_CORPUS[doc_id]))
        index2.save(b)
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes().endswith(b"\n")

    def test_round_trip_preserves_search(self, tmp_path):
        path = tmp_path / "index.json"
        original = build_index(HAND_CORPUS)
        original.save(path)
        loaded = InvertedIndex.load(path)
        assert loaded.doc_count == original.doc_count
        assert loaded.avgdl == pytest.approx(original.avgdl)
        for query in ("cat", "cat sat", "dog"):
            assert [(h.chunk.key, h.score) for h in loaded.search(query, k=10)] == [
                (h.chunk.key, h.score) for h in original.search(query, k=10)
            ]

    def test_version_guard(self, tmp_path):
        path = tmp_path / "bad.json"
        doc = build_index(HAND_CORPUS).to_document()
        doc["version"] = 2
        path.write_text(json.dumps(doc))
        with pytest.raises(CacheError):
            InvertedIndex.load(path)

    def test_unreadable_file_is_cache_error(self, tmp_path):
        path = tmp_path / "nope.json"
        with pytest.raises(CacheError):
            InvertedIndex.load(path)
        path.write_text("{not json")
        with pytest.raises(CacheError):
            InvertedIndex.load(path)

    def test_dangling_posting_rejected(self, tmp_path):
        doc = build_index(HAND_CORPUS).to_document()
        doc["postings"]["ghost"] = [["missing-doc", 0, 1]]
        path = tmp_path / "dangling.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CacheError):
            InvertedIndex.load(path)

    def test_save_failure_is_cache_error(self, tmp_path):
        with pytest.raises(CacheError):
            build_index(HAND_CORPUS).save(tmp_path / "missing" / "index.json")


words = st.sampled_from(["cat", "dog", "sat", "mat", "fish", "bird", "run", "edge"])
documents = st.lists(
    st.lists(words, min_size=1, max_size=30).map(" ".join), min_size=1, max_size=8
)


class TestOracleEquivalence:
    @given(documents, st.lists(words, min_size=1, max_size=4).map(" ".join))
    @settings(max_examples=60, deadline=None)
    def test_search_matches_reference(self, texts, query):
        corpus = {f"doc{i}": text for i, text in enumerate(texts)}
        index = build_index(corpus)
        triples = [
            (c.doc_id, c.chunk_index, c.text)
            for doc_id, text in corpus.items()
            for c in chunk_document(doc_id, text)
        ]
        expected = bm25_reference(triples, query, k=10)
        got = [((h.chunk.doc_id, h.chunk.chunk_index), h.score) for h in index.search(query, 10)]
        assert [key for key, _ in got] == [key for key, _ in expected]
        for (_, got_score), (_, want_score) in zip(got, expected):
            assert got_score == pytest.approx(want_score, abs=1e-9)

    @given(documents)
    @settings(max_examples=30, deadline=None)
    def test_single_term_rank_follows_closed_form(self, texts):
        # for one query term, ranking must be monotone in the per-chunk term weight
        corpus = {f"doc{i}": text for i, text in enumerate(texts)}
        index = build_index(corpus)
        hits = index.search("cat", k=50)
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        assert all(s > 0 for s in scores)


class TestKernelParity:
    def test_both_kernels_registered(self):
        names = scoring.available_kernels()
        assert "python" in names

    def test_unknown_kernel_rejected(self):
        with pytest.raises(ValueError):
            scoring.use_kernel("fortran")

    def test_python_kernel_matches_active(self):
        if scoring.active_kernel() == "python":
            pytest.skip("compiled kernel unavailable, nothing to compare")
        corpus = {
            f"doc{i}": " ".join(
                ["cat"] * (i % 4) + ["dog"] * ((i * 7) % 5) + ["sat"] * (1 + i % 3)
            )
            for i in range(25)
        }
        index = build_index(corpus)
        queries = ["cat", "cat sat", "dog sat cat", "sat"]

        def snapshot():
            return [
                [(h.chunk.key, h.score) for h in index.search(q, 10)] for q in queries
            ]

        original = scoring.active_kernel()
        try:
            compiled = snapshot()
            scoring.use_kernel("python")
            pure = snapshot()
        finally:
            scoring.use_kernel(original)
        # bit-identical, not approximately equal
        assert compiled == pure

    def test_accumulate_contract(self):
        # lengths is indexed by chunk slot; slots/tfs are parallel posting rows
        scores = array("d", [0.0, 0.0, 1.0])
        slots = array("q", [0, 2])
        tfs = array("d", [1.0, 2.0])
        lengths = array("d", [2.0, 4.0, 2.0])
        scoring.accumulate(scores, slots, tfs, lengths, math.log(1.6), 1.2, 0.75, 2.0)
        assert scores[0] == pytest.approx(math.log(1.6), abs=1e-12)
        assert scores[1] == 0.0
        assert scores[2] == pytest.approx(1.0 + math.log(1.6) * 1.375, abs=1e-12)
