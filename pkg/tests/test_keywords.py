import numpy as np
import pytest

from trendlens.embedding import (
    EmbeddingModel,
    ModelFormatError,
    TrainConfig,
    Vocabulary,
    save_model,
)
from trendlens.keywords import (
    ExtractionResult,
    FileEmbedder,
    KeywordScore,
    ReferenceEmbedder,
    document_vectors,
    extract_keywords,
    load_document_vectors,
    load_extractions,
    save_document_vectors,
    save_extractions,
)
from trendlens.textprep import StopwordList, TokenStream


def model_from(vectors: dict, dim=None, seed=0):
    words = tuple(sorted(vectors))
    dim = dim or len(next(iter(vectors.values())))
    matrix = np.array([vectors[w] for w in words], dtype=np.float64)
    vocab = Vocabulary(words, tuple([1] * len(words)))
    return EmbeddingModel(vocab, matrix, np.zeros_like(matrix), TrainConfig(dim=dim, min_count=1), seed)


def random_model(V, D, seed):
    rng = np.random.default_rng(seed)
    return model_from({f"w{i:03d}": rng.normal(size=D) for i in range(V)}, dim=D)


def stream(*tokens, doc_id="D"):
    return TokenStream(doc_id, tuple(tokens))


class TestReferenceEmbedder:
    def test_repeated_token_mean_equals_its_vector(self):
        model = model_from({"solar": [1.0, 2.0], "wind": [0.0, 1.0]})
        embedder = ReferenceEmbedder(model)
        doc_vec = embedder.embed_document(stream("solar", "solar", "solar"))
        np.testing.assert_array_equal(doc_vec, model.vector("solar"))

    def test_two_words_give_midpoint(self):
        model = model_from({"a": [0.0, 0.0], "b": [2.0, 4.0]})
        embedder = ReferenceEmbedder(model)
        np.testing.assert_array_equal(embedder.embed_document(stream("a", "b")), [1.0, 2.0])

    def test_all_unknown_tokens_error(self):
        embedder = ReferenceEmbedder(model_from({"a": [1.0, 0.0]}))
        with pytest.raises(ValueError, match="no in-vocabulary"):
            embedder.embed_document(stream("x", "y"))

    def test_unknown_word_absent(self):
        embedder = ReferenceEmbedder(model_from({"a": [1.0, 0.0]}))
        assert embedder.embed_word("zzz") is None

    def test_zero_vector_never_returned(self):
        embedder = ReferenceEmbedder(model_from({"a": [0.0, 0.0], "b": [1.0, 0.0]}))
        assert embedder.embed_word("a") is None


class TestFileEmbedder:
    def test_dimension_mismatch(self, tmp_path):
        doc_path, word_path = tmp_path / "d.vec", tmp_path / "w.vec"
        save_document_vectors({"D1": np.zeros(4) + 1.0}, doc_path)
        save_model(random_model(3, 8, 0), word_path)
        with pytest.raises(ModelFormatError, match="mismatch"):
            FileEmbedder.from_files(doc_path, word_path)

    def test_lookup_returns_stored_vector(self, tmp_path):
        doc_path, word_path = tmp_path / "d.vec", tmp_path / "w.vec"
        model = random_model(3, 4, 1)
        stored = np.array([1.0, 2.0, 3.0, 4.0])
        save_document_vectors({"D1": stored}, doc_path)
        save_model(model, word_path)
        embedder = FileEmbedder.from_files(doc_path, word_path)
        np.testing.assert_array_equal(embedder.embed_document(stream(doc_id="D1")), stored)
        assert embedder.embed_document(stream(doc_id="other")) is None

    def test_docvec_round_trip(self, tmp_path):
        path = tmp_path / "d.vec"
        vectors = {"A": np.array([0.1, 0.2]), "B": np.array([1e-300, -7.5])}
        save_document_vectors(vectors, path)
        loaded, dim = load_document_vectors(path)
        assert dim == 2
        for key in vectors:
            np.testing.assert_array_equal(loaded[key], vectors[key])

    def test_doc_id_with_space_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="whitespace"):
            save_document_vectors({"bad id": np.zeros(2)}, tmp_path / "d.vec")

    def test_file_embedder_reproduces_reference_extraction(self, tmp_path):
        model = random_model(40, 6, seed=5)
        rng = np.random.default_rng(6)
        streams = [
            TokenStream(f"D{i}", tuple(rng.choice([f"w{j:03d}" for j in range(40)], size=12)))
            for i in range(10)
        ]
        reference = ReferenceEmbedder(model)
        doc_path, word_path = tmp_path / "d.vec", tmp_path / "w.vec"
        save_document_vectors(document_vectors(reference, streams), doc_path)
        save_model(model, word_path)
        from_files = FileEmbedder.from_files(doc_path, word_path)
        for s in streams:
            assert extract_keywords(s, reference, (), 5) == extract_keywords(s, from_files, (), 5)


class TestExtract:
    def test_single_repeated_token_scores_one(self):
        model = model_from({"solar": [3.0, 4.0]})
        result = extract_keywords(stream("solar", "solar", "solar"), ReferenceEmbedder(model), (), 5)
        assert [(ks.keyword, ks.score) for ks in result.keywords] == [("solar", 1.0)]

    def test_matches_brute_force_oracle(self):
        model = random_model(60, 8, seed=3)
        rng = np.random.default_rng(4)
        vocab_words = list(model.vocab.words)
        for i in range(100):
            tokens = tuple(rng.choice(vocab_words + ["oov1", "oov2"], size=15))
            doc = TokenStream(f"D{i}", tokens)
            result = extract_keywords(doc, ReferenceEmbedder(model), (), 5)

            # independent oracle: score every candidate, fully sort, truncate
            known = sorted({t for t in tokens if t in model.vocab.index})
            rows = [model.vector(t) for t in tokens if t in model.vocab.index]
            doc_vec = np.mean(rows, axis=0)
            scored = []
            for t in known:
                v = model.vector(t)
                scored.append((t, float(v @ doc_vec / (np.linalg.norm(v) * np.linalg.norm(doc_vec)))))
            scored.sort(key=lambda ts: (-ts[1], ts[0]))
            assert [(k.keyword, k.score) for k in result.keywords] == scored[:5]

    def test_ties_break_lexicographically(self):
        shared = [0.6, 0.8]
        model = model_from({"zeta": shared, "alpha": shared, "mid": [1.0, 0.0]})
        result = extract_keywords(stream("zeta", "alpha", "mid"), ReferenceEmbedder(model), (), 3)
        keywords = [ks.keyword for ks in result.keywords]
        assert keywords.index("alpha") < keywords.index("zeta")

    def test_stopwords_excluded_from_candidates(self):
        model = model_from({"the": [1.0, 0.0], "signal": [0.9, 0.1]})
        stop = StopwordList(("the",), "base")
        result = extract_keywords(stream("the", "signal"), ReferenceEmbedder(model), [stop], 5)
        assert [ks.keyword for ks in result.keywords] == ["signal"]

    def test_no_candidates_warns_not_raises(self):
        model = model_from({"a": [1.0, 0.0]})
        result = extract_keywords(stream("x", "y"), ReferenceEmbedder(model), (), 5)
        assert result.keywords == ()
        assert result.warning is not None

    def test_all_stopwords_warns(self):
        model = model_from({"a": [1.0, 0.0]})
        stop = StopwordList(("a",), "base")
        result = extract_keywords(stream("a", "a"), ReferenceEmbedder(model), [stop], 5)
        assert result.keywords == () and result.warning

    def test_top_n_truncates(self):
        model = random_model(20, 4, seed=8)
        doc = TokenStream("D", tuple(model.vocab.words))
        result = extract_keywords(doc, ReferenceEmbedder(model), (), 3)
        assert len(result.keywords) == 3

    def test_invalid_top_n(self):
        model = model_from({"a": [1.0, 0.0]})
        with pytest.raises(ValueError):
            extract_keywords(stream("a"), ReferenceEmbedder(model), (), 0)

    def test_order_of_duplicate_tokens_irrelevant(self):
        model = random_model(10, 4, seed=9)
        words = list(model.vocab.words)[:6]
        tokens = words + words[:3]
        a = extract_keywords(TokenStream("D", tuple(tokens)), ReferenceEmbedder(model), (), 4)
        b = extract_keywords(TokenStream("D", tuple(reversed(tokens))), ReferenceEmbedder(model), (), 4)
        assert a.keywords == b.keywords

    def test_ranking_invariant_under_uniform_scaling(self):
        base = random_model(30, 6, seed=10)
        scaled = model_from(
            {w: 3.5 * base.vector(w) for w in base.vocab.words}, dim=6
        )
        rng = np.random.default_rng(11)
        tokens = tuple(rng.choice(base.vocab.words, size=12))
        doc = TokenStream("D", tokens)
        a = extract_keywords(doc, ReferenceEmbedder(base), (), 6)
        b = extract_keywords(doc, ReferenceEmbedder(scaled), (), 6)
        assert [k.keyword for k in a.keywords] == [k.keyword for k in b.keywords]

    def test_result_invariants(self):
        model = random_model(25, 5, seed=12)
        rng = np.random.default_rng(13)
        stop = StopwordList(("w001", "w002"), "curated")
        for i in range(20):
            tokens = tuple(rng.choice(model.vocab.words, size=10))
            doc = TokenStream(f"D{i}", tokens)
            result = extract_keywords(doc, ReferenceEmbedder(model), [stop], 4)
            scores = [ks.score for ks in result.keywords]
            assert scores == sorted(scores, reverse=True)
            assert len({ks.keyword for ks in result.keywords}) == len(result.keywords)
            for ks in result.keywords:
                assert ks.keyword in tokens
                assert ks.keyword not in stop
                assert -1.0 - 1e-12 <= ks.score <= 1.0 + 1e-12


class TestExtractionCsv:
    def test_round_trip_keywords(self, tmp_path):
        results = [
            ExtractionResult("D1", ()),  # empty extraction leaves no rows
            ExtractionResult("D2", (KeywordScore("alpha", 0.75), KeywordScore("beta", 0.5))),
        ]
        path = tmp_path / "k.csv"
        save_extractions(results, path)
        loaded = load_extractions(path)
        assert [r.doc_id for r in loaded] == ["D2"]
        assert [ks.keyword for ks in loaded[0].keywords] == ["alpha", "beta"]

    def test_scores_written_six_decimals(self, tmp_path):
        path = tmp_path / "k.csv"
        save_extractions([ExtractionResult("D", (KeywordScore("a", 1 / 3),))], path)
        assert "0.333333" in path.read_text()

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("nope\n")
        with pytest.raises(ValueError, match="header"):
            load_extractions(path)
