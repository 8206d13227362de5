"""Keyword extraction: rank a document's words by cosine similarity to the
document's own embedding and keep the top n.

The procedure is embedder-agnostic.  ``ReferenceEmbedder`` derives both
sides from a trained skip-gram model (document vector = mean of in-vocab
word vectors); ``FileEmbedder`` serves vectors produced elsewhere (for
example by a transformer) from two text files, so swapping the embedding
source changes nothing downstream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .embedding import EmbeddingModel, ModelFormatError, cosine_similarity, load_model
from .textprep import StopwordList, TokenStream, stopword_union

__all__ = [
    "Embedder",
    "ReferenceEmbedder",
    "FileEmbedder",
    "KeywordScore",
    "ExtractionResult",
    "extract_keywords",
    "save_extractions",
    "load_extractions",
    "save_document_vectors",
    "load_document_vectors",
    "document_vectors",
]

_DOCVEC_MAGIC = "trendlens-docvec"
_DOCVEC_VERSION = "1"


class Embedder(Protocol):
    """Vector source for documents and words sharing one dimension."""

    @property
    def dim(self) -> int: ...

    def embed_document(self, stream: TokenStream) -> np.ndarray | None: ...

    def embed_word(self, token: str) -> np.ndarray | None: ...


@dataclass(frozen=True)
class KeywordScore:
    keyword: str
    score: float


@dataclass(frozen=True)
class ExtractionResult:
    """Top keywords of one document, strictly sorted by (score desc, keyword asc)."""

    doc_id: str
    keywords: tuple[KeywordScore, ...]
    warning: str | None = None


class ReferenceEmbedder:
    """Embedder backed by a trained model; the document vector is the mean
    of its in-vocabulary token vectors, so repeated words pull the mean."""

    def __init__(self, model: EmbeddingModel):
        if len(model.vocab) == 0:
            raise ValueError("model vocabulary is empty")
        self.model = model

    @property
    def dim(self) -> int:
        return self.model.dim

    def embed_word(self, token: str) -> np.ndarray | None:
        if token not in self.model:
            return None
        vec = self.model.vector(token)
        if not vec.any():
            return None
        return vec

    def embed_document(self, stream: TokenStream) -> np.ndarray:
        rows = [self.model.vector(t) for t in stream.tokens if t in self.model]
        if not rows:
            raise ValueError(f"document {stream.doc_id!r} has no in-vocabulary tokens")
        return np.mean(rows, axis=0)


class FileEmbedder:
    """Embedder backed by externally produced vector files.

    Document vectors are keyed by doc id, word vectors by token; unknown
    keys are simply absent.
    """

    def __init__(self, doc_vectors: Mapping[str, np.ndarray], word_vectors: Mapping[str, np.ndarray], dim: int):
        self._docs = dict(doc_vectors)
        self._words = dict(word_vectors)
        self._dim = dim

    @classmethod
    def from_files(cls, doc_vectors_path: str | Path, word_vectors_path: str | Path) -> "FileEmbedder":
        docs, doc_dim = load_document_vectors(doc_vectors_path)
        model = load_model(word_vectors_path)
        if doc_dim != model.dim:
            raise ModelFormatError(
                f"dimension mismatch: document vectors are {doc_dim}-d, word vectors are {model.dim}-d"
            )
        words = {w: model.vector(w) for w in model.vocab.words}
        return cls(docs, words, doc_dim)

    @property
    def dim(self) -> int:
        return self._dim

    def embed_word(self, token: str) -> np.ndarray | None:
        vec = self._words.get(token)
        if vec is None or not vec.any():
            return None
        return vec

    def embed_document(self, stream: TokenStream) -> np.ndarray | None:
        return self._docs.get(stream.doc_id)


def extract_keywords(
    stream: TokenStream,
    embedder: Embedder,
    stopwords: Iterable[StopwordList] = (),
    top_n: int = 5,
) -> ExtractionResult:
    """Score the document's candidate words against its document vector.

    Candidates are the unique non-stopword tokens the embedder knows.  A
    document with nothing scoreable yields an empty result carrying a
    warning instead of an error.
    """
    if top_n < 1:
        raise ValueError("top_n must be positive")
    stop = stopword_union(stopwords)
    filtered = tuple(t for t in stream.tokens if t not in stop)
    candidates = [
        (token, vec)
        for token in sorted(set(filtered))
        if (vec := embedder.embed_word(token)) is not None
    ]
    if not candidates:
        return ExtractionResult(stream.doc_id, (), warning="no scoreable candidates")
    doc_vec = embedder.embed_document(TokenStream(stream.doc_id, filtered))
    if doc_vec is None:
        return ExtractionResult(stream.doc_id, (), warning="no document vector")
    if not np.linalg.norm(doc_vec) > 0:
        return ExtractionResult(stream.doc_id, (), warning="zero-norm document vector")
    scored = [(token, cosine_similarity(vec, doc_vec)) for token, vec in candidates]
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    top = tuple(KeywordScore(t, s) for t, s in scored[:top_n])
    return ExtractionResult(stream.doc_id, top)


def save_extractions(results: Sequence[ExtractionResult], path: str | Path) -> None:
    """Write per-document keywords as CSV: doc_id,rank,keyword,score."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "rank", "keyword", "score"])
        for result in results:
            for rank, ks in enumerate(result.keywords, 1):
                writer.writerow([result.doc_id, rank, ks.keyword, f"{ks.score:.6f}"])


def load_extractions(path: str | Path) -> list[ExtractionResult]:
    """Read an extraction CSV back; documents keep file order."""
    grouped: dict[str, list[KeywordScore]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["doc_id", "rank", "keyword", "score"]:
            raise ValueError(f"{path}: expected header doc_id,rank,keyword,score")
        for row in reader:
            if len(row) != 4:
                raise ValueError(f"{path}: expected 4 fields, got {len(row)}")
            doc_id, _rank, keyword, score = row
            grouped.setdefault(doc_id, []).append(KeywordScore(keyword, float(score)))
    return [ExtractionResult(doc_id, tuple(kws)) for doc_id, kws in grouped.items()]


def save_document_vectors(vectors: Mapping[str, np.ndarray], path: str | Path) -> None:
    """Write doc-id-keyed vectors: header, then one id + values per line."""
    dims = {v.shape[-1] for v in vectors.values()}
    if len(dims) > 1:
        raise ValueError(f"document vectors disagree on dimension: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    for doc_id in vectors:
        if any(ch.isspace() for ch in doc_id):
            raise ValueError(f"doc id {doc_id!r} contains whitespace; not representable")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{_DOCVEC_MAGIC} {_DOCVEC_VERSION} {len(vectors)} {dim}\n")
        for doc_id, vec in vectors.items():
            fh.write(doc_id + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def load_document_vectors(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != _DOCVEC_MAGIC or header[1] != _DOCVEC_VERSION:
            raise ModelFormatError(
                f"{path}: bad header (expected '{_DOCVEC_MAGIC} {_DOCVEC_VERSION} N D')"
            )
        try:
            n, dim = int(header[2]), int(header[3])
        except ValueError:
            raise ModelFormatError(f"{path}: bad header (N, D must be integers)") from None
        vectors: dict[str, np.ndarray] = {}
        for line in fh:
            if not line.strip():
                continue
            parts = line.split()
            doc_id, values = parts[0], parts[1:]
            if doc_id in vectors:
                raise ModelFormatError(f"{path}: duplicate doc id {doc_id!r}")
            if len(values) != dim:
                raise ModelFormatError(
                    f"{path}: doc {doc_id!r}: expected {dim} values, got {len(values)}"
                )
            try:
                vectors[doc_id] = np.array([float(v) for v in values])
            except ValueError:
                raise ModelFormatError(f"{path}: doc {doc_id!r}: malformed float") from None
    if len(vectors) != n:
        raise ModelFormatError(f"{path}: header promises {n} rows, found {len(vectors)}")
    return vectors, dim


def document_vectors(
    embedder: Embedder, streams: Sequence[TokenStream], stopwords: Iterable[StopwordList] = ()
) -> dict[str, np.ndarray]:
    """Document vectors as extraction would compute them, keyed by doc id.

    Documents with no embeddable content are skipped, mirroring the
    warning path of :func:`extract_keywords`.
    """
    stop = stopword_union(stopwords)
    out: dict[str, np.ndarray] = {}
    for stream in streams:
        filtered = tuple(t for t in stream.tokens if t not in stop)
        if not any(embedder.embed_word(t) is not None for t in set(filtered)):
            continue
        vec = embedder.embed_document(TokenStream(stream.doc_id, filtered))
        if vec is not None:
            out[stream.doc_id] = vec
    return out
