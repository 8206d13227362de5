"""Tokenization and two-tier stopword filtering for patent abstracts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "TokenStream",
    "StopwordList",
    "STOPWORD_TIERS",
    "tokenize",
    "filter_stopwords",
    "load_stopword_list",
    "save_stopword_list",
    "load_base_stopwords",
    "load_token_streams",
    "save_token_streams",
]

STOPWORD_TIERS = ("base", "generated", "curated")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into alphanumeric tokens.

    Every character that is not a Unicode letter or digit acts as a
    separator, so "Deep-Learning, (AI)!" becomes [deep, learning, ai].
    """
    tokens: list[str] = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


@dataclass(frozen=True)
class TokenStream:
    """Ordered lowercase tokens of one document's analysis text."""

    doc_id: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, doc_id: str, text: str) -> "TokenStream":
        return cls(doc_id, tuple(tokenize(text)))


@dataclass(frozen=True)
class StopwordList:
    """Deduplicated, ordered lowercase stop tokens with a provenance tier."""

    entries: tuple[str, ...]
    tier: str

    def __post_init__(self):
        if self.tier not in STOPWORD_TIERS:
            raise ValueError(f"unknown stopword tier {self.tier!r}")
        seen = set()
        for entry in self.entries:
            if not entry or not all(ch.isalnum() for ch in entry):
                raise ValueError(f"stopword entry {entry!r} contains whitespace or punctuation")
            if entry != entry.lower():
                raise ValueError(f"stopword entry {entry!r} is not lowercase")
            if entry in seen:
                raise ValueError(f"duplicate stopword entry {entry!r}")
            seen.add(entry)

    @cached_property
    def _set(self) -> frozenset:
        return frozenset(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self._set

    def __len__(self) -> int:
        return len(self.entries)


def stopword_union(lists: Iterable[StopwordList]) -> frozenset:
    sets = [sl._set for sl in lists]
    return frozenset().union(*sets) if sets else frozenset()


def filter_stopwords(stream: TokenStream, *lists: StopwordList) -> TokenStream:
    """Drop every token that appears in any of the given lists."""
    stop = stopword_union(lists)
    return TokenStream(stream.doc_id, tuple(t for t in stream.tokens if t not in stop))


def load_stopword_list(path: str | Path, tier: str) -> StopwordList:
    """Read one token per line; ``#`` lines are comments, duplicates collapse."""
    entries: list[str] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            entry = line.lower()
            if not all(ch.isalnum() for ch in entry):
                raise ValueError(f"{path}:{lineno}: stopword {line!r} contains whitespace or punctuation")
            if entry not in seen:
                seen.add(entry)
                entries.append(entry)
    return StopwordList(tuple(entries), tier)


def save_stopword_list(stopwords: StopwordList, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in stopwords.entries:
            fh.write(entry + "\n")


def load_base_stopwords() -> StopwordList:
    """The bundled general-English stopword list (tier ``base``)."""
    ref = resources.files("trendlens").joinpath("data/english_stopwords.txt")
    with resources.as_file(ref) as path:
        return load_stopword_list(path, "base")


def save_token_streams(streams: Sequence[TokenStream], path: str | Path) -> None:
    """Write streams as JSONL records {"id": ..., "tokens": [...]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for stream in streams:
            fh.write(json.dumps({"id": stream.doc_id, "tokens": list(stream.tokens)}, ensure_ascii=False) + "\n")


def load_token_streams(path: str | Path) -> list[TokenStream]:
    streams: list[TokenStream] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict) or set(record) != {"id", "tokens"}:
                raise ValueError(f"{path}:{lineno}: expected keys 'id' and 'tokens'")
            doc_id, tokens = record["id"], record["tokens"]
            if not isinstance(doc_id, str) or not doc_id:
                raise ValueError(f"{path}:{lineno}: 'id' must be a non-empty string")
            if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
                raise ValueError(f"{path}:{lineno}: 'tokens' must be a list of strings")
            streams.append(TokenStream(doc_id, tuple(tokens)))
    return streams
