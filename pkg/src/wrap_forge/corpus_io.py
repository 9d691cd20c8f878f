"""Sharded corpus I/O and document chunking.

Shards are newline-delimited JSON objects with keys ``id``, ``text``,
``source`` and an optional flat string map ``meta``. Files written by
:func:`write_shard` are named ``<prefix>-NNNNN.jsonl`` and serialize
deterministically so reruns are byte-identical.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .textseg import sentence_spans

TOKEN_SCHEMES = ("whitespace-words", "unicode-words")
DEFAULT_SCHEME = "whitespace-words"

_UNICODE_WORD_RE = re.compile(r"\w+")


class ShardFormatError(ValueError):
    """Raised in strict mode when a shard line cannot be parsed."""


@dataclass(frozen=True)
class Document:
    """One corpus record. ``meta`` holds flat string-to-string annotations."""

    id: str
    text: str
    source: str
    meta: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Chunk:
    """A rephrase-sized slice of a parent document."""

    parent_id: str
    index: int
    text: str
    token_count: int


@dataclass(frozen=True)
class ShardManifest:
    path: str
    record_count: int
    token_count: int
    source: str


@dataclass(frozen=True)
class LoadError:
    path: str
    line: int
    message: str


def tokenize(text: str, scheme: str = DEFAULT_SCHEME) -> list[str]:
    if scheme == "whitespace-words":
        return text.split()
    if scheme == "unicode-words":
        return _UNICODE_WORD_RE.findall(text)
    raise ValueError(f"unknown token scheme: {scheme!r}")


def count_tokens(text: str, scheme: str = DEFAULT_SCHEME) -> int:
    return len(tokenize(text, scheme))


def chunk_document(
    doc: Document, max_tokens: int = 300, scheme: str = DEFAULT_SCHEME
) -> list[Chunk]:
    """Split ``doc`` into chunks of at most ``max_tokens`` tokens.

    Greedy sentence packing; a single sentence longer than the budget is
    hard-split on token boundaries into standalone pieces. A document that
    fits whole becomes one chunk with text identical to ``doc.text``.
    Joining chunk texts with single spaces preserves the token sequence.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    total = count_tokens(doc.text, scheme)
    if total == 0:
        return []
    if total <= max_tokens:
        return [Chunk(doc.id, 0, doc.text, total)]

    pieces: list[str] = []
    start = end = None
    packed = 0

    def flush() -> None:
        nonlocal start, packed
        if start is not None:
            pieces.append(doc.text[start:end])
            start = None
            packed = 0

    for a, b in sentence_spans(doc.text):
        n = count_tokens(doc.text[a:b], scheme)
        if n > max_tokens:
            flush()
            toks = tokenize(doc.text[a:b], scheme)
            for i in range(0, len(toks), max_tokens):
                pieces.append(" ".join(toks[i : i + max_tokens]))
        elif start is not None and packed + n <= max_tokens:
            end = b
            packed += n
        else:
            flush()
            start, end, packed = a, b, n
    flush()

    pieces = [p for p in pieces if count_tokens(p, scheme) >= 1]
    return [
        Chunk(doc.id, i, p, count_tokens(p, scheme)) for i, p in enumerate(pieces)
    ]


def _parse_line(raw: str) -> Document:
    obj = json.loads(raw)
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    for key in ("id", "text", "source"):
        if key not in obj:
            raise ValueError(f"missing key {key!r}")
        if not isinstance(obj[key], str):
            raise ValueError(f"key {key!r} is not a string")
    if not obj["id"]:
        raise ValueError("empty id")
    if not obj["text"].strip():
        raise ValueError("text is empty after trimming")
    meta = obj.get("meta", {})
    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):
        raise ValueError("meta is not a flat string map")
    return Document(id=obj["id"], text=obj["text"], source=obj["source"], meta=meta)


def load_shard(
    path: str | Path,
    errors: list[LoadError] | None = None,
    strict: bool = False,
) -> Iterator[Document]:
    """Yield documents from one shard file in order.

    Malformed lines (bad JSON, missing/typed-wrong keys, duplicate ids) are
    skipped and appended to ``errors`` with their 1-based line number; with
    ``strict`` they raise :class:`ShardFormatError` instead.
    """
    path = Path(path)
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                doc = _parse_line(raw)
                if doc.id in seen:
                    raise ValueError(f"duplicate id {doc.id!r}")
            except ValueError as exc:
                if strict:
                    raise ShardFormatError(f"{path}:{lineno}: {exc}") from exc
                if errors is not None:
                    errors.append(LoadError(str(path), lineno, str(exc)))
                continue
            seen.add(doc.id)
            yield doc


def load_shards(
    paths: Iterable[str | Path],
    errors: list[LoadError] | None = None,
    strict: bool = False,
) -> Iterator[Document]:
    for p in paths:
        yield from load_shard(p, errors=errors, strict=strict)


def document_to_json(doc: Document) -> str:
    """Serialize one document deterministically (fixed key order)."""
    obj: dict[str, object] = {"id": doc.id, "text": doc.text, "source": doc.source}
    if doc.meta:
        obj["meta"] = {k: doc.meta[k] for k in sorted(doc.meta)}
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_shard(
    docs: Sequence[Document] | Iterable[Document],
    prefix: str | Path,
    max_records_per_file: int = 100_000,
    scheme: str = DEFAULT_SCHEME,
) -> list[ShardManifest]:
    """Write documents to ``<prefix>-NNNNN.jsonl`` files.

    Returns one manifest per file written; zero documents produce zero
    files. Round-trips exactly through :func:`load_shard`.
    """
    if max_records_per_file < 1:
        raise ValueError("max_records_per_file must be >= 1")
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    manifests: list[ShardManifest] = []
    batch: list[Document] = []

    def emit() -> None:
        if not batch:
            return
        out = prefix.parent / f"{prefix.name}-{len(manifests):05d}.jsonl"
        with out.open("w", encoding="utf-8") as fh:
            for d in batch:
                fh.write(document_to_json(d) + "\n")
        sources = {d.source for d in batch}
        manifests.append(
            ShardManifest(
                path=str(out),
                record_count=len(batch),
                token_count=sum(count_tokens(d.text, scheme) for d in batch),
                source=sources.pop() if len(sources) == 1 else "mixed",
            )
        )
        batch.clear()

    for doc in docs:
        batch.append(doc)
        if len(batch) == max_records_per_file:
            emit()
    emit()
    return manifests
