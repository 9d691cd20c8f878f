"""Drive a chat-completion endpoint to rephrase chunks.

Single-call and streaming entry points. The stream keeps at most
``max_in_flight`` requests outstanding, emits results as they finish
(order not guaranteed), and never aborts on a bad chunk: failures come
back as :class:`FailureRecord` values and the run continues.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

from .corpus_io import Chunk, Document, count_tokens
from .style_prompts import PromptTemplate, Style, builtin_template, render_prompt
from .wire import EndpointConfig, EndpointError, chat_completion

CHUNK_TOKEN_BUDGET = 300


@dataclass(frozen=True)
class RawRephrase:
    parent_id: str
    chunk_index: int
    style: Optional[Style]
    text: str
    model_id: str
    prompt_version: str
    latency: float
    prompt_tokens: int
    completion_tokens: int


@dataclass(frozen=True)
class FailureRecord:
    parent_id: str
    chunk_index: int
    style: Optional[Style]
    error: str
    status: Optional[int] = None


@dataclass
class GenerationLog:
    started_at: float = 0.0
    finished_at: float = 0.0
    requests: int = 0
    failures: int = 0
    completion_tokens_total: int = 0


def _as_template(style: Union[Style, PromptTemplate]) -> PromptTemplate:
    if isinstance(style, PromptTemplate):
        return style
    return builtin_template(style)


def raw_to_document(raw: RawRephrase) -> Document:
    """Flatten a raw rephrase into a shardable Document (filtering comes later)."""
    style_name = raw.style.value if raw.style else "custom"
    return Document(
        id=f"{raw.parent_id}::{raw.chunk_index}::{style_name}",
        text=raw.text,
        source="raw-rephrase",
        meta={
            "parent_id": raw.parent_id,
            "chunk_index": str(raw.chunk_index),
            "style": style_name,
            "model_id": raw.model_id,
            "prompt_version": raw.prompt_version,
            "prompt_tokens": str(raw.prompt_tokens),
            "completion_tokens": str(raw.completion_tokens),
        },
    )


def document_to_raw(doc: Document) -> RawRephrase:
    """Inverse of :func:`raw_to_document` for shard-file pipelines."""
    missing = [k for k in ("parent_id", "chunk_index", "style") if k not in doc.meta]
    if missing:
        raise ValueError(f"document {doc.id!r} lacks rephrase metadata: {missing}")
    style_name = doc.meta["style"]
    known = {s.value: s for s in Style}
    return RawRephrase(
        parent_id=doc.meta["parent_id"],
        chunk_index=int(doc.meta["chunk_index"]),
        style=known.get(style_name),
        text=doc.text,
        model_id=doc.meta.get("model_id", ""),
        prompt_version=doc.meta.get("prompt_version", ""),
        latency=0.0,
        prompt_tokens=int(doc.meta.get("prompt_tokens", "0")),
        completion_tokens=int(doc.meta.get("completion_tokens", "0")),
    )


def rephrase_one(
    chunk: Chunk,
    style: Union[Style, PromptTemplate],
    cfg: EndpointConfig,
    merge_system: bool = False,
    sleep: Callable[[float], None] = time.sleep,
) -> RawRephrase:
    """Rephrase one chunk; raises EndpointError after retries are exhausted."""
    if chunk.token_count > CHUNK_TOKEN_BUDGET:
        warnings.warn(
            f"chunk {chunk.parent_id}[{chunk.index}] has {chunk.token_count} tokens, "
            f"over the {CHUNK_TOKEN_BUDGET}-token rephrase budget",
            stacklevel=2,
        )
    template = _as_template(style)
    messages = render_prompt(template, chunk.text, merge_system=merge_system)
    t0 = time.monotonic()
    text, usage = chat_completion(cfg, messages, sleep=sleep)
    latency = time.monotonic() - t0
    prompt_tokens = usage.get("prompt_tokens")
    if not isinstance(prompt_tokens, int):
        prompt_tokens = sum(count_tokens(m["content"]) for m in messages)
    completion_tokens = usage.get("completion_tokens")
    if not isinstance(completion_tokens, int):
        completion_tokens = count_tokens(text)
    return RawRephrase(
        parent_id=chunk.parent_id,
        chunk_index=chunk.index,
        style=template.style,
        text=text,
        model_id=cfg.model_id,
        prompt_version=template.version,
        latency=latency,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
    )


def rephrase_stream(
    chunks: Iterable[Chunk],
    style: Union[Style, PromptTemplate],
    cfg: EndpointConfig,
    merge_system: bool = False,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[Iterator[Union[RawRephrase, FailureRecord]], GenerationLog]:
    """Rephrase many chunks with a bounded worker pool.

    Returns (stream, log). The log fills in as the stream is consumed and
    is final once the stream is exhausted. Every input chunk yields exactly
    one output record.
    """
    log = GenerationLog()
    template = _as_template(style)

    def work(chunk: Chunk) -> Union[RawRephrase, FailureRecord]:
        try:
            return rephrase_one(chunk, template, cfg, merge_system=merge_system, sleep=sleep)
        except EndpointError as exc:
            return FailureRecord(
                parent_id=chunk.parent_id,
                chunk_index=chunk.index,
                style=template.style,
                error=str(exc),
                status=exc.status,
            )

    def stream() -> Iterator[Union[RawRephrase, FailureRecord]]:
        log.started_at = time.time()
        it = iter(chunks)
        pending: set[Future] = set()
        try:
            with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:

                def submit_next() -> bool:
                    try:
                        chunk = next(it)
                    except StopIteration:
                        return False
                    pending.add(pool.submit(work, chunk))
                    return True

                for _ in range(cfg.max_in_flight):
                    if not submit_next():
                        break
                while pending:
                    done, pending_left = wait(pending, return_when=FIRST_COMPLETED)
                    pending.clear()
                    pending.update(pending_left)
                    for fut in done:
                        submit_next()
                        record = fut.result()
                        log.requests += 1
                        if isinstance(record, FailureRecord):
                            log.failures += 1
                        else:
                            log.completion_tokens_total += record.completion_tokens
                        yield record
        finally:
            log.finished_at = time.time()

    return stream(), log


def throughput(log: GenerationLog) -> float:
    """Completion tokens per hour over the logged wall-clock window."""
    elapsed = log.finished_at - log.started_at
    if elapsed <= 0:
        raise ValueError("log window has zero or negative duration")
    return log.completion_tokens_total / (elapsed / 3600.0)
