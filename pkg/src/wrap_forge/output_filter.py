"""Strip generation-preamble artifacts from rephrase outputs.

Completions sometimes open with boilerplate ("Here's a paraphrase ...:")
before the actual rephrase. The filter inspects the first sentence:
if it carries a known unwanted phrase before a "\\n\\n" or ":" delimiter,
the lead-in (delimiter included) is cut; an unwanted phrase with no usable
delimiter drops the record entirely. The cut step repeats until stable so
that filtering its own output is always a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .corpus_io import Document
from .rephrase_client import RawRephrase
from .style_prompts import Style
from .textseg import sentence_spans, split_sentences

__all__ = [
    "DEFAULT_UNWANTED_PHRASES",
    "FilterOutcome",
    "FilterReport",
    "SyntheticRecord",
    "UnwantedLexicon",
    "contains_unwanted",
    "filter_corpus",
    "filter_rephrase",
    "load_lexicon",
    "split_sentences",
    "synthetic_to_document",
]

DEFAULT_UNWANTED_PHRASES = (
    "Here's a paraphrase",
    "The following",
    "high-quality English",
)

KEPT_UNCHANGED = "unchanged"
KEPT_MODIFIED = "modified"
DROPPED = "dropped"


@dataclass(frozen=True)
class UnwantedLexicon:
    phrases: tuple[str, ...] = DEFAULT_UNWANTED_PHRASES

    def __post_init__(self) -> None:
        if not self.phrases:
            raise ValueError("lexicon must contain at least one phrase")


def load_lexicon(path: str | Path) -> UnwantedLexicon:
    """One phrase per line; blank lines and ``#`` comments ignored."""
    phrases = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            phrases.append(line)
    return UnwantedLexicon(tuple(phrases))


@dataclass(frozen=True)
class FilterOutcome:
    """variant is one of "unchanged" | "modified" | "dropped".

    ``text`` carries the surviving text for kept variants; ``reason`` the
    matched phrase for drops (and the phrase that triggered a cut).
    """

    variant: str
    text: Optional[str] = None
    reason: Optional[str] = None


def contains_unwanted(segment: str, lexicon: UnwantedLexicon) -> Optional[str]:
    """First lexicon phrase (in lexicon order) found in segment, else None."""
    lowered = segment.lower()
    for phrase in lexicon.phrases:
        if phrase.lower() in lowered:
            return phrase
    return None


def _first_delimiter(segment: str) -> Optional[tuple[int, int]]:
    """(offset, length) of the earliest "\\n\\n" or ":" in segment, if any."""
    best: Optional[tuple[int, int]] = None
    for delim in ("\n\n", ":"):
        pos = segment.find(delim)
        if pos != -1 and (best is None or pos < best[0]):
            best = (pos, len(delim))
    return best


def _filter_once(text: str, lexicon: UnwantedLexicon) -> FilterOutcome:
    spans = sentence_spans(text)
    if not spans:
        return FilterOutcome(DROPPED, reason="empty text")
    a, b = spans[0]
    first = text[a:b]
    hit = _first_delimiter(first)
    if hit is not None:
        pos, length = hit
        matched = contains_unwanted(first[:pos], lexicon)
        if matched is not None:
            remainder = text[a + pos + length :].lstrip()
            if not remainder:
                return FilterOutcome(DROPPED, reason=matched)
            return FilterOutcome(KEPT_MODIFIED, text=remainder, reason=matched)
    matched = contains_unwanted(first, lexicon)
    if matched is not None:
        return FilterOutcome(DROPPED, reason=matched)
    return FilterOutcome(KEPT_UNCHANGED, text=text)


def filter_rephrase(text: str, lexicon: UnwantedLexicon | None = None) -> FilterOutcome:
    """Classify one rephrase as unchanged, modified (lead-in cut), or dropped.

    The cut is reapplied until the text is stable, so the modified output
    re-filters to "unchanged" by construction.
    """
    lexicon = lexicon or UnwantedLexicon()
    current = text
    first_reason: Optional[str] = None
    while True:
        outcome = _filter_once(current, lexicon)
        if outcome.variant == KEPT_MODIFIED:
            first_reason = first_reason or outcome.reason
            current = outcome.text
            continue
        if outcome.variant == DROPPED:
            return FilterOutcome(DROPPED, reason=first_reason or outcome.reason)
        if first_reason is not None:
            return FilterOutcome(KEPT_MODIFIED, text=current, reason=first_reason)
        return outcome


@dataclass(frozen=True)
class SyntheticRecord:
    parent_id: str
    chunk_index: int
    style: Optional[Style]
    text: str
    model_id: str
    prompt_version: str
    filter_status: str


@dataclass
class FilterReport:
    unchanged: int = 0
    modified: int = 0
    dropped: int = 0
    dropped_by_reason: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.unchanged + self.modified + self.dropped


def filter_corpus(
    records: Iterable[RawRephrase], lexicon: UnwantedLexicon | None = None
) -> tuple[list[SyntheticRecord], FilterReport]:
    lexicon = lexicon or UnwantedLexicon()
    kept: list[SyntheticRecord] = []
    report = FilterReport()
    for rec in records:
        outcome = filter_rephrase(rec.text, lexicon)
        if outcome.variant == DROPPED:
            report.dropped += 1
            reason = outcome.reason or "unknown"
            report.dropped_by_reason[reason] = report.dropped_by_reason.get(reason, 0) + 1
            continue
        if outcome.variant == KEPT_MODIFIED:
            report.modified += 1
        else:
            report.unchanged += 1
        kept.append(
            SyntheticRecord(
                parent_id=rec.parent_id,
                chunk_index=rec.chunk_index,
                style=rec.style,
                text=outcome.text if outcome.text is not None else rec.text,
                model_id=rec.model_id,
                prompt_version=rec.prompt_version,
                filter_status=outcome.variant,
            )
        )
    return kept, report


def synthetic_to_document(rec: SyntheticRecord) -> Document:
    """Flatten a synthetic record into a shardable Document."""
    style_name = rec.style.value if rec.style else "custom"
    return Document(
        id=f"{rec.parent_id}::{rec.chunk_index}::{style_name}",
        text=rec.text,
        source=f"synthetic-{style_name}",
        meta={
            "parent_id": rec.parent_id,
            "chunk_index": str(rec.chunk_index),
            "style": style_name,
            "model_id": rec.model_id,
            "prompt_version": rec.prompt_version,
            "filter_status": rec.filter_status,
        },
    )
