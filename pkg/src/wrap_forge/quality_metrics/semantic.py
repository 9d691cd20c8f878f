"""Embedding-based leakage analysis: pairings and cosine similarity.

The pair builders mirror the comparison setups used to probe whether
rephrases leak extra information: rephrase-vs-parent, two random real
documents, first-half-vs-full, and first-half-vs-second-half.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..corpus_io import Document
from ..output_filter import SyntheticRecord
from ..wire import EndpointConfig, embeddings


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("embedding must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding has non-finite entries")

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


class PairingStrategy(enum.Enum):
    SYNTH_REAL = "synth-real"
    RANDOM_REAL_REAL = "random-real-real"
    HALF_VS_FULL = "half-vs-full"
    HALF_VS_HALF = "half-vs-half"


@dataclass
class PairingReport:
    strategy: str
    made: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)


def embed_texts(
    texts: Sequence[str],
    cfg: EndpointConfig,
    batch_size: int = 128,
) -> list[EmbeddingVector]:
    """One vector per text, order preserved; uniform dimensionality enforced."""
    out: list[EmbeddingVector] = []
    for start in range(0, len(texts), batch_size):
        batch = list(texts[start : start + batch_size])
        for values in embeddings(cfg, batch):
            out.append(EmbeddingVector(tuple(values)))
    dims = {v.dim for v in out}
    if len(dims) > 1:
        raise ValueError(f"inconsistent embedding dims: {sorted(dims)}")
    return out


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if u.dim != v.dim:
        raise ValueError(f"dim mismatch: {u.dim} vs {v.dim}")
    nu, nv = u.norm(), v.norm()
    if nu == 0 or nv == 0:
        raise ValueError("cosine undefined for zero vectors")
    dot = sum(a * b for a, b in zip(u.values, v.values))
    return max(-1.0, min(1.0, dot / (nu * nv)))


def split_halves(text: str) -> tuple[str, str]:
    """Token-count halves; an odd token goes to the first half."""
    toks = text.split()
    k = math.ceil(len(toks) / 2)
    return " ".join(toks[:k]), " ".join(toks[k:])


def make_pairs(
    documents: Sequence[Document],
    strategy: PairingStrategy,
    seed: int = 0,
    synthetic: Optional[Iterable[SyntheticRecord]] = None,
) -> tuple[list[tuple[str, str]], PairingReport]:
    """Build (text, text) pairs for one strategy.

    SYNTH_REAL pairs each synthetic record with its parent document (missing
    parents are skipped and reported). The other strategies use documents
    alone. RANDOM_REAL_REAL draws a seeded distinct partner per document.
    """
    report = PairingReport(strategy=strategy.value)
    pairs: list[tuple[str, str]] = []

    if strategy is PairingStrategy.SYNTH_REAL:
        if synthetic is None:
            raise ValueError("synth-real pairing needs synthetic records")
        by_id = {d.id: d for d in documents}
        for rec in synthetic:
            parent = by_id.get(rec.parent_id)
            if parent is None:
                report.skipped.append((rec.parent_id, "parent not found"))
                continue
            pairs.append((rec.text, parent.text))
    elif strategy is PairingStrategy.RANDOM_REAL_REAL:
        if len(documents) < 2:
            raise ValueError("random real-real pairing needs at least two documents")
        rng = random.Random(seed)
        n = len(documents)
        for i, doc in enumerate(documents):
            j = rng.randrange(n - 1)
            if j >= i:
                j += 1
            pairs.append((doc.text, documents[j].text))
    elif strategy is PairingStrategy.HALF_VS_FULL:
        for doc in documents:
            first, _second = split_halves(doc.text)
            if not first:
                report.skipped.append((doc.id, "no tokens"))
                continue
            pairs.append((first, doc.text))
    elif strategy is PairingStrategy.HALF_VS_HALF:
        for doc in documents:
            first, second = split_halves(doc.text)
            if not first or not second:
                report.skipped.append((doc.id, "too short to split"))
                continue
            pairs.append((first, second))
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown strategy {strategy!r}")

    report.made = len(pairs)
    return pairs, report


def pairwise_cosines(
    pairs: Sequence[tuple[str, str]],
    cfg: EndpointConfig,
    batch_size: int = 128,
) -> list[float]:
    """Cosine similarity per pair via the embedding endpoint."""
    if not pairs:
        return []
    left = embed_texts([a for a, _ in pairs], cfg, batch_size)
    right = embed_texts([b for _, b in pairs], cfg, batch_size)
    return [cosine_similarity(u, v) for u, v in zip(left, right)]
