"""Deterministic mixing of real and synthetic shards at exact ratios.

The document-unit scheduler expands the component weights into one block
(e.g. weights 1:2 -> [a, b, b]), shuffles that block once with the mix
seed, and repeats the same block order for the whole stream. Any output
window of one block length therefore carries exactly the declared ratio.
Blocks are committed whole: with the default truncate-all policy the
stream stops at the last block every source can still fill, which makes
realized counts exactly proportional to the weights.

Each source streams through its own bounded shuffle buffer (windowed
Fisher-Yates, sub-seeded from the mix seed and the source label), so
reruns over identical inputs are byte-identical.
"""

from __future__ import annotations

import configparser
import glob
import hashlib
import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .corpus_io import Document, count_tokens, load_shards

POLICIES = ("truncate-all", "cycle-exhausted", "error")
DEFAULT_SHUFFLE_WINDOW = 100_000


class MixExhaustionError(RuntimeError):
    """Raised by the "error" policy when sources do not drain together."""


class MixValidationError(RuntimeError):
    """Raised when a rebuilt report disagrees with the expected one."""


@dataclass(frozen=True)
class MixSpec:
    components: tuple[tuple[str, int], ...]
    seed: int = 0
    unit: str = "documents"
    real_labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("mix spec needs at least one component")
        labels = [label for label, _ in self.components]
        if len(set(labels)) != len(labels):
            raise ValueError("component labels must be distinct")
        for label, weight in self.components:
            if not isinstance(weight, int) or weight < 1:
                raise ValueError(f"weight for {label!r} must be an integer >= 1")
        if self.unit not in ("documents", "tokens"):
            raise ValueError(f"unknown unit {self.unit!r}")

    def labels(self) -> list[str]:
        return [label for label, _ in self.components]

    def weight_map(self) -> dict[str, int]:
        return dict(self.components)

    def resolved_real_labels(self) -> set[str]:
        if self.real_labels is not None:
            return set(self.real_labels)
        return {l for l in self.labels() if not l.startswith("synthetic")}


@dataclass
class MixReport:
    unit: str
    policy: str
    seed: int
    weights: dict[str, int]
    docs: dict[str, int] = field(default_factory=dict)
    tokens: dict[str, int] = field(default_factory=dict)
    real_token_total: int = 0
    blocks: int = 0

    def realized_ratio(self) -> dict[str, float]:
        if self.unit == "documents" and self.blocks > 0:
            return {l: n / self.blocks for l, n in self.docs.items()}
        total = sum(self.tokens.values())
        return {l: (t / total if total else 0.0) for l, t in self.tokens.items()}

    def total_docs(self) -> int:
        return sum(self.docs.values())


def _derive_rng(seed: int, *parts: object) -> random.Random:
    material = ":".join([str(seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _origin_id(doc: Document) -> str:
    return doc.meta.get("origin_id", doc.id)


class _ShuffledSource:
    """Streaming shuffle over one source's shards with optional cycling."""

    def __init__(
        self,
        label: str,
        paths: Sequence[str | Path],
        seed: int,
        window: int,
        cycling: bool = False,
    ):
        if not paths:
            raise ValueError(f"source {label!r} has no shard paths")
        self.label = label
        self.paths = list(paths)
        self.seed = seed
        self.window = max(1, window)
        self.cycling = cycling
        self.pass_num = 1
        self._start_pass()

    def _start_pass(self) -> None:
        self.rng = _derive_rng(self.seed, "source", self.label, self.pass_num)
        self.it: Iterator[Document] = load_shards(self.paths)
        self.buf: list[Document] = []
        self._fill()

    def _fill(self) -> None:
        while len(self.buf) < self.window:
            try:
                self.buf.append(next(self.it))
            except StopIteration:
                break

    @property
    def has_data(self) -> bool:
        return bool(self.buf)

    def draw(self) -> Optional[Document]:
        if not self.buf:
            if not self.cycling:
                return None
            self.pass_num += 1
            self._start_pass()
            if not self.buf:
                return None
        j = self.rng.randrange(len(self.buf))
        self.buf[j], self.buf[-1] = self.buf[-1], self.buf[j]
        doc = self.buf.pop()
        try:
            self.buf.append(next(self.it))
        except StopIteration:
            pass
        if self.pass_num > 1:
            doc = Document(
                id=f"{doc.id}#r{self.pass_num}",
                text=doc.text,
                source=doc.source,
                meta={**doc.meta, "origin_id": _origin_id(doc)},
            )
        return doc


def _count_docs(paths: Sequence[str | Path]) -> int:
    return sum(1 for _ in load_shards(paths))


def build_mix(
    spec: MixSpec,
    sources: dict[str, Sequence[str | Path]],
    policy: str = "truncate-all",
    shuffle_window: int = DEFAULT_SHUFFLE_WINDOW,
    scheme: str = "whitespace-words",
) -> tuple[Iterator[Document], MixReport]:
    """Stream the mixed corpus; the report finalizes as the stream drains.

    Emitted documents are stamped with ``meta["mix_component"]`` so a
    validation pass can re-derive the report from shard data alone.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r} (expected one of {POLICIES})")
    missing = [l for l in spec.labels() if l not in sources]
    if missing:
        raise ValueError(f"sources missing for labels: {missing}")
    if policy == "cycle-exhausted" and spec.unit == "tokens":
        raise ValueError("cycle-exhausted policy supports the documents unit only")

    report = MixReport(
        unit=spec.unit,
        policy=policy,
        seed=spec.seed,
        weights=spec.weight_map(),
        docs={l: 0 for l in spec.labels()},
        tokens={l: 0 for l in spec.labels()},
    )

    window = max(shuffle_window, max(w for _, w in spec.components))
    cycling = policy == "cycle-exhausted"
    readers = {
        label: _ShuffledSource(label, sources[label], spec.seed, window, cycling)
        for label in spec.labels()
    }

    blocks_target = None
    if cycling:
        counts = {label: _count_docs(sources[label]) for label in spec.labels()}
        empty = [l for l, n in counts.items() if n == 0]
        if empty:
            raise ValueError(f"cycle-exhausted with empty sources: {empty}")
        blocks_target = max(math.ceil(counts[l] / w) for l, w in spec.components)

    real_labels = spec.resolved_real_labels()
    seen_real: set[str] = set()

    def account(label: str, doc: Document) -> Document:
        stamped = Document(
            id=doc.id,
            text=doc.text,
            source=doc.source,
            meta={**doc.meta, "mix_component": label},
        )
        report.docs[label] += 1
        n_tok = count_tokens(doc.text, scheme)
        report.tokens[label] += n_tok
        if label in real_labels:
            origin = _origin_id(doc)
            if origin not in seen_real:
                seen_real.add(origin)
                report.real_token_total += n_tok
        return stamped

    def docs_stream() -> Iterator[Document]:
        order = [l for l, w in spec.components for _ in range(w)]
        _derive_rng(spec.seed, "block-order").shuffle(order)
        while blocks_target is None or report.blocks < blocks_target:
            pulled: dict[str, deque[Document]] = {}
            short = None
            partial = 0
            for label, weight in spec.components:
                batch: list[Document] = []
                for _ in range(weight):
                    doc = readers[label].draw()
                    if doc is None:
                        short = label
                        break
                    batch.append(doc)
                if short is not None:
                    partial = len(batch)
                    break
                pulled[label] = deque(batch)
            if short is not None:
                if policy == "error":
                    leftovers = [l for l, r in readers.items() if r.has_data]
                    leftovers += [l for l, q in pulled.items() if q]
                    if partial or leftovers:
                        raise MixExhaustionError(
                            f"source {short!r} drained before: {sorted(set(leftovers)) or [short]}"
                        )
                return
            report.blocks += 1
            for label in order:
                yield account(label, pulled[label].popleft())

    def tokens_stream() -> Iterator[Document]:
        emitted = {l: 0 for l in spec.labels()}
        weights = spec.weight_map()
        labels = spec.labels()
        while True:
            label = min(labels, key=lambda l: (emitted[l] / weights[l], labels.index(l)))
            doc = readers[label].draw()
            if doc is None:
                if policy == "error":
                    leftovers = [l for l, r in readers.items() if r.has_data]
                    if leftovers:
                        raise MixExhaustionError(
                            f"source {label!r} drained before: {leftovers}"
                        )
                return
            emitted[label] += count_tokens(doc.text, scheme)
            yield account(label, doc)

    stream = docs_stream() if spec.unit == "documents" else tokens_stream()
    return stream, report


def real_token_accounting(
    sources: dict[str, Sequence[str | Path]],
    real_labels: set[str] | Iterable[str],
    scheme: str = "whitespace-words",
) -> int:
    """Total tokens across unique real documents (repeat reads count once)."""
    real = set(real_labels)
    unknown = real - set(sources)
    if unknown:
        raise ValueError(f"unknown real labels: {sorted(unknown)}")
    total = 0
    seen: set[str] = set()
    for label in sources:
        if label not in real:
            continue
        for doc in load_shards(sources[label]):
            origin = _origin_id(doc)
            if origin not in seen:
                seen.add(origin)
                total += count_tokens(doc.text, scheme)
    return total


def validate_mix(
    shard_paths: Sequence[str | Path],
    spec: MixSpec,
    policy: str = "truncate-all",
    expect: Optional[MixReport] = None,
    scheme: str = "whitespace-words",
) -> MixReport:
    """Rebuild a MixReport from emitted shards and check it.

    Raises MixValidationError when counts break the exact-ratio invariant
    (documents unit) or differ from ``expect``.
    """
    report = MixReport(
        unit=spec.unit,
        policy=policy,
        seed=spec.seed,
        weights=spec.weight_map(),
        docs={l: 0 for l in spec.labels()},
        tokens={l: 0 for l in spec.labels()},
    )
    real_labels = spec.resolved_real_labels()
    seen_real: set[str] = set()
    # strict: a lenient read would skip malformed or duplicate-id lines and
    # silently undercount, defeating the point of validation
    for doc in load_shards(shard_paths, strict=True):
        label = doc.meta.get("mix_component", doc.source)
        if label not in report.docs:
            raise MixValidationError(f"document {doc.id!r} has unknown component {label!r}")
        report.docs[label] += 1
        n_tok = count_tokens(doc.text, scheme)
        report.tokens[label] += n_tok
        if label in real_labels:
            origin = _origin_id(doc)
            if origin not in seen_real:
                seen_real.add(origin)
                report.real_token_total += n_tok

    if spec.unit == "documents":
        block_weight = sum(w for _, w in spec.components)
        total = report.total_docs()
        if total % block_weight:
            raise MixValidationError(
                f"total {total} documents is not a whole number of {block_weight}-doc blocks"
            )
        report.blocks = total // block_weight
        for label, weight in spec.components:
            if report.docs[label] != report.blocks * weight:
                raise MixValidationError(
                    f"source {label!r}: {report.docs[label]} docs, "
                    f"expected {report.blocks * weight} for weight {weight}"
                )

    if expect is not None:
        diffs = []
        for field_name in ("unit", "policy", "seed", "weights", "docs", "tokens",
                           "real_token_total", "blocks"):
            got, want = getattr(report, field_name), getattr(expect, field_name)
            if got != want:
                diffs.append(f"{field_name}: rebuilt {got!r} != build-time {want!r}")
        if diffs:
            raise MixValidationError("; ".join(diffs))
    return report


def load_mix_config(
    path: str | Path,
) -> tuple[MixSpec, dict[str, list[str]], str, int]:
    """Parse a mix config file.

    Format: a ``[mix]`` section (seed, unit, policy, shuffle_window) plus one
    ``[component.<label>]`` section per source with ``weight``, ``paths``
    (whitespace-separated globs, relative to the config file) and optional
    ``real = true``.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise FileNotFoundError(f"mix config not found: {path}")
    base = Path(path).resolve().parent
    seed = parser.getint("mix", "seed", fallback=0)
    unit = parser.get("mix", "unit", fallback="documents")
    policy = parser.get("mix", "policy", fallback="truncate-all")
    window = parser.getint("mix", "shuffle_window", fallback=DEFAULT_SHUFFLE_WINDOW)

    components: list[tuple[str, int]] = []
    sources: dict[str, list[str]] = {}
    real_labels: list[str] = []
    for section in parser.sections():
        if not section.startswith("component."):
            continue
        label = section.split(".", 1)[1]
        weight = parser.getint(section, "weight", fallback=1)
        patterns = parser.get(section, "paths").split()
        paths: list[str] = []
        for pattern in patterns:
            resolved = pattern if Path(pattern).is_absolute() else str(base / pattern)
            hits = sorted(glob.glob(resolved))
            if not hits:
                raise FileNotFoundError(f"no shards match {pattern!r} for {label!r}")
            paths.extend(hits)
        components.append((label, weight))
        sources[label] = paths
        if parser.getboolean(section, "real", fallback=False):
            real_labels.append(label)
    spec = MixSpec(
        components=tuple(components),
        seed=seed,
        unit=unit,
        real_labels=tuple(real_labels) if real_labels else None,
    )
    return spec, sources, policy, window
