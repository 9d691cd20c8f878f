"""Macro perplexity and domain-weighted averages over external loss records.

Per-token losses come from whatever model runner produced them; this module
only does the exact arithmetic. A loss record carries the accumulated
natural-log loss ``loss_sum`` over ``token_count`` tokens for one domain,
and macro perplexity is ``exp(min(20, loss_sum / token_count))``, so values
live in [1, e^20]. Domain weights are percentages from a TSV table and are
normalized over whichever domains a run actually covers.

Loss-record files are JSONL with keys ``domain``, ``loss_sum``,
``token_count`` and optional ``log_base`` (must be ``"e"``; natural log is
the only supported convention).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

PERPLEXITY_CAP = 20.0  # exponent ceiling, not a perplexity
BUILTIN_PILE = "builtin:pile"
_BUILTIN_TABLES = {BUILTIN_PILE: "pile_weights.tsv"}


@dataclass(frozen=True)
class DomainLossRecord:
    domain: str
    loss_sum: float
    token_count: int
    log_base: str = "e"

    def __post_init__(self) -> None:
        if not self.domain or not isinstance(self.domain, str):
            raise ValueError("domain must be a non-empty string")
        if not isinstance(self.token_count, int) or self.token_count < 1:
            raise ValueError(f"token_count must be a positive integer, got {self.token_count!r}")
        if not math.isfinite(self.loss_sum) or self.loss_sum < 0:
            raise ValueError(f"loss_sum must be finite and >= 0, got {self.loss_sum!r}")
        if self.log_base != "e":
            raise ValueError(f"only natural-log losses are supported, got log_base={self.log_base!r}")


@dataclass(frozen=True)
class DomainWeightTable:
    entries: tuple[tuple[str, float], ...]
    normalized: bool = False

    def __post_init__(self) -> None:
        domains = [d for d, _ in self.entries]
        if len(set(domains)) != len(domains):
            dupes = sorted({d for d in domains if domains.count(d) > 1})
            raise ValueError(f"duplicate domains: {dupes}")
        for domain, weight in self.entries:
            if not domain:
                raise ValueError("empty domain name")
            if not math.isfinite(weight) or weight < 0:
                raise ValueError(f"weight for {domain!r} must be finite and >= 0, got {weight!r}")
        if self.normalized and abs(self.total() - 1.0) > 1e-9:
            raise ValueError(f"normalized table must sum to 1, got {self.total()!r}")

    def domains(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.entries)

    def weight_map(self) -> dict[str, float]:
        return dict(self.entries)

    def total(self) -> float:
        return sum(w for _, w in self.entries)


def macro_perplexity(record: DomainLossRecord) -> float:
    """exp of the capped mean per-token loss."""
    return math.exp(min(PERPLEXITY_CAP, record.loss_sum / record.token_count))


def _parse_weight_line(line: str, where: str) -> tuple[str, float]:
    fields = line.split("\t")
    if len(fields) != 2:
        fields = line.split()
    if len(fields) != 2:
        raise ValueError(f"{where}: expected 'domain<TAB>percent', got {line!r}")
    domain, raw = fields[0].strip(), fields[1].strip()
    try:
        weight = float(raw)
    except ValueError:
        raise ValueError(f"{where}: non-numeric weight {raw!r}") from None
    if weight < 0:
        raise ValueError(f"{where}: negative weight {weight!r}")
    return domain, weight


def load_weight_table(path: Union[str, Path]) -> DomainWeightTable:
    """Read a ``domain<TAB>percent`` table; ``#`` comments and blanks skipped."""
    entries: list[tuple[str, float]] = []
    seen: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        domain, weight = _parse_weight_line(line, f"{path}:{lineno}")
        if domain in seen:
            raise ValueError(f"{path}:{lineno}: duplicate domain {domain!r}")
        seen.add(domain)
        entries.append((domain, weight))
    if not entries:
        raise ValueError(f"{path}: no weight entries")
    return DomainWeightTable(entries=tuple(entries), normalized=False)


def builtin_weight_table(name: str = BUILTIN_PILE) -> DomainWeightTable:
    if name not in _BUILTIN_TABLES:
        raise ValueError(f"unknown builtin table {name!r}; have {sorted(_BUILTIN_TABLES)}")
    source = resources.files("wrap_forge").joinpath(f"data/{_BUILTIN_TABLES[name]}")
    with resources.as_file(source) as path:
        return load_weight_table(path)


def resolve_weight_table(spec: Union[str, Path]) -> DomainWeightTable:
    """Accept either ``builtin:<name>`` or a filesystem path."""
    if isinstance(spec, str) and spec.startswith("builtin:"):
        return builtin_weight_table(spec)
    return load_weight_table(spec)


def normalize_weights(
    table: DomainWeightTable,
    include: Optional[Iterable[str]] = None,
) -> DomainWeightTable:
    """Restrict to ``include`` (default: all domains) and rescale to sum 1."""
    available = table.weight_map()
    chosen = list(available) if include is None else sorted(set(include))
    if not chosen:
        raise ValueError("cannot normalize over an empty domain set")
    missing = [d for d in chosen if d not in available]
    if missing:
        raise ValueError(f"domains not in table: {missing}")
    total = sum(available[d] for d in chosen)
    if total <= 0:
        raise ValueError("included weights are all zero")
    entries = tuple((d, available[d] / total) for d in chosen)
    return DomainWeightTable(entries=entries, normalized=True)


def _check_alignment(
    records: Sequence[DomainLossRecord],
    table: DomainWeightTable,
) -> dict[str, DomainLossRecord]:
    if not records:
        raise ValueError("no domains: at least one loss record is required")
    by_domain: dict[str, DomainLossRecord] = {}
    for rec in records:
        if rec.domain in by_domain:
            raise ValueError(f"duplicate records for domain {rec.domain!r}")
        by_domain[rec.domain] = rec
    if not table.normalized:
        raise ValueError("weight table must be normalized over the record domains")
    missing = sorted(set(by_domain) - set(table.domains()))
    if missing:
        raise ValueError(f"records without table weights: {missing}")
    extra = sorted(set(table.domains()) - set(by_domain))
    if extra:
        raise ValueError(f"table weights without records: {extra}")
    return by_domain


def weighted_average_perplexity(
    records: Sequence[DomainLossRecord],
    table: DomainWeightTable,
) -> float:
    by_domain = _check_alignment(records, table)
    weights = table.weight_map()
    # summed in sorted-domain order so the result is permutation-invariant
    return sum(weights[d] * macro_perplexity(by_domain[d]) for d in sorted(by_domain))


@dataclass(frozen=True)
class PerplexityRow:
    domain: str
    weight: float
    perplexity: float
    token_count: int


@dataclass(frozen=True)
class PerplexityReport:
    rows: tuple[PerplexityRow, ...]
    weighted_average: float

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {
                    "domain": r.domain,
                    "weight": r.weight,
                    "perplexity": r.perplexity,
                    "token_count": r.token_count,
                }
                for r in self.rows
            ],
            "weighted_average": self.weighted_average,
            "exponent_cap": PERPLEXITY_CAP,
        }

    def to_text(self) -> str:
        width = max([len("weighted_avg")] + [len(r.domain) for r in self.rows])
        lines = [f"{'domain'.ljust(width)}  {'weight':>10}  {'perplexity':>14}"]
        for r in self.rows:
            lines.append(f"{r.domain.ljust(width)}  {r.weight:>10.6f}  {r.perplexity:>14.6f}")
        lines.append(f"{'weighted_avg'.ljust(width)}  {1.0:>10.6f}  {self.weighted_average:>14.6f}")
        return "\n".join(lines) + "\n"


def perplexity_report(
    records: Sequence[DomainLossRecord],
    table: DomainWeightTable,
) -> PerplexityReport:
    """Per-domain perplexities plus the weighted average, sorted by domain."""
    by_domain = _check_alignment(records, table)
    weights = table.weight_map()
    rows = tuple(
        PerplexityRow(
            domain=d,
            weight=weights[d],
            perplexity=macro_perplexity(by_domain[d]),
            token_count=by_domain[d].token_count,
        )
        for d in sorted(by_domain)
    )
    avg = sum(r.weight * r.perplexity for r in rows)
    return PerplexityReport(rows=rows, weighted_average=avg)


def load_loss_records(path: Union[str, Path]) -> list[DomainLossRecord]:
    """Read JSONL loss records, validating per-record invariants."""
    records: list[DomainLossRecord] = []
    seen: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
        if not isinstance(payload, dict):
            raise ValueError(f"{path}:{lineno}: record must be an object")
        unknown = set(payload) - {"domain", "loss_sum", "token_count", "log_base"}
        if unknown:
            raise ValueError(f"{path}:{lineno}: unknown keys {sorted(unknown)}")
        try:
            record = DomainLossRecord(
                domain=payload.get("domain"),
                loss_sum=float(payload.get("loss_sum", -1)),
                token_count=payload.get("token_count"),
                log_base=payload.get("log_base", "e"),
            )
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if record.domain in seen:
            raise ValueError(f"{path}:{lineno}: duplicate records for domain {record.domain!r}")
        seen.add(record.domain)
        records.append(record)
    if not records:
        raise ValueError(f"{path}: no loss records")
    return records
