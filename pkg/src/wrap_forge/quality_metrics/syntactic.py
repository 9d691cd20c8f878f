"""Syntactic complexity from dependency parses.

Parses are consumed in CoNLL-U form (10 tab-separated columns, blank line
between sentences, ``#`` comments, ``i-j`` multiword ranges and ``i.j``
empty nodes skipped). Metrics are pure functions of the (index, head)
structure: tree depth in nodes and mean dependency distance over linked
pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

COLUMNS = 10


class ConlluError(ValueError):
    pass


@dataclass(frozen=True)
class DepToken:
    index: int  # 1-based
    head: int  # 0 = root
    form: str


@dataclass(frozen=True)
class DepSentence:
    tokens: tuple[DepToken, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def validate_tree(tokens: Iterable[DepToken]) -> None:
    """Check indices 1..n, head range, single root, acyclic and connected."""
    toks = list(tokens)
    n = len(toks)
    if n == 0:
        raise ConlluError("empty sentence")
    if [t.index for t in toks] != list(range(1, n + 1)):
        raise ConlluError("token indices must be 1..n contiguous")
    roots = [t.index for t in toks if t.head == 0]
    if len(roots) != 1:
        raise ConlluError(f"expected exactly one root, found {len(roots)}")
    for t in toks:
        if not 0 <= t.head <= n:
            raise ConlluError(f"token {t.index} head {t.head} out of range 0..{n}")
        if t.head == t.index:
            raise ConlluError(f"token {t.index} is its own head")
    # every node must reach the root without revisiting anything
    heads = {t.index: t.head for t in toks}
    for start in heads:
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                raise ConlluError(f"head cycle through token {start}")
            seen.add(node)
            node = heads[node]


def parse_conllu(
    source: str | Iterable[str],
    errors: Optional[list[str]] = None,
) -> list[DepSentence]:
    """Parse CoNLL-U text into validated sentences.

    With ``errors`` as a list, invalid sentences/lines are recorded there
    and skipped; otherwise the first problem raises :class:`ConlluError`
    with its line number.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]

    sentences: list[DepSentence] = []
    current: list[DepToken] = []
    bad_sentence = False

    def report(message: str) -> None:
        nonlocal bad_sentence
        if errors is None:
            raise ConlluError(message)
        errors.append(message)
        bad_sentence = True

    def flush() -> None:
        nonlocal current, bad_sentence
        if current and not bad_sentence:
            try:
                validate_tree(current)
                sentences.append(DepSentence(tuple(current)))
            except ConlluError as exc:
                if errors is None:
                    raise
                errors.append(str(exc))
        current = []
        bad_sentence = False

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != COLUMNS:
            report(f"line {lineno}: expected {COLUMNS} tab-separated columns, got {len(cols)}")
            continue
        ident = cols[0]
        if "-" in ident or "." in ident:
            continue  # multiword range / empty node
        try:
            index = int(ident)
            head = int(cols[6])
        except ValueError:
            report(f"line {lineno}: non-integer ID or HEAD ({ident!r}, {cols[6]!r})")
            continue
        current.append(DepToken(index=index, head=head, form=cols[1]))
    flush()
    return sentences


def tree_depth(sentence: DepSentence) -> int:
    """Number of nodes on the longest root-to-leaf path (single token -> 1)."""
    children: dict[int, list[int]] = {}
    root = None
    for t in sentence.tokens:
        if t.head == 0:
            root = t.index
        else:
            children.setdefault(t.head, []).append(t.index)
    if root is None:
        raise ConlluError("sentence has no root")
    depth = 0
    stack = [(root, 1)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        for child in children.get(node, ()):
            stack.append((child, d + 1))
    return depth


def mean_dependency_distance(sentence: DepSentence) -> float:
    """Mean |index - head| over non-root tokens."""
    gaps = [abs(t.index - t.head) for t in sentence.tokens if t.head != 0]
    if not gaps:
        raise ValueError("mean dependency distance is undefined without edges")
    return sum(gaps) / len(gaps)
