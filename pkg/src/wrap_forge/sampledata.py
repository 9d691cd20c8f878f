"""Deterministic demo corpus generation for smoke runs and examples.

Documents are seeded word salad over a fixed vocabulary with varied
sentence and paragraph shapes, so chunking, filtering, and the metric
suite all get non-trivial input without shipping any real web text.
"""

from __future__ import annotations

import random
from importlib import resources
from typing import List

from .corpus_io import Document, load_shard

_VOCABULARY = (
    "the", "a", "quiet", "harbor", "light", "engine", "map", "river",
    "stone", "window", "garden", "signal", "paper", "cloud", "market",
    "bridge", "lantern", "forest", "meadow", "compass", "evening",
    "traveler", "village", "mountain", "archive", "library", "telescope",
    "observation", "measurement", "experiment", "instrument", "mechanism",
    "foundation", "territory", "horizon", "conversation", "afternoon",
    "remarkable", "considerable", "particular", "original", "familiar",
    "walks", "turns", "carries", "follows", "remains", "appears",
    "describes", "connects", "measures", "records", "crosses", "holds",
)

_SOURCES = ("c4", "c4", "c4", "openweb")  # mostly one source, a little variety


def _sentence(rng: random.Random) -> str:
    words = [rng.choice(_VOCABULARY) for _ in range(rng.randint(4, 18))]
    words[0] = words[0].capitalize()
    return " ".join(words) + rng.choice((".", ".", ".", "!", "?"))


def _paragraph(rng: random.Random) -> str:
    return " ".join(_sentence(rng) for _ in range(rng.randint(1, 6)))


def bundled_path(name: str):
    """Context manager yielding a filesystem path for a bundled data file."""
    return resources.as_file(resources.files("wrap_forge").joinpath(f"data/{name}"))


def builtin_style_fixtures() -> List[Document]:
    """Bundled style-labeled texts (meta['style'] in {'medium', 'qa'})."""
    with bundled_path("style_fixtures.jsonl") as path:
        return list(load_shard(path))


def generate_documents(count: int, seed: int = 0) -> List[Document]:
    """``count`` seeded documents; same (count, seed) gives identical output."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = random.Random(seed)
    docs: List[Document] = []
    for i in range(count):
        paragraphs = [_paragraph(rng) for _ in range(rng.randint(1, 3))]
        docs.append(
            Document(
                id=f"demo-{i:05d}",
                text="\n\n".join(paragraphs),
                source=rng.choice(_SOURCES),
                meta={"generator": "wrap-forge-demo", "seed": str(seed)},
            )
        )
    return docs
