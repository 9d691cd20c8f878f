"""Corpus-analysis metrics: readability, diversity, embeddings, syntax,
and the shared distribution-summary protocol."""

from .distribution import DistributionSummary, silverman_bandwidth, summarize_distribution
from .readability import flesch_kincaid_grade, type_token_ratio
from .semantic import (
    EmbeddingVector,
    PairingReport,
    PairingStrategy,
    cosine_similarity,
    embed_texts,
    make_pairs,
    pairwise_cosines,
    split_halves,
)
from .syntactic import (
    ConlluError,
    DepSentence,
    DepToken,
    mean_dependency_distance,
    parse_conllu,
    tree_depth,
    validate_tree,
)

__all__ = [
    "ConlluError",
    "DepSentence",
    "DepToken",
    "DistributionSummary",
    "EmbeddingVector",
    "PairingReport",
    "PairingStrategy",
    "cosine_similarity",
    "embed_texts",
    "flesch_kincaid_grade",
    "make_pairs",
    "mean_dependency_distance",
    "pairwise_cosines",
    "parse_conllu",
    "silverman_bandwidth",
    "split_halves",
    "summarize_distribution",
    "tree_depth",
    "type_token_ratio",
    "validate_tree",
]
