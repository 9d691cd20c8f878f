"""Readability and lexical-diversity metrics.

Flesch-Kincaid grade level over the package's own sentence splitter and
rule-based syllable counter, plus type-token ratio. Both are pure text
functions with no model dependencies.
"""

from __future__ import annotations

from ..textseg import count_syllables, split_sentences, word_tokens

FK_WORDS_PER_SENTENCE = 0.39
FK_SYLLABLES_PER_WORD = 11.8
FK_OFFSET = 15.59


def flesch_kincaid_grade(text: str) -> float:
    """0.39*(words/sentences) + 11.8*(syllables/words) - 15.59."""
    words = word_tokens(text)
    if not words:
        raise ValueError("flesch_kincaid_grade needs at least one word")
    sentences = max(len(split_sentences(text)), 1)
    syllables = sum(count_syllables(w) for w in words)
    return (
        FK_WORDS_PER_SENTENCE * (len(words) / sentences)
        + FK_SYLLABLES_PER_WORD * (syllables / len(words))
        - FK_OFFSET
    )


def type_token_ratio(text: str) -> float:
    """Distinct lowercased word tokens over total word tokens, in (0, 1]."""
    words = word_tokens(text)
    if not words:
        raise ValueError("type_token_ratio needs at least one token")
    lowered = [w.lower() for w in words]
    return len(set(lowered)) / len(lowered)
