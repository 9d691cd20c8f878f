"""Rule-based text segmentation shared across the toolkit.

Self-contained sentence splitting, word tokenization, and syllable counting
so that chunking, filtering, and readability metrics agree on boundaries and
stay deterministic with zero model dependencies.
"""

from __future__ import annotations

import re

_TERMINATORS = ".!?"
_CLOSERS = "\"')]}»”’"
_OPENERS = "\"'([{«“‘"

# Tokens that end with "." without ending a sentence. Compared lowercase,
# inner periods included ("e.g"), final period excluded.
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "rev", "gen", "sen", "rep", "hon",
    "jr", "sr", "st", "vs", "etc", "e.g", "i.e", "cf", "al", "fig",
    "no", "vol", "pp", "approx", "dept", "est", "inc", "ltd", "co", "corp",
}

_WORD_RE = re.compile(r"\w+(?:'\w+)*")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")
_LETTERS_RE = re.compile(r"[a-z]+")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Return (start, end) spans of sentences in ``text``.

    A boundary occurs after a terminator in ``.!?`` (plus any closing
    quotes/brackets) that is followed by whitespace and then an uppercase
    letter or opening character. Splits after known abbreviations are
    suppressed. Spans exclude inter-sentence whitespace, so the regions
    between consecutive spans (and before/after the first/last) are pure
    whitespace.
    """
    n = len(text)
    spans: list[tuple[int, int]] = []
    start = 0
    while start < n and text[start].isspace():
        start += 1
    i = start
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            follows_break = k > j and k < n and (text[k].isupper() or text[k] in _OPENERS)
            if follows_break and not (ch == "." and _is_abbreviation(text, i)):
                spans.append((start, j))
                start = k
                i = k
                continue
        i += 1
    end = n
    while end > start and text[end - 1].isspace():
        end -= 1
    if end > start:
        spans.append((start, end))
    return spans


def _is_abbreviation(text: str, dot_index: int) -> bool:
    w = dot_index
    while w > 0 and not text[w - 1].isspace():
        w -= 1
    word = text[w:dot_index].lstrip("".join(_OPENERS))
    return word.lower() in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Split ``text`` into sentences.

    Text with no terminal punctuation comes back as a single sentence;
    empty/whitespace-only text as an empty list. Joining the returned
    sentences with the original inter-sentence whitespace reconstructs
    the input.
    """
    return [text[a:b] for a, b in sentence_spans(text)]


def word_tokens(text: str) -> list[str]:
    """Word tokens: runs of word characters, apostrophe contractions kept."""
    return _WORD_RE.findall(text)


def count_syllables(word: str) -> int:
    """Estimate syllables in one word by vowel-group counting.

    Corrections: silent final "e" (kept for consonant+"le"), silent "-ed"
    and "-es" suffixes. Every word with letters counts at least 1.
    """
    letters = _LETTERS_RE.findall(word.lower().replace("'", "").replace("’", ""))
    if not letters:
        return 0
    total = 0
    for part in letters:
        count = len(_VOWEL_GROUP_RE.findall(part))
        if part.endswith("e") and not part.endswith("ee"):
            if not (part.endswith("le") and len(part) > 2 and part[-3] not in "aeiouy"):
                count -= 1  # silent e; consonant+"le" stays syllabic (ta-ble)
        elif part.endswith("ed") and not part.endswith(("ted", "ded", "eed")):
            count -= 1
        elif part.endswith("es") and not part.endswith(("ses", "zes", "xes", "ches", "shes", "ges")):
            if not (part.endswith("les") and len(part) > 3 and part[-4] not in "aeiouy"):
                count -= 1
        total += max(count, 1)
    return total
