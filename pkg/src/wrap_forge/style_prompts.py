"""The four rephrasing styles, their prompt templates, and chat rendering.

Template text is frozen; tests pin SHA-256 digests so any drift fails loudly.
Custom templates come from plain-text files with an optional ``{{PARAGRAPH}}``
placeholder.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

PROMPT_VERSION = "v1"
PARAGRAPH_PLACEHOLDER = "{{PARAGRAPH}}"

DEFAULT_PREAMBLE = (
    "A chat between a curious user and an artificial intelligence assistant. "
    "The assistant gives helpful, detailed, and polite answers to the questions."
)


class Style(enum.Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"
    QA = "qa"


ALL_STYLES = tuple(Style)


def parse_style(name: str) -> Style:
    try:
        return Style(name.strip().lower())
    except ValueError:
        valid = ", ".join(s.value for s in ALL_STYLES)
        raise ValueError(f"unknown style {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class PromptTemplate:
    """A system preamble plus a style instruction ending in a colon.

    ``style`` is None for templates loaded from user files.
    """

    style: Optional[Style]
    system_preamble: str
    instruction: str
    version: str


_INSTRUCTIONS = {
    Style.EASY: (
        "For the following paragraph give me a paraphrase of the same using a "
        "very small vocabulary and extremely simple sentences that a toddler "
        "will understand:"
    ),
    Style.MEDIUM: (
        "For the following paragraph give me a diverse paraphrase of the same "
        "in high quality English language as in sentences on Wikipedia:"
    ),
    Style.HARD: (
        "For the following paragraph give me a paraphrase of the same using "
        "very terse and abstruse language that only an erudite scholar will "
        "understand. Replace simple words and phrases with rare and complex "
        "ones:"
    ),
    Style.QA: (
        "Convert the following paragraph into a conversational format with "
        'multiple tags of "Question:" followed by "Answer:":'
    ),
}


def builtin_template(style: Style) -> PromptTemplate:
    if not isinstance(style, Style):
        raise ValueError(f"not a Style: {style!r}")
    return PromptTemplate(
        style=style,
        system_preamble=DEFAULT_PREAMBLE,
        instruction=_INSTRUCTIONS[style],
        version=PROMPT_VERSION,
    )


def load_template_file(path: str | Path) -> PromptTemplate:
    """Read a custom instruction from a text file.

    The whole file is the instruction; a ``{{PARAGRAPH}}`` placeholder marks
    where the paragraph goes (appended after a newline when absent).
    """
    text = Path(path).read_text(encoding="utf-8").rstrip("\n")
    if not text.strip():
        raise ValueError(f"template file {path} is empty")
    return PromptTemplate(
        style=None,
        system_preamble=DEFAULT_PREAMBLE,
        instruction=text,
        version=f"file:{Path(path).name}",
    )


def render_prompt(
    template: PromptTemplate, paragraph: str, merge_system: bool = False
) -> list[dict[str, str]]:
    """Render the chat messages for one paragraph.

    Default is a two-message body: the system preamble, then a user message
    of instruction + newline + paragraph (trailing whitespace stripped from
    the paragraph, nothing else touched). ``merge_system`` collapses both
    into a single user turn joined by " USER: ".
    """
    if not paragraph or not paragraph.strip():
        raise ValueError("paragraph must be non-empty")
    body = paragraph.rstrip()
    if PARAGRAPH_PLACEHOLDER in template.instruction:
        user_text = template.instruction.replace(PARAGRAPH_PLACEHOLDER, body)
    else:
        user_text = template.instruction + "\n" + body
    if merge_system:
        return [
            {"role": "user", "content": template.system_preamble + " USER: " + user_text}
        ]
    return [
        {"role": "system", "content": template.system_preamble},
        {"role": "user", "content": user_text},
    ]


def template_digest(template: PromptTemplate) -> str:
    """SHA-256 over a canonical serialization of the template."""
    style_name = template.style.value if template.style else "custom"
    payload = "\x1f".join(
        [style_name, template.system_preamble, template.instruction, template.version]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
