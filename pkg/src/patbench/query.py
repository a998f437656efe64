"""Query construction from patent descriptions: text normalization, section
parsing, key-section extraction, and length-bounded query assembly."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Mapping

from .corpus import Corpus, PatentDocument

DEFAULT_MAX_QUERY_CHARS = 6000

SECTION_BACKGROUND = "background"
SECTION_SUMMARY = "summary"
SECTION_DETAILED = "detailed_description"
SECTION_OTHER = "other"

# Heading lexicon, English and Chinese.  English headings are recognized in
# upper case only; lower-case phrases like "the background of the invention"
# occur in running text and must not split sections.
HEADING_LEXICON: tuple[tuple[str, str], ...] = (
    ("BACKGROUND OF THE INVENTION", SECTION_BACKGROUND),
    ("DESCRIPTION OF RELATED ART", SECTION_BACKGROUND),
    ("BACKGROUND ART", SECTION_BACKGROUND),
    ("RELATED ART", SECTION_BACKGROUND),
    ("BACKGROUND", SECTION_BACKGROUND),
    ("SUMMARY OF THE INVENTION", SECTION_SUMMARY),
    ("BRIEF SUMMARY", SECTION_SUMMARY),
    ("SUMMARY", SECTION_SUMMARY),
    ("DETAILED DESCRIPTION OF THE PREFERRED EMBODIMENTS", SECTION_DETAILED),
    ("DETAILED DESCRIPTION OF THE EMBODIMENTS", SECTION_DETAILED),
    ("DETAILED DESCRIPTION OF EMBODIMENTS", SECTION_DETAILED),
    ("DETAILED DESCRIPTION OF THE INVENTION", SECTION_DETAILED),
    ("DESCRIPTION OF EMBODIMENTS", SECTION_DETAILED),
    ("DETAILED DESCRIPTION", SECTION_DETAILED),
    ("BRIEF DESCRIPTION OF THE DRAWINGS", SECTION_OTHER),
    ("BRIEF DESCRIPTION OF DRAWINGS", SECTION_OTHER),
    ("FIELD OF THE INVENTION", SECTION_OTHER),
    ("TECHNICAL FIELD", SECTION_OTHER),
    ("背景技术", SECTION_BACKGROUND),
    ("技术背景", SECTION_BACKGROUND),
    ("发明内容", SECTION_SUMMARY),
    ("实用新型内容", SECTION_SUMMARY),
    ("具体实施方式", SECTION_DETAILED),
    ("具体实施例", SECTION_DETAILED),
    ("技术领域", SECTION_OTHER),
    ("附图说明", SECTION_OTHER),
)

_HEADING_CATEGORY: Mapping[str, str] = dict(HEADING_LEXICON)

# Longest alternatives first so "BACKGROUND OF THE INVENTION" wins over
# "BACKGROUND".  \b keeps headings from firing inside words.
_HEADING_RE = re.compile(
    "|".join(
        rf"\b{re.escape(h)}\b"
        for h, _ in sorted(HEADING_LEXICON, key=lambda kv: -len(kv[0]))
    )
)

_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")
_SENTENCE_ENDERS = ".!?。！？"


class EmptyInputError(ValueError):
    """The operation received text with no usable content."""


@dataclass(frozen=True)
class Segment:
    """One contiguous stretch of description text under a single heading.

    ``heading`` is empty for preamble text before the first recognized
    heading and for headingless documents.
    """

    category: str
    heading: str
    text: str


@dataclass(frozen=True)
class DescriptionSections:
    background: str
    summary: str
    detailed_description: str
    other: tuple[tuple[str, str], ...]
    segments: tuple[Segment, ...]


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    language: str
    char_length: int
    truncated: bool

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("query text must be non-empty")
        if self.char_length != len(self.text):
            raise ValueError("char_length must equal len(text)")


def preprocess_text(raw: str) -> str:
    """Normalize raw patent text.

    Markup tags are replaced with spaces, control and format characters are
    removed, whitespace runs collapse to single spaces, and the result is
    Unicode NFC normalized.  Idempotent: applying it twice equals once.
    """
    s = _TAG_RE.sub(" ", raw)
    s = "".join(
        ch
        for ch in s
        if not (unicodedata.category(ch) in ("Cc", "Cf") and ch not in "\t\n\r\x0b\x0c")
    )
    s = _WS_RE.sub(" ", s).strip()
    return unicodedata.normalize("NFC", s)


def parse_description(doc: PatentDocument) -> DescriptionSections:
    """Split a description into background / summary / detailed / other.

    Runs on the preprocessed description.  Content before the first heading
    lands in ``other`` under an empty heading; a document with no recognized
    heading at all puts everything into ``detailed_description``.  No text is
    dropped: the concatenated segment texts cover the whole preprocessed
    description apart from the headings themselves.
    """
    text = preprocess_text(doc.description)
    if not text:
        raise EmptyInputError(f"document {doc.doc_id!r} has an empty description")

    matches = list(_HEADING_RE.finditer(text))
    segments: list[Segment] = []
    if not matches:
        segments.append(Segment(SECTION_DETAILED, "", text))
    else:
        preamble = text[: matches[0].start()].strip()
        if preamble:
            segments.append(Segment(SECTION_OTHER, "", preamble))
        for i, m in enumerate(matches):
            end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
            heading = m.group(0)
            body = text[m.end() : end].strip()
            segments.append(Segment(_HEADING_CATEGORY[heading], heading, body))

    def joined(category: str) -> str:
        return " ".join(s.text for s in segments if s.category == category and s.text)

    return DescriptionSections(
        background=joined(SECTION_BACKGROUND),
        summary=joined(SECTION_SUMMARY),
        detailed_description=joined(SECTION_DETAILED),
        other=tuple(
            (s.heading, s.text) for s in segments if s.category == SECTION_OTHER
        ),
        segments=tuple(segments),
    )


def extract_key_sections(sections: DescriptionSections) -> str:
    """Background and detailed description joined by a blank line.

    Empty parts are skipped.  When both are empty the full description text
    (all segments, in document order) is used instead.  Raises
    :class:`EmptyInputError` when there is no content at all.
    """
    parts = [p for p in (sections.background, sections.detailed_description) if p]
    if parts:
        return "\n\n".join(parts)
    fallback = " ".join(s.text for s in sections.segments if s.text)
    if fallback:
        return fallback
    raise EmptyInputError("all description sections are empty")


def _truncate_at_sentence(text: str, max_chars: int) -> str:
    window = text[:max_chars]
    cut = max(window.rfind(ch) for ch in _SENTENCE_ENDERS)
    if cut >= 0:
        candidate = window[: cut + 1].rstrip()
        if candidate:
            return candidate
    return window.rstrip()


def build_query(doc: PatentDocument, max_chars: int = DEFAULT_MAX_QUERY_CHARS) -> Query:
    """Assemble the retrieval query for one patent.

    The query text is the preprocessed key sections, truncated at the last
    sentence boundary at or below ``max_chars`` (hard cut when no boundary
    exists in the window).  The result never exceeds ``max_chars``.
    """
    if max_chars < 1:
        raise ValueError("max_chars must be at least 1")
    sections = parse_description(doc)
    text = preprocess_text(extract_key_sections(sections))
    truncated = len(text) > max_chars
    if truncated:
        text = _truncate_at_sentence(text, max_chars)
    return Query(
        query_id=doc.doc_id,
        text=text,
        language=doc.language,
        char_length=len(text),
        truncated=truncated,
    )


def build_queries(
    corpus: Corpus,
    doc_ids: Iterable[str],
    max_chars: int = DEFAULT_MAX_QUERY_CHARS,
) -> dict[str, Query]:
    """Build queries for the given doc ids; raises on ids missing from the corpus."""
    out: dict[str, Query] = {}
    for doc_id in doc_ids:
        out[doc_id] = build_query(corpus.documents[doc_id], max_chars=max_chars)
    return out
