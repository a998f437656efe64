"""Patent corpus model: line-delimited loading, integrity validation, and
family/classification lookups.

A corpus file holds one JSON record per line, UTF-8 encoded.  Each record
carries a ``kind`` field: ``"patent"`` for documents, ``"citation"`` for
citation edges.  A sidecar manifest (``<file>.manifest.json``) records the
corpus reference date and record counts.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterator, Mapping

logger = logging.getLogger(__name__)

CITATION_CATEGORIES = frozenset({"X", "Y", "A", "OTHER"})
CITATION_SOURCES = frozenset({"EXAMINER", "FAMILY_DERIVED"})
IPC_SECTIONS = frozenset("ABCDEFGH")
UNCLASSIFIED = "unclassified"

# ISO 639-1 two-letter codes.
ISO_639_1 = frozenset(
    "aa ab ae af ak am an ar as av ay az ba be bg bh bi bm bn bo br bs ca ce "
    "ch co cr cs cu cv cy da de dv dz ee el en eo es et eu fa ff fi fj fo fr "
    "fy ga gd gl gn gu gv ha he hi ho hr ht hu hy hz ia id ie ig ii ik io is "
    "it iu ja jv ka kg ki kj kk kl km kn ko kr ks ku kv kw ky la lb lg li ln "
    "lo lt lu lv mg mh mi mk ml mn mr ms mt my na nb nd ne ng nl nn no nr nv "
    "ny oc oj om or os pa pi pl ps pt qu rm rn ro ru rw sa sc sd se sg si sk "
    "sl sm sn so sq sr ss st su sv sw ta te tg th ti tk tl tn to tr ts tt tw "
    "ty ug uk ur uz ve vi vo wa wo xh yi yo za zh zu".split()
)


class CorpusError(Exception):
    """Base class for corpus loading and lookup failures."""


class CorpusFormatError(CorpusError):
    """A record or sidecar manifest violates the corpus file format."""


class DuplicateDocIdError(CorpusFormatError):
    """Two patent records share a doc_id.  Always fatal, even in lenient mode."""

    def __init__(self, doc_id: str, line_number: int) -> None:
        super().__init__(f"duplicate doc_id {doc_id!r} at line {line_number}")
        self.doc_id = doc_id
        self.line_number = line_number


class UnknownDocIdError(CorpusError, KeyError):
    """A doc_id was looked up that the corpus does not contain."""

    def __init__(self, doc_id: str) -> None:
        super().__init__(f"unknown doc_id {doc_id!r}")
        self.doc_id = doc_id


@dataclass(frozen=True)
class PatentDocument:
    """One patent publication.

    Text fields may be empty; emptiness of required sections is surfaced by
    :func:`validate_corpus` rather than rejected at parse time.  ``family_id``
    may be empty for documents with no known family.
    """

    doc_id: str
    jurisdiction: str
    language: str
    ipc_codes: tuple[str, ...]
    filing_date: date
    family_id: str = ""
    title: str = ""
    abstract: str = ""
    claims: str = ""
    description: str = ""

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")


@dataclass(frozen=True)
class CitationRecord:
    """A directed citation edge between two publications."""

    citing_id: str
    cited_id: str
    category: str
    source: str = "EXAMINER"

    def __post_init__(self) -> None:
        if not self.citing_id or not self.cited_id:
            raise ValueError("citing_id and cited_id must be non-empty")
        if self.citing_id == self.cited_id:
            raise ValueError(f"citation of {self.citing_id!r} to itself")
        if self.category not in CITATION_CATEGORIES:
            raise ValueError(f"unknown citation category {self.category!r}")
        if self.source not in CITATION_SOURCES:
            raise ValueError(f"unknown citation source {self.source!r}")


@dataclass(frozen=True)
class Corpus:
    """An in-memory corpus: documents by id, citation edges, reference date.

    ``reference_date`` anchors recency filtering.  ``load_skips`` records
    (line_number, reason) pairs for lines skipped during a lenient load.
    """

    documents: Mapping[str, PatentDocument]
    citations: tuple[CitationRecord, ...]
    reference_date: date
    load_skips: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    doc_count: int
    citation_count: int
    dangling_citations: tuple[CitationRecord, ...]
    malformed_docs: tuple[tuple[str, str], ...]
    empty_sections: tuple[tuple[str, str], ...]

    @property
    def clean(self) -> bool:
        return not (self.dangling_citations or self.malformed_docs or self.empty_sections)


_REQUIRED_PATENT_FIELDS = ("doc_id", "jurisdiction", "language", "ipc_codes", "filing_date")
_REQUIRED_CITATION_FIELDS = ("citing_id", "cited_id", "category")


def _parse_date(value: str) -> date:
    # date.fromisoformat accepts only YYYY-MM-DD in 3.10, which is what the
    # format prescribes; anything else should fail loudly.
    if not isinstance(value, str):
        raise ValueError(f"date must be an ISO string, got {type(value).__name__}")
    return date.fromisoformat(value)


def _parse_patent(rec: dict) -> PatentDocument:
    for key in _REQUIRED_PATENT_FIELDS:
        if key not in rec:
            raise ValueError(f"patent record missing field {key!r}")
    codes = rec["ipc_codes"]
    if not isinstance(codes, list) or not all(isinstance(c, str) for c in codes):
        raise ValueError("ipc_codes must be a list of strings")
    return PatentDocument(
        doc_id=str(rec["doc_id"]),
        jurisdiction=str(rec["jurisdiction"]),
        language=str(rec["language"]),
        ipc_codes=tuple(codes),
        filing_date=_parse_date(rec["filing_date"]),
        family_id=str(rec.get("family_id", "")),
        title=str(rec.get("title", "")),
        abstract=str(rec.get("abstract", "")),
        claims=str(rec.get("claims", "")),
        description=str(rec.get("description", "")),
    )


def _parse_citation(rec: dict) -> CitationRecord:
    for key in _REQUIRED_CITATION_FIELDS:
        if key not in rec:
            raise ValueError(f"citation record missing field {key!r}")
    return CitationRecord(
        citing_id=str(rec["citing_id"]),
        cited_id=str(rec["cited_id"]),
        category=str(rec["category"]),
        source=str(rec.get("source", "EXAMINER")),
    )


def manifest_path_for(corpus_path: str | Path) -> Path:
    return Path(str(corpus_path) + ".manifest.json")


def load_corpus(path: str | Path, lenient: bool = False) -> Corpus:
    """Load a line-delimited corpus file.

    Strict mode (default) raises :class:`CorpusFormatError` on the first
    malformed line.  Lenient mode skips malformed lines and records them in
    ``Corpus.load_skips``.  A duplicate doc_id is fatal in both modes.

    Args:
        path: corpus file location.
        lenient: skip malformed lines instead of failing.

    Returns:
        The parsed corpus.  The reference date comes from the sidecar
        manifest when present, otherwise the latest filing date on record.
    """
    path = Path(path)
    documents: dict[str, PatentDocument] = {}
    citations: list[CitationRecord] = []
    citation_lines: list[int] = []
    skips: list[tuple[int, str]] = []

    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise ValueError("record is not a JSON object")
                kind = rec.get("kind")
                if kind == "patent":
                    doc = _parse_patent(rec)
                    if doc.doc_id in documents:
                        raise DuplicateDocIdError(doc.doc_id, line_number)
                    documents[doc.doc_id] = doc
                elif kind == "citation":
                    citations.append(_parse_citation(rec))
                    citation_lines.append(line_number)
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except DuplicateDocIdError:
                raise
            except (ValueError, KeyError, TypeError) as exc:
                if lenient:
                    skips.append((line_number, str(exc)))
                    continue
                raise CorpusFormatError(f"{path}:{line_number}: {exc}") from exc

    # Citing ends must resolve; citations can appear before their documents
    # in the file, so this check runs after the full pass.
    kept: list[CitationRecord] = []
    for cit, line_number in zip(citations, citation_lines):
        if cit.citing_id not in documents:
            msg = f"citation citing unknown doc_id {cit.citing_id!r}"
            if lenient:
                skips.append((line_number, msg))
                continue
            raise CorpusFormatError(f"{path}:{line_number}: {msg}")
        kept.append(cit)

    reference_date = _read_reference_date(path, documents, len(kept), lenient)
    return Corpus(
        documents=documents,
        citations=tuple(kept),
        reference_date=reference_date,
        load_skips=tuple(skips),
    )


def _read_reference_date(
    path: Path,
    documents: dict[str, PatentDocument],
    citation_count: int,
    lenient: bool,
) -> date:
    side = manifest_path_for(path)
    if side.exists():
        try:
            manifest = json.loads(side.read_text(encoding="utf-8"))
            ref = _parse_date(manifest["reference_date"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{side}: bad sidecar manifest: {exc}") from exc
        for key, actual in (("doc_count", len(documents)), ("citation_count", citation_count)):
            expected = manifest.get(key)
            if expected is not None and expected != actual:
                msg = f"{side}: manifest {key}={expected} but file holds {actual}"
                if lenient:
                    logger.warning("%s", msg)
                else:
                    raise CorpusFormatError(msg)
        return ref
    # No sidecar: fall back to the latest filing date so recency filtering
    # stays deterministic for the same file content.
    if documents:
        return max(doc.filing_date for doc in documents.values())
    return date(1970, 1, 1)


def canonical_corpus_lines(corpus: Corpus) -> Iterator[str]:
    """Canonical serialization: documents sorted by id, then sorted citations."""
    for doc_id in sorted(corpus.documents):
        doc = corpus.documents[doc_id]
        yield json.dumps(
            {
                "kind": "patent",
                "doc_id": doc.doc_id,
                "jurisdiction": doc.jurisdiction,
                "language": doc.language,
                "ipc_codes": list(doc.ipc_codes),
                "filing_date": doc.filing_date.isoformat(),
                "family_id": doc.family_id,
                "title": doc.title,
                "abstract": doc.abstract,
                "claims": doc.claims,
                "description": doc.description,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
    for cit in sorted(
        corpus.citations, key=lambda c: (c.citing_id, c.cited_id, c.category, c.source)
    ):
        yield json.dumps(
            {
                "kind": "citation",
                "citing_id": cit.citing_id,
                "cited_id": cit.cited_id,
                "category": cit.category,
                "source": cit.source,
            },
            sort_keys=True,
            ensure_ascii=False,
        )


def write_corpus(corpus: Corpus, path: str | Path) -> Path:
    """Write the canonical corpus serialization plus its sidecar manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for line in canonical_corpus_lines(corpus):
            fh.write(line)
            fh.write("\n")
    manifest = {
        "reference_date": corpus.reference_date.isoformat(),
        "doc_count": len(corpus.documents),
        "citation_count": len(corpus.citations),
    }
    manifest_path_for(path).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


def corpus_content_hash(corpus: Corpus) -> str:
    """sha256 over the canonical serialization and reference date."""
    digest = hashlib.sha256()
    digest.update(corpus.reference_date.isoformat().encode("utf-8"))
    digest.update(b"\n")
    for line in canonical_corpus_lines(corpus):
        digest.update(line.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Integrity scan.  Pure: does not mutate the corpus.

    Flags citations whose cited end is missing from the corpus, documents
    with empty description or claims, and documents with malformed IPC codes,
    unrecognized language codes, or a filing date after the reference date.
    """
    dangling = tuple(c for c in corpus.citations if c.cited_id not in corpus.documents)
    malformed: list[tuple[str, str]] = []
    empty: list[tuple[str, str]] = []
    for doc_id in sorted(corpus.documents):
        doc = corpus.documents[doc_id]
        if doc.language not in ISO_639_1:
            malformed.append((doc_id, f"unrecognized language code {doc.language!r}"))
        for code in doc.ipc_codes:
            if not code or code[0].upper() not in IPC_SECTIONS:
                malformed.append((doc_id, f"malformed ipc_code {code!r}"))
        if doc.filing_date > corpus.reference_date:
            malformed.append(
                (doc_id, f"filing_date {doc.filing_date.isoformat()} after reference date")
            )
        if not doc.description.strip():
            empty.append((doc_id, "description"))
        if not doc.claims.strip():
            empty.append((doc_id, "claims"))
    return ValidationReport(
        doc_count=len(corpus.documents),
        citation_count=len(corpus.citations),
        dangling_citations=dangling,
        malformed_docs=tuple(malformed),
        empty_sections=tuple(empty),
    )


def ipc_section_of(doc: PatentDocument) -> str:
    """Section letter (A-H) of the first listed IPC code, or ``unclassified``."""
    if not doc.ipc_codes:
        return UNCLASSIFIED
    first = doc.ipc_codes[0].strip()
    if first and first[0].upper() in IPC_SECTIONS:
        return first[0].upper()
    return UNCLASSIFIED


def family_members(corpus: Corpus, doc_id: str) -> list[PatentDocument]:
    """Other corpus documents sharing the family of ``doc_id``, sorted by id.

    A document with an empty family_id has no members.  Raises
    :class:`UnknownDocIdError` for an id the corpus does not hold.
    """
    try:
        doc = corpus.documents[doc_id]
    except KeyError:
        raise UnknownDocIdError(doc_id) from None
    if not doc.family_id:
        return []
    return [
        other
        for other_id, other in sorted(corpus.documents.items())
        if other_id != doc_id and other.family_id == doc.family_id
    ]
