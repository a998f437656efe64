"""Relevance dataset construction: examiner X citations as ground truth,
family-based augmentation behind an alignment threshold, quality filters,
and stratified sampling with largest-remainder rounding."""

from __future__ import annotations

import json
import hashlib
import logging
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Mapping, Protocol, runtime_checkable

from .corpus import (
    Corpus,
    PatentDocument,
    corpus_content_hash,
    family_members,
    ipc_section_of,
)

logger = logging.getLogger(__name__)

DEFAULT_ALIGNMENT_THRESHOLD = 0.90
DEFAULT_RECENCY_YEARS = 10
STRATUM_DIMENSIONS = ("language", "ipc_section", "jurisdiction")
DATASET_SCHEMA_VERSION = 1

PROVENANCE_EXAMINER = "EXAMINER"
PROVENANCE_FAMILY = "FAMILY_DERIVED"

_WS_RE = re.compile(r"\s+")


class UndefinedScoreError(ValueError):
    """Alignment score is undefined because both documents have no text."""


class InfeasibleTargetsError(ValueError):
    """Sampling targets demand more cases than the pool can supply."""

    def __init__(self, stratum: str, demanded: int, available: int) -> None:
        super().__init__(
            f"stratum {stratum!r} demands {demanded} cases "
            f"but only {available} are available"
        )
        self.stratum = stratum
        self.demanded = demanded
        self.available = available


class DatasetFormatError(ValueError):
    """A dataset file violates the expected line-delimited layout."""


@dataclass(frozen=True)
class AlignmentScore:
    value: float
    scorer_id: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"alignment score {self.value} outside [0, 1]")


@runtime_checkable
class AlignmentScorer(Protocol):
    """Pluggable document-pair similarity backend."""

    scorer_id: str

    def score(self, doc_a: PatentDocument, doc_b: PatentDocument) -> float: ...


class TrigramJaccardScorer:
    """Default alignment proxy: character 3-gram Jaccard over claims plus
    description, lowercased and whitespace-normalized.

    Multiset semantics: repeated 3-grams count with multiplicity.  Symmetric
    and deterministic; identical non-empty texts score 1.0.
    """

    scorer_id = "char3-jaccard-v1"

    @staticmethod
    def _grams(doc: PatentDocument) -> Counter[str]:
        text = " ".join(part for part in (doc.claims, doc.description) if part.strip())
        text = _WS_RE.sub(" ", text.lower()).strip()
        if len(text) < 3:
            return Counter([text]) if text else Counter()
        return Counter(text[i : i + 3] for i in range(len(text) - 2))

    def score(self, doc_a: PatentDocument, doc_b: PatentDocument) -> float:
        a, b = self._grams(doc_a), self._grams(doc_b)
        union = sum((a | b).values())
        if union == 0:
            raise UndefinedScoreError(
                f"no text to align for ({doc_a.doc_id!r}, {doc_b.doc_id!r})"
            )
        inter = sum((a & b).values())
        return inter / union


def alignment_score(
    doc_a: PatentDocument, doc_b: PatentDocument, scorer: AlignmentScorer
) -> AlignmentScore:
    """Score a document pair with the given backend, validated into [0, 1]."""
    return AlignmentScore(value=scorer.score(doc_a, doc_b), scorer_id=scorer.scorer_id)


@dataclass(frozen=True)
class QueryCase:
    """One evaluation query: a main patent and its relevant publication ids.

    ``relevant_provenance`` maps every relevant id to EXAMINER or
    FAMILY_DERIVED; examiner provenance wins when both would apply.
    """

    query_doc_id: str
    relevant_ids: frozenset[str]
    relevant_provenance: Mapping[str, str]

    def __post_init__(self) -> None:
        if not self.relevant_ids:
            raise ValueError(f"query {self.query_doc_id!r} has an empty relevant set")
        if self.query_doc_id in self.relevant_ids:
            raise ValueError(f"query {self.query_doc_id!r} lists itself as relevant")
        if set(self.relevant_provenance) != set(self.relevant_ids):
            raise ValueError("relevant_provenance must cover exactly relevant_ids")


@dataclass(frozen=True)
class DistributionProfile:
    """Observed corpus distributions used to steer dataset assembly."""

    citation_type_proportions: Mapping[str, float]
    language_counts_primary: Mapping[str, int]
    language_counts_cited: Mapping[str, int]
    ipc_section_counts: Mapping[str, int]
    jurisdiction_counts: Mapping[str, int]

    def as_dict(self) -> dict:
        return {
            "citation_type_proportions": dict(sorted(self.citation_type_proportions.items())),
            "language_counts_primary": dict(sorted(self.language_counts_primary.items())),
            "language_counts_cited": dict(sorted(self.language_counts_cited.items())),
            "ipc_section_counts": dict(sorted(self.ipc_section_counts.items())),
            "jurisdiction_counts": dict(sorted(self.jurisdiction_counts.items())),
        }


@dataclass(frozen=True)
class EvaluationDataset:
    """Assembled dataset: ordered query cases, per-query stratum labels, and
    the build manifest that pins every input needed to rebuild it."""

    queries: tuple[QueryCase, ...]
    strata: Mapping[str, Mapping[str, str]]
    build_manifest: Mapping[str, object]

    @property
    def manifest_hash(self) -> str:
        return manifest_hash(self.build_manifest)

    def query_ids(self) -> list[str]:
        return [case.query_doc_id for case in self.queries]


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def manifest_hash(manifest: Mapping[str, object]) -> str:
    return hashlib.sha256(canonical_json(dict(manifest)).encode("utf-8")).hexdigest()


def extract_x_citations(corpus: Corpus) -> dict[str, set[str]]:
    """Map each patent to the set of in-corpus publications its examiner
    cited with category X.  Patents without such citations are absent."""
    out: dict[str, set[str]] = {}
    for cit in corpus.citations:
        if (
            cit.category == "X"
            and cit.source == PROVENANCE_EXAMINER
            and cit.cited_id in corpus.documents
        ):
            out.setdefault(cit.citing_id, set()).add(cit.cited_id)
    return out


def profile_distributions(corpus: Corpus) -> DistributionProfile:
    """Corpus-level distributions.

    Citation type proportions are over all citation records.  Language,
    IPC section, and jurisdiction counts cover the corpus documents
    (candidate main patents); cited-language counts cover the distinct
    in-corpus targets of X citations.
    """
    type_counts = Counter(c.category for c in corpus.citations)
    total = sum(type_counts.values())
    proportions = {cat: n / total for cat, n in sorted(type_counts.items())} if total else {}

    docs = corpus.documents.values()
    cited_ids = {
        c.cited_id
        for c in corpus.citations
        if c.category == "X" and c.cited_id in corpus.documents
    }
    return DistributionProfile(
        citation_type_proportions=proportions,
        language_counts_primary=dict(Counter(d.language for d in docs)),
        language_counts_cited=dict(
            Counter(corpus.documents[i].language for i in cited_ids)
        ),
        ipc_section_counts=dict(Counter(ipc_section_of(d) for d in docs)),
        jurisdiction_counts=dict(Counter(d.jurisdiction for d in docs)),
    )


def augment_with_family_citations(
    corpus: Corpus,
    base: Mapping[str, set[str]],
    scorer: AlignmentScorer,
    threshold: float = DEFAULT_ALIGNMENT_THRESHOLD,
) -> dict[str, QueryCase]:
    """Fold family members' X citations into each main patent's relevant set.

    A family member contributes only when its alignment score against the
    main patent reaches ``threshold`` (inclusive).  Contributed ids that are
    the main patent itself or family members of the main patent are dropped.
    A scorer failure on a pair logs a warning and skips that member; examiner
    provenance always wins over family-derived on collisions.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    x_map = extract_x_citations(corpus)
    cases: dict[str, QueryCase] = {}
    for main_id in sorted(base):
        main_doc = corpus.documents[main_id]
        provenance: dict[str, str] = {
            cited: PROVENANCE_EXAMINER for cited in sorted(base[main_id])
        }
        members = family_members(corpus, main_id)
        family_ids = {m.doc_id for m in members}
        for member in members:
            member_x = x_map.get(member.doc_id)
            if not member_x:
                continue
            try:
                score = alignment_score(main_doc, member, scorer)
            except Exception as exc:
                logger.warning(
                    "alignment scoring failed for (%s, %s): %s; member skipped",
                    main_id,
                    member.doc_id,
                    exc,
                )
                continue
            if score.value < threshold:
                continue
            for cited in sorted(member_x):
                if cited == main_id or cited in family_ids:
                    continue
                provenance.setdefault(cited, PROVENANCE_FAMILY)
        cases[main_id] = QueryCase(
            query_doc_id=main_id,
            relevant_ids=frozenset(provenance),
            relevant_provenance=provenance,
        )
    return cases


def _years_before(day: date, years: int) -> date:
    try:
        return day.replace(year=day.year - years)
    except ValueError:  # Feb 29 on a non-leap target year
        return day.replace(year=day.year - years, day=28)


def apply_quality_filters(
    cases: Mapping[str, QueryCase],
    corpus: Corpus,
    recency_years: int = DEFAULT_RECENCY_YEARS,
) -> dict[str, QueryCase]:
    """Drop cases failing recency or integrity requirements.

    Retained cases have a main patent filed within ``recency_years`` of the
    corpus reference date (boundary inclusive), a non-empty description, and
    a non-empty relevant set.
    """
    if recency_years < 0:
        raise ValueError("recency_years must be non-negative")
    cutoff = _years_before(corpus.reference_date, recency_years)
    kept: dict[str, QueryCase] = {}
    for qid in sorted(cases):
        doc = corpus.documents.get(qid)
        if doc is None:
            continue
        if doc.filing_date < cutoff:
            continue
        if not doc.description.strip():
            continue
        if not cases[qid].relevant_ids:
            continue
        kept[qid] = cases[qid]
    return kept


def stratum_labels(doc: PatentDocument) -> dict[str, str]:
    return {
        "language": doc.language,
        "ipc_section": ipc_section_of(doc),
        "jurisdiction": doc.jurisdiction,
    }


def _largest_remainder(proportions: Mapping[str, float], total: int) -> dict[str, int]:
    """Integer allocation summing to ``total``; ties by ascending key."""
    quotas = {key: p * total for key, p in proportions.items()}
    alloc = {key: math.floor(q) for key, q in quotas.items()}
    leftover = total - sum(alloc.values())
    by_fraction = sorted(quotas, key=lambda k: (-(quotas[k] - alloc[k]), k))
    for key in by_fraction[:leftover]:
        alloc[key] += 1
    return alloc


def _validate_targets(targets: Mapping[str, Mapping[str, float]]) -> None:
    for dim, props in targets.items():
        if dim not in STRATUM_DIMENSIONS:
            raise ValueError(f"unknown stratification dimension {dim!r}")
        if not props:
            raise ValueError(f"empty target map for dimension {dim!r}")
        if any(p < 0 for p in props.values()):
            raise ValueError(f"negative proportion in dimension {dim!r}")
        if abs(sum(props.values()) - 1.0) > 1e-9:
            raise ValueError(f"proportions for {dim!r} must sum to 1.0")


def _composite_allocation(
    targets: Mapping[str, Mapping[str, float]],
    pools: Mapping[tuple[str, ...], list[str]],
    sample_size: int,
) -> dict[tuple[str, ...], int]:
    """Largest-remainder allocation over composite strata, capped by
    availability; shortfall is redistributed proportionally to the targets of
    strata that still have spare cases."""
    dims = sorted(targets)
    keys: list[tuple[str, ...]] = [()]
    props: dict[tuple[str, ...], float] = {(): 1.0}
    for dim in dims:
        keys = [key + (label,) for key in keys for label in sorted(targets[dim])]
        props = {
            key + (label,): props[key] * targets[dim][label]
            for key in props
            for label in sorted(targets[dim])
        }
    label_of = {key: "|".join(key) for key in keys}
    avail = {key: len(pools.get(key, ())) for key in keys}

    alloc = _largest_remainder({label_of[k]: props[k] for k in keys}, sample_size)
    alloc = {k: alloc[label_of[k]] for k in keys}
    capped: set[tuple[str, ...]] = set()
    while True:
        over = {k: alloc[k] - avail[k] for k in keys if alloc[k] > avail[k]}
        if not over:
            break
        shortfall = sum(over.values())
        for k in over:
            alloc[k] = avail[k]
            capped.add(k)
        open_keys = [
            k for k in keys if k not in capped and props[k] > 0 and alloc[k] < avail[k]
        ]
        if not open_keys:
            worst = max(over, key=lambda k: (over[k], label_of[k]))
            demanded = over[worst] + avail[worst]
            raise InfeasibleTargetsError(label_of[worst], demanded, avail[worst])
        weight = sum(props[k] for k in open_keys)
        extra = _largest_remainder(
            {label_of[k]: props[k] / weight for k in open_keys}, shortfall
        )
        for k in open_keys:
            alloc[k] += extra[label_of[k]]
    return alloc


def assemble_dataset(
    cases: Mapping[str, QueryCase],
    corpus: Corpus,
    targets: Mapping[str, Mapping[str, float]] | None,
    sample_size: int,
    seed: int,
    *,
    scorer_id: str,
    threshold: float,
    recency_years: int,
    profile: DistributionProfile | None = None,
) -> EvaluationDataset:
    """Draw a stratified sample of cases and pin the build manifest.

    ``targets`` maps dimension name (language, ipc_section, jurisdiction) to
    stratum proportions; multiple dimensions combine into composite strata
    with product proportions.  ``None`` means a plain random sample.  The
    same (cases, corpus, targets, seed) always yields the same dataset.
    """
    if sample_size < 0:
        raise ValueError("sample_size must be non-negative")
    if sample_size > len(cases):
        raise ValueError(
            f"sample_size {sample_size} exceeds the {len(cases)} available cases"
        )

    labels = {qid: stratum_labels(corpus.documents[qid]) for qid in cases}

    if targets:
        _validate_targets(targets)
        dims = sorted(targets)
        pools: dict[tuple[str, ...], list[str]] = {}
        for qid in sorted(cases):
            key = tuple(labels[qid][dim] for dim in dims)
            pools.setdefault(key, []).append(qid)
        alloc = _composite_allocation(targets, pools, sample_size)
        chosen: list[str] = []
        for key in sorted(alloc):
            if alloc[key] == 0:
                continue
            rng = random.Random(f"{seed}|{'|'.join(key)}")
            chosen.extend(rng.sample(pools[key], alloc[key]))
    else:
        rng = random.Random(f"{seed}|__all__")
        chosen = rng.sample(sorted(cases), sample_size)

    chosen.sort()
    queries = tuple(cases[qid] for qid in chosen)
    strata = {qid: labels[qid] for qid in chosen}

    realized: Counter[str] = Counter()
    for qid in chosen:
        key = "|".join(labels[qid][dim] for dim in sorted(targets)) if targets else "__all__"
        realized[key] += 1

    manifest = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "seed": seed,
        "sample_size": sample_size,
        "n_queries": len(queries),
        "targets": {d: dict(sorted(p.items())) for d, p in sorted((targets or {}).items())},
        "scorer_id": scorer_id,
        "threshold": threshold,
        "recency_years": recency_years,
        "filters": ["recency", "non_empty_description", "non_empty_relevants"],
        "corpus_hash": corpus_content_hash(corpus),
        "stratum_counts": dict(sorted(realized.items())),
        "profile": profile.as_dict() if profile is not None else None,
    }
    return EvaluationDataset(queries=queries, strata=strata, build_manifest=manifest)


def build_dataset(
    corpus: Corpus,
    *,
    scorer: AlignmentScorer | None = None,
    threshold: float = DEFAULT_ALIGNMENT_THRESHOLD,
    recency_years: int = DEFAULT_RECENCY_YEARS,
    targets: Mapping[str, Mapping[str, float]] | None = None,
    sample_size: int | None = None,
    seed: int = 0,
) -> EvaluationDataset:
    """Full pipeline: extract, augment, filter, assemble."""
    scorer = scorer if scorer is not None else TrigramJaccardScorer()
    base = extract_x_citations(corpus)
    cases = augment_with_family_citations(corpus, base, scorer, threshold)
    cases = apply_quality_filters(cases, corpus, recency_years)
    profile = profile_distributions(corpus)
    n = len(cases) if sample_size is None else sample_size
    return assemble_dataset(
        cases,
        corpus,
        targets,
        n,
        seed,
        scorer_id=scorer.scorer_id,
        threshold=threshold,
        recency_years=recency_years,
        profile=profile,
    )


def write_dataset(dataset: EvaluationDataset, path: str | Path) -> Path:
    """Serialize to line-delimited JSON: manifest header, then one query per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        header = {"kind": "manifest"}
        header.update(dataset.build_manifest)
        fh.write(canonical_json(header))
        fh.write("\n")
        for case in dataset.queries:
            rec = {
                "kind": "query_case",
                "query_doc_id": case.query_doc_id,
                "relevant": [
                    {"doc_id": rid, "source": case.relevant_provenance[rid]}
                    for rid in sorted(case.relevant_ids)
                ],
                "strata": dict(sorted(dataset.strata[case.query_doc_id].items())),
            }
            fh.write(canonical_json(rec))
            fh.write("\n")
    return path


def load_dataset(path: str | Path) -> EvaluationDataset:
    """Inverse of :func:`write_dataset`; the manifest hash survives the trip."""
    path = Path(path)
    queries: list[QueryCase] = []
    strata: dict[str, dict[str, str]] = {}
    manifest: dict | None = None
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{line_number}: {exc}") from exc
            kind = rec.get("kind")
            if kind == "manifest":
                if manifest is not None:
                    raise DatasetFormatError(f"{path}:{line_number}: second manifest record")
                manifest = {k: v for k, v in rec.items() if k != "kind"}
            elif kind == "query_case":
                provenance = {r["doc_id"]: r["source"] for r in rec["relevant"]}
                queries.append(
                    QueryCase(
                        query_doc_id=rec["query_doc_id"],
                        relevant_ids=frozenset(provenance),
                        relevant_provenance=provenance,
                    )
                )
                strata[rec["query_doc_id"]] = dict(rec["strata"])
            else:
                raise DatasetFormatError(f"{path}:{line_number}: unknown record kind {kind!r}")
    if manifest is None:
        raise DatasetFormatError(f"{path}: missing manifest record")
    return EvaluationDataset(
        queries=tuple(queries), strata=strata, build_manifest=manifest
    )
