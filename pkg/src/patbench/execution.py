"""Running retrieval systems over a dataset: adapter contract, run controls,
result standardization, run logging, and a deterministic tf-idf reference
retriever for harness validation."""

from __future__ import annotations

import json
import logging
import math
import os
import re
import time
from collections import Counter
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Protocol, Sequence, runtime_checkable

import requests

from .corpus import Corpus
from .dataset import EvaluationDataset
from .query import EmptyInputError, Query

logger = logging.getLogger(__name__)

STATUS_OK = "OK"
STATUS_TIMEOUT = "TIMEOUT"
STATUS_ERROR = "ERROR"
STATUSES = frozenset({STATUS_OK, STATUS_TIMEOUT, STATUS_ERROR})

DEFAULT_TIMEOUT_MS = 30_000
DEFAULT_MAX_DEPTH = 100

# Latin alnum runs, or single CJK ideographs: Chinese text has no spaces, so
# each ideograph indexes as its own token.
_TOKEN_RE = re.compile(r"[a-z0-9]+|[㐀-䶿一-鿿]")
_ID_WS_RE = re.compile(r"\s+")
_ID_OK_RE = re.compile(r"^[A-Z0-9][A-Z0-9./-]*$")


class AdapterError(Exception):
    """The system under test failed to produce a usable response."""


class AdapterTimeout(AdapterError):
    """The system under test did not answer within the per-query budget."""


class RunFailureError(RuntimeError):
    """More than half of the queries hard-failed; the run is not usable."""


@dataclass(frozen=True)
class RunControls:
    """Execution knobs for one run.  ``seed`` is forwarded to adapters that
    accept one; the harness itself draws no randomness during a run."""

    seed: int
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_depth: int = DEFAULT_MAX_DEPTH
    adapter_id: str = ""
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")


@dataclass(frozen=True)
class Hit:
    doc_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    """Standardized result for one query.  Ranks are contiguous from 1, doc
    ids unique, scores non-increasing; non-OK statuses carry no hits."""

    query_id: str
    hits: tuple[Hit, ...]
    status: str = STATUS_OK
    latency_ms: int = 0

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status != STATUS_OK and self.hits:
            raise ValueError("non-OK results must carry no hits")

    def doc_ids(self) -> list[str]:
        return [h.doc_id for h in self.hits]


@dataclass(frozen=True)
class RunRecord:
    controls: RunControls
    dataset_manifest_hash: str
    results: Mapping[str, RankedList]
    started: str
    finished: str
    anomaly_count: int = 0


def normalize_doc_id(raw: object) -> str | None:
    """Uppercase, whitespace-free publication id; ``None`` when unmappable."""
    if not isinstance(raw, str):
        return None
    norm = _ID_WS_RE.sub("", raw).upper()
    if not _ID_OK_RE.match(norm):
        return None
    return norm


def _coerce_hit(item: object) -> tuple[object, float | None]:
    if isinstance(item, Mapping):
        return item.get("doc_id"), item.get("score")
    if isinstance(item, (tuple, list)) and len(item) == 2:
        return item[0], item[1]
    if isinstance(item, str):
        return item, None
    return None, None


def standardize_results(
    raw: Sequence[object],
    *,
    query_id: str,
    max_depth: int,
    latency_ms: int = 0,
) -> tuple[RankedList, int]:
    """Convert raw adapter output into a RankedList.

    Accepts (doc_id, score) pairs, mappings with doc_id/score keys, or bare
    id strings.  Ids are normalized; unmappable entries are dropped and
    counted in the returned anomaly tally.  Duplicates keep their best rank.
    A missing score inherits the previous one; scores are clamped to be
    non-increasing so the ranking order stays authoritative.  The list is
    truncated to ``max_depth``.
    """
    dropped = 0
    seen: set[str] = set()
    kept: list[tuple[str, float | None]] = []
    for item in raw:
        raw_id, score = _coerce_hit(item)
        norm = normalize_doc_id(raw_id)
        if norm is None:
            dropped += 1
            continue
        if norm in seen:
            continue
        seen.add(norm)
        kept.append((norm, score))
        if len(kept) == max_depth:
            break

    hits: list[Hit] = []
    prev = math.inf
    for i, (doc_id, score) in enumerate(kept):
        if score is None or not isinstance(score, (int, float)) or not math.isfinite(score):
            score = 1.0 if prev is math.inf else prev
        score = float(min(score, prev))
        prev = score
        hits.append(Hit(doc_id=doc_id, score=score, rank=i + 1))
    ranked = RankedList(
        query_id=query_id, hits=tuple(hits), status=STATUS_OK, latency_ms=latency_ms
    )
    return ranked, dropped


@runtime_checkable
class SystemAdapter(Protocol):
    """Contract a retrieval system must satisfy to be evaluated.

    ``search`` returns raw hits (best first); the harness standardizes them.
    Raise :class:`AdapterTimeout` for budget overruns and any other exception
    for hard failures.
    """

    adapter_id: str

    def search(self, query: Query, controls: RunControls) -> Sequence[object]: ...


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def run_evaluation(
    dataset: EvaluationDataset,
    adapter: SystemAdapter,
    controls: RunControls,
    *,
    queries: Mapping[str, Query],
) -> RunRecord:
    """Execute the adapter over every dataset query.

    ``queries`` maps query ids to built Query objects (see
    :func:`patbench.query.build_queries`); a missing or unbuildable query is
    recorded as an ERROR result so coverage stays complete.  Timeouts are
    recorded as TIMEOUT with no hits.  When more than half of the queries end
    in ERROR the run aborts with :class:`RunFailureError`.
    """
    started = _utc_now()
    query_ids = dataset.query_ids()
    total = len(query_ids)
    results: dict[str, RankedList] = {}
    anomalies = 0
    errors = 0

    def one(query_id: str) -> tuple[RankedList, int]:
        query = queries.get(query_id)
        if query is None:
            raise AdapterError(f"no query built for {query_id!r}")
        t0 = time.perf_counter()
        raw = adapter.search(query, controls)
        elapsed_ms = int((time.perf_counter() - t0) * 1000)
        if elapsed_ms > controls.timeout_ms:
            raise AdapterTimeout(f"query {query_id!r} took {elapsed_ms} ms")
        return standardize_results(
            raw, query_id=query_id, max_depth=controls.max_depth, latency_ms=elapsed_ms
        )

    with ThreadPoolExecutor(max_workers=controls.parallelism) as pool:
        pending = {pool.submit(one, qid): qid for qid in query_ids}
        futures = set(pending)
        aborted = False
        while futures:
            done, futures = wait(futures, return_when=FIRST_COMPLETED)
            for fut in done:
                qid = pending[fut]
                try:
                    ranked, dropped = fut.result()
                    anomalies += dropped
                    results[qid] = ranked
                except AdapterTimeout:
                    results[qid] = RankedList(
                        query_id=qid, hits=(), status=STATUS_TIMEOUT
                    )
                except Exception as exc:
                    logger.debug("query %s failed: %s", qid, exc)
                    errors += 1
                    results[qid] = RankedList(query_id=qid, hits=(), status=STATUS_ERROR)
            if errors * 2 > total:
                for fut in futures:
                    fut.cancel()
                aborted = True
                break

    if aborted or errors * 2 > total:
        raise RunFailureError(
            f"{errors} of {total} queries failed against adapter "
            f"{adapter.adapter_id!r}; aborting run"
        )
    return RunRecord(
        controls=controls,
        dataset_manifest_hash=dataset.manifest_hash,
        results=results,
        started=started,
        finished=_utc_now(),
        anomaly_count=anomalies,
    )


def tally_statuses(record: RunRecord) -> dict[str, int]:
    counts = Counter(r.status for r in record.results.values())
    return {status: counts.get(status, 0) for status in sorted(STATUSES)}


# ---------------------------------------------------------------------------
# Reference retriever: deterministic tf-idf with length normalization.
# score(q, d) = sum over shared terms of
#     qtf(t) * (1 + ln tf_d(t)) * ln(1 + N / df(t)) / sqrt(len_d)
# Ties break lexicographically by doc_id.
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass
class ReferenceIndex:
    postings: dict[str, dict[str, int]]
    doc_lengths: dict[str, int]
    n_docs: int
    families: dict[str, str]


def build_reference_index(corpus: Corpus) -> ReferenceIndex:
    """Inverted index over title, abstract, claims, and description."""
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for doc_id in sorted(corpus.documents):
        doc = corpus.documents[doc_id]
        tokens = tokenize(
            " ".join((doc.title, doc.abstract, doc.claims, doc.description))
        )
        doc_lengths[doc_id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, {})[doc_id] = tf
    families = {
        doc_id: doc.family_id for doc_id, doc in corpus.documents.items() if doc.family_id
    }
    return ReferenceIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        n_docs=len(corpus.documents),
        families=families,
    )


def reference_retrieve(
    query: Query,
    index: ReferenceIndex,
    max_depth: int = DEFAULT_MAX_DEPTH,
    *,
    exclude_family: bool = True,
) -> RankedList:
    """Rank corpus documents against the query text.

    The query's own document is always excluded; documents sharing its
    family are excluded by default.  Deterministic: identical inputs yield
    identical rankings regardless of parallelism in the caller.
    """
    q_tokens = tokenize(query.text)
    if not q_tokens:
        raise EmptyInputError(f"query {query.query_id!r} has no indexable tokens")
    q_family = index.families.get(query.query_id, "")

    scores: dict[str, float] = {}
    for term, qtf in Counter(q_tokens).items():
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = math.log(1.0 + index.n_docs / len(plist))
        for doc_id, tf in plist.items():
            scores[doc_id] = scores.get(doc_id, 0.0) + qtf * (1.0 + math.log(tf)) * idf

    ranked: list[tuple[str, float]] = []
    for doc_id in sorted(scores):
        if doc_id == query.query_id:
            continue
        if exclude_family and q_family and index.families.get(doc_id, "") == q_family:
            continue
        length = index.doc_lengths.get(doc_id, 0) or 1
        ranked.append((doc_id, scores[doc_id] / math.sqrt(length)))
    ranked.sort(key=lambda pair: (-pair[1], pair[0]))

    hits = tuple(
        Hit(doc_id=doc_id, score=score, rank=i + 1)
        for i, (doc_id, score) in enumerate(ranked[:max_depth])
    )
    return RankedList(query_id=query.query_id, hits=hits, status=STATUS_OK)


class ReferenceAdapter:
    """In-process adapter wrapping the reference retriever."""

    adapter_id = "reference"

    def __init__(self, corpus: Corpus, exclude_family: bool = True) -> None:
        self._index = build_reference_index(corpus)
        self._exclude_family = exclude_family

    def search(self, query: Query, controls: RunControls) -> Sequence[object]:
        ranked = reference_retrieve(
            query,
            self._index,
            max_depth=controls.max_depth,
            exclude_family=self._exclude_family,
        )
        return [(h.doc_id, h.score) for h in ranked.hits]


# ---------------------------------------------------------------------------
# Remote adapter: HTTP endpoint behind a JSON config.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RemoteEndpointConfig:
    """Shape of a remote system endpoint.

    ``auth_token_env`` names an environment variable holding the bearer
    token; the token itself never lives in the config file.  ``hits_path``
    walks the response JSON to the hit list.
    """

    adapter_id: str
    url: str
    method: str = "POST"
    headers: Mapping[str, str] = field(default_factory=dict)
    auth_token_env: str = ""
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    query_field: str = "query"
    max_depth_field: str = "max_depth"
    seed_field: str = "seed"
    extra_params: Mapping[str, object] = field(default_factory=dict)
    hits_path: tuple[str, ...] = ("hits",)
    id_field: str = "doc_id"
    score_field: str = "score"
    max_retries: int = 2
    backoff_s: float = 0.25

    @classmethod
    def from_file(cls, path: str | Path) -> "RemoteEndpointConfig":
        rec = json.loads(Path(path).read_text(encoding="utf-8"))
        if "adapter_id" not in rec or "url" not in rec:
            raise ValueError(f"{path}: remote config needs adapter_id and url")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(rec) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        if "hits_path" in rec:
            rec["hits_path"] = tuple(rec["hits_path"])
        return cls(**rec)


def remote_adapter_query(
    config: RemoteEndpointConfig, query: Query, controls: RunControls
) -> list[tuple[object, object]]:
    """Issue one search request against a remote endpoint.

    Retries transport failures at most ``config.max_retries`` times with
    exponential backoff.  A timeout raises :class:`AdapterTimeout`; a
    non-success HTTP status or unparseable body raises :class:`AdapterError`
    with a response snippet.
    """
    payload: dict[str, object] = {
        config.query_field: query.text,
        config.max_depth_field: controls.max_depth,
    }
    if config.seed_field:
        payload[config.seed_field] = controls.seed
    payload.update(config.extra_params)

    headers = dict(config.headers)
    if config.auth_token_env:
        token = os.environ.get(config.auth_token_env, "")
        if token:
            headers[config.auth_header] = f"{config.auth_scheme} {token}".strip()

    last_exc: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(config.backoff_s * (2 ** (attempt - 1)))
        try:
            if config.method.upper() == "GET":
                resp = requests.request(
                    "GET",
                    config.url,
                    params=payload,
                    headers=headers,
                    timeout=controls.timeout_ms / 1000.0,
                )
            else:
                resp = requests.request(
                    config.method.upper(),
                    config.url,
                    json=payload,
                    headers=headers,
                    timeout=controls.timeout_ms / 1000.0,
                )
        except requests.Timeout as exc:
            raise AdapterTimeout(f"{config.adapter_id}: {exc}") from exc
        except requests.ConnectionError as exc:
            last_exc = exc
            continue
        if not resp.ok:
            snippet = resp.text[:200]
            raise AdapterError(f"{config.adapter_id}: HTTP {resp.status_code}: {snippet}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise AdapterError(f"{config.adapter_id}: unparseable body: {exc}") from exc
        node: object = body
        for step in config.hits_path:
            if not isinstance(node, Mapping) or step not in node:
                raise AdapterError(
                    f"{config.adapter_id}: response missing {'.'.join(config.hits_path)}"
                )
            node = node[step]
        if not isinstance(node, list):
            raise AdapterError(f"{config.adapter_id}: hit list is not an array")
        return [
            (item.get(config.id_field), item.get(config.score_field))
            if isinstance(item, Mapping)
            else (item, None)
            for item in node
        ]
    raise AdapterError(
        f"{config.adapter_id}: transport failure after "
        f"{config.max_retries + 1} attempts: {last_exc}"
    )


class RemoteAdapter:
    """Adapter for a remote HTTP retrieval system."""

    def __init__(self, config: RemoteEndpointConfig) -> None:
        self.config = config
        self.adapter_id = config.adapter_id

    def search(self, query: Query, controls: RunControls) -> Sequence[object]:
        return remote_adapter_query(self.config, query, controls)


# ---------------------------------------------------------------------------
# Run log I/O.
# ---------------------------------------------------------------------------


def _controls_dict(controls: RunControls) -> dict:
    return {
        "seed": controls.seed,
        "timeout_ms": controls.timeout_ms,
        "max_depth": controls.max_depth,
        "adapter_id": controls.adapter_id,
        "parallelism": controls.parallelism,
    }


def write_run_log(record: RunRecord, path: str | Path) -> Path:
    """Line-delimited run log: header record, then one result per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "kind": "run_header",
        "controls": _controls_dict(record.controls),
        "dataset_manifest_hash": record.dataset_manifest_hash,
        "started": record.started,
        "finished": record.finished,
        "anomaly_count": record.anomaly_count,
    }
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False))
        fh.write("\n")
        for query_id in sorted(record.results):
            ranked = record.results[query_id]
            rec = {
                "kind": "ranked_list",
                "query_id": query_id,
                "status": ranked.status,
                "latency_ms": ranked.latency_ms,
                "hits": [[h.doc_id, h.score, h.rank] for h in ranked.hits],
            }
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    return path


def load_run_log(path: str | Path) -> RunRecord:
    path = Path(path)
    header: dict | None = None
    results: dict[str, RankedList] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.get("kind")
            if kind == "run_header":
                header = rec
            elif kind == "ranked_list":
                hits = tuple(
                    Hit(doc_id=h[0], score=float(h[1]), rank=int(h[2]))
                    for h in rec["hits"]
                )
                results[rec["query_id"]] = RankedList(
                    query_id=rec["query_id"],
                    hits=hits,
                    status=rec["status"],
                    latency_ms=int(rec.get("latency_ms", 0)),
                )
            else:
                raise ValueError(f"{path}:{line_number}: unknown record kind {kind!r}")
    if header is None:
        raise ValueError(f"{path}: missing run_header record")
    c = header["controls"]
    controls = RunControls(
        seed=int(c["seed"]),
        timeout_ms=int(c["timeout_ms"]),
        max_depth=int(c["max_depth"]),
        adapter_id=str(c.get("adapter_id", "")),
        parallelism=int(c.get("parallelism", 1)),
    )
    return RunRecord(
        controls=controls,
        dataset_manifest_hash=header["dataset_manifest_hash"],
        results=results,
        started=header.get("started", ""),
        finished=header.get("finished", ""),
        anomaly_count=int(header.get("anomaly_count", 0)),
    )


def sanitize_run_log(path: str | Path) -> bytes:
    """Canonical bytes of a run log with scheduling detail removed.

    Two runs of the same seed over the same dataset must sanitize to
    identical bytes.  Started/finished timestamps, per-query latencies, and
    the parallelism setting are execution detail, not result content, so
    they are the only fields allowed to differ.
    """
    record = load_run_log(path)
    lines: list[str] = []
    controls = _controls_dict(record.controls)
    del controls["parallelism"]
    header = {
        "kind": "run_header",
        "controls": controls,
        "dataset_manifest_hash": record.dataset_manifest_hash,
        "anomaly_count": record.anomaly_count,
    }
    lines.append(json.dumps(header, sort_keys=True, ensure_ascii=False))
    for query_id in sorted(record.results):
        ranked = record.results[query_id]
        rec = {
            "kind": "ranked_list",
            "query_id": query_id,
            "status": ranked.status,
            "hits": [[h.doc_id, h.score, h.rank] for h in ranked.hits],
        }
        lines.append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
    return ("\n".join(lines) + "\n").encode("utf-8")
