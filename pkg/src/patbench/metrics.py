"""Retrieval quality metrics: top-k detection rate, recall at retrieval
depth, and stratified paired-bootstrap significance for system deltas."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Mapping, Sequence

import numpy as np

from .dataset import EvaluationDataset
from .execution import RankedList, RunRecord, STATUS_OK

logger = logging.getLogger(__name__)

MATCH_EXACT = "exact"
MATCH_FAMILY = "family"
MATCH_RULES = (MATCH_EXACT, MATCH_FAMILY)

DEFAULT_K_GRID = (1, 3, 5, 10, 20, 30, 50, 100)
DEFAULT_N_RESAMPLES = 10_000
DEFAULT_BOOTSTRAP_STRATA = ("language", "ipc_section")
MIN_STRATUM_SIZE = 2
_CATCH_ALL = "__rest__"
_BOOTSTRAP_CHUNK = 2048
_EXHAUSTIVE_LIMIT = 200_000


class UndefinedMetricError(ValueError):
    """The metric is undefined for the given inputs (e.g. empty dataset)."""


class CoverageError(ValueError):
    """The run does not cover exactly the dataset's query ids."""


@dataclass(frozen=True)
class DetectionCurve:
    """Detection rate at each k of the grid; monotonically non-decreasing."""

    points: tuple[tuple[int, float], ...]
    n_queries: int

    def rate_at(self, k: int) -> float:
        for kk, rate in self.points:
            if kk == k:
                return rate
        raise KeyError(k)


@dataclass(frozen=True)
class SignificanceResult:
    metric_name: str
    observed_diff: float
    p_value: float
    ci_low: float
    ci_high: float
    n_resamples: int
    strata_spec: str
    seed: int
    # Exhaustive mode only: the full (diff, probability) support.
    distribution: tuple[tuple[float, float], ...] | None = None


def _check_coverage(run: RunRecord, dataset: EvaluationDataset) -> None:
    run_ids = set(run.results)
    ds_ids = set(dataset.query_ids())
    if run_ids != ds_ids:
        missing = sorted(ds_ids - run_ids)[:5]
        extra = sorted(run_ids - ds_ids)[:5]
        raise CoverageError(
            f"run does not cover the dataset (missing {missing}, extra {extra})"
        )


def _relevant_family_set(
    relevant_ids: frozenset[str], family_of: Mapping[str, str]
) -> frozenset[str]:
    return frozenset(
        fam for fam in (family_of.get(rid, "") for rid in relevant_ids) if fam
    )


def _validate_match_args(match_rule: str, family_of: Mapping[str, str] | None) -> None:
    if match_rule not in MATCH_RULES:
        raise ValueError(f"unknown match rule {match_rule!r}")
    if match_rule == MATCH_FAMILY and family_of is None:
        raise ValueError("family match rule requires a family_of mapping")


def first_relevant_rank(
    ranked: RankedList,
    relevant: frozenset[str] | set[str],
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
) -> int | None:
    """Rank of the earliest hit matching the relevant set, or ``None``.

    Exact rule matches on doc_id; family rule additionally matches any hit
    sharing a family with a relevant document.  Non-OK results match nothing.
    """
    _validate_match_args(match_rule, family_of)
    if ranked.status != STATUS_OK:
        return None
    if match_rule == MATCH_FAMILY:
        assert family_of is not None
        fams = _relevant_family_set(frozenset(relevant), family_of)
        for hit in ranked.hits:
            if hit.doc_id in relevant:
                return hit.rank
            if fams and family_of.get(hit.doc_id, "") in fams:
                return hit.rank
        return None
    for hit in ranked.hits:
        if hit.doc_id in relevant:
            return hit.rank
    return None


def _first_ranks(
    run: RunRecord,
    dataset: EvaluationDataset,
    match_rule: str,
    family_of: Mapping[str, str] | None,
) -> list[int | None]:
    return [
        first_relevant_rank(
            run.results[case.query_doc_id], case.relevant_ids, match_rule, family_of
        )
        for case in dataset.queries
    ]


def topk_detection_rate(
    run: RunRecord,
    dataset: EvaluationDataset,
    k: int,
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
) -> float:
    """Share of queries with at least one relevant document in the top k."""
    if k < 1:
        raise UndefinedMetricError(f"k must be at least 1, got {k}")
    if not dataset.queries:
        raise UndefinedMetricError("detection rate is undefined on an empty dataset")
    _check_coverage(run, dataset)
    ranks = _first_ranks(run, dataset, match_rule, family_of)
    hits = sum(1 for r in ranks if r is not None and r <= k)
    return hits / len(dataset.queries)


def detection_curve(
    run: RunRecord,
    dataset: EvaluationDataset,
    ks: Sequence[int] = DEFAULT_K_GRID,
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
) -> DetectionCurve:
    """Detection rates over a strictly increasing k grid."""
    ks = tuple(ks)
    if not ks or any(k < 1 for k in ks) or any(a >= b for a, b in zip(ks, ks[1:])):
        raise UndefinedMetricError(f"k grid must be strictly increasing and >= 1: {ks}")
    if not dataset.queries:
        raise UndefinedMetricError("detection curve is undefined on an empty dataset")
    _check_coverage(run, dataset)
    ranks = _first_ranks(run, dataset, match_rule, family_of)
    n = len(dataset.queries)
    points = tuple(
        (k, sum(1 for r in ranks if r is not None and r <= k) / n) for k in ks
    )
    return DetectionCurve(points=points, n_queries=n)


def _matched_count(
    ranked: RankedList,
    relevant: frozenset[str],
    match_rule: str,
    family_of: Mapping[str, str] | None,
) -> int:
    """Number of relevant documents retrieved anywhere in the returned list."""
    if ranked.status != STATUS_OK or not ranked.hits:
        return 0
    hit_ids = {h.doc_id for h in ranked.hits}
    if match_rule == MATCH_EXACT:
        return len(relevant & hit_ids)
    assert family_of is not None
    hit_fams = {
        fam for fam in (family_of.get(h, "") for h in hit_ids) if fam
    }
    matched = 0
    for rid in relevant:
        if rid in hit_ids:
            matched += 1
            continue
        fam = family_of.get(rid, "")
        if fam and fam in hit_fams:
            matched += 1
    return matched


def recall(
    run: RunRecord,
    dataset: EvaluationDataset,
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
    macro: bool = False,
) -> float:
    """Recall over the full returned lists (depth = the run's max_depth).

    Micro-averaged by default: pooled retrieved-relevant count over pooled
    relevant count.  ``macro=True`` averages per-query recall instead.
    """
    _validate_match_args(match_rule, family_of)
    if not dataset.queries:
        raise UndefinedMetricError("recall is undefined on an empty dataset")
    _check_coverage(run, dataset)
    if macro:
        per_query = [
            _matched_count(
                run.results[case.query_doc_id], case.relevant_ids, match_rule, family_of
            )
            / len(case.relevant_ids)
            for case in dataset.queries
        ]
        return sum(per_query) / len(per_query)
    numerator = 0
    denominator = 0
    for case in dataset.queries:
        numerator += _matched_count(
            run.results[case.query_doc_id], case.relevant_ids, match_rule, family_of
        )
        denominator += len(case.relevant_ids)
    return numerator / denominator


# ---------------------------------------------------------------------------
# Stratified paired bootstrap.
# ---------------------------------------------------------------------------


def _group_strata(
    dataset: EvaluationDataset, strata_dims: Sequence[str]
) -> list[tuple[str, list[int]]]:
    """Query indices grouped by stratum label tuple; strata smaller than
    MIN_STRATUM_SIZE merge into a catch-all with a warning."""
    groups: dict[str, list[int]] = {}
    for i, case in enumerate(dataset.queries):
        labels = dataset.strata.get(case.query_doc_id, {})
        key = "|".join(str(labels.get(dim, "?")) for dim in strata_dims)
        groups.setdefault(key, []).append(i)

    small = [key for key, idxs in groups.items() if len(idxs) < MIN_STRATUM_SIZE]
    if small and len(groups) > 1:
        merged: list[int] = []
        for key in small:
            merged.extend(groups.pop(key))
        if merged:
            logger.warning(
                "merged %d strata below %d queries into catch-all", len(small), MIN_STRATUM_SIZE
            )
            groups.setdefault(_CATCH_ALL, []).extend(merged)
    return sorted(groups.items())


def _per_query_arrays(
    run_a: RunRecord,
    run_b: RunRecord,
    dataset: EvaluationDataset,
    metric: str,
    k: int | None,
    match_rule: str,
    family_of: Mapping[str, str] | None,
) -> tuple[np.ndarray, np.ndarray, float, str]:
    """Per-query paired contributions (u, m) and the observed difference.

    Detection: u is the hit-indicator difference, m is all ones; diff on a
    resample S is sum(u[S]) / |S|.  Recall (micro): u is the matched-count
    difference, m the relevant-set size; diff is sum(u[S]) / sum(m[S]).
    """
    n = len(dataset.queries)
    if metric == "detection":
        if k is None or k < 1:
            raise UndefinedMetricError("detection metric needs k >= 1")
        ranks_a = _first_ranks(run_a, dataset, match_rule, family_of)
        ranks_b = _first_ranks(run_b, dataset, match_rule, family_of)
        a = np.array(
            [1.0 if r is not None and r <= k else 0.0 for r in ranks_a], dtype=np.float64
        )
        b = np.array(
            [1.0 if r is not None and r <= k else 0.0 for r in ranks_b], dtype=np.float64
        )
        u = a - b
        m = np.ones(n, dtype=np.float64)
        name = f"top{k}_detection"
    elif metric == "recall":
        u_list: list[float] = []
        m_list: list[float] = []
        for case in dataset.queries:
            ca = _matched_count(
                run_a.results[case.query_doc_id], case.relevant_ids, match_rule, family_of
            )
            cb = _matched_count(
                run_b.results[case.query_doc_id], case.relevant_ids, match_rule, family_of
            )
            u_list.append(float(ca - cb))
            m_list.append(float(len(case.relevant_ids)))
        u = np.array(u_list, dtype=np.float64)
        m = np.array(m_list, dtype=np.float64)
        name = f"recall@{run_a.controls.max_depth}"
    else:
        raise UndefinedMetricError(f"unknown bootstrap metric {metric!r}")
    observed = float(u.sum() / m.sum())
    return u, m, observed, name


def _two_sided_p(observed: float, diffs: np.ndarray, weights: np.ndarray | None) -> float:
    """Two-sided sign-opposition p-value.

    Sampled mode (weights None) applies +1/(B+1) smoothing; exhaustive mode
    uses exact probabilities.  A zero observed difference yields p = 1.
    """
    if observed == 0.0:
        return 1.0
    if observed > 0:
        mask = diffs <= 0.0
    else:
        mask = diffs >= 0.0
    if weights is None:
        b = len(diffs)
        return min(1.0, 2.0 * (int(mask.sum()) + 1) / (b + 1))
    return min(1.0, 2.0 * float(weights[mask].sum()))


def _weighted_percentile(
    diffs: np.ndarray, weights: np.ndarray, q: float
) -> float:
    order = np.argsort(diffs, kind="stable")
    sorted_diffs = diffs[order]
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, q, side="left"))
    idx = min(idx, len(sorted_diffs) - 1)
    return float(sorted_diffs[idx])


def _multiset_weight(counts: Counter, n: int) -> float:
    log_w = math.lgamma(n + 1) - n * math.log(n)
    for c in counts.values():
        log_w -= math.lgamma(c + 1)
    return math.exp(log_w)


def _exhaustive_support(
    strata: list[tuple[str, list[int]]]
) -> list[tuple[tuple[int, ...], float]]:
    """All paired resamples as (index multiset, probability) per stratum,
    combined across strata by cross product."""
    total = 1
    for _, idxs in strata:
        n = len(idxs)
        total *= math.comb(2 * n - 1, n)
        if total > _EXHAUSTIVE_LIMIT:
            raise UndefinedMetricError(
                f"exhaustive enumeration too large ({total}+ combinations)"
            )
    per_stratum: list[list[tuple[tuple[int, ...], float]]] = []
    for _, idxs in strata:
        n = len(idxs)
        options: list[tuple[tuple[int, ...], float]] = []
        for combo in combinations_with_replacement(idxs, n):
            options.append((combo, _multiset_weight(Counter(combo), n)))
        per_stratum.append(options)
    support: list[tuple[tuple[int, ...], float]] = []
    for parts in product(*per_stratum):
        indices: tuple[int, ...] = ()
        weight = 1.0
        for combo, w in parts:
            indices += combo
            weight *= w
        support.append((indices, weight))
    return support


def paired_bootstrap(
    run_a: RunRecord,
    run_b: RunRecord,
    dataset: EvaluationDataset,
    *,
    metric: str = "detection",
    k: int | None = 10,
    strata_dims: Sequence[str] = DEFAULT_BOOTSTRAP_STRATA,
    n_resamples: int = DEFAULT_N_RESAMPLES,
    seed: int = 0,
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
    exhaustive: bool = False,
) -> SignificanceResult:
    """Stratified paired bootstrap for the metric difference run_a minus run_b.

    Queries are resampled with replacement independently within each stratum,
    preserving stratum sizes; the same resampled indices apply to both runs.
    Deterministic for a given
    seed: per-stratum random streams are derived from the seed and the
    stratum's position in sorted order, so results do not depend on
    evaluation order.

    ``exhaustive=True`` replaces sampling with full enumeration of the
    resample distribution (small datasets only) and exact probabilities.
    """
    _validate_match_args(match_rule, family_of)
    if not dataset.queries:
        raise UndefinedMetricError("bootstrap is undefined on an empty dataset")
    if not exhaustive and n_resamples < 1000:
        raise ValueError("n_resamples must be at least 1000 (or use exhaustive mode)")
    _check_coverage(run_a, dataset)
    _check_coverage(run_b, dataset)

    u, m, observed, metric_name = _per_query_arrays(
        run_a, run_b, dataset, metric, k, match_rule, family_of
    )
    strata = _group_strata(dataset, strata_dims)
    strata_spec = f"{'x'.join(strata_dims)} ({len(strata)} strata)"

    if exhaustive:
        support = _exhaustive_support(strata)
        diffs = np.array(
            [u[list(indices)].sum() / m[list(indices)].sum() for indices, _ in support],
            dtype=np.float64,
        )
        weights = np.array([w for _, w in support], dtype=np.float64)
        weights = weights / weights.sum()
        p = _two_sided_p(observed, diffs, weights)
        ci_low = _weighted_percentile(diffs, weights, 0.025)
        ci_high = _weighted_percentile(diffs, weights, 0.975)
        order = np.argsort(diffs, kind="stable")
        distribution = tuple(
            (float(diffs[i]), float(weights[i])) for i in order
        )
        return SignificanceResult(
            metric_name=metric_name,
            observed_diff=observed,
            p_value=p,
            ci_low=ci_low,
            ci_high=ci_high,
            n_resamples=len(support),
            strata_spec=strata_spec,
            seed=seed,
            distribution=distribution,
        )

    sum_u = np.zeros(n_resamples, dtype=np.float64)
    sum_m = np.zeros(n_resamples, dtype=np.float64)
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(strata))
    for (key, idxs), child in zip(strata, children):
        rng = np.random.default_rng(child)
        u_s = u[idxs]
        m_s = m[idxs]
        n_s = len(idxs)
        for start in range(0, n_resamples, _BOOTSTRAP_CHUNK):
            stop = min(start + _BOOTSTRAP_CHUNK, n_resamples)
            draw = rng.integers(0, n_s, size=(stop - start, n_s))
            sum_u[start:stop] += u_s[draw].sum(axis=1)
            sum_m[start:stop] += m_s[draw].sum(axis=1)
    diffs = sum_u / sum_m
    p = _two_sided_p(observed, diffs, None)
    ci_low, ci_high = (float(x) for x in np.percentile(diffs, [2.5, 97.5]))
    return SignificanceResult(
        metric_name=metric_name,
        observed_diff=observed,
        p_value=p,
        ci_low=ci_low,
        ci_high=ci_high,
        n_resamples=n_resamples,
        strata_spec=strata_spec,
        seed=seed,
    )
