"""Result analysis and emission: per-dimension breakdowns, cross-language
recall, two-system comparison, and deterministic text/CSV/SVG outputs."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Corpus
from .dataset import EvaluationDataset
from .execution import RunRecord, STATUS_OK
from .metrics import (
    DEFAULT_BOOTSTRAP_STRATA,
    DEFAULT_K_GRID,
    DEFAULT_N_RESAMPLES,
    MATCH_EXACT,
    SignificanceResult,
    UndefinedMetricError,
    _matched_count,
    _first_ranks,
    paired_bootstrap,
)

logger = logging.getLogger(__name__)

REPORT_DIMENSIONS = ("language", "ipc_section", "jurisdiction")
REPORT_FORMATS = ("table-text", "csv", "svg-plot-data")
TOTAL_LABEL = "__all__"
OVERALL_DIMENSION = "overall"

_SVG_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


class IntegrityMismatchError(ValueError):
    """Run logs and dataset disagree about the dataset manifest hash."""


@dataclass(frozen=True)
class BreakdownRow:
    """Per-stratum detection counts and recall.

    ``hit_counts[i]`` is the number of queries whose first relevant hit lies
    within ``ks[i]`` of the containing table; integer counts make slice sums
    exactly checkable against the whole-dataset row.
    """

    stratum: str
    n_queries: int
    hit_counts: tuple[int, ...]
    rates: tuple[float, ...]
    recall_numerator: int
    recall_denominator: int
    recall: float
    recall_depth: int


@dataclass(frozen=True)
class BreakdownTable:
    dimension: str
    ks: tuple[int, ...]
    rows: tuple[BreakdownRow, ...]
    totals: BreakdownRow


@dataclass(frozen=True)
class CrossLanguageCell:
    query_language: str
    relevant_language: str
    n_pairs: int
    n_retrieved: int
    recall: float


@dataclass(frozen=True)
class SystemComparison:
    system_a: str
    system_b: str
    ks: tuple[int, ...]
    table_a: BreakdownTable
    table_b: BreakdownTable
    deltas: tuple[float, ...]
    recall_delta: float
    recall_depth: int
    significance: tuple[SignificanceResult, ...]
    breakdowns_a: tuple[BreakdownTable, ...] = ()
    breakdowns_b: tuple[BreakdownTable, ...] = ()


@dataclass(frozen=True)
class MetricsReport:
    """Everything a single evaluation emits."""

    match_rule: str
    overall: BreakdownTable | None
    breakdowns: tuple[BreakdownTable, ...] = ()
    cross_language: tuple[CrossLanguageCell, ...] = ()
    family_overall: BreakdownTable | None = None
    comparison: SystemComparison | None = None


def _row_for(
    run: RunRecord,
    dataset: EvaluationDataset,
    query_indices: Sequence[int],
    stratum: str,
    ks: tuple[int, ...],
    first_ranks: Sequence[int | None],
    match_rule: str,
    family_of: Mapping[str, str] | None,
) -> BreakdownRow:
    n = len(query_indices)
    hit_counts = tuple(
        sum(
            1
            for i in query_indices
            if first_ranks[i] is not None and first_ranks[i] <= k
        )
        for k in ks
    )
    rates = tuple(count / n for count in hit_counts)
    numerator = 0
    denominator = 0
    for i in query_indices:
        case = dataset.queries[i]
        numerator += _matched_count(
            run.results[case.query_doc_id], case.relevant_ids, match_rule, family_of
        )
        denominator += len(case.relevant_ids)
    return BreakdownRow(
        stratum=stratum,
        n_queries=n,
        hit_counts=hit_counts,
        rates=rates,
        recall_numerator=numerator,
        recall_denominator=denominator,
        recall=numerator / denominator,
        recall_depth=run.controls.max_depth,
    )


def breakdown_by(
    run: RunRecord,
    dataset: EvaluationDataset,
    dimension: str,
    *,
    ks: Sequence[int] = DEFAULT_K_GRID,
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
) -> BreakdownTable:
    """Detection and recall per stratum of one dimension.

    Rows are ordered by descending query count, then label.  The totals row
    is computed over the whole dataset and therefore equals the overall
    metrics; per-stratum hit counts sum exactly to its counts.
    """
    if dimension != OVERALL_DIMENSION and dimension not in REPORT_DIMENSIONS:
        raise ValueError(f"unknown breakdown dimension {dimension!r}")
    if not dataset.queries:
        raise UndefinedMetricError("breakdown is undefined on an empty dataset")
    ks = tuple(ks)
    first_ranks = _first_ranks(run, dataset, match_rule, family_of)

    groups: dict[str, list[int]] = {}
    if dimension != OVERALL_DIMENSION:
        for i, case in enumerate(dataset.queries):
            label = str(dataset.strata.get(case.query_doc_id, {}).get(dimension, "?"))
            groups.setdefault(label, []).append(i)

    all_indices = list(range(len(dataset.queries)))
    totals = _row_for(
        run, dataset, all_indices, TOTAL_LABEL, ks, first_ranks, match_rule, family_of
    )
    rows = tuple(
        _row_for(run, dataset, idxs, label, ks, first_ranks, match_rule, family_of)
        for label, idxs in sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    )
    return BreakdownTable(dimension=dimension, ks=ks, rows=rows, totals=totals)


def cross_language_recall(
    run: RunRecord,
    dataset: EvaluationDataset,
    corpus: Corpus,
    *,
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
) -> tuple[CrossLanguageCell, ...]:
    """Recall per (query language, relevant-document language) pair.

    Pairs whose relevant document is missing from the corpus land in an
    ``unknown`` language bucket.  Only observed pairs produce cells, so a
    monolingual corpus yields no off-diagonal entries.
    """
    counts: dict[tuple[str, str], list[int]] = {}
    for case in dataset.queries:
        qlang = str(
            dataset.strata.get(case.query_doc_id, {}).get("language", "unknown")
        )
        ranked = run.results[case.query_doc_id]
        hit_ids = {h.doc_id for h in ranked.hits} if ranked.status == STATUS_OK else set()
        hit_fams: set[str] = set()
        if match_rule == "family" and family_of:
            hit_fams = {
                fam for fam in (family_of.get(h, "") for h in hit_ids) if fam
            }
        for rid in sorted(case.relevant_ids):
            doc = corpus.documents.get(rid)
            rlang = doc.language if doc is not None else "unknown"
            cell = counts.setdefault((qlang, rlang), [0, 0])
            cell[0] += 1
            retrieved = rid in hit_ids
            if not retrieved and hit_fams:
                fam = family_of.get(rid, "") if family_of else ""
                retrieved = bool(fam) and fam in hit_fams
            if retrieved:
                cell[1] += 1
    return tuple(
        CrossLanguageCell(
            query_language=qlang,
            relevant_language=rlang,
            n_pairs=pair[0],
            n_retrieved=pair[1],
            recall=pair[1] / pair[0],
        )
        for (qlang, rlang), pair in sorted(counts.items())
    )


def compare_systems(
    run_a: RunRecord,
    run_b: RunRecord,
    dataset: EvaluationDataset,
    *,
    ks: Sequence[int] = DEFAULT_K_GRID,
    dimensions: Sequence[str] = (),
    match_rule: str = MATCH_EXACT,
    family_of: Mapping[str, str] | None = None,
    n_resamples: int = DEFAULT_N_RESAMPLES,
    seed: int = 0,
    strata_dims: Sequence[str] = DEFAULT_BOOTSTRAP_STRATA,
    significance_k: int = 10,
) -> SystemComparison:
    """Side-by-side metrics for two runs over the same dataset.

    Deltas are system B minus system A.  Significance covers the headline
    metrics (detection at ``significance_k`` and recall) via the stratified
    paired bootstrap.  Raises :class:`IntegrityMismatchError` when either run
    was produced against a different dataset manifest.
    """
    expected = dataset.manifest_hash
    for name, run in (("A", run_a), ("B", run_b)):
        if run.dataset_manifest_hash != expected:
            raise IntegrityMismatchError(
                f"run {name} was produced against manifest "
                f"{run.dataset_manifest_hash[:12]}..., dataset has {expected[:12]}..."
            )
    ks = tuple(ks)
    table_a = breakdown_by(
        run_a, dataset, OVERALL_DIMENSION, ks=ks, match_rule=match_rule, family_of=family_of
    )
    table_b = breakdown_by(
        run_b, dataset, OVERALL_DIMENSION, ks=ks, match_rule=match_rule, family_of=family_of
    )
    deltas = tuple(
        rb - ra for ra, rb in zip(table_a.totals.rates, table_b.totals.rates)
    )
    recall_delta = table_b.totals.recall - table_a.totals.recall

    sig_k = significance_k if significance_k in ks else ks[min(len(ks) - 1, len(ks) // 2)]
    significance = (
        paired_bootstrap(
            run_b,
            run_a,
            dataset,
            metric="detection",
            k=sig_k,
            strata_dims=strata_dims,
            n_resamples=n_resamples,
            seed=seed,
            match_rule=match_rule,
            family_of=family_of,
        ),
        paired_bootstrap(
            run_b,
            run_a,
            dataset,
            metric="recall",
            k=None,
            strata_dims=strata_dims,
            n_resamples=n_resamples,
            seed=seed,
            match_rule=match_rule,
            family_of=family_of,
        ),
    )
    breakdowns_a = tuple(
        breakdown_by(run_a, dataset, dim, ks=ks, match_rule=match_rule, family_of=family_of)
        for dim in dimensions
    )
    breakdowns_b = tuple(
        breakdown_by(run_b, dataset, dim, ks=ks, match_rule=match_rule, family_of=family_of)
        for dim in dimensions
    )
    return SystemComparison(
        system_a=run_a.controls.adapter_id or "system-a",
        system_b=run_b.controls.adapter_id or "system-b",
        ks=ks,
        table_a=table_a,
        table_b=table_b,
        deltas=deltas,
        recall_delta=recall_delta,
        recall_depth=run_a.controls.max_depth,
        significance=significance,
        breakdowns_a=breakdowns_a,
        breakdowns_b=breakdowns_b,
    )


# ---------------------------------------------------------------------------
# Emission.  All outputs are deterministic byte-for-byte: fixed column
# orders, repr-based float formatting, sorted iteration, no timestamps.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _percent(x: float) -> str:
    text = f"{x * 100:.1f}".rstrip("0").rstrip(".")
    return f"{text}%"


def _csv_bytes(header: Sequence[str], rows: Sequence[Sequence[object]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def _detection_csv(tables: Sequence[BreakdownTable]) -> bytes:
    rows: list[list[object]] = []
    for table in tables:
        emit_rows = [(TOTAL_LABEL, table.totals)] + [(r.stratum, r) for r in table.rows]
        for stratum, row in emit_rows:
            for k, rate in zip(table.ks, row.rates):
                rows.append([table.dimension, stratum, row.n_queries, k, _fmt(rate)])
    return _csv_bytes(["dimension", "stratum", "n_queries", "k", "detection_rate"], rows)


def _recall_csv(tables: Sequence[BreakdownTable]) -> bytes:
    rows: list[list[object]] = []
    for table in tables:
        emit_rows = [(TOTAL_LABEL, table.totals)] + [(r.stratum, r) for r in table.rows]
        for stratum, row in emit_rows:
            rows.append(
                [table.dimension, stratum, row.n_queries, _fmt(row.recall), row.recall_depth]
            )
    return _csv_bytes(["dimension", "stratum", "n_queries", "recall", "recall_depth"], rows)


def _cross_language_csv(cells: Sequence[CrossLanguageCell]) -> bytes:
    rows = [
        [c.query_language, c.relevant_language, c.n_pairs, c.n_retrieved, _fmt(c.recall)]
        for c in cells
    ]
    return _csv_bytes(
        ["query_language", "relevant_language", "n_pairs", "n_retrieved", "recall"], rows
    )


def _comparison_detection_csv(comp: SystemComparison) -> bytes:
    sig = {s.metric_name: s for s in comp.significance}
    rows: list[list[object]] = []
    for system, table in ((comp.system_a, comp.table_a), (comp.system_b, comp.table_b)):
        is_b = system == comp.system_b and table is comp.table_b
        for i, (k, rate) in enumerate(zip(table.ks, table.totals.rates)):
            delta = _fmt(comp.deltas[i]) if is_b else ""
            s = sig.get(f"top{k}_detection")
            p = _fmt(s.p_value) if (is_b and s) else ""
            lo = _fmt(s.ci_low) if (is_b and s) else ""
            hi = _fmt(s.ci_high) if (is_b and s) else ""
            rows.append(
                [
                    OVERALL_DIMENSION,
                    TOTAL_LABEL,
                    table.totals.n_queries,
                    k,
                    _fmt(rate),
                    system,
                    delta,
                    p,
                    lo,
                    hi,
                ]
            )
    return _csv_bytes(
        [
            "dimension",
            "stratum",
            "n_queries",
            "k",
            "detection_rate",
            "system",
            "delta",
            "p_value",
            "ci_low",
            "ci_high",
        ],
        rows,
    )


def _comparison_recall_csv(comp: SystemComparison) -> bytes:
    sig = next(
        (s for s in comp.significance if s.metric_name.startswith("recall")), None
    )
    rows: list[list[object]] = []
    for system, table in ((comp.system_a, comp.table_a), (comp.system_b, comp.table_b)):
        is_b = system == comp.system_b and table is comp.table_b
        rows.append(
            [
                OVERALL_DIMENSION,
                TOTAL_LABEL,
                table.totals.n_queries,
                _fmt(table.totals.recall),
                table.totals.recall_depth,
                system,
                _fmt(comp.recall_delta) if is_b else "",
                _fmt(sig.p_value) if (is_b and sig) else "",
                _fmt(sig.ci_low) if (is_b and sig) else "",
                _fmt(sig.ci_high) if (is_b and sig) else "",
            ]
        )
    return _csv_bytes(
        [
            "dimension",
            "stratum",
            "n_queries",
            "recall",
            "recall_depth",
            "system",
            "delta",
            "p_value",
            "ci_low",
            "ci_high",
        ],
        rows,
    )


def _render_table(table: BreakdownTable, label_header: str) -> list[str]:
    header = (
        [label_header, "n"]
        + [f"Top{k}" for k in table.ks]
        + [f"recall@{table.totals.recall_depth}"]
    )
    body: list[list[str]] = []
    for row in list(table.rows) + [table.totals]:
        body.append(
            [row.stratum, str(row.n_queries)]
            + [_percent(rate) for rate in row.rates]
            + [f"{row.recall:.2f}"]
        )
    widths = [
        max(len(header[c]), *(len(r[c]) for r in body)) for c in range(len(header))
    ]
    lines = ["  ".join(h.ljust(widths[c]) for c, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    for r in body:
        lines.append("  ".join(v.ljust(widths[c]) for c, v in enumerate(r)))
    return lines


def _table_text(report: MetricsReport) -> str:
    out: list[str] = []
    if report.overall is not None:
        depth = report.overall.totals.recall_depth
        out.append(f"Overall detection by rank cutoff (match rule: {report.match_rule}; "
                   f"recall depth: {depth})")
        out.extend(_render_table(report.overall, "stratum"))
        out.append("")
    if report.family_overall is not None:
        out.append("Overall, family-level matching")
        out.extend(_render_table(report.family_overall, "stratum"))
        out.append("")
    for table in report.breakdowns:
        out.append(f"Breakdown by {table.dimension}")
        out.extend(_render_table(table, table.dimension))
        out.append("")
    if report.cross_language:
        out.append("Cross-language recall (query language x relevant-document language)")
        for cell in report.cross_language:
            out.append(
                f"  {cell.query_language} -> {cell.relevant_language}: "
                f"{cell.recall:.2f} ({cell.n_retrieved}/{cell.n_pairs} pairs)"
            )
        out.append("")
    return "\n".join(out)


def _comparison_text(comp: SystemComparison) -> str:
    out: list[str] = []
    out.append(f"System comparison: {comp.system_a} vs {comp.system_b}")
    out.append(f"(deltas are {comp.system_b} minus {comp.system_a}; "
               f"recall depth {comp.recall_depth})")
    out.append("")
    header = ["system"] + [f"Top{k}" for k in comp.ks] + [f"recall@{comp.recall_depth}"]
    rows = [
        [comp.system_a]
        + [_percent(r) for r in comp.table_a.totals.rates]
        + [f"{comp.table_a.totals.recall:.2f}"],
        [comp.system_b]
        + [_percent(r) for r in comp.table_b.totals.rates]
        + [f"{comp.table_b.totals.recall:.2f}"],
        ["delta"]
        + [f"{d * 100:+.1f}pp" for d in comp.deltas]
        + [f"{comp.recall_delta:+.3f}"],
    ]
    widths = [max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))]
    out.append("  ".join(h.ljust(widths[c]) for c, h in enumerate(header)))
    out.append("  ".join("-" * w for w in widths))
    for r in rows:
        out.append("  ".join(v.ljust(widths[c]) for c, v in enumerate(r)))
    out.append("")
    for sig in comp.significance:
        out.append(
            f"{sig.metric_name}: diff {sig.observed_diff:+.4f}, "
            f"p={sig.p_value:.4g}, 95% CI [{sig.ci_low:+.4f}, {sig.ci_high:+.4f}], "
            f"{sig.n_resamples} resamples, strata {sig.strata_spec}"
        )
    out.append("")
    return "\n".join(out)


def _svg_line_chart(table: BreakdownTable) -> bytes:
    """Minimal hand-rolled line chart: detection rate against the k grid."""
    width, height = 640, 400
    left, right, top, bottom = 60, 190, 20, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    ks = table.ks

    def x_at(i: int) -> float:
        if len(ks) == 1:
            return left + plot_w / 2
        return left + plot_w * i / (len(ks) - 1)

    def y_at(rate: float) -> float:
        return top + plot_h * (1.0 - rate)

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = y_at(frac)
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" y2="{y:.1f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{frac:.2f}</text>'
        )
    for i, k in enumerate(ks):
        x = x_at(i)
        parts.append(
            f'<text x="{x:.1f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{k}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">rank cutoff k</text>'
    )
    series = list(table.rows) if table.rows else [table.totals]
    for s_i, row in enumerate(series):
        color = _SVG_PALETTE[s_i % len(_SVG_PALETTE)]
        points = " ".join(
            f"{x_at(i):.1f},{y_at(rate):.1f}" for i, rate in enumerate(row.rates)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>'
        )
        ly = top + 16 + 18 * s_i
        lx = left + plot_w + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 24}" y="{ly}" font-family="sans-serif" font-size="12">'
            f"{row.stratum} (n={row.n_queries})</text>"
        )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def _svg_recall_bars(table: BreakdownTable) -> bytes:
    width, height = 640, 400
    left, right, top, bottom = 60, 40, 20, 70
    plot_w = width - left - right
    plot_h = height - top - bottom
    rows = list(table.rows) if table.rows else [table.totals]
    n = len(rows)
    slot = plot_w / n
    bar_w = min(60.0, slot * 0.6)

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h * (1.0 - frac)
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" y2="{y:.1f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{frac:.2f}</text>'
        )
    for i, row in enumerate(rows):
        x = left + slot * i + (slot - bar_w) / 2
        h = plot_h * row.recall
        y = top + plot_h - h
        color = _SVG_PALETTE[i % len(_SVG_PALETTE)]
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{row.stratum}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 6:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{row.recall:.2f}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">recall@{rows[0].recall_depth} '
        f"by {table.dimension}</text>"
    )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def emit_report(
    report: MetricsReport,
    out_dir: str | Path,
    formats: Sequence[str] = REPORT_FORMATS,
) -> list[Path]:
    """Write the report files and return their paths.

    All content is rendered before anything touches disk, so an unwritable
    location fails without leaving partial output.  Identical inputs produce
    byte-identical files.
    """
    for fmt in formats:
        if fmt not in REPORT_FORMATS:
            raise ValueError(f"unknown report format {fmt!r}")
    out_dir = Path(out_dir)

    tables = ([report.overall] if report.overall else []) + list(report.breakdowns)
    files: dict[str, bytes] = {}
    if "csv" in formats:
        files["detection.csv"] = _detection_csv(tables)
        files["recall.csv"] = _recall_csv(tables)
        for table in report.breakdowns:
            files[f"breakdown_{table.dimension}.csv"] = _detection_csv([table])
        if report.cross_language:
            files["cross_language.csv"] = _cross_language_csv(report.cross_language)
        if report.comparison is not None:
            files["comparison_detection.csv"] = _comparison_detection_csv(report.comparison)
            files["comparison_recall.csv"] = _comparison_recall_csv(report.comparison)
    if "table-text" in formats:
        text = _table_text(report)
        if report.comparison is not None:
            text += "\n" + _comparison_text(report.comparison)
        files["report.txt"] = text.encode("utf-8")
    if "svg-plot-data" in formats:
        for table in tables:
            files[f"detection_{table.dimension}.svg"] = _svg_line_chart(table)
            files[f"recall_{table.dimension}.svg"] = _svg_recall_bars(table)

    out_dir.mkdir(parents=True, exist_ok=True)
    if not out_dir.is_dir():
        raise OSError(f"{out_dir} is not a writable directory")
    written: list[Path] = []
    for name in sorted(files):
        path = out_dir / name
        path.write_bytes(files[name])
        written.append(path)
    return written
