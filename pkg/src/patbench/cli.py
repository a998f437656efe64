"""Command-line interface: build datasets, run systems, evaluate, compare.

Exit codes: 0 success, 2 argument or feasibility errors, 3 run aborted on
the failure threshold, 4 dataset integrity mismatch.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .corpus import Corpus, CorpusError, load_corpus
from .dataset import (
    DEFAULT_ALIGNMENT_THRESHOLD,
    DEFAULT_RECENCY_YEARS,
    EvaluationDataset,
    InfeasibleTargetsError,
    build_dataset,
    load_dataset,
    write_dataset,
)
from .execution import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_TIMEOUT_MS,
    ReferenceAdapter,
    RemoteAdapter,
    RemoteEndpointConfig,
    RunControls,
    RunFailureError,
    RunRecord,
    load_run_log,
    run_evaluation,
    tally_statuses,
    write_run_log,
)
from .metrics import (
    DEFAULT_BOOTSTRAP_STRATA,
    DEFAULT_K_GRID,
    DEFAULT_N_RESAMPLES,
    MATCH_FAMILY,
    MATCH_RULES,
)
from .query import DEFAULT_MAX_QUERY_CHARS, build_queries
from .report import (
    IntegrityMismatchError,
    MetricsReport,
    OVERALL_DIMENSION,
    REPORT_DIMENSIONS,
    REPORT_FORMATS,
    breakdown_by,
    compare_systems,
    cross_language_recall,
    emit_report,
)

EXIT_USAGE = 2
EXIT_RUN_FAILURES = 3
EXIT_INTEGRITY = 4

_DIMENSION_ALIASES = {"ipc": "ipc_section", "country": "jurisdiction"}


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_int_list(raw: str, name: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        _fail(EXIT_USAGE, f"{name} must be a comma-separated list of integers: {raw!r}")
    if not values:
        _fail(EXIT_USAGE, f"{name} must not be empty")
    return values


def _parse_dimensions(raw: str) -> tuple[str, ...]:
    dims: list[str] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        dim = _DIMENSION_ALIASES.get(part, part)
        if dim not in REPORT_DIMENSIONS:
            _fail(EXIT_USAGE, f"unknown dimension {part!r} (use {', '.join(REPORT_DIMENSIONS)})")
        dims.append(dim)
    return tuple(dims)


def _parse_formats(raw: str) -> tuple[str, ...]:
    formats: list[str] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if part not in REPORT_FORMATS:
            _fail(EXIT_USAGE, f"unknown format {part!r} (use {', '.join(REPORT_FORMATS)})")
        formats.append(part)
    return tuple(formats)


def _load_corpus_or_fail(path: str, lenient: bool) -> Corpus:
    try:
        corpus = load_corpus(path, lenient=lenient)
    except (CorpusError, OSError) as exc:
        _fail(EXIT_USAGE, str(exc))
    if corpus.load_skips:
        click.echo(f"skipped {len(corpus.load_skips)} malformed lines", err=True)
    return corpus


def _check_hash(run: RunRecord, dataset: EvaluationDataset, run_name: str) -> None:
    if run.dataset_manifest_hash != dataset.manifest_hash:
        _fail(
            EXIT_INTEGRITY,
            f"{run_name} was produced against dataset manifest "
            f"{run.dataset_manifest_hash[:12]}... but this dataset hashes to "
            f"{dataset.manifest_hash[:12]}...",
        )


@click.group()
def main() -> None:
    """Evaluation harness for patent novelty search systems."""
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command("build-dataset")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--targets", "targets_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file mapping dimension to stratum proportions.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--threshold", default=DEFAULT_ALIGNMENT_THRESHOLD, show_default=True,
              type=click.FloatRange(0.0, 1.0),
              help="Family alignment score needed to adopt a member's citations.")
@click.option("--recency-years", default=DEFAULT_RECENCY_YEARS, show_default=True,
              type=click.IntRange(min=0))
@click.option("--sample-size", default=0, show_default="all cases", type=click.IntRange(min=0))
@click.option("--lenient", is_flag=True, help="Skip malformed corpus lines instead of failing.")
def cmd_build_dataset(
    corpus_path: str,
    out: str,
    targets_path: str | None,
    seed: int,
    threshold: float,
    recency_years: int,
    sample_size: int,
    lenient: bool,
) -> None:
    """Construct an evaluation dataset from a corpus."""
    corpus = _load_corpus_or_fail(corpus_path, lenient)
    targets = None
    if targets_path:
        try:
            targets = json.loads(Path(targets_path).read_text(encoding="utf-8"))
        except ValueError as exc:
            _fail(EXIT_USAGE, f"bad targets file: {exc}")
    try:
        dataset = build_dataset(
            corpus,
            threshold=threshold,
            recency_years=recency_years,
            targets=targets,
            sample_size=sample_size or None,
            seed=seed,
        )
    except InfeasibleTargetsError as exc:
        _fail(EXIT_USAGE, str(exc))
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    write_dataset(dataset, out)
    manifest = dataset.build_manifest
    click.echo(f"wrote {len(dataset.queries)} query cases to {out}")
    click.echo(f"manifest hash: {dataset.manifest_hash}")
    counts = manifest.get("stratum_counts", {})
    if counts:
        click.echo("stratum counts: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))


def _make_adapter(
    adapter: str, adapter_config: str | None, corpus: Corpus, exclude_family: bool
):
    if adapter == "reference":
        return ReferenceAdapter(corpus, exclude_family=exclude_family)
    if adapter.startswith("remote"):
        config_path = adapter_config
        if ":" in adapter:
            config_path = adapter.split(":", 1)[1]
        if not config_path:
            _fail(EXIT_USAGE, "remote adapter needs --adapter-config or remote:<config.json>")
        try:
            return RemoteAdapter(RemoteEndpointConfig.from_file(config_path))
        except (OSError, ValueError) as exc:
            _fail(EXIT_USAGE, f"bad adapter config: {exc}")
    _fail(EXIT_USAGE, f"unknown adapter {adapter!r} (use reference or remote:<config.json>)")


@main.command("run")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Corpus used to build query text (and to serve the reference adapter).")
@click.option("--adapter", default="reference", show_default=True,
              help="reference, or remote:<config.json>.")
@click.option("--adapter-config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--timeout-ms", default=DEFAULT_TIMEOUT_MS, show_default=True, type=click.IntRange(min=1))
@click.option("--max-depth", default=DEFAULT_MAX_DEPTH, show_default=True, type=click.IntRange(min=1))
@click.option("--parallelism", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--max-chars", default=DEFAULT_MAX_QUERY_CHARS, show_default=True,
              type=click.IntRange(min=1), help="Query text budget in characters.")
@click.option("--exclude-family/--include-family", default=True, show_default=True,
              help="Drop the query patent's own family from reference results.")
@click.option("--lenient", is_flag=True)
def cmd_run(
    dataset_path: str,
    corpus_path: str,
    adapter: str,
    adapter_config: str | None,
    out: str,
    seed: int,
    timeout_ms: int,
    max_depth: int,
    parallelism: int,
    max_chars: int,
    exclude_family: bool,
    lenient: bool,
) -> None:
    """Run a retrieval system over every dataset query."""
    corpus = _load_corpus_or_fail(corpus_path, lenient)
    dataset = load_dataset(dataset_path)
    system = _make_adapter(adapter, adapter_config, corpus, exclude_family)
    controls = RunControls(
        seed=seed,
        timeout_ms=timeout_ms,
        max_depth=max_depth,
        adapter_id=system.adapter_id,
        parallelism=parallelism,
    )
    queries = {}
    for qid in dataset.query_ids():
        doc = corpus.documents.get(qid)
        if doc is None:
            continue  # recorded as ERROR by the runner
        try:
            queries.update(build_queries(corpus, [qid], max_chars=max_chars))
        except ValueError:
            continue
    click.echo(f"running {len(dataset.queries)} queries against {system.adapter_id}")
    try:
        record = run_evaluation(dataset, system, controls, queries=queries)
    except RunFailureError as exc:
        _fail(EXIT_RUN_FAILURES, str(exc))
    write_run_log(record, out)
    tally = tally_statuses(record)
    click.echo(
        "statuses: " + ", ".join(f"{k}={v}" for k, v in tally.items())
        + f"; dropped hits: {record.anomaly_count}"
    )
    click.echo(f"wrote run log to {out}")


def _family_map(corpus: Corpus | None) -> dict[str, str]:
    if corpus is None:
        return {}
    return {
        doc_id: doc.family_id
        for doc_id, doc in corpus.documents.items()
        if doc.family_id
    }


@main.command("evaluate")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False),
              help="Needed for family matching and the cross-language matrix.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--k-grid", default=",".join(str(k) for k in DEFAULT_K_GRID), show_default=True)
@click.option("--match-rule", default="exact", show_default=True,
              type=click.Choice(list(MATCH_RULES)))
@click.option("--dimensions", default="language,ipc_section,jurisdiction", show_default=True)
@click.option("--formats", default=",".join(REPORT_FORMATS), show_default=True)
def cmd_evaluate(
    run_path: str,
    dataset_path: str,
    corpus_path: str | None,
    out_dir: str,
    k_grid: str,
    match_rule: str,
    dimensions: str,
    formats: str,
) -> None:
    """Score one run log against its dataset and emit reports."""
    ks = _parse_int_list(k_grid, "--k-grid")
    dims = _parse_dimensions(dimensions)
    fmts = _parse_formats(formats)
    dataset = load_dataset(dataset_path)
    run = load_run_log(run_path)
    _check_hash(run, dataset, "run log")
    if max(ks) > run.controls.max_depth:
        _fail(
            EXIT_USAGE,
            f"k grid reaches {max(ks)} but the run retrieved only "
            f"{run.controls.max_depth} results per query",
        )
    corpus = _load_corpus_or_fail(corpus_path, False) if corpus_path else None
    if match_rule == MATCH_FAMILY and corpus is None:
        _fail(EXIT_USAGE, "family match rule requires --corpus")
    family_of = _family_map(corpus)

    try:
        overall = breakdown_by(
            run, dataset, OVERALL_DIMENSION, ks=ks, match_rule=match_rule, family_of=family_of
        )
        breakdowns = tuple(
            breakdown_by(run, dataset, dim, ks=ks, match_rule=match_rule, family_of=family_of)
            for dim in dims
        )
        family_overall = None
        if corpus is not None and match_rule != MATCH_FAMILY and any(family_of.values()):
            family_overall = breakdown_by(
                run, dataset, OVERALL_DIMENSION, ks=ks,
                match_rule=MATCH_FAMILY, family_of=family_of,
            )
        cross = (
            cross_language_recall(
                run, dataset, corpus, match_rule=match_rule, family_of=family_of
            )
            if corpus is not None
            else ()
        )
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    report = MetricsReport(
        match_rule=match_rule,
        overall=overall,
        breakdowns=breakdowns,
        cross_language=cross,
        family_overall=family_overall,
    )
    written = emit_report(report, out_dir, fmts)
    for k, rate in zip(overall.ks, overall.totals.rates):
        click.echo(f"top-{k} detection: {rate * 100:.1f}%")
    click.echo(
        f"recall@{overall.totals.recall_depth}: {overall.totals.recall:.4f} "
        f"(match rule: {match_rule})"
    )
    click.echo(f"wrote {len(written)} report files to {out_dir}")


@main.command("compare")
@click.option("--run-a", "run_a_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--run-b", "run_b_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--k-grid", default=",".join(str(k) for k in DEFAULT_K_GRID), show_default=True)
@click.option("--match-rule", default="exact", show_default=True,
              type=click.Choice(list(MATCH_RULES)))
@click.option("--dimensions", default="", show_default="none")
@click.option("--formats", default=",".join(REPORT_FORMATS), show_default=True)
@click.option("--n-resamples", default=DEFAULT_N_RESAMPLES, show_default=True,
              type=click.IntRange(min=1000))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--strata", default="language,ipc_section", show_default=True,
              help="Stratification dimensions for the paired bootstrap.")
def cmd_compare(
    run_a_path: str,
    run_b_path: str,
    dataset_path: str,
    corpus_path: str | None,
    out_dir: str,
    k_grid: str,
    match_rule: str,
    dimensions: str,
    formats: str,
    n_resamples: int,
    seed: int,
    strata: str,
) -> None:
    """Compare two run logs over the same dataset, with significance."""
    ks = _parse_int_list(k_grid, "--k-grid")
    dims = _parse_dimensions(dimensions) if dimensions else ()
    fmts = _parse_formats(formats)
    strata_dims = _parse_dimensions(strata) if strata else ()
    dataset = load_dataset(dataset_path)
    run_a = load_run_log(run_a_path)
    run_b = load_run_log(run_b_path)
    _check_hash(run_a, dataset, "run A")
    _check_hash(run_b, dataset, "run B")
    corpus = _load_corpus_or_fail(corpus_path, False) if corpus_path else None
    if match_rule == MATCH_FAMILY and corpus is None:
        _fail(EXIT_USAGE, "family match rule requires --corpus")
    family_of = _family_map(corpus)
    try:
        comparison = compare_systems(
            run_a,
            run_b,
            dataset,
            ks=ks,
            dimensions=dims,
            match_rule=match_rule,
            family_of=family_of,
            n_resamples=n_resamples,
            seed=seed,
            strata_dims=strata_dims or DEFAULT_BOOTSTRAP_STRATA,
        )
    except IntegrityMismatchError as exc:
        _fail(EXIT_INTEGRITY, str(exc))
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    report = MetricsReport(
        match_rule=match_rule,
        overall=None,
        breakdowns=(),
        comparison=comparison,
    )
    written = emit_report(report, out_dir, fmts)
    for k, delta in zip(comparison.ks, comparison.deltas):
        click.echo(f"top-{k} detection delta: {delta * 100:+.1f} pp")
    click.echo(f"recall@{comparison.recall_depth} delta: {comparison.recall_delta:+.3f}")
    for sig in comparison.significance:
        click.echo(
            f"{sig.metric_name}: p={sig.p_value:.4g} "
            f"[{sig.ci_low:+.4f}, {sig.ci_high:+.4f}]"
        )
    click.echo(f"wrote {len(written)} report files to {out_dir}")


if __name__ == "__main__":
    main()
