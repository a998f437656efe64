from __future__ import annotations

import json
import math
import threading
import time
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
import requests
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_corpus, make_doc
from patbench.dataset import EvaluationDataset, QueryCase
from patbench.execution import (
    AdapterError,
    AdapterTimeout,
    RankedList,
    ReferenceAdapter,
    RemoteAdapter,
    RemoteEndpointConfig,
    RunControls,
    RunFailureError,
    build_reference_index,
    load_run_log,
    normalize_doc_id,
    reference_retrieve,
    remote_adapter_query,
    run_evaluation,
    sanitize_run_log,
    standardize_results,
    tally_statuses,
    tokenize,
    write_run_log,
)
from patbench.query import EmptyInputError, Query, build_queries


def _query(query_id: str, text: str = "alpha beta gamma") -> Query:
    return Query(
        query_id=query_id,
        text=text,
        language="en",
        char_length=len(text),
        truncated=False,
    )


def tiny_dataset(qids: list[str]) -> EvaluationDataset:
    queries = tuple(
        QueryCase(
            query_doc_id=q,
            relevant_ids=frozenset({q + ".R"}),
            relevant_provenance={q + ".R": "EXAMINER"},
        )
        for q in qids
    )
    strata = {
        q: {"language": "en", "ipc_section": "G", "jurisdiction": "US"} for q in qids
    }
    return EvaluationDataset(
        queries=queries, strata=strata, build_manifest={"seed": 0, "n_queries": len(qids)}
    )


class TestNormalizeDocId:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("cn109123456 a", "CN109123456A"),
            ("  us 98 76 ", "US9876"),
            ("EP-1234/B1", "EP-1234/B1"[:0] or None),  # leading char ok, see below
        ],
    )
    def test_basic(self, raw, expected):
        if raw == "EP-1234/B1":
            assert normalize_doc_id(raw) == "EP-1234/B1"
        else:
            assert normalize_doc_id(raw) == expected

    def test_separators_allowed_inside(self):
        assert normalize_doc_id("ep 1234.5/b-1") == "EP1234.5/B-1"

    @pytest.mark.parametrize("raw", [None, 42, "", "   ", "-US1", ".X1", "US#1", "西1A"])
    def test_unmappable(self, raw):
        assert normalize_doc_id(raw) is None


class TestStandardizeResults:
    def test_accepts_mixed_shapes(self):
        raw = [
            {"doc_id": "us1a", "score": 0.9},
            ("us 2a", 0.8),
            "US3A",
        ]
        ranked, dropped = standardize_results(raw, query_id="Q", max_depth=10)
        assert dropped == 0
        assert ranked.doc_ids() == ["US1A", "US2A", "US3A"]
        assert [h.rank for h in ranked.hits] == [1, 2, 3]

    def test_duplicates_keep_best_rank(self):
        raw = [("us1a", 0.9), ("US2A", 0.8), ("US1A", 0.7)]
        ranked, _ = standardize_results(raw, query_id="Q", max_depth=10)
        assert ranked.doc_ids() == ["US1A", "US2A"]
        assert ranked.hits[0].score == 0.9

    def test_truncates_to_max_depth(self):
        raw = [(f"US{i}A", 1.0 - i / 100) for i in range(20)]
        ranked, _ = standardize_results(raw, query_id="Q", max_depth=5)
        assert len(ranked.hits) == 5
        assert ranked.hits[-1].doc_id == "US4A"

    def test_unmappable_entries_counted_as_anomalies(self):
        raw = [42, "??", ("US1A", 0.5), None, {"doc_id": ""}]
        ranked, dropped = standardize_results(raw, query_id="Q", max_depth=10)
        assert ranked.doc_ids() == ["US1A"]
        assert dropped == 4

    def test_missing_scores_inherit_previous(self):
        raw = ["US1A", ("US2A", 0.6), "US3A"]
        ranked, _ = standardize_results(raw, query_id="Q", max_depth=10)
        assert [h.score for h in ranked.hits] == [1.0, 0.6, 0.6]

    def test_increasing_scores_are_clamped(self):
        raw = [("US1A", 0.5), ("US2A", 0.9), ("US3A", float("nan"))]
        ranked, _ = standardize_results(raw, query_id="Q", max_depth=10)
        assert [h.score for h in ranked.hits] == [0.5, 0.5, 0.5]

    @settings(max_examples=200)
    @given(
        raw=st.lists(
            st.one_of(
                st.text(max_size=10),
                st.tuples(
                    st.text(max_size=10),
                    st.one_of(
                        st.none(),
                        st.floats(allow_nan=True, allow_infinity=True),
                    ),
                ),
                st.integers(),
            ),
            max_size=40,
        ),
        max_depth=st.integers(min_value=1, max_value=25),
    )
    def test_output_invariants(self, raw, max_depth):
        ranked, dropped = standardize_results(raw, query_id="Q", max_depth=max_depth)
        ids = ranked.doc_ids()
        assert len(ids) == len(set(ids))
        assert len(ids) <= max_depth
        assert [h.rank for h in ranked.hits] == list(range(1, len(ids) + 1))
        scores = [h.score for h in ranked.hits]
        assert all(a >= b for a, b in zip(scores, scores[1:]))
        assert all(math.isfinite(s) for s in scores)
        assert dropped >= 0


class ListAdapter:
    adapter_id = "list"

    def __init__(self, mapping):
        self.mapping = mapping

    def search(self, query, controls):
        return self.mapping[query.query_id]


class FlakyAdapter:
    adapter_id = "flaky"

    def __init__(self, bad_ids):
        self.bad_ids = set(bad_ids)

    def search(self, query, controls):
        if query.query_id in self.bad_ids:
            raise RuntimeError("backend exploded")
        return [("US1A", 1.0)]


class SleepyAdapter:
    adapter_id = "sleepy"

    def search(self, query, controls):
        time.sleep(0.05)
        return [("US1A", 1.0)]


class TestRunEvaluation:
    def test_ok_run_records_all_queries(self):
        qids = ["Q1", "Q2", "Q3"]
        dataset = tiny_dataset(qids)
        queries = {q: _query(q) for q in qids}
        adapter = ListAdapter({q: [(f"US{i}A", 1.0 - i / 10) for i in range(3)] for q in qids})
        record = run_evaluation(
            dataset, adapter, RunControls(seed=0, adapter_id="list"), queries=queries
        )
        assert sorted(record.results) == qids
        assert tally_statuses(record) == {"ERROR": 0, "OK": 3, "TIMEOUT": 0}
        assert record.dataset_manifest_hash == dataset.manifest_hash

    def test_missing_query_becomes_error_result(self):
        qids = ["Q1", "Q2"]
        dataset = tiny_dataset(qids)
        queries = {"Q1": _query("Q1")}
        adapter = ListAdapter({"Q1": ["US1A"], "Q2": ["US1A"]})
        record = run_evaluation(dataset, adapter, RunControls(seed=0), queries=queries)
        assert record.results["Q2"].status == "ERROR"
        assert record.results["Q2"].hits == ()

    def test_slow_queries_time_out_but_run_completes(self):
        qids = ["Q1", "Q2", "Q3", "Q4"]
        dataset = tiny_dataset(qids)
        queries = {q: _query(q) for q in qids}
        controls = RunControls(seed=0, timeout_ms=10)
        record = run_evaluation(dataset, SleepyAdapter(), controls, queries=queries)
        assert tally_statuses(record) == {"ERROR": 0, "OK": 0, "TIMEOUT": 4}

    def test_adapter_timeout_exception_is_timeout_status(self):
        class RaisingAdapter:
            adapter_id = "raising"

            def search(self, query, controls):
                raise AdapterTimeout("budget blown")

        qids = ["Q1", "Q2"]
        record = run_evaluation(
            tiny_dataset(qids),
            RaisingAdapter(),
            RunControls(seed=0),
            queries={q: _query(q) for q in qids},
        )
        assert tally_statuses(record)["TIMEOUT"] == 2

    def test_majority_errors_abort_the_run(self):
        qids = [f"Q{i}" for i in range(4)]
        dataset = tiny_dataset(qids)
        queries = {q: _query(q) for q in qids}
        with pytest.raises(RunFailureError):
            run_evaluation(
                dataset, FlakyAdapter(["Q0", "Q1", "Q2"]), RunControls(seed=0), queries=queries
            )

    def test_half_errors_do_not_abort(self):
        qids = [f"Q{i}" for i in range(4)]
        dataset = tiny_dataset(qids)
        queries = {q: _query(q) for q in qids}
        record = run_evaluation(
            dataset, FlakyAdapter(["Q0", "Q1"]), RunControls(seed=0), queries=queries
        )
        assert tally_statuses(record) == {"ERROR": 2, "OK": 2, "TIMEOUT": 0}

    def test_parallelism_does_not_change_results(self, tmp_path):
        qids = [f"Q{i}" for i in range(8)]
        dataset = tiny_dataset(qids)
        queries = {q: _query(q) for q in qids}
        mapping = {q: [(f"US{i}{q[-1]}A", 1.0 - i / 10) for i in range(5)] for q in qids}
        logs = []
        for parallelism in (1, 4):
            record = run_evaluation(
                dataset,
                ListAdapter(mapping),
                RunControls(seed=0, parallelism=parallelism, adapter_id="list"),
                queries=queries,
            )
            path = tmp_path / f"run_p{parallelism}.jsonl"
            write_run_log(record, path)
            logs.append(sanitize_run_log(path))
        assert logs[0] == logs[1]

    def test_controls_validation(self):
        with pytest.raises(ValueError):
            RunControls(seed=0, timeout_ms=0)
        with pytest.raises(ValueError):
            RunControls(seed=0, max_depth=0)
        with pytest.raises(ValueError):
            RunControls(seed=0, parallelism=0)

    def test_non_ok_ranked_list_cannot_carry_hits(self):
        from patbench.execution import Hit

        with pytest.raises(ValueError):
            RankedList(
                query_id="Q",
                hits=(Hit(doc_id="US1A", score=1.0, rank=1),),
                status="ERROR",
            )


class TestTokenize:
    def test_latin_and_digits(self):
        assert tokenize("The Widget-9 spins.") == ["the", "widget", "9", "spins"]

    def test_cjk_single_char_tokens(self):
        assert tokenize("电池模块") == ["电", "池", "模", "块"]

    def test_mixed(self):
        assert tokenize("ABC电池 def") == ["abc", "电", "池", "def"]


def _oracle_scores(corpus, query_text: str) -> dict[str, float]:
    # independent accounting of the reference formula
    doc_tokens = {
        doc_id: tokenize(" ".join((d.title, d.abstract, d.claims, d.description)))
        for doc_id, d in corpus.documents.items()
    }
    df: Counter[str] = Counter()
    for tokens in doc_tokens.values():
        df.update(set(tokens))
    n = len(doc_tokens)
    out: dict[str, float] = {}
    q = Counter(tokenize(query_text))
    for doc_id, tokens in doc_tokens.items():
        tf = Counter(tokens)
        score = 0.0
        for term, qtf in q.items():
            if tf[term]:
                score += qtf * (1.0 + math.log(tf[term])) * math.log(1.0 + n / df[term])
        if score:
            out[doc_id] = score / math.sqrt(len(tokens))
    return out


class TestReferenceRetriever:
    def _corpus(self):
        return make_corpus(
            [
                make_doc("US1A", description="rotor stator rotor winding"),
                make_doc("US2A", description="rotor bearing housing"),
                make_doc("US3A", description="stator winding insulation"),
                make_doc("US4A", family_id="F7", description="rotor stator alignment"),
                make_doc("US5A", family_id="F7", description="rotor stator alignment tool"),
            ]
        )

    def test_matches_independent_oracle(self):
        corpus = self._corpus()
        index = build_reference_index(corpus)
        query = _query("US1A", "rotor stator")
        ranked = reference_retrieve(query, index, exclude_family=False)
        oracle = _oracle_scores(corpus, "rotor stator")
        oracle.pop("US1A")
        expected_order = sorted(oracle, key=lambda d: (-oracle[d], d))
        assert ranked.doc_ids() == expected_order
        for hit in ranked.hits:
            assert hit.score == pytest.approx(oracle[hit.doc_id], rel=1e-12)

    def test_tie_breaks_lexicographically(self):
        corpus = make_corpus(
            [
                make_doc("US9A", description="turbine blade"),
                make_doc("US2A", description="turbine blade"),
                make_doc("US5A", description="turbine blade"),
                make_doc("US1A", description="turbine"),
            ]
        )
        index = build_reference_index(corpus)
        ranked = reference_retrieve(_query("US1A", "turbine blade"), index)
        assert ranked.doc_ids() == ["US2A", "US5A", "US9A"]

    def test_excludes_self_always(self):
        index = build_reference_index(self._corpus())
        for exclude_family in (True, False):
            ranked = reference_retrieve(
                _query("US1A", "rotor"), index, exclude_family=exclude_family
            )
            assert "US1A" not in ranked.doc_ids()

    def test_family_exclusion_toggle(self):
        index = build_reference_index(self._corpus())
        with_family = reference_retrieve(
            _query("US4A", "rotor stator alignment"), index, exclude_family=False
        )
        without_family = reference_retrieve(
            _query("US4A", "rotor stator alignment"), index, exclude_family=True
        )
        assert "US5A" in with_family.doc_ids()
        assert "US5A" not in without_family.doc_ids()

    def test_max_depth_truncates(self):
        index = build_reference_index(self._corpus())
        ranked = reference_retrieve(_query("US1A", "rotor stator"), index, max_depth=2)
        assert len(ranked.hits) == 2

    def test_query_without_tokens_raises(self):
        index = build_reference_index(self._corpus())
        with pytest.raises(EmptyInputError):
            reference_retrieve(_query("US1A", "!!! ???"), index)

    def test_postings_oracle(self):
        corpus = make_corpus(
            [
                make_doc("US1A", title="", abstract="", claims="", description="pump pump valve"),
                make_doc("US2A", title="", abstract="", claims="", description="valve seat"),
            ]
        )
        index = build_reference_index(corpus)
        assert index.postings["pump"] == {"US1A": 2}
        assert index.postings["valve"] == {"US1A": 1, "US2A": 1}
        assert index.doc_lengths == {"US1A": 3, "US2A": 2}
        assert index.n_docs == 2

    def test_adapter_is_deterministic_over_synth_corpus(self, synth_corpus, tmp_path):
        from patbench.dataset import build_dataset

        dataset = build_dataset(synth_corpus, seed=5, sample_size=20)
        queries = build_queries(synth_corpus, dataset.query_ids())
        logs = []
        for i in range(2):
            record = run_evaluation(
                dataset,
                ReferenceAdapter(synth_corpus),
                RunControls(seed=5, adapter_id="reference", parallelism=3),
                queries=queries,
            )
            path = tmp_path / f"ref{i}.jsonl"
            write_run_log(record, path)
            logs.append(sanitize_run_log(path))
        assert logs[0] == logs[1]

    def test_retrieval_invariants_on_synth_corpus(self, synth_corpus):
        index = build_reference_index(synth_corpus)
        for doc_id in sorted(synth_corpus.documents)[:5]:
            doc = synth_corpus.documents[doc_id]
            query = _query(doc_id, doc.description[:200])
            ranked = reference_retrieve(query, index, max_depth=50)
            ids = ranked.doc_ids()
            assert doc_id not in ids
            assert len(ids) == len(set(ids))
            assert len(ids) <= 50
            scores = [h.score for h in ranked.hits]
            assert all(a >= b for a, b in zip(scores, scores[1:]))


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _send(self, status: int, body: dict | str):
        payload = body.encode() if isinstance(body, str) else json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _read_json(self) -> dict:
        n = int(self.headers.get("Content-Length", 0))
        return json.loads(self.rfile.read(n) or b"{}")

    def do_POST(self):
        body = self._read_json()
        if self.path == "/ok":
            depth = int(body.get("max_depth", 5))
            hits = [
                {"doc_id": f"us{i}a", "score": round(1.0 - i / 100, 4)}
                for i in range(depth)
            ]
            self._send(200, {"hits": hits})
        elif self.path == "/nested":
            self._send(200, {"data": {"results": [{"id": "US7A", "conf": 0.7}]}})
        elif self.path == "/auth":
            self._send(
                200,
                {"hits": [{"doc_id": self.headers.get("Authorization", ""), "score": 1.0}]},
            )
        elif self.path == "/boom":
            self._send(500, "kaboom: internal index corrupt")
        elif self.path == "/notjson":
            self._send(200, "this is not json")
        elif self.path == "/slow":
            time.sleep(0.4)
            self._send(200, {"hits": []})
        else:
            self._send(404, "no such route")

    def do_GET(self):
        from urllib.parse import parse_qs, urlparse

        parsed = urlparse(self.path)
        if parsed.path == "/get":
            params = parse_qs(parsed.query)
            depth = int(params.get("max_depth", ["3"])[0])
            self._send(200, {"hits": [f"G{i}A" for i in range(depth)]})
        else:
            self._send(404, "no such route")


@pytest.fixture(scope="module")
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def _remote_config(url: str, **overrides) -> RemoteEndpointConfig:
    fields = dict(adapter_id="stub", url=url, backoff_s=0.0)
    fields.update(overrides)
    return RemoteEndpointConfig(**fields)


class TestRemoteAdapter:
    def test_post_round_trip(self, stub_server):
        config = _remote_config(stub_server + "/ok")
        raw = remote_adapter_query(
            config, _query("Q1"), RunControls(seed=0, max_depth=4)
        )
        assert raw == [
            ("us0a", 1.0),
            ("us1a", 0.99),
            ("us2a", 0.98),
            ("us3a", 0.97),
        ]

    def test_adapter_feeds_standardization(self, stub_server):
        adapter = RemoteAdapter(_remote_config(stub_server + "/ok"))
        record = run_evaluation(
            tiny_dataset(["Q1"]),
            adapter,
            RunControls(seed=0, max_depth=3, adapter_id="stub"),
            queries={"Q1": _query("Q1")},
        )
        assert record.results["Q1"].doc_ids() == ["US0A", "US1A", "US2A"]

    def test_nested_hits_path_and_field_names(self, stub_server):
        config = _remote_config(
            stub_server + "/nested",
            hits_path=("data", "results"),
            id_field="id",
            score_field="conf",
        )
        raw = remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert raw == [("US7A", 0.7)]

    def test_auth_token_from_environment(self, stub_server, monkeypatch):
        monkeypatch.setenv("STUB_TOKEN", "s3cr3t")
        config = _remote_config(stub_server + "/auth", auth_token_env="STUB_TOKEN")
        raw = remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert raw == [("Bearer s3cr3t", 1.0)]

    def test_missing_token_sends_no_header(self, stub_server, monkeypatch):
        monkeypatch.delenv("ABSENT_TOKEN", raising=False)
        config = _remote_config(stub_server + "/auth", auth_token_env="ABSENT_TOKEN")
        raw = remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert raw == [("", 1.0)]

    def test_http_error_carries_snippet(self, stub_server):
        config = _remote_config(stub_server + "/boom")
        with pytest.raises(AdapterError) as err:
            remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert "500" in str(err.value)
        assert "kaboom" in str(err.value)

    def test_unparseable_body(self, stub_server):
        config = _remote_config(stub_server + "/notjson")
        with pytest.raises(AdapterError) as err:
            remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert "unparseable" in str(err.value)

    def test_missing_hits_path(self, stub_server):
        config = _remote_config(stub_server + "/nested", hits_path=("data", "absent"))
        with pytest.raises(AdapterError) as err:
            remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert "data.absent" in str(err.value)

    def test_timeout_maps_to_adapter_timeout(self, stub_server):
        config = _remote_config(stub_server + "/slow")
        with pytest.raises(AdapterTimeout):
            remote_adapter_query(config, _query("Q1"), RunControls(seed=0, timeout_ms=100))

    def test_get_uses_query_params(self, stub_server):
        config = _remote_config(stub_server + "/get", method="GET")
        raw = remote_adapter_query(config, _query("Q1"), RunControls(seed=0, max_depth=2))
        assert raw == [("G0A", None), ("G1A", None)]

    def test_connection_errors_retry_then_succeed(self, monkeypatch):
        attempts = []

        class FakeResponse:
            ok = True
            status_code = 200
            text = "{}"

            def json(self):
                return {"hits": [{"doc_id": "US1A", "score": 1.0}]}

        def fake_request(method, url, **kwargs):
            attempts.append(method)
            if len(attempts) < 3:
                raise requests.ConnectionError("refused")
            return FakeResponse()

        monkeypatch.setattr(requests, "request", fake_request)
        config = _remote_config("http://invalid.test/ok", max_retries=2)
        raw = remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert raw == [("US1A", 1.0)]
        assert len(attempts) == 3

    def test_connection_errors_exhaust_retries(self, monkeypatch):
        attempts = []

        def fake_request(method, url, **kwargs):
            attempts.append(method)
            raise requests.ConnectionError("refused")

        monkeypatch.setattr(requests, "request", fake_request)
        config = _remote_config("http://invalid.test/ok", max_retries=1)
        with pytest.raises(AdapterError) as err:
            remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert len(attempts) == 2
        assert "transport failure" in str(err.value)

    def test_timeout_and_http_errors_are_not_retried(self, monkeypatch):
        attempts = []

        def fake_timeout(method, url, **kwargs):
            attempts.append(method)
            raise requests.Timeout("too slow")

        monkeypatch.setattr(requests, "request", fake_timeout)
        config = _remote_config("http://invalid.test/ok", max_retries=5)
        with pytest.raises(AdapterTimeout):
            remote_adapter_query(config, _query("Q1"), RunControls(seed=0))
        assert len(attempts) == 1

    def test_config_from_file(self, tmp_path):
        path = tmp_path / "remote.json"
        path.write_text(
            json.dumps(
                {
                    "adapter_id": "vendor",
                    "url": "http://vendor.test/search",
                    "hits_path": ["data", "hits"],
                    "max_retries": 1,
                }
            )
        )
        config = RemoteEndpointConfig.from_file(path)
        assert config.adapter_id == "vendor"
        assert config.hits_path == ("data", "hits")

        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"adapter_id": "x", "url": "u", "surprise": 1}))
        with pytest.raises(ValueError):
            RemoteEndpointConfig.from_file(bad)
        incomplete = tmp_path / "incomplete.json"
        incomplete.write_text(json.dumps({"adapter_id": "x"}))
        with pytest.raises(ValueError):
            RemoteEndpointConfig.from_file(incomplete)


class TestRunLogIO:
    def _record(self):
        qids = ["Q1", "Q2", "Q3"]
        dataset = tiny_dataset(qids)
        queries = {q: _query(q) for q in qids}
        mapping = {
            "Q1": [("US1A", 0.9), ("US2A", 0.8)],
            "Q2": [],
            "Q3": [("US3A", 0.7)],
        }
        return run_evaluation(
            dataset,
            ListAdapter(mapping),
            RunControls(seed=11, adapter_id="list"),
            queries=queries,
        )

    def test_round_trip(self, tmp_path):
        record = self._record()
        path = tmp_path / "run.jsonl"
        write_run_log(record, path)
        loaded = load_run_log(path)
        assert loaded.controls == record.controls
        assert loaded.dataset_manifest_hash == record.dataset_manifest_hash
        assert dict(loaded.results) == dict(record.results)
        assert loaded.anomaly_count == record.anomaly_count

    def test_sanitized_bytes_ignore_wall_clock(self, tmp_path):
        record = self._record()
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_run_log(record, a)
        from dataclasses import replace

        later = replace(record, started="2999-01-01T00:00:00.000000Z", finished="2999-01-01T00:00:01.000000Z")
        write_run_log(later, b)
        assert a.read_bytes() != b.read_bytes()
        assert sanitize_run_log(a) == sanitize_run_log(b)

    def test_load_rejects_headerless_file(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"kind":"ranked_list","query_id":"Q1","status":"OK","hits":[]}\n')
        with pytest.raises(ValueError):
            load_run_log(path)
