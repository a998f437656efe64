from __future__ import annotations

import pathlib

import pytest

from patbench.synth import synthetic_corpus

DATA_DIR = pathlib.Path(__file__).resolve().parents[1] / "data"


@pytest.fixture(scope="session")
def synth_corpus():
    return synthetic_corpus(n_docs=200, seed=0)


@pytest.fixture(scope="session")
def bundled_corpus_path() -> pathlib.Path:
    return DATA_DIR / "synthetic_corpus.jsonl"
