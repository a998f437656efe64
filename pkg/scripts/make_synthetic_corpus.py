#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpus under data/.

The output is deterministic; rerunning this script must not change the
committed files.
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from patbench.corpus import write_corpus  # noqa: E402
from patbench.synth import synthetic_corpus  # noqa: E402


def main() -> None:
    out = pathlib.Path(__file__).resolve().parents[1] / "data" / "synthetic_corpus.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus = synthetic_corpus(n_docs=200, seed=0)
    write_corpus(corpus, out)
    print(f"wrote {out} ({len(corpus.documents)} documents, {len(corpus.citations)} citations)")


if __name__ == "__main__":
    main()
