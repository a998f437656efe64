"""Evaluation harness for patent novelty search systems.

Builds citation-grounded relevance datasets from a patent corpus, runs
retrieval systems through a uniform adapter contract, and reports top-k
detection rates and recall with stratified significance testing.
"""

__version__ = "0.1.0"
