"""Multi-LLM screening of literature corpora with consensus voting.

The pipeline: ingest a candidate-paper corpus (BibTeX / DOI), render a
structured classification prompt per paper, fan it out to several LLM
agents, combine their INCLUDE/DISCARD verdicts with a consensus scheme,
and score the result against human ground-truth labels.
"""

__version__ = "0.1.0"

from litscreen.verdicts import Label, Verdict

__all__ = ["Label", "Verdict", "__version__"]
