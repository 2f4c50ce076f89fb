"""Deterministic linguistic metrics over discussion text.

The character-scan kernel has a compiled twin (``_scan.pyx``); ``engine``
selects it at import when built and falls back to pure Python otherwise.
``engine.BACKEND`` reports which one is live.
"""

from .engine import BACKEND, norm_token, scan, syllable_counts, syllables
from .lexicon import (
    Lexicon,
    LexiconSet,
    builtin_lexicon,
    builtin_lexicons,
    load_lexicon_file,
    parse_lexicon_text,
)
from .metrics import (
    METRIC_NAMES,
    AnalyzedText,
    MetricVector,
    analyze,
    complexity_metrics,
    full_metrics,
    interaction_metrics,
    metrics_csv_header,
    metrics_csv_row,
    sentiment_shift,
    simulation_metrics,
    stance_metrics,
)

__all__ = [
    "BACKEND",
    "METRIC_NAMES",
    "AnalyzedText",
    "Lexicon",
    "LexiconSet",
    "MetricVector",
    "analyze",
    "builtin_lexicon",
    "builtin_lexicons",
    "complexity_metrics",
    "full_metrics",
    "interaction_metrics",
    "load_lexicon_file",
    "metrics_csv_header",
    "metrics_csv_row",
    "norm_token",
    "parse_lexicon_text",
    "scan",
    "sentiment_shift",
    "simulation_metrics",
    "stance_metrics",
    "syllable_counts",
    "syllables",
]
