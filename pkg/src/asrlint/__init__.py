"""Confusability analysis for menu-based speech recognition call flows."""

from .callflow import CallFlow, Diagnostic, Node, Service, enumerate_paths, load_callflow, parse_callflow, perplexity, validate
from .confusability import (
    AnalysisReport,
    ConfusionPair,
    RestructuringPlan,
    Threshold,
    analyze,
    calibrate_threshold,
    flag_pairs,
    suggest_restructuring,
)
from .distance import (
    CostModel,
    DistanceMatrix,
    TableCost,
    UniformCost,
    distance_matrix,
    edit_distance,
    load_matrix,
    parse_cost_table,
    word_distance,
)
from .lexicon import Lexicon, LexiconEntry, load_lexicon, lookup, parse_lexicon, serialize_lexicon
from .simulator import (
    ConfusionChannel,
    DecodeResult,
    NodeSimStats,
    correlate,
    corrupt,
    decode,
    simulate_node,
    simulate_transactions,
)

__version__ = "0.1.0"
