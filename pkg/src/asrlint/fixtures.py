"""Bundled railway-inquiry example data."""

from importlib import resources

from .callflow import CallFlow, parse_callflow
from .distance import DistanceMatrix, load_matrix
from .lexicon import Lexicon, parse_lexicon

ENTRY_NODE = "service"
REFERENCE_PAIR = ("sahi", "galat")
PUBLISHED_THRESHOLD = 5.7


def data_path(name: str):
    return resources.files("asrlint") / "data" / name


def _read(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


def railway_lexicon() -> Lexicon:
    return parse_lexicon(_read("railway.lex"))


def railway_callflow() -> CallFlow:
    return parse_callflow(_read("railway.json"))


def published_matrix() -> DistanceMatrix:
    """Entry-node distances as published for the railway system (14 words)."""
    return load_matrix(_read("table2.csv"))
