"""Flag confusable active words and propose which ones to drop.

A pair of active words at a node is confusable when their distance is no
more than ``T * (1 + margin)``, where ``T`` is calibrated from a reference
pair the recognizer is known to tell apart reliably.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

from .callflow import CallFlow, Node, perplexity
from .distance import TOLERANCE, CostModel, DistanceMatrix, distance_matrix, word_distance
from .lexicon import Lexicon, UnknownWordError

DEFAULT_MARGIN = 0.05

RETRAINING_ADVICE = (
    "Flagged pairs that stay active (including unresolved ones) can instead be "
    "handled by training the recognizer on more speech data for those words."
)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class Threshold:
    value: float
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if self.value < 0 or self.margin < 0:
            raise ValueError("threshold value and margin must be non-negative")

    @property
    def limit(self) -> float:
        return self.value * (1.0 + self.margin)


@dataclass(frozen=True)
class ConfusionPair:
    word_a: str
    word_b: str
    distance: float
    node: Optional[str] = None

    def __post_init__(self):
        if self.word_a == self.word_b:
            raise ValueError("a confusion pair needs two different words")

    @property
    def words(self) -> frozenset:
        return frozenset((self.word_a, self.word_b))

    def same_pair(self, other: "ConfusionPair") -> bool:
        return self.words == other.words and self.node == other.node

    def to_dict(self) -> dict:
        return {"node": self.node, "word_a": self.word_a, "word_b": self.word_b,
                "distance": self.distance}


@dataclass(frozen=True)
class RestructuringPlan:
    removals: frozenset = frozenset()
    unresolved: tuple[ConfusionPair, ...] = ()

    def removed_words(self, node_id: str) -> list[str]:
        return sorted(w for n, w in self.removals if n == node_id)

    def to_dict(self) -> dict:
        return {
            "removals": [{"node": n, "word": w} for n, w in sorted(self.removals)],
            "unresolved": [p.to_dict() for p in self.unresolved],
        }


def calibrate_threshold(
    lexicon: Lexicon,
    ref_a: str,
    ref_b: str,
    cost: CostModel | None = None,
    margin: float = DEFAULT_MARGIN,
) -> Threshold:
    """Use the distance between two reliably distinguished words as ``T``."""
    d = word_distance(ref_a, ref_b, lexicon, cost)
    if d <= TOLERANCE:
        raise CalibrationError(
            f"reference words {ref_a!r} and {ref_b!r} are at distance 0; cannot calibrate"
        )
    return Threshold(d, margin)


def flag_pairs(matrix: DistanceMatrix, threshold: Threshold, node: str | None = None) -> list[ConfusionPair]:
    limit = threshold.limit + TOLERANCE
    labels = matrix.labels
    flagged = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            d = float(matrix.values[i, j])
            if d <= limit:
                flagged.append(ConfusionPair(labels[i], labels[j], d, node))
    flagged.sort(key=lambda p: (p.distance, p.word_a, p.word_b))
    return flagged


def suggest_restructuring(node: Node, flagged: Sequence[ConfusionPair]) -> RestructuringPlan:
    """Greedy removal cover over the flagged pairs of one node.

    Each round removes the word that appears in the most still-open pairs,
    smallest word id first on ties. A word is never removed if it is the last
    surface form its service has left.
    """
    remaining = {s.id: len(s.surface_forms) for s in node.services}
    service_of = {w: s.id for s in node.services for w in s.surface_forms}
    for p in flagged:
        for w in (p.word_a, p.word_b):
            if w not in service_of:
                raise ValueError(f"{w!r} is not active at node {node.id!r}")
    open_pairs = list(flagged)
    removed: set[str] = set()
    while open_pairs:
        counts: dict[str, int] = {}
        for p in open_pairs:
            for w in (p.word_a, p.word_b):
                if remaining[service_of[w]] > 1:
                    counts[w] = counts.get(w, 0) + 1
        if not counts:
            break
        best = min(counts, key=lambda w: (-counts[w], w))
        removed.add(best)
        remaining[service_of[best]] -= 1
        open_pairs = [p for p in open_pairs if best not in (p.word_a, p.word_b)]
    return RestructuringPlan(frozenset((node.id, w) for w in removed), tuple(open_pairs))


def merge_plans(plans: Sequence[RestructuringPlan]) -> RestructuringPlan:
    removals = frozenset().union(*(p.removals for p in plans)) if plans else frozenset()
    unresolved = tuple(u for p in plans for u in p.unresolved)
    return RestructuringPlan(removals, unresolved)


@dataclass
class NodeAnalysis:
    node: str
    perplexity: int
    matrix: DistanceMatrix
    flagged: list[ConfusionPair]
    plan: RestructuringPlan

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "perplexity": self.perplexity,
            "labels": list(self.matrix.labels),
            "distances": [[float(v) for v in row] for row in self.matrix.values],
            "flagged": [p.to_dict() for p in self.flagged],
            "plan": self.plan.to_dict(),
        }


@dataclass
class AnalysisReport:
    threshold: Threshold
    nodes: list[NodeAnalysis]
    advice: list[str] = field(default_factory=list)

    @property
    def flagged(self) -> list[ConfusionPair]:
        return [p for n in self.nodes for p in n.flagged]

    @property
    def plan(self) -> RestructuringPlan:
        return merge_plans([n.plan for n in self.nodes])

    @property
    def max_perplexity(self) -> int:
        return max((n.perplexity for n in self.nodes), default=0)

    def to_dict(self) -> dict:
        return {
            "threshold": {"value": self.threshold.value, "margin": self.threshold.margin,
                          "limit": self.threshold.limit},
            "summary": {
                "nodes": len(self.nodes),
                "total_flagged": len(self.flagged),
                "max_perplexity": self.max_perplexity,
            },
            "nodes": [n.to_dict() for n in self.nodes],
            "advice": list(self.advice),
        }

    def to_text(self) -> str:
        t = self.threshold
        lines = [f"threshold T={t.value:g} margin={t.margin:g} (flag distance <= {t.limit:.6g})"]
        for n in self.nodes:
            lines.append("")
            lines.append(f"node {n.node}: perplexity {n.perplexity}, {len(n.flagged)} flagged pair(s)")
            for p in n.flagged:
                lines.append(f"  {p.word_a} ~ {p.word_b}  distance {p.distance:g}")
            for w in n.plan.removed_words(n.node):
                lines.append(f"  suggest removing: {w}")
            for p in n.plan.unresolved:
                lines.append(f"  unresolved: {p.word_a} ~ {p.word_b} (no removable word)")
        lines.append("")
        lines.append(
            f"summary: {len(self.nodes)} node(s), {len(self.flagged)} flagged pair(s), "
            f"max perplexity {self.max_perplexity}"
        )
        lines.extend(self.advice)
        return "\n".join(lines) + "\n"


def analyze_node(
    node: Node,
    lexicon: Lexicon | None,
    cost: CostModel | None,
    threshold: Threshold,
    matrix: DistanceMatrix | None = None,
) -> NodeAnalysis:
    words = node.active_words
    if matrix is None:
        matrix = distance_matrix(words, lexicon, cost)
    elif sorted(matrix.labels) != sorted(words):
        raise ValueError(f"matrix labels do not match the active words of node {node.id!r}")
    flagged = flag_pairs(matrix, threshold, node.id)
    return NodeAnalysis(node.id, perplexity(node), matrix, flagged, suggest_restructuring(node, flagged))


def analyze(
    flow: CallFlow,
    lexicon: Lexicon,
    cost: CostModel | None,
    threshold: Threshold,
    matrices: Mapping[str, DistanceMatrix] | None = None,
    only: Sequence[str] | None = None,
) -> AnalysisReport:
    """Analyze every node reachable from the entry, in node-id order.

    ``matrices`` supplies precomputed distance tables for some nodes;
    ``only`` restricts the report to the listed node ids.
    """
    matrices = matrices or {}
    node_ids = sorted(only if only is not None else flow.reachable())
    missing = sorted({
        w for nid in node_ids if nid not in matrices
        for w in flow.nodes[nid].active_words if w not in lexicon
    })
    if missing:
        err = UnknownWordError(missing[0])
        err.args = (f"words not in lexicon: {', '.join(missing)}",)
        raise err
    nodes = [
        analyze_node(flow.nodes[nid], lexicon, cost, threshold, matrices.get(nid))
        for nid in node_ids
    ]
    report = AnalysisReport(threshold, nodes)
    if report.flagged:
        report.advice.append(RETRAINING_ADVICE)
    return report
