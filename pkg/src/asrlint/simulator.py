"""Monte Carlo check of the confusability predictor.

Spoken words are pushed through a phoneme noise channel and decoded against
the node's active vocabulary by nearest edit distance. Counting which word
comes out shows how often the recognizer would confuse each pair, with no
real speakers involved.
"""

from __future__ import annotations

import hashlib
import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .callflow import CallFlow, Node, enumerate_paths
from .distance import TOLERANCE, CompiledCosts, CostModel, DistanceMatrix, UniformCost, edit_distance, matrix_to_csv
from .lexicon import Lexicon, Phoneme, PhonemeSequence

NO_REJECTION = float("inf")


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionChannel:
    """Per-phoneme corruption probabilities.

    ``lattice_width`` is the number of candidate phonemes a substitution can
    land on, mimicking an l-best phone lattice.
    """

    substitution_prob: float = 0.0
    insertion_prob: float = 0.0
    deletion_prob: float = 0.0
    lattice_width: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("substitution_prob", "insertion_prob", "deletion_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise SimulationError(f"{name} must be in [0, 1], got {p}")
        if self.substitution_prob + self.deletion_prob > 1.0 + TOLERANCE:
            raise SimulationError("substitution_prob + deletion_prob must not exceed 1")
        if self.lattice_width < 1:
            raise SimulationError("lattice_width must be a positive integer")
        if not 0 <= self.rng_seed < 2**64:
            raise SimulationError("rng_seed must be an unsigned 64-bit integer")

    @property
    def noiseless(self) -> bool:
        return self.substitution_prob == self.insertion_prob == self.deletion_prob == 0.0

    def to_dict(self) -> dict:
        return {
            "substitution_prob": self.substitution_prob,
            "insertion_prob": self.insertion_prob,
            "deletion_prob": self.deletion_prob,
            "lattice_width": self.lattice_width,
            "rng_seed": self.rng_seed,
        }


def substream(seed: int, *keys) -> random.Random:
    """Independent generator for one trial, keyed by seed and trial coordinates."""
    material = repr((int(seed),) + tuple(keys)).encode()
    digest = hashlib.blake2b(material, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "little"))


def substitution_pool(
    phoneme: Phoneme, alphabet: Sequence[Phoneme], width: int, cost: CostModel | None = None
) -> list[Phoneme]:
    """The ``width`` phonemes a recognizer is most likely to put in place of ``phoneme``.

    Candidates are ranked by substitution cost (cheapest first); equal costs
    fall back to alphabet order, counting cyclically from ``phoneme``. Under
    uniform costs this is just the next ``width`` symbols of the sorted
    alphabet.
    """
    ordered = sorted(set(alphabet))
    k = len(ordered)
    start = ordered.index(phoneme)
    others = [ordered[(start + step) % k] for step in range(1, k)]
    if cost is not None:
        others.sort(key=lambda q: cost.substitution(phoneme, q))
    return others[: min(width, k - 1)]


class _Corrupter:
    def __init__(self, channel: ConfusionChannel, alphabet: Sequence[Phoneme], cost: CostModel | None = None):
        if not alphabet:
            raise SimulationError("alphabet must not be empty")
        self.channel = channel
        self.alphabet = sorted(set(alphabet))
        self.pools = {
            p: substitution_pool(p, self.alphabet, channel.lattice_width, cost) for p in self.alphabet
        }

    def __call__(self, seq: Sequence[Phoneme], rng: random.Random) -> PhonemeSequence:
        ch = self.channel
        sub, dele, ins = ch.substitution_prob, ch.deletion_prob, ch.insertion_prob
        out = []
        for ph in seq:
            try:
                pool = self.pools[ph]
            except KeyError:
                raise SimulationError(f"phoneme {ph!r} is not in the channel alphabet") from None
            u = rng.random()
            if u < sub:
                if pool:
                    out.append(pool[rng.randrange(len(pool))])
                else:
                    out.append(ph)
            elif u < sub + dele:
                pass
            else:
                out.append(ph)
            if rng.random() < ins:
                out.append(self.alphabet[rng.randrange(len(self.alphabet))])
        return tuple(out)


def corrupt(
    seq: Sequence[Phoneme],
    channel: ConfusionChannel,
    alphabet: Sequence[Phoneme],
    stream: random.Random,
    cost: CostModel | None = None,
) -> PhonemeSequence:
    """Pass one phoneme sequence through the noise channel.

    Each phoneme is substituted, deleted or kept; after every position a
    random phoneme may be inserted. Substitutes are drawn uniformly from
    :func:`substitution_pool`; with a one-symbol alphabet there is nothing
    to substitute and the phoneme is kept.
    """
    return _Corrupter(channel, alphabet, cost)(seq, stream)


@dataclass(frozen=True)
class DecodeResult:
    word: Optional[str]
    best_distance: float

    @property
    def recognized(self) -> bool:
        return self.word is not None


def decode(
    observed: Sequence[Phoneme],
    active: Sequence[str],
    lexicon: Lexicon,
    cost: CostModel | None = None,
    reject_above: float = NO_REJECTION,
) -> DecodeResult:
    if not active:
        raise SimulationError("no active words to decode against")
    best_word, best = None, None
    for w in active:
        d = min(edit_distance(observed, p, cost) for p in lexicon.lookup(w))
        if best is None or d < best:
            best_word, best = w, d
    if best > reject_above + TOLERANCE:
        return DecodeResult(None, best)
    return DecodeResult(best_word, best)


class BatchDecoder:
    """Decodes many observations against one vocabulary; same rules as :func:`decode`."""

    def __init__(self, active: Sequence[str], lexicon: Lexicon, cost: CostModel | None,
                 alphabet: Sequence[Phoneme], reject_above: float = NO_REJECTION):
        if not active:
            raise SimulationError("no active words to decode against")
        self.active = list(active)
        self.prons = [lexicon.lookup(w) for w in self.active]
        self.costs = CompiledCosts(cost or UniformCost(), alphabet)
        self.reject_above = reject_above

    def distances(self, observations: Sequence[PhonemeSequence]) -> np.ndarray:
        table = np.empty((len(observations), len(self.active)))
        for k, prons in enumerate(self.prons):
            col = self.costs.batch_distance(observations, prons[0])
            for p in prons[1:]:
                col = np.minimum(col, self.costs.batch_distance(observations, p))
            table[:, k] = col
        return table

    def __call__(self, observations: Sequence[PhonemeSequence]) -> list[DecodeResult]:
        unique = list(dict.fromkeys(observations))
        if not unique:
            return []
        table = self.distances(unique)
        best_idx = np.argmin(table, axis=1)
        best = table[np.arange(len(unique)), best_idx]
        results = {}
        for obs, k, d in zip(unique, best_idx, best):
            word = self.active[k] if d <= self.reject_above + TOLERANCE else None
            results[obs] = DecodeResult(word, float(d))
        return [results[o] for o in observations]


@dataclass
class NodeSimStats:
    node: str
    labels: tuple[str, ...]
    trials_per_word: int
    confusion_counts: np.ndarray
    reject_counts: np.ndarray

    @property
    def word_accuracy(self) -> dict[str, float]:
        diag = np.diag(self.confusion_counts)
        return {w: float(c) / self.trials_per_word for w, c in zip(self.labels, diag)}

    @property
    def accuracy(self) -> float:
        total = self.trials_per_word * len(self.labels)
        return float(np.trace(self.confusion_counts)) / total if total else 1.0

    def confusion_frequency(self, a: str, b: str) -> float:
        """Symmetrized rate at which ``a`` and ``b`` are mistaken for each other."""
        i, j = self.labels.index(a), self.labels.index(b)
        c = self.confusion_counts
        return (c[i, j] + c[j, i]) / (2.0 * self.trials_per_word)

    def to_csv(self) -> str:
        return matrix_to_csv(self.labels, self.confusion_counts)

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "labels": list(self.labels),
            "trials_per_word": self.trials_per_word,
            "confusion_counts": self.confusion_counts.tolist(),
            "reject_counts": self.reject_counts.tolist(),
            "word_accuracy": self.word_accuracy,
            "accuracy": self.accuracy,
        }


def _spoken_form(lexicon: Lexicon, word: str, rng: random.Random, random_pronunciation: bool):
    prons = lexicon.lookup(word)
    if random_pronunciation:
        return prons[rng.randrange(len(prons))]
    return prons[0]


def simulate_node(
    node: Node,
    lexicon: Lexicon,
    cost: CostModel | None,
    channel: ConfusionChannel,
    trials_per_word: int,
    reject_above: float = NO_REJECTION,
    alphabet: Sequence[Phoneme] | None = None,
    random_pronunciation: bool = False,
) -> NodeSimStats:
    """Speak every active word ``trials_per_word`` times and tally the decodes.

    Trial ``t`` of word ``i`` draws from its own substream, so results do not
    depend on evaluation order.
    """
    if trials_per_word < 1:
        raise SimulationError("trials_per_word must be >= 1")
    words = node.active_words
    alphabet = alphabet or lexicon.inventory()
    noisy = _Corrupter(channel, alphabet, cost)
    decoder = BatchDecoder(words, lexicon, cost, alphabet, reject_above)
    n = len(words)
    confusion = np.zeros((n, n), dtype=np.int64)
    rejects = np.zeros(n, dtype=np.int64)
    index = {w: k for k, w in enumerate(words)}
    for i, word in enumerate(words):
        observations = []
        for t in range(trials_per_word):
            rng = substream(channel.rng_seed, "node", node.id, i, t)
            spoken = _spoken_form(lexicon, word, rng, random_pronunciation)
            observations.append(noisy(spoken, rng))
        for result in decoder(observations):
            if result.recognized:
                confusion[i, index[result.word]] += 1
            else:
                rejects[i] += 1
    return NodeSimStats(node.id, tuple(words), trials_per_word, confusion, rejects)


def bootstrap_ci(outcomes, level: float = 0.95, resamples: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of ``outcomes``."""
    data = np.asarray(outcomes, dtype=float)
    if data.size == 0:
        return (float("nan"), float("nan"))
    rng = np.random.default_rng(seed)
    means = np.empty(resamples)
    for r in range(resamples):
        means[r] = data[rng.integers(0, data.size, data.size)].mean()
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return (float(lo), float(hi))


@dataclass
class TransactionReport:
    trials: int
    outcomes: np.ndarray
    depth_trials: list[int]
    depth_correct: list[int]
    ci: tuple[float, float] = field(default=(float("nan"), float("nan")))

    @property
    def completion_rate(self) -> float:
        return float(self.outcomes.mean()) if self.trials else float("nan")

    @property
    def depth_accuracy(self) -> list[float]:
        return [c / n if n else float("nan") for c, n in zip(self.depth_correct, self.depth_trials)]

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": int(self.outcomes.sum()),
            "completion_rate": self.completion_rate,
            "completion_rate_ci95": list(self.ci),
            "depth": [
                {"depth": d + 1, "trials": n, "correct": c, "accuracy": c / n if n else None}
                for d, (n, c) in enumerate(zip(self.depth_trials, self.depth_correct))
            ],
        }


def simulate_transactions(
    flow: CallFlow,
    lexicon: Lexicon,
    cost: CostModel | None,
    channel: ConfusionChannel,
    trials: int,
    reject_above: float = NO_REJECTION,
    alphabet: Sequence[Phoneme] | None = None,
    random_pronunciation: bool = False,
    bootstrap_resamples: int = 2000,
) -> TransactionReport:
    """Estimate the fraction of transactions recognized correctly end to end.

    Every trial follows a uniformly chosen entry-to-terminal path and speaks
    a uniformly chosen surface form of each service on it. The trial counts
    as a success only if every node decodes to a word of the intended
    service.
    """
    if trials < 1:
        raise SimulationError("trials must be >= 1")
    paths = enumerate_paths(flow)
    if not paths:
        raise SimulationError("call flow has no complete paths")
    alphabet = alphabet or lexicon.inventory()
    noisy = _Corrupter(channel, alphabet, cost)

    # (trial, depth, intended service) grouped per node for batched decoding
    pending: dict[str, list[tuple[int, int, str, PhonemeSequence]]] = {}
    lengths = []
    for t in range(trials):
        rng = substream(channel.rng_seed, "transaction", t)
        path = paths[rng.randrange(len(paths))]
        lengths.append(len(path))
        for depth, (node_id, service_id) in enumerate(path):
            service = flow.nodes[node_id].service(service_id)
            word = service.surface_forms[rng.randrange(len(service.surface_forms))]
            spoken = _spoken_form(lexicon, word, rng, random_pronunciation)
            pending.setdefault(node_id, []).append((t, depth, service_id, noisy(spoken, rng)))

    ok = np.ones(trials, dtype=bool)
    max_depth = max(lengths)
    depth_trials = [sum(1 for n in lengths if n > d) for d in range(max_depth)]
    depth_correct = [0] * max_depth
    for node_id in sorted(pending):
        node = flow.nodes[node_id]
        items = pending[node_id]
        decoder = BatchDecoder(node.active_words, lexicon, cost, alphabet, reject_above)
        results = decoder([obs for _, _, _, obs in items])
        for (t, depth, service_id, _), res in zip(items, results):
            if res.recognized and node.service_of(res.word).id == service_id:
                depth_correct[depth] += 1
            else:
                ok[t] = False
    report = TransactionReport(trials, ok.astype(np.int64), depth_trials, depth_correct)
    report.ci = bootstrap_ci(report.outcomes, resamples=bootstrap_resamples, seed=channel.rng_seed)
    return report


def correlate(matrix: DistanceMatrix, stats: NodeSimStats) -> float:
    """Spearman correlation between pair distance and symmetrized confusion rate."""
    if sorted(matrix.labels) != sorted(stats.labels):
        raise SimulationError("matrix and simulation cover different words")
    labels = stats.labels
    distances, rates = [], []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            distances.append(matrix.get(labels[i], labels[j]))
            rates.append(stats.confusion_frequency(labels[i], labels[j]))
    if len(distances) < 3:
        raise SimulationError("need at least 3 word pairs for a rank correlation")
    return spearman(distances, rates)


def spearman(x, y) -> float:
    """Rank correlation with average ranks for ties; 0.0 if either side is constant."""
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return 0.0
    return float(np.clip((rx * ry).sum() / denom, -1.0, 1.0))
