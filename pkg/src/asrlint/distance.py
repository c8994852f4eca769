"""Weighted edit distance over phoneme sequences and per-node distance matrices."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import TextIO, Union

import numpy as np

from .lexicon import Lexicon, Phoneme, PhonemeSequence

TOLERANCE = 1e-9


class CostModelError(ValueError):
    pass


class MatrixFormatError(ValueError):
    pass


class CostModel:
    """Edit operation costs. Subclasses override the three cost methods.

    ``substitution(a, a)`` must be 0; insertion and deletion costs must be
    strictly positive.
    """

    symmetric = True

    def substitution(self, a: Phoneme, b: Phoneme) -> float:
        raise NotImplementedError

    def insertion(self, b: Phoneme) -> float:
        raise NotImplementedError

    def deletion(self, a: Phoneme) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformCost(CostModel):
    sub: float = 1.0
    indel: float = 1.0

    def __post_init__(self):
        if self.sub < 0 or self.indel <= 0:
            raise CostModelError("substitution cost must be >= 0 and indel cost > 0")

    symmetric = True

    def substitution(self, a, b):
        return 0.0 if a == b else self.sub

    def insertion(self, b):
        return self.indel

    def deletion(self, a):
        return self.indel


@dataclass(frozen=True)
class TableCost(CostModel):
    """Costs looked up in explicit tables, falling back to defaults."""

    sub: dict = field(default_factory=dict)
    ins: dict = field(default_factory=dict)
    dele: dict = field(default_factory=dict)
    default_sub: float = 1.0
    default_indel: float = 1.0

    def __post_init__(self):
        if self.default_sub < 0 or self.default_indel <= 0:
            raise CostModelError("DEFAULT_SUB must be >= 0 and DEFAULT_INDEL > 0")
        for (a, b), c in self.sub.items():
            if c < 0:
                raise CostModelError(f"negative substitution cost {a}->{b}")
            if a == b and c != 0:
                raise CostModelError(f"substitution {a}->{a} must cost 0")
        for name, table in (("INS", self.ins), ("DEL", self.dele)):
            for ph, c in table.items():
                if c <= 0:
                    raise CostModelError(f"{name} cost for {ph} must be > 0")

    @property
    def symmetric(self) -> bool:
        for (a, b), c in self.sub.items():
            if self.substitution(b, a) != c:
                return False
        return all(self.insertion(p) == self.deletion(p) for p in set(self.ins) | set(self.dele))

    def substitution(self, a, b):
        if a == b:
            return 0.0
        return self.sub.get((a, b), self.default_sub)

    def insertion(self, b):
        return self.ins.get(b, self.default_indel)

    def deletion(self, a):
        return self.dele.get(a, self.default_indel)


def parse_cost_table(source: Union[str, TextIO, Iterable[str]]) -> TableCost:
    """Read ``SUB a b c`` / ``INS a c`` / ``DEL a c`` / ``DEFAULT_SUB c`` /
    ``DEFAULT_INDEL c`` lines. ``SUB`` entries are directional."""
    lines = source.splitlines() if isinstance(source, str) else source
    sub, ins, dele = {}, {}, {}
    defaults = {"DEFAULT_SUB": 1.0, "DEFAULT_INDEL": 1.0}
    arity = {"SUB": 3, "INS": 2, "DEL": 2, "DEFAULT_SUB": 1, "DEFAULT_INDEL": 1}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        if key not in arity or len(args) != arity[key]:
            raise CostModelError(f"line {lineno}: cannot parse {raw.strip()!r}")
        try:
            cost = float(args[-1])
        except ValueError:
            raise CostModelError(f"line {lineno}: bad cost {args[-1]!r}") from None
        if not math.isfinite(cost):
            raise CostModelError(f"line {lineno}: cost must be finite")
        if key == "SUB":
            sub[(args[0], args[1])] = cost
        elif key == "INS":
            ins[args[0]] = cost
        elif key == "DEL":
            dele[args[0]] = cost
        else:
            defaults[key] = cost
    try:
        return TableCost(sub, ins, dele, defaults["DEFAULT_SUB"], defaults["DEFAULT_INDEL"])
    except CostModelError as exc:
        raise CostModelError(f"invalid cost table: {exc}") from None


def load_cost_table(path) -> TableCost:
    with open(path, encoding="utf-8") as fh:
        return parse_cost_table(fh)


def edit_distance(a: Sequence[Phoneme], b: Sequence[Phoneme], cost: CostModel | None = None) -> float:
    """Minimum total cost of turning ``a`` into ``b``.

    Deleting a phoneme of ``a`` costs ``cost.deletion``, inserting a phoneme
    of ``b`` costs ``cost.insertion``. Two rolling rows over the shorter
    sequence keep memory at O(min(|a|, |b|)).
    """
    cost = cost or UniformCost()
    if len(b) > len(a):
        # iterate rows over the longer sequence; roles swap, so do costs
        return _rolling(b, a, cost.substitution, cost.deletion, cost.insertion, swapped=True)
    return _rolling(a, b, cost.substitution, cost.insertion, cost.deletion, swapped=False)


def _rolling(rows, cols, sub, ins, dele, swapped):
    # rows are consumed by ``dele``, columns produced by ``ins``.
    prev = [0.0]
    for c in cols:
        prev.append(prev[-1] + ins(c))
    for r in rows:
        d = dele(r)
        cur = [prev[0] + d]
        for j, c in enumerate(cols, 1):
            s = sub(c, r) if swapped else sub(r, c)
            cur.append(min(prev[j] + d, cur[j - 1] + ins(c), prev[j - 1] + s))
        prev = cur
    return float(prev[-1])


def word_distance(w1: str, w2: str, lexicon: Lexicon, cost: CostModel | None = None) -> float:
    """Smallest distance over all pronunciation pairs of the two words."""
    p1 = lexicon.lookup(w1)
    p2 = lexicon.lookup(w2)
    if w1 == w2:
        return 0.0
    return min(edit_distance(a, b, cost) for a in p1 for b in p2)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        n = len(self.labels)
        if values.shape != (n, n) and not (n == 0 and values.size == 0):
            raise MatrixFormatError(f"matrix shape {values.shape} does not match {n} labels")
        values = values.reshape(n, n)
        values.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", values)
        if len(set(self.labels)) != n:
            raise MatrixFormatError("duplicate labels")

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def get(self, a: str, b: str) -> float:
        return float(self.values[self.index(a), self.index(b)])

    def is_symmetric(self, tol: float = TOLERANCE) -> bool:
        return bool(np.allclose(self.values, self.values.T, rtol=0, atol=tol))

    def submatrix(self, labels: Sequence[str]) -> "DistanceMatrix":
        idx = [self.index(l) for l in labels]
        return DistanceMatrix(tuple(labels), self.values[np.ix_(idx, idx)])

    def to_csv(self) -> str:
        return matrix_to_csv(self.labels, self.values)


def distance_matrix(words: Sequence[str], lexicon: Lexicon, cost: CostModel | None = None) -> DistanceMatrix:
    words = list(words)
    for w in words:
        lexicon.lookup(w)
    n = len(words)
    values = np.zeros((n, n))
    symmetric = (cost or UniformCost()).symmetric
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if symmetric and j < i:
                values[i, j] = values[j, i]
            else:
                values[i, j] = word_distance(words[i], words[j], lexicon, cost)
    return DistanceMatrix(tuple(words), values)


def _fmt(value) -> str:
    return format(float(value), ".12g")


def matrix_to_csv(labels: Sequence[str], values) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(labels)
    for label, row in zip(labels, values):
        writer.writerow([label, *(_fmt(v) for v in row)])
    return buf.getvalue()


def load_matrix(source: Union[str, TextIO, Iterable[str]]) -> DistanceMatrix:
    """Parse the labeled square CSV layout written by :func:`matrix_to_csv`."""
    lines = source.splitlines() if isinstance(source, str) else source
    rows = [r for r in csv.reader(lines) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise MatrixFormatError("empty matrix file")
    labels = [c.strip() for c in rows[0]]
    body = rows[1:]
    n = len(labels)
    if len(body) != n:
        raise MatrixFormatError(f"expected {n} rows, found {len(body)}")
    values = np.zeros((n, n))
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != n + 1:
            raise MatrixFormatError(f"line {lineno}: expected {n + 1} fields, found {len(row)}")
        if row[0].strip() != labels[i]:
            raise MatrixFormatError(
                f"line {lineno}: row label {row[0].strip()!r} does not match header {labels[i]!r}"
            )
        for j, cell in enumerate(row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise MatrixFormatError(f"line {lineno}: bad value {cell!r}") from None
            if not math.isfinite(v) or v < 0:
                raise MatrixFormatError(f"line {lineno}: value {cell!r} must be finite and >= 0")
            values[i, j] = v
    for i in range(n):
        if abs(values[i, i]) > TOLERANCE:
            raise MatrixFormatError(f"nonzero diagonal at {labels[i]!r}: {values[i, i]}")
    return DistanceMatrix(tuple(labels), values)


def read_matrix(path) -> DistanceMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_matrix(fh)


class CompiledCosts:
    """Cost model tabulated over a fixed alphabet for batched distance work."""

    def __init__(self, cost: CostModel, alphabet: Sequence[Phoneme]):
        self.alphabet = list(alphabet)
        self.code = {ph: i for i, ph in enumerate(self.alphabet)}
        k = len(self.alphabet)
        self.sub = np.array(
            [[cost.substitution(a, b) for b in self.alphabet] for a in self.alphabet], dtype=float
        ).reshape(k, k)
        self.ins = np.array([cost.insertion(p) for p in self.alphabet], dtype=float)
        self.dele = np.array([cost.deletion(p) for p in self.alphabet], dtype=float)

    def encode(self, seq: Sequence[Phoneme]) -> list[int]:
        return [self.code[p] for p in seq]

    def batch_distance(self, observed: Sequence[Sequence[Phoneme]], target: Sequence[Phoneme]) -> np.ndarray:
        """edit_distance(o, target) for every o in ``observed``, vectorized."""
        n = len(observed)
        out = np.empty(n)
        if n == 0:
            return out
        lengths = np.array([len(o) for o in observed])
        width = int(lengths.max())
        codes = np.zeros((n, max(width, 1)), dtype=np.intp)
        for r, o in enumerate(observed):
            codes[r, : len(o)] = self.encode(o)
        tgt = self.encode(target)
        m = len(tgt)
        ins = self.ins[tgt]
        prev = np.empty((n, m + 1))
        prev[:, 0] = 0.0
        for j in range(1, m + 1):
            prev[:, j] = prev[:, j - 1] + ins[j - 1]
        done = lengths == 0
        out[done] = prev[done, m]
        for i in range(width):
            a = codes[:, i]
            d = self.dele[a]
            cur = np.empty_like(prev)
            cur[:, 0] = prev[:, 0] + d
            for j in range(1, m + 1):
                best = np.minimum(prev[:, j] + d, cur[:, j - 1] + ins[j - 1])
                cur[:, j] = np.minimum(best, prev[:, j - 1] + self.sub[a, tgt[j - 1]])
            prev = cur
            done = lengths == i + 1
            out[done] = prev[done, m]
        return out
