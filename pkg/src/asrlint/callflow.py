"""Menu call flows: recognition nodes, the services offered at each, and the
transitions between them.

Call-flow files are JSON::

    {
      "entry": "service",
      "nodes": {
        "service": {
          "services": [
            {"id": "fare", "words": ["kiraya", "fare"], "next": "train"},
            {"id": "pnr", "words": ["p_n_r"]}
          ]
        },
        "train": {"services": [{"id": "rajdhani", "words": ["rajdhani"]}]}
      }
    }

A service without ``next`` ends the transaction. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional, TextIO, Union

from .lexicon import Lexicon

UNKNOWN_WORD = "UNKNOWN_WORD"
DUPLICATE_WORD_AT_NODE = "DUPLICATE_WORD_AT_NODE"
UNREACHABLE_NODE = "UNREACHABLE_NODE"
CYCLE = "CYCLE"
EMPTY_NODE = "EMPTY_NODE"
DANGLING_TRANSITION = "DANGLING_TRANSITION"

Path = tuple[tuple[str, str], ...]


class CallFlowError(ValueError):
    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Service:
    id: str
    surface_forms: tuple[str, ...]
    next: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "surface_forms", tuple(self.surface_forms))
        if not self.surface_forms:
            raise CallFlowError(f"service {self.id!r} has no words")


@dataclass(frozen=True)
class Node:
    id: str
    services: tuple[Service, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        ids = [s.id for s in self.services]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise CallFlowError(f"duplicate service id {dupes[0]!r} at node {self.id!r}")

    @property
    def transitions(self) -> dict[str, str]:
        return {s.id: s.next for s in self.services if s.next is not None}

    @property
    def active_words(self) -> list[str]:
        """Every surface form at the node, in declaration order."""
        return [w for s in self.services for w in s.surface_forms]

    def service(self, service_id: str) -> Service:
        for s in self.services:
            if s.id == service_id:
                return s
        raise KeyError(service_id)

    def service_of(self, word: str) -> Service:
        for s in self.services:
            if word in s.surface_forms:
                return s
        raise KeyError(word)

    def without_words(self, words: Iterable[str]) -> "Node":
        drop = set(words)
        return Node(
            self.id,
            tuple(
                Service(s.id, tuple(w for w in s.surface_forms if w not in drop), s.next)
                for s in self.services
            ),
        )


@dataclass(frozen=True)
class CallFlow:
    nodes: Mapping[str, Node]
    entry: str

    def __post_init__(self):
        object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))
        if self.entry not in self.nodes:
            raise CallFlowError(f"entry node {self.entry!r} is not defined")

    def reachable(self) -> list[str]:
        """Node ids reachable from the entry, in discovery order."""
        seen = [self.entry]
        stack = [self.entry]
        while stack:
            node = self.nodes[stack.pop()]
            for s in node.services:
                if s.next in self.nodes and s.next not in seen:
                    seen.append(s.next)
                    stack.append(s.next)
        return seen

    def without_words(self, removals: Iterable[tuple[str, str]]) -> "CallFlow":
        by_node: dict[str, set[str]] = {}
        for node_id, word in removals:
            by_node.setdefault(node_id, set()).add(word)
        nodes = {
            nid: node.without_words(by_node[nid]) if nid in by_node else node
            for nid, node in self.nodes.items()
        }
        return CallFlow(nodes, self.entry)

    def to_dict(self) -> dict:
        nodes = {}
        for nid, node in self.nodes.items():
            services = []
            for s in node.services:
                d = {"id": s.id, "words": list(s.surface_forms)}
                if s.next is not None:
                    d["next"] = s.next
                services.append(d)
            nodes[nid] = {"services": services}
        return {"entry": self.entry, "nodes": nodes}


def perplexity(node: Node) -> int:
    """Number of active surface forms, summed over the node's services."""
    return sum(len(s.surface_forms) for s in node.services)


def _no_duplicate_keys(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise CallFlowError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _check_keys(obj, allowed: set, required: set, where: str):
    if not isinstance(obj, dict):
        raise CallFlowError("expected an object", where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise CallFlowError(f"unknown key {unknown[0]!r}", where)
    missing = sorted(required - set(obj))
    if missing:
        raise CallFlowError(f"missing key {missing[0]!r}", where)


def _string(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise CallFlowError("expected a non-empty string", where)
    return value


def parse_callflow(source: Union[str, TextIO]) -> CallFlow:
    text = source if isinstance(source, str) else source.read()
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise CallFlowError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    _check_keys(data, {"entry", "nodes"}, {"entry", "nodes"}, "<root>")
    entry = _string(data["entry"], "entry")
    if not isinstance(data["nodes"], dict):
        raise CallFlowError("expected an object", "nodes")
    nodes = {}
    for node_id, raw_node in data["nodes"].items():
        where = f"nodes.{node_id}"
        _string(node_id, where)
        _check_keys(raw_node, {"services"}, {"services"}, where)
        if not isinstance(raw_node["services"], list):
            raise CallFlowError("expected a list", f"{where}.services")
        services = []
        for k, raw in enumerate(raw_node["services"]):
            swhere = f"{where}.services[{k}]"
            _check_keys(raw, {"id", "words", "next"}, {"id", "words"}, swhere)
            words = raw["words"]
            if not isinstance(words, list) or not words:
                raise CallFlowError("expected a non-empty list of words", f"{swhere}.words")
            words = tuple(_string(w, f"{swhere}.words[{i}]") for i, w in enumerate(words))
            nxt = _string(raw["next"], f"{swhere}.next") if raw.get("next") is not None else None
            services.append(Service(_string(raw["id"], f"{swhere}.id"), words, nxt))
        try:
            nodes[node_id] = Node(node_id, tuple(services))
        except CallFlowError as exc:
            raise CallFlowError(str(exc), where) from None
    if entry not in nodes:
        raise CallFlowError(f"entry node {entry!r} is not defined", "entry")
    return CallFlow(nodes, entry)


def load_callflow(path) -> CallFlow:
    with open(path, encoding="utf-8") as fh:
        return parse_callflow(fh)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    node: str
    message: str
    word: Optional[str] = None
    cycle: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {"code": self.code, "node": self.node, "message": self.message}
        if self.word is not None:
            d["word"] = self.word
        if self.cycle:
            d["cycle"] = list(self.cycle)
        return d

    def __str__(self):
        return f"{self.code} [{self.node}] {self.message}"


def _find_cycles(flow: CallFlow) -> list[tuple[str, ...]]:
    cycles = []
    seen_keys = set()
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(nid):
        state[nid] = 1
        stack.append(nid)
        for s in flow.nodes[nid].services:
            nxt = s.next
            if nxt not in flow.nodes:
                continue
            if state.get(nxt) == 1:
                cyc = tuple(stack[stack.index(nxt):])
                pivot = cyc.index(min(cyc))
                key = cyc[pivot:] + cyc[:pivot]
                if key not in seen_keys:
                    seen_keys.add(key)
                    cycles.append(key)
            elif nxt not in state:
                visit(nxt)
        stack.pop()
        state[nid] = 2

    for nid in flow.nodes:
        if nid not in state:
            visit(nid)
    return cycles


def validate(flow: CallFlow, lexicon: Lexicon) -> list[Diagnostic]:
    diags = []
    for nid, node in flow.nodes.items():
        if not node.services:
            diags.append(Diagnostic(EMPTY_NODE, nid, "node has no services"))
        words = node.active_words
        reported = set()
        for w in words:
            if words.count(w) > 1 and w not in reported:
                reported.add(w)
                diags.append(Diagnostic(
                    DUPLICATE_WORD_AT_NODE, nid, f"{w!r} is active {words.count(w)} times", w
                ))
        for w in dict.fromkeys(words):
            if w not in lexicon:
                diags.append(Diagnostic(UNKNOWN_WORD, nid, f"{w!r} is not in the lexicon", w))
        for s in node.services:
            if s.next is not None and s.next not in flow.nodes:
                diags.append(Diagnostic(
                    DANGLING_TRANSITION, nid,
                    f"service {s.id!r} leads to undefined node {s.next!r}",
                ))
    reachable = set(flow.reachable())
    for nid in flow.nodes:
        if nid not in reachable:
            diags.append(Diagnostic(UNREACHABLE_NODE, nid, "not reachable from the entry node"))
    for cyc in _find_cycles(flow):
        diags.append(Diagnostic(CYCLE, cyc[0], "cycle " + " -> ".join(cyc + cyc[:1]), cycle=cyc))
    return diags


def enumerate_paths(flow: CallFlow) -> list[Path]:
    """All entry-to-terminal service choices, depth first in declaration order."""
    paths: list[Path] = []

    def walk(nid, prefix, on_stack):
        for s in flow.nodes[nid].services:
            step = prefix + ((nid, s.id),)
            if s.next is None:
                paths.append(step)
            elif s.next not in flow.nodes:
                raise CallFlowError(f"service {s.id!r} leads to undefined node {s.next!r}", nid)
            elif s.next in on_stack:
                raise CallFlowError(f"call flow has a cycle through {s.next!r}", nid)
            else:
                walk(s.next, step, on_stack | {s.next})

    walk(flow.entry, (), frozenset({flow.entry}))
    return paths
