import json

import pytest
from hypothesis import given, strategies as st

from asrlint import fixtures
from asrlint.callflow import (
    CYCLE,
    DANGLING_TRANSITION,
    DUPLICATE_WORD_AT_NODE,
    EMPTY_NODE,
    UNKNOWN_WORD,
    UNREACHABLE_NODE,
    CallFlow,
    CallFlowError,
    Node,
    Service,
    enumerate_paths,
    parse_callflow,
    perplexity,
    validate,
)
from asrlint.lexicon import parse_lexicon
from oracles import count_paths


def flow_json(nodes, entry="a"):
    return json.dumps({"entry": entry, "nodes": nodes})


def svc(id, words, next=None):
    d = {"id": id, "words": words}
    if next:
        d["next"] = next
    return d


LEX = parse_lexicon("w1 A\nw2 B\nw3 C\nw4 D\n")


def test_railway_fixture(railway, table1):
    assert railway.entry == "service"
    node = railway.nodes["service"]
    assert [s.id for s in node.services] == [
        "fare", "arrival", "departure", "ticket_availability", "pnr_status"
    ]
    assert perplexity(node) == 14
    assert validate(railway, table1) == []


def test_banking_fixture_is_clean():
    lex = parse_lexicon(fixtures.data_path("banking.lex").read_text())
    flow = parse_callflow(fixtures.data_path("banking.json").read_text())
    assert validate(flow, lex) == []
    assert perplexity(flow.nodes["product"]) == 6


def test_single_terminal_node():
    flow = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1"])]}}))
    assert validate(flow, LEX) == []
    assert enumerate_paths(flow) == [(("a", "s"),)]
    assert perplexity(flow.nodes["a"]) == 1


def test_zero_services():
    flow = parse_callflow(flow_json({"a": {"services": []}}))
    assert perplexity(flow.nodes["a"]) == 0
    assert [d.code for d in validate(flow, LEX)] == [EMPTY_NODE]
    assert enumerate_paths(flow) == []


def test_dangling_transition_is_deferred_to_validate():
    flow = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1"], "ghost")]}}))
    diags = validate(flow, LEX)
    assert [d.code for d in diags] == [DANGLING_TRANSITION]
    with pytest.raises(CallFlowError):
        enumerate_paths(flow)


def test_unknown_word():
    flow = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1", "nope"])]}}))
    (d,) = validate(flow, LEX)
    assert (d.code, d.word, d.node) == (UNKNOWN_WORD, "nope", "a")


def test_duplicate_word_across_services():
    flow = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1"]), svc("t", ["w2", "w1"])]}}))
    (d,) = validate(flow, LEX)
    assert (d.code, d.word) == (DUPLICATE_WORD_AT_NODE, "w1")


def test_two_node_cycle():
    flow = parse_callflow(flow_json({
        "a": {"services": [svc("s", ["w1"], "b")]},
        "b": {"services": [svc("t", ["w2"], "a")]},
    }))
    diags = validate(flow, LEX)
    assert [d.code for d in diags] == [CYCLE]
    assert diags[0].cycle == ("a", "b")
    with pytest.raises(CallFlowError, match="cycle"):
        enumerate_paths(flow)


def test_unreachable_node():
    flow = parse_callflow(flow_json({
        "a": {"services": [svc("s", ["w1"])]},
        "orphan": {"services": [svc("t", ["w2"])]},
    }))
    assert [(d.code, d.node) for d in validate(flow, LEX)] == [(UNREACHABLE_NODE, "orphan")]


def test_validate_is_idempotent(railway, table1):
    broken = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1", "zz"], "x")]}, "b": {"services": []}}))
    assert validate(broken, LEX) == validate(broken, LEX)
    assert len(validate(broken, LEX)) == 4


@pytest.mark.parametrize(
    "text, message",
    [
        ("{", "line 1"),
        ('{"entry": "a"}', "missing key 'nodes'"),
        ('{"entry": "a", "nodes": {}}', "entry node 'a'"),
        ('{"entry": "a", "nodes": {"a": {"services": []}}, "extra": 1}', "unknown key 'extra'"),
        ('{"entry": "a", "nodes": {"a": {"services": [], "prompt": "hi"}}}', "unknown key 'prompt'"),
        ('{"entry": "a", "nodes": {"a": {"services": [{"id": "s", "words": ["w"], "go": "b"}]}}}', "unknown key 'go'"),
        ('{"entry": "a", "nodes": {"a": {"services": []}, "a": {"services": []}}}', "duplicate key 'a'"),
        ('{"entry": "a", "nodes": {"a": {"services": [{"id": "s", "words": []}]}}}', "non-empty list"),
        ('{"entry": "a", "nodes": {"a": {"services": [{"id": "s", "words": ["w"]}, {"id": "s", "words": ["v"]}]}}}',
         "duplicate service id"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(CallFlowError, match=message):
        parse_callflow(text)


def test_syntax_error_location():
    with pytest.raises(CallFlowError) as info:
        parse_callflow('{\n  "entry": "a",\n  "nodes": {,}\n}')
    assert info.value.location.startswith("line 3")


def test_three_level_flow_paths():
    # entry -> second -> third, every choice terminal at the third level
    flow = parse_callflow(flow_json({
        "a": {"services": [svc("x", ["w1"], "b"), svc("y", ["w2"], "b")]},
        "b": {"services": [svc("p", ["w3"], "c"), svc("q", ["w4"], "c")]},
        "c": {"services": [svc("m", ["w1"]), svc("n", ["w2"]), svc("o", ["w3"])]},
    }))
    paths = enumerate_paths(flow)
    assert len(paths) == 12
    assert all(len(p) == 3 for p in paths)
    assert paths[0] == (("a", "x"), ("b", "p"), ("c", "m"))
    assert paths[-1] == (("a", "y"), ("b", "q"), ("c", "o"))


def test_entry_without_transitions():
    flow = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1"]), svc("t", ["w2"])]}}))
    assert enumerate_paths(flow) == [(("a", "s"),), (("a", "t"),)]


def test_removing_words():
    flow = parse_callflow(flow_json({"a": {"services": [svc("s", ["w1", "w2"]), svc("t", ["w3"])]}}))
    reduced = flow.without_words([("a", "w2")])
    assert reduced.nodes["a"].active_words == ["w1", "w3"]
    assert flow.nodes["a"].active_words == ["w1", "w2", "w3"]


def test_to_dict_round_trip(railway):
    again = parse_callflow(json.dumps(railway.to_dict()))
    assert again == railway


@st.composite
def dags(draw):
    """Random layered flows: node k may only point at nodes with larger index."""
    n = draw(st.integers(1, 5))
    nodes = {}
    for k in range(n):
        services = []
        for s in range(draw(st.integers(1, 3))):
            nxt = draw(st.one_of(st.none(), st.integers(k + 1, n - 1))) if k + 1 < n else None
            services.append(Service(f"s{s}", (f"w{k}_{s}",), None if nxt is None else f"n{nxt}"))
        nodes[f"n{k}"] = Node(f"n{k}", tuple(services))
    return CallFlow(nodes, "n0")


@given(dags())
def test_path_count_matches_recursive_count(flow):
    paths = enumerate_paths(flow)
    assert len(paths) == count_paths(flow)
    assert (len(paths) > 0) == (len(flow.nodes["n0"].services) > 0)
    for path in paths:
        assert path[0][0] == "n0"
        last_node, last_service = path[-1]
        assert flow.nodes[last_node].service(last_service).next is None


@given(dags())
def test_perplexity_at_least_service_count(flow):
    for node in flow.nodes.values():
        assert perplexity(node) >= len(node.services)
