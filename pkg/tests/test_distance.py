import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asrlint.distance import (
    CompiledCosts,
    CostModelError,
    DistanceMatrix,
    MatrixFormatError,
    TableCost,
    UniformCost,
    distance_matrix,
    edit_distance,
    load_matrix,
    parse_cost_table,
    word_distance,
)
from asrlint.lexicon import UnknownWordError, parse_lexicon
from oracles import memo_edit_distance, naive_edit_distance

ALPHABET = ["A", "B", "C", "D", "E", "F"]
seqs = st.lists(st.sampled_from(ALPHABET), max_size=8).map(tuple)
short = st.lists(st.sampled_from(ALPHABET), max_size=5).map(tuple)


def test_identity():
    x = tuple("K I R AA Y AA".split())
    assert edit_distance(x, x) == 0.0


def test_pure_insertions():
    assert edit_distance((), ("F", "AY", "R")) == 3.0


def test_sahi_galat_unit_cost():
    # oracle value: naive_edit_distance gives 4.0
    assert edit_distance("S AA HH I".split(), "G L AX tT".split()) == 4.0


def test_direction_of_insert_and_delete():
    cost = TableCost(ins={"X": 2.0}, dele={"X": 5.0}, default_sub=10.0, default_indel=10.0)
    assert edit_distance((), ("X",), cost) == 2.0
    assert edit_distance(("X",), (), cost) == 5.0
    assert edit_distance(("A",), ("A", "X"), cost) == 2.0
    assert edit_distance(("A", "X"), ("A",), cost) == 5.0


@given(short, short)
def test_matches_unmemoized_recursion(a, b):
    assert edit_distance(a, b) == naive_edit_distance(a, b)


def random_table(rng, alphabet=ALPHABET):
    sub = {(x, y): round(rng.uniform(0.1, 3.0), 3) for x in alphabet for y in alphabet if x != y}
    ins = {x: round(rng.uniform(0.2, 2.0), 3) for x in alphabet}
    dele = {x: round(rng.uniform(0.2, 2.0), 3) for x in alphabet}
    return TableCost(sub, ins, dele)


@settings(max_examples=200)
@given(seqs, seqs, st.integers(0, 2**32))
def test_matches_recursion_under_table_costs(a, b, seed):
    cost = random_table(random.Random(seed))
    expected = memo_edit_distance(a, b, cost.substitution, cost.insertion, cost.deletion)
    assert math.isclose(edit_distance(a, b, cost), expected, abs_tol=1e-9)


@given(seqs, seqs, seqs)
def test_metric_axioms_uniform(a, b, c):
    ab, ba = edit_distance(a, b), edit_distance(b, a)
    assert ab >= 0
    assert ab == ba
    assert (ab == 0) == (a == b)
    assert edit_distance(a, c) <= ab + edit_distance(b, c) + 1e-9


@given(seqs, seqs, st.sampled_from(ALPHABET))
def test_appending_same_phoneme_never_increases(a, b, ph):
    assert edit_distance(a + (ph,), b + (ph,)) <= edit_distance(a, b)


@given(st.lists(seqs, min_size=1, max_size=20), seqs, st.integers(0, 2**32))
def test_batched_distance_is_bitwise_identical(observed, target, seed):
    cost = random_table(random.Random(seed))
    compiled = CompiledCosts(cost, ALPHABET)
    got = compiled.batch_distance(observed, target)
    assert list(got) == [edit_distance(o, target, cost) for o in observed]


def test_word_distance(table1):
    assert word_distance("kiraya", "kiraya", table1) == 0.0
    # oracle over the single pronunciations: 5.0
    assert word_distance("fare", "p_n_r", table1) == 5.0
    with pytest.raises(UnknownWordError):
        word_distance("fare", "nope", table1)


def test_word_distance_takes_min_over_pronunciations():
    lex = parse_lexicon("cst | S I E S tT I\ncst | M U M B AA I\nmumbai | M U M B AA I\nsit | S I tT\n")
    d_each = [edit_distance(p, ("S", "I", "tT")) for p in lex.lookup("cst")]
    assert word_distance("cst", "sit", lex) == min(d_each)
    assert word_distance("cst", "mumbai", lex) == 0.0


def test_distance_matrix_shapes(table1):
    assert distance_matrix(["kiraya"], table1).values.tolist() == [[0.0]]
    assert distance_matrix([], table1).values.shape == (0, 0)
    with pytest.raises(UnknownWordError, match="ghost"):
        distance_matrix(["fare", "ghost"], table1)


def test_table1_matrix_structure(table1, railway):
    words = railway.nodes["service"].active_words
    m = distance_matrix(words, table1)
    assert m.values.shape == (14, 14)
    assert m.is_symmetric()
    assert np.all(np.diag(m.values) == 0)
    for i, a in enumerate(words):
        for j, b in enumerate(words):
            assert m.values[i, j] == word_distance(a, b, table1)
            expected = 0.0 if i == j else memo_edit_distance(table1.lookup(a)[0], table1.lookup(b)[0])
            assert m.values[i, j] == expected


def test_asymmetric_cost_model_gives_directed_matrix():
    lex = parse_lexicon("a | X\nb | X Y\n")
    cost = TableCost(ins={"Y": 1.0}, dele={"Y": 3.0}, default_sub=10.0, default_indel=10.0)
    assert not cost.symmetric
    m = distance_matrix(["a", "b"], lex, cost)
    assert m.get("a", "b") == 1.0 and m.get("b", "a") == 3.0


def test_load_published_matrix(table2):
    assert table2.get("fare", "p_n_r") == 5.8
    assert table2.get("prasthan", "p_n_r") == 5.2
    assert len(table2) == 14


def test_load_trivial_matrix():
    m = load_matrix("w\nw,0\n")
    assert m.labels == ("w",) and m.values.tolist() == [[0.0]]


@pytest.mark.parametrize(
    "text, message",
    [
        ("a,b\na,0,1\n", "expected 2 rows"),
        ("a,b\na,0,1\nb,1\n", "expected 3 fields"),
        ("a,b\na,0,1\nc,1,0\n", "does not match"),
        ("a,b\na,0,1\nb,1,0.5\n", "nonzero diagonal"),
        ("a,b\na,0,x\nb,1,0\n", "bad value"),
        ("a,b\na,0,-1\nb,1,0\n", ">= 0"),
        ("", "empty"),
    ],
)
def test_load_matrix_rejects(text, message):
    with pytest.raises(MatrixFormatError, match=message):
        load_matrix(text)


def test_csv_round_trip(table1):
    m = distance_matrix(["fare", "p_n_r", "kiraya"], table1)
    again = load_matrix(m.to_csv())
    assert again.labels == m.labels
    assert np.array_equal(again.values, m.values)


def test_cost_table_file():
    cost = parse_cost_table(
        """# vowels are cheap to swap
        SUB AA AX 0.3
        SUB AX AA 0.3
        INS HH 0.5
        DEL HH 0.5
        DEFAULT_SUB 1.4
        DEFAULT_INDEL 1.1
        """
    )
    assert cost.substitution("AA", "AX") == 0.3
    assert cost.substitution("AA", "K") == 1.4
    assert cost.substitution("K", "K") == 0.0
    assert cost.insertion("HH") == 0.5 and cost.deletion("Z") == 1.1
    assert cost.symmetric


@pytest.mark.parametrize(
    "text",
    ["SUB A B", "INS A 0", "DEL A -1", "SUB A A 2", "DEFAULT_INDEL 0", "WHAT 1", "SUB A B nan"],
)
def test_cost_table_rejects(text):
    with pytest.raises(CostModelError):
        parse_cost_table(text)


def test_uniform_cost_validation():
    with pytest.raises(CostModelError):
        UniformCost(indel=0)


def test_matrix_label_count_checked():
    with pytest.raises(MatrixFormatError):
        DistanceMatrix(("a", "b"), np.zeros((3, 3)))
