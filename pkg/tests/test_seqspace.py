import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmeasure.errors import ConfigError
from gmeasure.seqspace import (
    Alphabet,
    Context,
    agree_depth,
    concat,
    coordinate,
    format_context,
    parse_context,
    prepend,
)

symbols = st.integers(-5, 5)
contexts = st.builds(
    Context,
    st.lists(symbols, max_size=8),
    st.lists(symbols, min_size=1, max_size=3),
)


def test_coordinate_examples():
    c = Context([3, 1], [0])
    assert coordinate(c, 1) == 1
    assert coordinate(c, 99) == 0
    assert coordinate(Context([], [1, 2]), 3) == 2


def test_prepend_example():
    c = prepend(5, Context([1], [0]))
    assert c == Context([5, 1], [0])


@given(symbols, contexts)
def test_prepend_shifts_coordinates(s, ctx):
    p = prepend(s, ctx)
    assert coordinate(p, 0) == s
    for i in range(15):
        assert coordinate(p, i + 1) == coordinate(ctx, i)


@given(symbols, symbols, contexts)
def test_double_prepend(s, t, ctx):
    assert coordinate(prepend(t, prepend(s, ctx)), 2) == coordinate(ctx, 0)


def test_agree_depth_examples():
    x = Context([1, 2, 3], [0])
    assert agree_depth(x, Context([1, 2, 3], [0])) == math.inf
    assert agree_depth(x, Context([1, 2, 4], [0])) == 1
    assert agree_depth(Context([2], [0]), Context([3], [0])) == -1


def test_agree_depth_sees_through_representation():
    # same sequence, different head/tail split
    assert agree_depth(Context([1, 2], [1, 2]), Context.periodic([1, 2])) == math.inf
    assert agree_depth(Context.const(0), Context([0] * 10, [0, 0, 0, 1])) == 12


@given(contexts, contexts)
def test_agree_depth_symmetric(x, y):
    assert agree_depth(x, y) == agree_depth(y, x)


@given(symbols, contexts, contexts)
def test_agree_depth_prepend(s, x, y):
    assert agree_depth(prepend(s, x), prepend(s, y)) == agree_depth(x, y) + 1


@given(symbols, contexts, contexts)
def test_prepend_injective(s, x, y):
    if prepend(s, x) == prepend(s, y):
        assert all(coordinate(x, i) == coordinate(y, i) for i in range(30))


@given(contexts)
def test_literal_round_trip(ctx):
    back = parse_context(format_context(ctx))
    assert agree_depth(back, ctx) == math.inf


@pytest.mark.parametrize(
    "text, head, tail",
    [("const:+1", [], [1]), ("periodic:1,-1", [], [1, -1]), ("word:3,1;tail=0", [3, 1], [0]), ("word:2", [2], [0])],
)
def test_parse_context(text, head, tail):
    c = parse_context(text)
    assert c.head.tolist() == head and list(c.tail) == tail


@pytest.mark.parametrize("text", ["const", "const:1,2", "periodic:", "word:1;tail=", "foo:1", "word:a"])
def test_parse_context_rejects(text):
    with pytest.raises(ConfigError):
        parse_context(text)


def test_context_is_immutable_value():
    c = Context([1, 2], [0])
    with pytest.raises((AttributeError, ValueError)):
        c.head[0] = 7
    assert hash(c) == hash(Context([1, 2], [0]))
    assert concat([4], c) == Context([4, 1, 2], [0])


def test_integer_alphabet_order():
    z = Alphabet("integers")
    assert [z.symbol_at(r) for r in range(5)] == [0, 1, -1, 2, -2]
    assert all(z.rank(z.symbol_at(r)) == r for r in range(50))
    assert z.truncate(2) == (0, 1, -1, 2, -2)
    assert z.order_name == "0,+1,-1,+2,-2,..."
    n = Alphabet("naturals")
    assert n.truncate(3) == (0, 1, 2, 3) and -1 not in n


def test_random_symbols_in_alphabet():
    rng = np.random.default_rng(0)
    for a in (Alphabet.range(3), Alphabet("naturals"), Alphabet("integers")):
        assert all(int(s) in a for s in a.random_symbols(rng, 200))
