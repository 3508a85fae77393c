"""Query matching, counting, and shape classification."""

import pytest

from litecount.cq import (
    CQAtom,
    ConjunctiveQuery,
    Const,
    CountAnswer,
    Var,
    answers,
    boolify,
    classify_shape,
    count_matches,
    gaifman,
    is_wildcard,
    matches,
)
from litecount.interp import AnnotatedInterpretation, Anon, Interpretation, Named
from litecount.syntax import SyntaxError_
from litecount.textio import parse_cq

x, y, z = Var("x"), Var("y"), Var("z")
a, b, c = Named("a"), Named("b"), Named("c")


def test_terms():
    assert str(Var("x")) == "x" and str(Const("a")) == "'a'"
    with pytest.raises(SyntaxError_):
        Const("not ok")
    assert is_wildcard(Var("_1")) and not is_wildcard(Var("x"))


def test_atom_validation():
    with pytest.raises(SyntaxError_):
        CQAtom("P", (x, y, z))
    with pytest.raises(SyntaxError_):
        CQAtom("", (x,))
    assert CQAtom("P", (x, Const("a"))).variables() == (x,)


def test_query_dedup_and_head_checks():
    q = ConjunctiveQuery((x,), (CQAtom("A", (x,)), CQAtom("A", (x,))))
    assert len(q.body) == 1
    with pytest.raises(SyntaxError_):
        ConjunctiveQuery((x, x), (CQAtom("A", (x,)),))
    with pytest.raises(SyntaxError_):
        ConjunctiveQuery((y,), (CQAtom("A", (x,)),))
    with pytest.raises(SyntaxError_):
        ConjunctiveQuery((), ())


def test_variables_in_first_occurrence_order():
    q = parse_cq("q() :- R(y,x), S(x,z).")
    assert q.variables() == (Var("y"), Var("x"), Var("z"))


def test_gaifman_edges():
    q = parse_cq("q() :- R(x,y), A(z).")
    g = gaifman(q)
    assert g.components() == [{"x", "y"}, {"z"}] or g.components() == [{"z"}, {"x", "y"}]
    assert g.degree("x") == 1


def test_shape_words():
    cases = [
        ("q(x) :- A(x), R(x,y), S(y,z).", "connected acyclic linear rooted"),
        ("q() :- A(x), R(x,y), S(y,z).", "connected acyclic linear unrooted"),
        ("q(x) :- R(x,y), R(x,z).", "connected acyclic linear rooted"),
        ("q(x) :- R(x,y), R(x,z), R(x,w).", "connected acyclic branching rooted"),
        ("q() :- R(x,y), S(y,z), R(z,x).", "connected cyclic linear unrooted"),
        ("q(x) :- A(x), B(y).", "disconnected acyclic linear unrooted"),
        ("q(x,y) :- A(x), B(y).", "disconnected acyclic linear rooted"),
        ("q(x) :- A(x).", "connected acyclic linear rooted atomic"),
        ("q() :- R(x,x).", "connected cyclic linear unrooted atomic"),
    ]
    for text, words in cases:
        assert classify_shape(parse_cq(text)).words() == words, text


def test_shape_constants_anchor_components():
    # the component without distinguished variables touches a constant
    q = parse_cq("q(x) :- A(x), R(y,'c').")
    assert classify_shape(q).rooted
    assert not classify_shape(parse_cq("q(x) :- A(x), R(y,z).")).rooted


def test_shape_variable_free_query():
    q = parse_cq("q() :- A('a').")
    r = classify_shape(q)
    assert r.connected and r.acyclic and r.linear and r.rooted and r.atomic


def chain_interp():
    """a -R-> b -S-> {b1 b2}, plus an anonymous R-successor of a."""
    w = Anon(1, 0)
    return Interpretation(
        domain={a, b, Named("b1"), Named("b2"), w},
        concepts={"A": {a}},
        roles={
            "R": {(a, b), (a, w)},
            "S": {(b, Named("b1")), (b, Named("b2"))},
        },
    )


def test_matches_and_answers():
    q = parse_cq("q(x) :- A(x), R(x,y).")
    i = chain_interp()
    ms = list(matches(q, i))
    assert len(ms) == 2  # y -> b and y -> anon
    assert answers(q, i) == [CountAnswer((a,), 2)]


def test_answers_skip_anonymous_bindings():
    q = parse_cq("q(y) :- R(x,y).")
    i = chain_interp()
    # the anonymous R-successor matches the body but is no certain binding
    assert answers(q, i) == [CountAnswer((b,), 1)]


def test_answers_weight_by_multiplicity():
    w = Anon(1, 0)
    i = AnnotatedInterpretation(
        domain={a, w},
        concepts={"A": {a}},
        roles={"R": {(a, w)}},
        cards={w: 3},
    )
    q = parse_cq("q(x) :- A(x), R(x,y).")
    assert answers(q, i) == [CountAnswer((a,), 3)]


def test_answers_multiply_components():
    i = Interpretation(
        domain={a, b, c},
        concepts={"A": {a}, "B": {b, c}},
    )
    q = parse_cq("q(x) :- A(x), B(y).")
    assert answers(q, i) == [CountAnswer((a,), 2)]


def test_constants_in_body():
    i = chain_interp()
    q = parse_cq("q() :- S(b,y).", individuals=["b"])
    assert answers(q, i) == [CountAnswer((), 2)]
    q2 = parse_cq("q() :- S(b1,y).", individuals=["b1"])
    assert answers(q2, i) == []


def test_count_matches_equals_len_matches():
    i = chain_interp()
    for text in (
        "q() :- A(x), R(x,y).",
        "q() :- R(x,y), S(y,z).",
        "q() :- A(x), B(y).",
        "q() :- S(x,y).",
    ):
        q = parse_cq(text)
        assert count_matches(q, i) == len(list(matches(q, i)))


def test_count_matches_cap_semantics():
    i = chain_interp()
    q = parse_cq("q() :- R(x,y), S(x2,y2).")  # 2 * 2 = 4 matches
    assert count_matches(q, i) == 4
    assert count_matches(q, i, cap=10) == 4  # below the cap: exact
    capped = count_matches(q, i, cap=3)
    assert capped >= 3  # at the cap: only a lower-bound promise
    # an empty component zeroes the product even with a tiny cap
    q0 = parse_cq("q() :- R(x,y), Z(w).")
    assert count_matches(q0, i, cap=1) == 0


def test_boolify():
    q = parse_cq("q(x) :- A(x), R(x,y).")
    bq = boolify(q, {"x": "a"})
    assert bq.head == ()
    assert CQAtom("A", (Const("a"),)) in bq.body
    i = chain_interp()
    assert count_matches(bq, i) == 2
