"""Text formats: parsers, serializers, and their round-trips."""

import pytest

from litecount.cq import CQAtom, ConjunctiveQuery, Const, Var
from litecount.focount import ExistsAtom, FOCountQuery, FORule
from litecount.interp import AnnotatedInterpretation, Anon, Interpretation, Named
from litecount.syntax import (
    ABox,
    Atomic,
    ConceptInclusion,
    Fact,
    MinCard,
    Role,
    RoleInclusion,
    SyntaxError_,
    TBox,
    exists,
)
from litecount.textio import (
    parse_abox,
    parse_cq,
    parse_concept,
    parse_focount,
    parse_focount_set,
    parse_interpretation,
    parse_role,
    parse_tbox,
    serialize_abox,
    serialize_cq,
    serialize_focount,
    serialize_focount_set,
    serialize_interpretation,
    serialize_tbox,
)


def test_parse_concept_tokens():
    assert parse_concept("A") == Atomic("A")
    assert parse_concept("exists P") == MinCard(1, Role("P"))
    assert parse_concept("exists P-") == MinCard(1, Role("P", True))
    assert parse_concept(">=3 P-") == MinCard(3, Role("P", True))
    assert parse_concept(">= 2 P") == MinCard(2, Role("P"))
    with pytest.raises(SyntaxError_):
        parse_concept(">=0 P")
    with pytest.raises(SyntaxError_):
        parse_concept("exists P Q")


def test_parse_role_tokens():
    assert parse_role("P") == Role("P")
    assert parse_role("P-") == Role("P", True)
    with pytest.raises(SyntaxError_):
        parse_role("P--")


def test_tbox_spec_forms():
    t = parse_tbox("A sub >=2 P1\nexists P1- sub >=3 P2\n")
    assert t.axioms == (
        ConceptInclusion(Atomic("A"), MinCard(2, Role("P1"))),
        ConceptInclusion(MinCard(1, Role("P1", True)), MinCard(3, Role("P2"))),
    )


def test_tbox_disjointness_line():
    t = parse_tbox("T disj F\n")
    (ax,) = t.axioms
    assert ax.negated_rhs and ax.lhs == Atomic("T") and ax.rhs == Atomic("F")


def test_tbox_bare_sub_defaults_to_concepts():
    t = parse_tbox("X sub Y\n")
    assert t.axioms == (ConceptInclusion(Atomic("X"), Atomic("Y")),)


def test_tbox_role_evidence_from_exists():
    # P is used under exists elsewhere, so `P sub Q` is a role inclusion
    # and Q becomes a role transitively
    t = parse_tbox("A sub exists P\nP sub Q\n")
    assert RoleInclusion(Role("P"), Role("Q")) in t.axioms


def test_tbox_role_evidence_from_inverse_marker():
    t = parse_tbox("P- sub Q-\n")
    assert t.axioms == (RoleInclusion(Role("P", True), Role("Q", True)),)
    # construction normalizes to a plain rhs, so this equals P sub Q
    assert t.axioms == (RoleInclusion(Role("P"), Role("Q")),)


def test_tbox_role_hints():
    plain = parse_tbox("P sub Q\n")
    hinted = parse_tbox("P sub Q\n", role_hints=["P"])
    assert isinstance(plain.axioms[0], ConceptInclusion)
    assert hinted.axioms == (RoleInclusion(Role("P"), Role("Q")),)


def test_tbox_mixed_side_rejected():
    with pytest.raises(SyntaxError_):
        parse_tbox("exists P sub Q-\n")


def test_tbox_junk_rejected():
    with pytest.raises(SyntaxError_):
        parse_tbox("A equals B\n")


def test_serialize_tbox_pins_bare_role_inclusions():
    t = TBox((RoleInclusion(Role("P"), Role("Q")),))
    text = serialize_tbox(t)
    assert text == "P- sub Q-\n"
    assert parse_tbox(text) == t
    # with hints promised from an ABox, no pinning needed
    assert serialize_tbox(t, role_hints=["P"]) == "P sub Q\n"


def test_serialize_tbox_skips_pinning_when_evidence_exists():
    t = TBox(
        (
            ConceptInclusion(Atomic("A"), exists(Role("P"))),
            RoleInclusion(Role("P"), Role("Q")),
        )
    )
    text = serialize_tbox(t)
    assert "P sub Q\n" in text and "P- sub Q-" not in text
    assert parse_tbox(text) == t


def test_tbox_round_trip_on_samples():
    samples = [
        TBox(),
        TBox((ConceptInclusion(Atomic("A"), MinCard(3, Role("P", True))),)),
        TBox(
            (
                ConceptInclusion(Atomic("T"), Atomic("F"), negated_rhs=True),
                RoleInclusion(Role("P_T"), Role("P")),
                ConceptInclusion(exists(Role("P_T")), Atomic("T")),
            )
        ),
    ]
    for t in samples:
        assert parse_tbox(serialize_tbox(t)) == t


def test_tbox_comments_and_blank_lines():
    t = parse_tbox("# header\n\nA sub B  # trailing\n")
    assert t.axioms == (ConceptInclusion(Atomic("A"), Atomic("B")),)


def test_abox_round_trip():
    ab = ABox((Fact("A", ("a",)), Fact("P1", ("a", "b")), Fact("P2", ("b", "d"))))
    assert parse_abox(serialize_abox(ab)) == ab
    assert serialize_abox(ab) == "A(a)\nP1(a,b)\nP2(b,d)\n"


def test_abox_rejects_junk():
    with pytest.raises(SyntaxError_):
        parse_abox("A(a\n")
    with pytest.raises(SyntaxError_):
        parse_abox("P(a,b,c)\n")


def test_cq_spec_example():
    q = parse_cq("q(x) :- A(x), P1(x,y1), P2(y1,y2).")
    assert q.head == (Var("x"),)
    assert q.body == (
        CQAtom("A", (Var("x"),)),
        CQAtom("P1", (Var("x"), Var("y1"))),
        CQAtom("P2", (Var("y1"), Var("y2"))),
    )


def test_cq_boolean_and_terms():
    q = parse_cq("q() :- P(x, 'a'), A(b).", individuals=["b"])
    assert q.head == ()
    assert q.body[0].args == (Var("x"), Const("a"))
    # a bare token naming a known individual is a constant
    assert q.body[1].args == (Const("b"),)


def test_cq_wildcards_are_fresh():
    q = parse_cq("q() :- P(_, _).")
    a1, a2 = q.body[0].args
    assert a1 != a2


def test_cq_head_var_must_occur():
    with pytest.raises(SyntaxError_):
        parse_cq("q(z) :- A(x).")


def test_cq_round_trip():
    for text in (
        "q(x) :- A(x), P1(x,y1), P2(y1,y2).",
        "q() :- T(g1).",
        "q(x,y0) :- R(x,y0), S(y0,'c').",
    ):
        q = parse_cq(text)
        assert parse_cq(serialize_cq(q)) == q


def test_focount_round_trip_and_shape():
    x, y1 = Var("x"), Var("y1")
    rule = FORule(
        head_group=(x,),
        head_agg=(y1,),
        pos=(CQAtom("A", (x,)), CQAtom("P1", (x, y1))),
        exists=(ExistsAtom(2, Role("P2"), y1, Var("y2")),),
    )
    q = FOCountQuery((x,), (y1,), 2, (rule,))
    text = serialize_focount(q)
    assert text.splitlines()[0] == "Q(x ; count(y1) * 2)"
    assert "exists=2 y2: P2(y1,y2)" in text
    assert parse_focount(text) == q


def test_focount_set_blank_line_separated():
    x = Var("x")
    q1 = FOCountQuery((x,), (), 1, (FORule((x,), (), (CQAtom("A", (x,)),)),))
    q2 = FOCountQuery((x,), (), 3, (FORule((x,), (), (CQAtom("B", (x,)),)),))
    text = serialize_focount_set([q1, q2])
    assert parse_focount_set(text) == (q1, q2)


def test_focount_negated_and_equality_atoms():
    text = "Q(x ; count() * 1)\nq(x :) :- A(x), not B(x), x = 'a'.\n"
    q = parse_focount(text)
    (rule,) = q.rules
    assert rule.neg == (CQAtom("B", (Var("x"),)),)
    assert rule.eq == ((Var("x"), Const("a")),)
    assert parse_focount(serialize_focount(q)) == q


def test_focount_rejects_misaligned_header():
    with pytest.raises(SyntaxError_):
        parse_focount("Q(x ; count(y) * 1)\nq(x :) :- A(x).\n")


def test_interpretation_round_trip_plain():
    i = Interpretation(
        domain={Named("a"), Named("b"), Anon(1, 0), Named("lonely")},
        concepts={"A": {Named("a")}},
        roles={"P": {(Named("a"), Anon(1, 0)), (Named("a"), Named("b"))}},
    )
    text = serialize_interpretation(i)
    assert "A(a)" in text and "P(a,_:g1_0)" in text
    assert "lonely" in text.split()  # isolated element gets a bare line
    assert parse_interpretation(text) == i


def test_interpretation_round_trip_annotated():
    i = AnnotatedInterpretation(
        domain={Named("a"), Anon(1, 0)},
        concepts={"A": {Named("a")}},
        roles={"P": {(Named("a"), Anon(1, 0))}},
        cards={Anon(1, 0): 3},
    )
    text = serialize_interpretation(i)
    assert "_:g1_0 @card=3" in text
    back = parse_interpretation(text)
    assert isinstance(back, AnnotatedInterpretation)
    assert back == i


def test_interpretation_forced_annotated_flag():
    back = parse_interpretation("A(a)\n", annotated=True)
    assert isinstance(back, AnnotatedInterpretation)
    assert back.card(Named("a")) == 1


def test_interpretation_rejects_junk():
    with pytest.raises(SyntaxError_):
        parse_interpretation("P(a,b,c)\n")
    with pytest.raises(SyntaxError_):
        parse_interpretation("not a line at all !\n")


def test_serializers_end_with_newline():
    assert serialize_abox(ABox((Fact("A", ("a",)),))).endswith("\n")
    assert serialize_tbox(TBox((ConceptInclusion(Atomic("A"), Atomic("B")),))).endswith("\n")
    assert serialize_cq(parse_cq("q() :- A(x).")).endswith("\n")
