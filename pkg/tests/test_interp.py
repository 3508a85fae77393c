"""Interpretations, the restricted chase, and bounded model search."""

import itertools

import pytest

from litecount.cq import CQAtom, ConjunctiveQuery, Var, count_matches
from litecount.interp import (
    AnnotatedInterpretation,
    Anon,
    InterpError,
    Interpretation,
    Named,
    apply_function,
    element_key,
    enumerate_models,
    from_abox,
    is_model,
    is_satisfiable,
    restricted_chase,
)
from litecount.syntax import (
    ABox,
    Atomic,
    ConceptInclusion,
    Fact,
    KB,
    MinCard,
    Role,
    RoleInclusion,
    TBox,
    exists,
)

import oracles


A, B = Atomic("A"), Atomic("B")
R, S = Role("R"), Role("S")
a, b = Named("a"), Named("b")


def witness_kb():
    """T = {A sub >=2 P1, exists P1- sub >=3 P2} with one partial match in
    the data: the running two-axiom example."""
    tbox = TBox(
        (
            ConceptInclusion(Atomic("A"), MinCard(2, Role("P1"))),
            ConceptInclusion(exists(Role("P1", True)), MinCard(3, Role("P2"))),
        )
    )
    abox = ABox(
        (
            Fact("A", ("a",)),
            Fact("P1", ("a", "b")),
            Fact("P2", ("b", "d")),
            Fact("P2", ("b", "e")),
        )
    )
    return KB(tbox, abox)


def witness_query():
    x, y1, y2 = Var("x"), Var("y1"), Var("y2")
    return ConjunctiveQuery(
        (x,),
        (CQAtom("A", (x,)), CQAtom("P1", (x, y1)), CQAtom("P2", (y1, y2))),
    )


def test_from_abox():
    i = from_abox(ABox((Fact("A", ("a",)), Fact("P", ("a", "b")))))
    assert i.domain == {a, b}
    assert i.concept_ext("A") == {a}
    assert i.role_ext(Role("P")) == {(a, b)}
    assert i.role_ext(Role("P", True)) == {(b, a)}


def test_from_abox_empty_needs_dummy():
    with pytest.raises(InterpError):
        from_abox(ABox())
    i = from_abox(ABox(), dummy="_e")
    assert i.domain == {Named("_e")}
    assert not i.concepts and not i.roles


def test_in_concept_and_successors():
    i = Interpretation(
        domain={a, b, Named("c")},
        concepts={"A": {a}},
        roles={"R": {(a, b), (a, Named("c"))}},
    )
    assert i.in_concept(a, A)
    assert not i.in_concept(b, A)
    assert i.in_concept(a, MinCard(2, R))
    assert not i.in_concept(a, MinCard(3, R))
    assert i.in_concept(b, exists(R.inverse()))
    assert i.successors(a, R) == {b, Named("c")}
    assert i.successors(b, R.inverse()) == {a}


def test_annotated_cards():
    w = Anon(1, 0)
    i = AnnotatedInterpretation(
        domain={a, w}, roles={"R": {(a, w)}}, cards={w: 3}
    )
    assert i.card(w) == 3 and i.card(a) == 1
    assert i.succ_weight(a, R) == 3
    assert i.in_concept(a, MinCard(3, R))
    assert not i.in_concept(a, MinCard(4, R))
    with pytest.raises(InterpError):
        AnnotatedInterpretation(domain={a}, cards={a: 2})
    with pytest.raises(InterpError):
        AnnotatedInterpretation(domain={w}, cards={w: 0})


def test_element_ordering():
    assert element_key(Named("z")) < element_key(Anon(1, 0))
    assert element_key(Anon(1, 1)) < element_key(Anon(2, 0))
    assert str(Anon(2, 1)) == "_:g2_1"


def test_facts_stream_is_sorted_and_stable():
    i = Interpretation(
        domain={a, b, Anon(1, 0)},
        concepts={"B": {b}, "A": {a}},
        roles={"R": {(b, a), (a, Anon(1, 0))}},
    )
    facts = list(i.facts())
    assert facts == [
        ("A", (a,)),
        ("B", (b,)),
        ("R", (a, Anon(1, 0))),
        ("R", (b, a)),
    ]


def test_apply_function_merges_anons():
    w0, w1 = Anon(1, 0), Anon(1, 1)
    i = AnnotatedInterpretation(
        domain={a, w0, w1},
        roles={"R": {(a, w0), (a, w1)}},
        cards={w0: 2, w1: 5},
    )
    j = apply_function({w1: w0}, i)
    assert j.domain == {a, w0}
    assert j.role_ext(R) == {(a, w0)}
    assert j.card(w0) == 5  # multiplicities merge by maximum
    with pytest.raises(InterpError):
        apply_function({a: b}, i)


def test_chase_depth_zero_closes_non_creating_axioms():
    kb = KB(
        TBox(
            (
                ConceptInclusion(A, B),
                RoleInclusion(R, S),
                ConceptInclusion(B, exists(Role("U"))),
            )
        ),
        ABox((Fact("A", ("a",)), Fact("R", ("a", "b")))),
    )
    res = restricted_chase(kb, depth_limit=0)
    i = res.interpretation
    assert i.concept_ext("B") == {a}
    assert i.role_ext(S) == {(a, b)}
    # the U-obligation exists but no witness may be created at depth 0
    assert not res.saturated and res.frontier_gen == 0
    assert not i.anon_elements()
    # without it, closure alone saturates
    kb2 = KB(TBox((ConceptInclusion(A, B), RoleInclusion(R, S))), kb.abox)
    assert restricted_chase(kb2, depth_limit=0).saturated


def test_chase_reuses_existing_witnesses():
    # a already has one R-successor; >=2 fires exactly one fresh witness
    kb = KB(
        TBox((ConceptInclusion(A, MinCard(2, R)),)),
        ABox((Fact("A", ("a",)), Fact("R", ("a", "b")))),
    )
    res = restricted_chase(kb)
    assert res.saturated
    i = res.interpretation
    assert len(i.successors(a, R)) == 2
    assert len(i.anon_elements()) == 1


def test_chase_two_generation_structure():
    res = restricted_chase(witness_kb(), depth_limit=2)
    assert res.saturated and res.frontier_gen is None
    i = res.interpretation
    d, e = Named("d"), Named("e")
    assert set(i.named_elements()) == {a, b, d, e}
    # one fresh P1-witness for a, one fresh P2-witness for b
    assert len(i.successors(a, Role("P1"))) == 2
    assert len(i.successors(b, Role("P2"))) == 3
    gen1 = [x for x in i.anon_elements() if x.gen == 1]
    gen2 = [x for x in i.anon_elements() if x.gen == 2]
    assert len(gen1) == 2 and len(gen2) == 3
    (w,) = [x for x in gen1 if x in i.successors(a, Role("P1"))]
    assert i.successors(w, Role("P2")) == set(gen2)
    assert count_matches(witness_query(), i) == 6


def test_chase_depth_prefix():
    kb = witness_kb()
    shallow = restricted_chase(kb, depth_limit=1)
    deep = restricted_chase(kb, depth_limit=2)
    assert not shallow.saturated and shallow.frontier_gen == 1
    for name, ext in shallow.interpretation.concepts.items():
        assert ext <= deep.interpretation.concept_ext(name)
    for name, ext in shallow.interpretation.roles.items():
        assert ext <= deep.interpretation.roles.get(name, frozenset())


def test_chase_annotated_collapses_siblings():
    res = restricted_chase(witness_kb(), depth_limit=2, annotated=True)
    assert res.saturated
    i = res.interpretation
    # the three second-generation witnesses become one element of weight 3
    gen2 = [x for x in i.anon_elements() if x.gen == 2]
    assert len(gen2) == 1 and i.card(gen2[0]) == 3
    # weighted matching sees the same count as the plain chase
    assert count_matches(witness_query(), i) == 6


def test_chase_infinite_model_reports_frontier():
    kb = KB(
        TBox((ConceptInclusion(exists(R.inverse()), exists(R)),)),
        ABox((Fact("R", ("a", "b")),)),
    )
    res = restricted_chase(kb, depth_limit=3)
    assert not res.saturated
    assert res.frontier_gen == 3
    assert len(res.interpretation.anon_elements()) == 3  # a chain, one per depth


def test_is_model():
    kb = witness_kb()
    res = restricted_chase(kb, depth_limit=2)
    assert is_model(res.interpretation, kb)
    assert not is_model(from_abox(kb.abox), kb)
    shallow = restricted_chase(kb, depth_limit=1).interpretation
    assert not is_model(shallow, kb)


def test_is_model_checks_disjointness_and_role_inclusions():
    i = Interpretation(domain={a}, concepts={"A": {a}, "B": {a}})
    assert not is_model(i, KB(TBox((ConceptInclusion(A, B, True),)), ABox()))
    j = Interpretation(domain={a, b}, roles={"R": {(a, b)}})
    assert not is_model(j, KB(TBox((RoleInclusion(R, S),)), ABox()))


def test_is_satisfiable():
    sat = KB(
        TBox((ConceptInclusion(A, B, True),)),
        ABox((Fact("A", ("a",)), Fact("B", ("b",)))),
    )
    unsat = KB(
        TBox((ConceptInclusion(A, B, True),)),
        ABox((Fact("A", ("a",)), Fact("B", ("a",)))),
    )
    assert is_satisfiable(sat)
    assert not is_satisfiable(unsat)
    # disjointness triggered only through chase-derived memberships
    derived = KB(
        TBox(
            (
                ConceptInclusion(A, exists(R)),
                ConceptInclusion(exists(R), B),
                ConceptInclusion(A, B, True),
            )
        ),
        ABox((Fact("A", ("a",)),)),
    )
    assert not is_satisfiable(derived)
    # no disjointness axioms: always satisfiable, no chase needed
    assert is_satisfiable(KB(TBox((ConceptInclusion(A, exists(R)),)), ABox()))


def test_enumerate_models_yields_only_models():
    kb = KB(
        TBox((ConceptInclusion(A, exists(R)),)),
        ABox((Fact("A", ("a",)),)),
    )
    models = list(enumerate_models(kb, extra_elements=1))
    assert models
    for m in models:
        assert is_model(m, kb)


def test_enumerate_models_drops_disjointness_violations():
    kb = KB(
        TBox((ConceptInclusion(A, B), ConceptInclusion(A, B, True))),
        ABox((Fact("A", ("a",)),)),
    )
    assert list(enumerate_models(kb, extra_elements=1)) == []


def test_enumerate_models_matches_literal_enumeration():
    """The bounded stream supports the same minima as literally trying every
    structure over the same domain."""
    x, y = Var("x"), Var("y")
    cases = [
        (
            KB(TBox((ConceptInclusion(A, MinCard(2, R)),)), ABox((Fact("A", ("a",)), Fact("R", ("a", "b"))))),
            ConjunctiveQuery((), (CQAtom("R", (x, y)),)),
            2,
        ),
        (
            KB(TBox((ConceptInclusion(exists(R.inverse()), B),)), ABox((Fact("R", ("a", "b")),))),
            ConjunctiveQuery((), (CQAtom("B", (x,)),)),
            1,
        ),
        (
            KB(TBox((ConceptInclusion(A, exists(R)), RoleInclusion(R, S))), ABox((Fact("A", ("a",)),))),
            ConjunctiveQuery((), (CQAtom("S", (x, y)),)),
            1,
        ),
    ]
    for kb, q, extras in cases:
        literal = oracles.explicit_min_counts(kb, q, extra=extras).get((), 0)
        best = None
        for m in enumerate_models(kb, extra_elements=extras):
            c = count_matches(q, m)
            best = c if best is None else min(best, c)
        assert best == literal


def test_enumerate_models_state_budget():
    # a recursive axiom over two extras has plenty of states; a budget of
    # one cannot finish
    kb = KB(
        TBox((ConceptInclusion(exists(R.inverse()), exists(R)),)),
        ABox((Fact("R", ("a", "b")),)),
    )
    with pytest.raises(InterpError):
        list(enumerate_models(kb, extra_elements=2, max_states=1))


def test_enumerate_models_prune_cuts_subtrees():
    kb = KB(
        TBox((ConceptInclusion(A, exists(R)),)),
        ABox((Fact("A", ("a",)),)),
    )
    assert list(enumerate_models(kb, extra_elements=1, prune=lambda i: True)) == []
    n_all = len(list(enumerate_models(kb, extra_elements=1)))
    assert n_all == len(list(enumerate_models(kb, extra_elements=1, prune=lambda i: False)))
