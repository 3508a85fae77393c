"""Syntax layer: constructors, dialect grammar, TBox-level reasoning."""

import itertools
import random

import pytest

from litecount.syntax import (
    ABox,
    Atomic,
    ConceptInclusion,
    CORE,
    CORE_H,
    CORE_H_NM,
    CORE_NM,
    DIALECTS,
    Fact,
    KB,
    MinCard,
    POS,
    POS_H,
    POS_HM_NM,
    Role,
    RoleHierarchy,
    RoleInclusion,
    SyntaxError_,
    TBox,
    encode_numbers_into_H,
    exists,
    max_card,
    role_closure,
    subsumees,
    validate_dialect,
)

import oracles


A, B, C = Atomic("A"), Atomic("B"), Atomic("C")
R, S, U = Role("R"), Role("S"), Role("U")


def test_identifiers_are_checked():
    for bad in ("", "has space", "1up", "hy-phen"):
        with pytest.raises(SyntaxError_):
            Atomic(bad)
        with pytest.raises(SyntaxError_):
            Role(bad)
    # leading underscore and digits after the first character are fine
    Atomic("_aux1")
    Role("r2d2")


def test_role_inverse_and_str():
    assert str(R) == "R"
    assert str(R.inverse()) == "R-"
    assert R.inverse().inverse() == R
    assert R != R.inverse()


def test_mincard_bounds_and_exists():
    with pytest.raises(SyntaxError_):
        MinCard(0, R)
    assert exists(R) == MinCard(1, R)
    assert str(MinCard(1, R)) == "exists R"
    assert str(MinCard(3, R.inverse())) == ">=3 R-"


def test_role_inclusion_normalizes_inverted_rhs():
    ri = RoleInclusion(R, S.inverse())
    assert ri.lhs == R.inverse() and ri.rhs == S
    assert not ri.rhs.inverted
    # and an already-plain rhs is left alone
    ri2 = RoleInclusion(R.inverse(), S)
    assert ri2.lhs == R.inverse() and ri2.rhs == S
    assert ri == RoleInclusion(R, S.inverse())


def test_concept_inclusion_str():
    assert str(ConceptInclusion(A, B)) == "A sub B"
    assert str(ConceptInclusion(A, B, negated_rhs=True)) == "A disj B"
    assert str(ConceptInclusion(exists(R.inverse()), MinCard(2, S))) == "exists R- sub >=2 S"


def test_tbox_dedups_and_keeps_order():
    ax1 = ConceptInclusion(A, B)
    ax2 = ConceptInclusion(B, C)
    t = TBox((ax1, ax2, ax1))
    assert t.axioms == (ax1, ax2)
    assert len(t) == 2
    assert list(t.concept_inclusions()) == [ax1, ax2]


def test_tbox_vocabulary():
    t = TBox(
        (
            ConceptInclusion(A, exists(R)),
            RoleInclusion(S, U),
        )
    )
    assert t.concept_names() == {"A"}
    assert t.role_names() == {"R", "S", "U"}
    basics = t.basic_concepts()
    assert A in basics
    assert exists(R) in basics and exists(R.inverse()) in basics
    assert exists(U.inverse()) in basics


def test_fact_arity():
    with pytest.raises(SyntaxError_):
        Fact("A", ())
    with pytest.raises(SyntaxError_):
        Fact("P", ("a", "b", "c"))
    assert str(Fact("P", ("a", "b"))) == "P(a,b)"


def test_abox_individual_order_is_first_mention():
    ab = ABox(
        (
            Fact("P", ("b", "a")),
            Fact("A", ("c",)),
            Fact("P", ("b", "a")),  # dup dropped
        )
    )
    assert ab.individuals() == ("b", "a", "c")
    assert len(ab) == 2
    assert ab.concept_names() == {"A"}
    assert ab.role_names() == {"P"}


def test_dialect_table():
    assert set(DIALECTS) == {
        "pos", "pos-h", "pos-hm-nm", "core", "core-nm", "core-h", "core-h-nm",
    }
    assert not POS.allow_disjointness and POS.role_hierarchy is RoleHierarchy.NONE
    assert POS_H.role_hierarchy is RoleHierarchy.FULL and not POS_H.number_restrictions
    assert POS_HM_NM.role_hierarchy is RoleHierarchy.RESTRICTED
    assert POS_HM_NM.number_restrictions and not POS_HM_NM.allow_disjointness
    assert CORE.allow_disjointness and not CORE.number_restrictions
    assert CORE_NM.number_restrictions and CORE_NM.role_hierarchy is RoleHierarchy.NONE
    assert CORE_H.role_hierarchy is RoleHierarchy.FULL
    assert CORE_H_NM.allow_disjointness and CORE_H_NM.number_restrictions


def test_validate_disjointness_gate():
    t = TBox((ConceptInclusion(A, B, negated_rhs=True),))
    assert validate_dialect(t, CORE) == []
    bad = validate_dialect(t, POS)
    assert len(bad) == 1 and "disjointness" in bad[0].reason


def test_validate_role_hierarchy_gate():
    t = TBox((RoleInclusion(R, S),))
    for d in (POS, CORE, CORE_NM):
        assert any("role inclusions" in v.reason for v in validate_dialect(t, d))
    for d in (POS_H, POS_HM_NM, CORE_H, CORE_H_NM):
        assert validate_dialect(t, d) == []


def test_validate_left_hand_numbers_never_grammatical():
    t = TBox((ConceptInclusion(MinCard(2, R), B),))
    for d in DIALECTS.values():
        assert any("left-hand side" in v.reason for v in validate_dialect(t, d))


def test_validate_numbers_gate():
    t = TBox((ConceptInclusion(A, MinCard(2, R)),))
    assert validate_dialect(t, CORE_NM) == []
    assert validate_dialect(t, POS_HM_NM) == []
    assert any("number restrictions" in v.reason for v in validate_dialect(t, CORE_H))
    # n = 1 is plain DL-Lite, fine everywhere
    t1 = TBox((ConceptInclusion(A, exists(R)),))
    for d in DIALECTS.values():
        assert validate_dialect(t1, d) == []


def test_validate_restricted_hierarchy():
    """Under the restricted hierarchy, successors cannot be required over a
    role that sits strictly below another role (either orientation)."""
    incl = RoleInclusion(R, S)
    over_sub = TBox((incl, ConceptInclusion(A, MinCard(2, R))))
    over_sub_inv = TBox((incl, ConceptInclusion(A, MinCard(2, R.inverse()))))
    over_super = TBox((incl, ConceptInclusion(A, MinCard(2, S))))
    assert any("super-role" in v.reason for v in validate_dialect(over_sub, POS_HM_NM))
    assert any("super-role" in v.reason for v in validate_dialect(over_sub_inv, POS_HM_NM))
    assert validate_dialect(over_super, POS_HM_NM) == []
    # the same TBoxes are fine under the full hierarchy
    assert validate_dialect(over_sub, CORE_H_NM) == []
    # a reflexive inclusion is not a *proper* super-role
    refl = TBox((RoleInclusion(R, R), ConceptInclusion(A, MinCard(2, R))))
    assert validate_dialect(refl, POS_HM_NM) == []


def test_role_closure_reflexive_transitive_inverted():
    t = TBox((RoleInclusion(R, S), RoleInclusion(S, U)))
    rc = role_closure(t)
    assert {R, S, U} <= rc[R]
    assert {S, U} <= rc[S] and U in rc[U]
    assert {R.inverse(), S.inverse(), U.inverse()} <= rc[R.inverse()]
    assert R not in rc[S]
    # every vocabulary role is reflexively included
    for r in rc:
        assert r in rc[r]


def test_subsumees_stated_chain():
    t = TBox((ConceptInclusion(A, B), ConceptInclusion(B, C)))
    subs = subsumees(t, [C])
    assert {A, B, C} <= subs
    assert subsumees(t, [A]) == frozenset({A})


def test_subsumees_numeric_weakening():
    t = TBox((ConceptInclusion(A, MinCard(3, R)),))
    subs = subsumees(t, [exists(R)])
    assert A in subs  # A sub >=3 R sub >=1 R
    # but not the other orientation
    assert exists(R.inverse()) not in subs
    # candidates beyond the n=1 vocabulary enter only when asked about
    assert MinCard(2, R) in subsumees(t, [MinCard(2, R)])
    assert A in subsumees(t, [MinCard(2, R)])


def test_subsumees_role_lifting():
    t = TBox((RoleInclusion(R, S), ConceptInclusion(A, exists(R))))
    subs = subsumees(t, [exists(S)])
    assert {A, exists(R), exists(S)} <= subs


def test_subsumees_ignores_disjointness():
    t = TBox((ConceptInclusion(A, B, negated_rhs=True),))
    assert subsumees(t, [B]) == frozenset({B})


def test_subsumees_agrees_with_chase_probe():
    """Everything the syntactic closure claims is confirmed on the canonical
    model of a probe, and vice versa, across random small TBoxes."""
    rng = random.Random(20240824)
    concepts = [A, B]
    for _ in range(60):
        axioms = []
        if rng.random() < 0.5:
            axioms.append(RoleInclusion(Role(rng.choice("RS")), Role(rng.choice("RS"), rng.random() < 0.5)))
        for _ in range(rng.randint(1, 3)):
            def basic():
                if rng.random() < 0.5:
                    return rng.choice(concepts)
                return MinCard(rng.randint(1, 2), Role(rng.choice("RS"), rng.random() < 0.5))
            axioms.append(ConceptInclusion(basic(), basic()))
        t = TBox(tuple(axioms))
        if validate_dialect(t, POS_HM_NM):
            continue  # left-hand numbers and the like: not a grammatical TBox
        cands = sorted(t.basic_concepts(), key=str)
        for b2 in cands:
            subs = subsumees(t, [b2])
            for b1 in cands:
                assert (b1 in subs) == oracles.chase_entails(t, b1, b2), (
                    f"{b1} sub {b2} under {[str(a) for a in t]}"
                )


def test_max_card_is_literal():
    t = TBox(
        (
            ConceptInclusion(A, MinCard(2, R)),
            ConceptInclusion(A, MinCard(3, R)),
            ConceptInclusion(B, exists(R)),
        )
    )
    assert max_card(t, A, R) == 3
    assert max_card(t, B, R) == 1
    assert max_card(t, C, R) == 0
    assert max_card(t, A, S) == 0


def test_encode_numbers_structure():
    t = TBox((ConceptInclusion(A, MinCard(3, R)),))
    enc = encode_numbers_into_H(t)
    assert all(
        not (isinstance(ax.rhs, MinCard) and ax.rhs.n > 1)
        for ax in enc.concept_inclusions()
    )
    subs = [ri.lhs for ri in enc.role_inclusions()]
    assert len(subs) == 3 and all(ri.rhs == R for ri in enc.role_inclusions())
    disjs = [ax for ax in enc.concept_inclusions() if ax.negated_rhs]
    assert len(disjs) == 3  # C(3, 2) successor-set separations
    assert validate_dialect(enc, CORE_H) == []


def test_encode_numbers_inverse_target():
    t = TBox((ConceptInclusion(A, MinCard(2, R.inverse())),))
    enc = encode_numbers_into_H(t)
    for ri in enc.role_inclusions():
        assert ri.rhs == R
        assert ri.lhs.inverted  # Qi- sub R expresses the inverse target


def test_encode_numbers_noop_and_idempotent():
    t = TBox((ConceptInclusion(A, exists(R)),))
    assert encode_numbers_into_H(t) is t
    t2 = encode_numbers_into_H(TBox((ConceptInclusion(A, MinCard(2, R)),)))
    assert encode_numbers_into_H(t2) is t2


def test_encode_numbers_shares_fresh_roles_per_role():
    t = TBox(
        (
            ConceptInclusion(A, MinCard(2, R)),
            ConceptInclusion(B, MinCard(3, R)),
        )
    )
    enc = encode_numbers_into_H(t)
    fresh = {ri.lhs.name for ri in enc.role_inclusions()}
    assert len(fresh) == 3  # max(2, 3) shared names, not 5


def test_encode_numbers_avoids_name_collisions():
    t = TBox(
        (
            ConceptInclusion(A, MinCard(2, R)),
            ConceptInclusion(exists(Role("__aux_R_1")), B),
        )
    )
    enc = encode_numbers_into_H(t)
    fresh = {ri.lhs.name for ri in enc.role_inclusions() if ri.rhs == R}
    assert "__aux_R_1" not in fresh


def test_encode_numbers_rejects_negated_restriction():
    t = TBox((ConceptInclusion(A, MinCard(2, R), negated_rhs=True),))
    with pytest.raises(SyntaxError_):
        encode_numbers_into_H(t)
