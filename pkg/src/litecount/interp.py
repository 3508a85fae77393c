"""Interpretations, the restricted chase, and bounded model enumeration.

Elements are either named individuals or anonymous witnesses ``_:gN_M``
(generation N, ordinal M within the generation).  Annotated interpretations
attach a positive multiplicity to every element; an anonymous element with
``card = k`` stands for k indistinguishable copies of itself, which is how a
single chase step can record "n - m missing successors" in one witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

from .syntax import (
    ABox,
    Atomic,
    BasicConcept,
    ConceptInclusion,
    KB,
    MinCard,
    Role,
    RoleInclusion,
    TBox,
)


@dataclass(frozen=True)
class Named:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Anon:
    gen: int
    ordinal: int

    def __str__(self) -> str:
        return f"_:g{self.gen}_{self.ordinal}"


Element = Union[Named, Anon]


def element_key(e: Element) -> tuple:
    """Sort key: named elements first (lexicographic), then anons by birth."""
    if isinstance(e, Named):
        return (0, e.name, 0)
    return (1, e.gen, e.ordinal)


class InterpError(ValueError):
    pass


def _freeze_ext(m: Mapping) -> dict:
    return {k: frozenset(v) for k, v in sorted(m.items()) if v}


@dataclass(frozen=True)
class Interpretation:
    """A finite interpretation over named and anonymous elements."""

    domain: frozenset = frozenset()
    concepts: dict = field(default_factory=dict)  # name -> frozenset[Element]
    roles: dict = field(default_factory=dict)  # name -> frozenset[(Element, Element)]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", frozenset(self.domain))
        object.__setattr__(self, "concepts", _freeze_ext(self.concepts))
        object.__setattr__(self, "roles", _freeze_ext(self.roles))

    def concept_ext(self, name: str) -> frozenset:
        return self.concepts.get(name, frozenset())

    def role_ext(self, role: Role) -> frozenset:
        pairs = self.roles.get(role.name, frozenset())
        if role.inverted:
            return frozenset((y, x) for x, y in pairs)
        return pairs

    def successors(self, e: Element, role: Role) -> frozenset:
        pairs = self.roles.get(role.name, frozenset())
        if role.inverted:
            return frozenset(x for x, y in pairs if y == e)
        return frozenset(y for x, y in pairs if x == e)

    def card(self, e: Element) -> int:
        return 1

    def succ_weight(self, e: Element, role: Role) -> int:
        """Number of R-successors of e, counting multiplicities."""
        return sum(self.card(s) for s in self.successors(e, role))

    def in_concept(self, e: Element, c: BasicConcept) -> bool:
        if isinstance(c, Atomic):
            return e in self.concept_ext(c.name)
        return self.succ_weight(e, c.role) >= c.n

    def facts(self) -> Iterator[tuple]:
        """Deterministic (predicate, args) stream: concepts then roles."""
        for name in sorted(self.concepts):
            for e in sorted(self.concepts[name], key=element_key):
                yield (name, (e,))
        for name in sorted(self.roles):
            for x, y in sorted(self.roles[name], key=lambda p: (element_key(p[0]), element_key(p[1]))):
                yield (name, (x, y))

    def named_elements(self) -> list:
        return sorted((e for e in self.domain if isinstance(e, Named)), key=element_key)

    def anon_elements(self) -> list:
        return sorted((e for e in self.domain if isinstance(e, Anon)), key=element_key)


@dataclass(frozen=True)
class AnnotatedInterpretation(Interpretation):
    cards: dict = field(default_factory=dict)  # element -> multiplicity >= 1

    def __post_init__(self) -> None:
        super().__post_init__()
        cards = {e: int(self.cards.get(e, 1)) for e in self.domain}
        for e, k in cards.items():
            if k < 1:
                raise InterpError(f"multiplicity must be >= 1: {e} has {k}")
            if isinstance(e, Named) and k != 1:
                raise InterpError(f"named element {e} must have multiplicity 1")
        object.__setattr__(self, "cards", cards)

    def card(self, e: Element) -> int:
        return self.cards.get(e, 1)


def from_abox(abox: ABox, dummy: Optional[str] = None) -> Interpretation:
    """The interpretation that holds exactly the ABox facts.

    An empty ABox has no elements to build a domain from, which is an error
    unless a dummy element name is supplied; the dummy carries no facts.
    """
    if not abox.individuals() and dummy is None:
        raise InterpError("empty ABox: supply a dummy element to build an interpretation")
    concepts: dict = {}
    roles: dict = {}
    domain = {Named(a) for a in abox.individuals()}
    if dummy is not None:
        domain.add(Named(dummy))
    for f in abox:
        if len(f.args) == 1:
            concepts.setdefault(f.predicate, set()).add(Named(f.args[0]))
        else:
            roles.setdefault(f.predicate, set()).add((Named(f.args[0]), Named(f.args[1])))
    return Interpretation(frozenset(domain), concepts, roles)


# ---------------------------------------------------------------------------
# the restricted chase


@dataclass(frozen=True)
class ChaseResult:
    interpretation: Interpretation
    saturated: bool
    #: smallest generation carrying an unmet successor obligation (None if saturated)
    frontier_gen: Optional[int] = None


class _State:
    """Mutable fact store shared by the chase and the model enumerator."""

    def __init__(self, abox: ABox):
        self.concepts: dict[str, set] = {}
        self.roles: dict[str, set] = {}
        self.order: list = []  # elements in creation order
        self.gen: dict = {}
        self.cards: dict = {}
        for a in abox.individuals():
            self._add_element(Named(a), 0, 1)
        for f in abox:
            if len(f.args) == 1:
                self.concepts.setdefault(f.predicate, set()).add(Named(f.args[0]))
            else:
                self.roles.setdefault(f.predicate, set()).add(
                    (Named(f.args[0]), Named(f.args[1]))
                )

    def _add_element(self, e: Element, gen: int, card: int) -> None:
        if e not in self.gen:
            self.order.append(e)
            self.gen[e] = gen
            self.cards[e] = card

    def successors(self, e: Element, role: Role) -> set:
        pairs = self.roles.get(role.name, set())
        if role.inverted:
            return {x for x, y in pairs if y == e}
        return {y for x, y in pairs if x == e}

    def succ_weight(self, e: Element, role: Role) -> int:
        return sum(self.cards[s] for s in self.successors(e, role))

    def in_concept(self, e: Element, c: BasicConcept) -> bool:
        if isinstance(c, Atomic):
            return e in self.concepts.get(c.name, set())
        return self.succ_weight(e, c.role) >= c.n

    def add_edge(self, role: Role, e: Element, s: Element) -> None:
        pair = (s, e) if role.inverted else (e, s)
        self.roles.setdefault(role.name, set()).add(pair)

    def close(self, tbox: TBox) -> None:
        """Fixpoint of the non-creating rules: atomic-RHS inclusions and
        role inclusions."""
        changed = True
        while changed:
            changed = False
            for ax in tbox:
                if isinstance(ax, RoleInclusion):
                    src = self.roles.get(ax.lhs.name, set())
                    if ax.lhs.inverted:
                        src = {(y, x) for x, y in src}
                    dst = self.roles.setdefault(ax.rhs.name, set())
                    if not src <= dst:
                        dst |= src
                        changed = True
                elif not ax.negated_rhs and isinstance(ax.rhs, Atomic):
                    ext = self.concepts.setdefault(ax.rhs.name, set())
                    for e in self.order:
                        if e not in ext and self.in_concept(e, ax.lhs):
                            ext.add(e)
                            changed = True

    def unmet(self, tbox: TBox) -> Iterator[tuple]:
        """(element, axiom, missing) for every unmet successor obligation,
        in creation x axiom order."""
        for e in self.order:
            for ax in tbox:
                if (
                    isinstance(ax, ConceptInclusion)
                    and not ax.negated_rhs
                    and isinstance(ax.rhs, MinCard)
                    and self.in_concept(e, ax.lhs)
                ):
                    have = self.succ_weight(e, ax.rhs.role)
                    if have < ax.rhs.n:
                        yield e, ax, ax.rhs.n - have

    def freeze(self, annotated: bool) -> Interpretation:
        domain = frozenset(self.order)
        if annotated:
            return AnnotatedInterpretation(domain, self.concepts, self.roles, dict(self.cards))
        return Interpretation(domain, self.concepts, self.roles)


def restricted_chase(
    kb: KB, depth_limit: Optional[int] = None, annotated: bool = False
) -> ChaseResult:
    """Run the restricted chase up to ``depth_limit`` anonymous generations.

    Only unmet obligations fire: an element needing n successors over R and
    already having m of them receives n - m fresh witnesses (plain mode), or
    a single witness of multiplicity n - m (annotated mode, where existing
    successors count with their multiplicities).  Between firings the
    non-creating axioms (atomic right-hand sides, role inclusions) are closed
    deterministically; obligations are scanned in element-creation then
    axiom-list order.  The result is a prefix of the canonical model:
    depth d output is a prefix of depth d + 1 output.
    """
    if depth_limit is None:
        depth_limit = 1 + len(kb.tbox.basic_concepts())
    st = _State(kb.abox)
    next_ordinal: dict[int, int] = {}
    st.close(kb.tbox)
    while True:
        fired = False
        for e, ax, missing in st.unmet(kb.tbox):
            if st.gen[e] + 1 > depth_limit:
                continue
            g = st.gen[e] + 1
            count = 1 if annotated else missing
            for _ in range(count):
                w = Anon(g, next_ordinal.get(g, 0))
                next_ordinal[g] = w.ordinal + 1
                st._add_element(w, g, missing if annotated else 1)
                st.add_edge(ax.rhs.role, e, w)
            fired = True
            break
        if not fired:
            break
        st.close(kb.tbox)
    frontier = [st.gen[e] for e, _, _ in st.unmet(kb.tbox)]
    return ChaseResult(
        st.freeze(annotated),
        saturated=not frontier,
        frontier_gen=min(frontier) if frontier else None,
    )


# ---------------------------------------------------------------------------
# functions between interpretations


def apply_function(f: Mapping, i: Interpretation) -> Interpretation:
    """Image of ``i`` under ``f`` (identity outside dom(f); named elements
    must stay fixed).  Annotated multiplicities merge by maximum, except that
    a named target keeps multiplicity 1."""
    for src, dst in f.items():
        if isinstance(src, Named) and dst != src:
            raise InterpError(f"functions must fix named elements: {src} -> {dst}")

    def g(e: Element) -> Element:
        return f.get(e, e)

    domain = frozenset(g(e) for e in i.domain)
    concepts = {n: {g(e) for e in ext} for n, ext in i.concepts.items()}
    roles = {n: {(g(x), g(y)) for x, y in ext} for n, ext in i.roles.items()}
    if isinstance(i, AnnotatedInterpretation):
        cards: dict = {}
        for e in i.domain:
            t = g(e)
            cards[t] = 1 if isinstance(t, Named) else max(cards.get(t, 1), i.card(e))
        return AnnotatedInterpretation(domain, concepts, roles, cards)
    return Interpretation(domain, concepts, roles)


def is_model(i: Interpretation, kb: KB) -> bool:
    """Does ``i`` contain the ABox and satisfy every axiom?  For annotated
    interpretations the successor counts are multiplicity-weighted."""
    for f in kb.abox:
        if len(f.args) == 1:
            if Named(f.args[0]) not in i.concept_ext(f.predicate):
                return False
        else:
            if (Named(f.args[0]), Named(f.args[1])) not in i.role_ext(Role(f.predicate)):
                return False
    for ax in kb.tbox:
        if isinstance(ax, RoleInclusion):
            if not i.role_ext(ax.lhs) <= i.role_ext(ax.rhs):
                return False
        else:
            for e in i.domain:
                if i.in_concept(e, ax.lhs):
                    holds = i.in_concept(e, ax.rhs)
                    if ax.negated_rhs and holds:
                        return False
                    if not ax.negated_rhs and not holds:
                        return False
    return True


def is_satisfiable(kb: KB, domain_bound: Optional[int] = None) -> bool:
    """Satisfiability via a chase prefix of depth ``domain_bound``
    (default: 1 + number of basic concepts in the TBox), checking the
    disjointness axioms on the prefix.  Dialects without disjointness are
    always satisfiable.  The prefix is built in annotated mode -- one
    multiplicity-weighted witness per firing -- which keeps concept
    memberships intact while staying exponentially smaller than the plain
    prefix on wide obligations."""
    if not any(
        isinstance(ax, ConceptInclusion) and ax.negated_rhs for ax in kb.tbox
    ):
        return True
    res = restricted_chase(kb, depth_limit=domain_bound, annotated=True)
    i = res.interpretation
    for ax in kb.tbox:
        if isinstance(ax, ConceptInclusion) and ax.negated_rhs:
            for e in i.domain:
                if i.in_concept(e, ax.lhs) and i.in_concept(e, ax.rhs):
                    return False
    return True


# ---------------------------------------------------------------------------
# bounded model enumeration


def enumerate_models(
    kb: KB,
    extra_elements: int = 2,
    max_states: int = 500_000,
    prune: Optional[Callable[[Interpretation], bool]] = None,
) -> Iterator[Interpretation]:
    """Bounded models of the KB: structures over the named individuals plus
    at most ``extra_elements`` anonymous elements, sufficient for minimizing
    any fact-monotone quantity (every bounded model either is yielded or is
    a superset of one that is).

    Enumeration is by justified fixpoints: starting from the ABox facts,
    the first unmet obligation (in a fixed deterministic order) is satisfied
    in every minimal way — branching over the choices of missing successors —
    and structures violating a disjointness axiom are pruned.  Every
    subset-minimal bounded model is reached this way, and since the stream is
    used for minimizing fact-monotone counts, non-minimal fixpoints that also
    appear are harmless; conversely, a state that already contains some
    yielded model is dropped, because everything below it stays a superset
    (recursive axiom sets reach vast state spaces without this cut).
    Anonymous elements that end up in no fact are dropped, so each yielded
    model is presented once, in a canonical anon naming (renumbered by first
    use in the sorted fact list).  More than ``max_states`` visited states
    raise InterpError rather than grind on.

    ``prune``, when given, sees each state (a structure that may still miss
    obligations) and returning True discards it together with everything
    below it.  Facts only grow along a branch, so any fact-monotone
    stopping rule -- "the counts here already reach the known minima" --
    cuts subtrees without affecting the minimization the stream feeds.
    """
    named = [Named(a) for a in kb.abox.individuals()]
    pool = named + [Anon(1, j) for j in range(extra_elements)]
    if not pool:
        return
    start = from_abox(kb.abox) if named else Interpretation(frozenset(pool), {}, {})

    def fact_key(item: tuple) -> tuple:
        pred, args = item
        return (len(args), pred) + tuple(element_key(a) for a in args)

    def state_key(concepts: dict, roles: dict) -> frozenset:
        out = set()
        for n, ext in concepts.items():
            out |= {(n, e) for e in ext}
        for n, ext in roles.items():
            out |= {(n, p) for p in ext}
        return frozenset(out)

    def first_unmet(concepts: dict, roles: dict) -> Optional[tuple]:
        # deterministic steps (role closure, atomic needs, disjointness
        # checks) are served before any branching obligation, whatever the
        # axiom order: forced facts land first, so the structure a prune
        # callback sees is as grown as it can deterministically be
        view = Interpretation(frozenset(pool), concepts, roles)
        branching = None
        for ax in kb.tbox:
            if isinstance(ax, RoleInclusion):
                missing = view.role_ext(ax.lhs) - view.role_ext(ax.rhs)
                if missing:
                    pair = min(missing, key=lambda p: (element_key(p[0]), element_key(p[1])))
                    return ("role", ax, pair)
            else:
                for e in pool:
                    if view.in_concept(e, ax.lhs):
                        if ax.negated_rhs:
                            if view.in_concept(e, ax.rhs):
                                return ("dead", ax, e)
                        elif not view.in_concept(e, ax.rhs):
                            if isinstance(ax.rhs, Atomic):
                                return ("need", ax, e)
                            if branching is None:
                                branching = ("need", ax, e)
        return branching

    seen_states: set = set()
    seen_models: set = set()
    yielded_raw: list = []  # uncanonicalized fact sets, for the superset cut

    def canonical(i: Interpretation) -> tuple:
        # renumber anons by first use in the deterministic fact stream;
        # anons in no fact are dropped from the domain
        ren: dict = {}
        for _, args in i.facts():
            for e in args:
                if isinstance(e, Anon) and e not in ren:
                    ren[e] = Anon(1, len(ren))
        dom = frozenset(e for e in i.domain if isinstance(e, Named) or e in ren)
        img = Interpretation(
            frozenset(ren.get(e, e) for e in dom),
            {n: {ren.get(e, e) for e in ext} for n, ext in i.concepts.items()},
            {n: {(ren.get(x, x), ren.get(y, y)) for x, y in ext} for n, ext in i.roles.items()},
        )
        return img, tuple(sorted(img.facts(), key=fact_key))

    def explore(concepts: dict, roles: dict) -> Iterator[Interpretation]:
        key = state_key(concepts, roles)
        if key in seen_states:
            return
        seen_states.add(key)
        if len(seen_states) > max_states:
            raise InterpError(
                f"model enumeration visited more than {max_states} states"
            )
        if any(y <= key for y in yielded_raw):
            return  # everything below here is a superset of a yielded model
        if prune is not None and prune(Interpretation(frozenset(pool), concepts, roles)):
            return
        prob = first_unmet(concepts, roles)
        if prob is None:
            model, mkey = canonical(Interpretation(frozenset(pool), concepts, roles))
            yielded_raw.append(key)
            if mkey not in seen_models:
                seen_models.add(mkey)
                yield model
            return
        kind, ax, subject = prob
        if kind == "dead":
            return
        if kind == "role":
            x, y = subject  # rhs is plain by normalization, so (x, y) lands directly
            roles2 = {n: set(v) for n, v in roles.items()}
            roles2.setdefault(ax.rhs.name, set()).add((x, y))
            yield from explore(concepts, roles2)
            return
        e = subject
        if isinstance(ax.rhs, Atomic):
            concepts2 = {n: set(v) for n, v in concepts.items()}
            concepts2.setdefault(ax.rhs.name, set()).add(e)
            yield from explore(concepts2, roles)
            return
        role = ax.rhs.role
        view = Interpretation(frozenset(pool), concepts, roles)
        have = view.successors(e, role)
        need = ax.rhs.n - len(have)
        # try witnesses that ride an already-present pair first: branches that
        # grow the structure least come first, so a count-pruned consumer
        # meets its minima early (pure exploration order, same model set)
        linked = {p for ext in roles.values() for p in ext}

        def cand_key(s: Element) -> tuple:
            pair = (s, e) if role.inverted else (e, s)
            return (pair not in linked, element_key(s))

        candidates = sorted((s for s in pool if s not in have), key=cand_key)
        for chosen in itertools.combinations(candidates, need):
            roles2 = {n: set(v) for n, v in roles.items()}
            ext = roles2.setdefault(role.name, set())
            for s in chosen:
                ext.add((s, e) if role.inverted else (e, s))
            yield from explore(concepts, roles2)

    concepts0 = {n: set(v) for n, v in start.concepts.items()}
    roles0 = {n: set(v) for n, v in start.roles.items()}
    yield from explore(concepts0, roles0)


def _find_homomorphism(src: Interpretation, dst: Interpretation) -> Optional[dict]:
    """A constant-preserving homomorphism src -> dst, or None."""
    elems = sorted(src.domain, key=element_key)
    facts = list(src.facts())

    def ok(assign: dict) -> bool:
        for pred, args in facts:
            if not all(a in assign for a in args):
                continue
            if len(args) == 1:
                if assign[args[0]] not in dst.concept_ext(pred):
                    return False
            else:
                if (assign[args[0]], assign[args[1]]) not in dst.role_ext(Role(pred)):
                    return False
        return True

    targets = sorted(dst.domain, key=element_key)

    def search(idx: int, assign: dict) -> Optional[dict]:
        if idx == len(elems):
            return dict(assign)
        e = elems[idx]
        options = [e] if isinstance(e, Named) else targets
        for t in options:
            if isinstance(e, Named) and t not in dst.domain:
                return None
            assign[e] = t
            if ok(assign):
                found = search(idx + 1, assign)
                if found is not None:
                    return found
            del assign[e]
        return None

    return search(0, {})
