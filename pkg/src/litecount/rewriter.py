"""Saturation-based counting rewriter.

Expands a rooted, connected conjunctive query against the positive
inclusions of an ontology into a finite set of counting queries that can be
answered over the data alone: summing their per-binding values on the bare
ABox interpretation reproduces the certain count over the full canonical
model.

Four expansion rules run until nothing new appears.  AtomRewrite and Reduce
are the classic rewriting steps lifted to counting heads and run with
priority to a local fixpoint.  The two generate-and-eliminate rules trade an
aggregation variable z appearing as the object of a role atom R(w,z) for an
exact-successor-count atom on w plus a multiplicative factor: an axiom
``B sub >=n R`` forces every B-element with i existing R-successors to gain
n-i anonymous ones, so each surviving match extends in exactly n-i ways.
The emitted atomic decompositions make the case split on w's concept
memberships mutually exclusive, which is what keeps the final sum free of
double counting.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .cq import CQAtom, ConjunctiveQuery, Const, Term, Var, classify_shape, fresh_wildcard
from .focount import ExistsAtom, FOCountQuery, FORule
from .focount import normalize as _normalize_query
from .syntax import (
    CORE_NM,
    Atomic,
    BasicConcept,
    ConceptInclusion,
    Dialect,
    MinCard,
    Role,
    TBox,
    max_card,
    subsumees,
    validate_dialect,
)

DEFAULT_STEP_BUDGET = 20000


class RewriteError(ValueError):
    """Input outside the supported fragment, or the step budget ran out."""


class _Budget:
    def __init__(self, limit: int) -> None:
        self.left = limit

    def tick(self) -> None:
        if self.left <= 0:
            raise RewriteError("rewrite step budget exhausted")
        self.left -= 1


# ---------------------------------------------------------------------------
# variable status
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def bound_vars(rule: FORule) -> frozenset:
    """Group-by variables plus those occurring more than once in the
    positive atoms (each position counts, so a repeated variable inside one
    atom is bound too)."""
    out = {t for t in rule.head_group if isinstance(t, Var)}
    counts: dict = {}
    for a in rule.pos:
        for t in a.args:
            if isinstance(t, Var):
                counts[t] = counts.get(t, 0) + 1
    out.update(v for v, c in counts.items() if c > 1)
    return frozenset(out)


def _head_repeats(rule: FORule) -> frozenset:
    counts: dict = {}
    for t in rule.head_group + rule.head_agg:
        if isinstance(t, Var):
            counts[t] = counts.get(t, 0) + 1
    return frozenset(v for v, c in counts.items() if c > 1)


@lru_cache(maxsize=None)
def alpha_blocked(rule: FORule) -> frozenset:
    """Variables not eliminable by the first elimination rule: bound,
    repeated in the head, or touching any exact-count atom."""
    out = set(bound_vars(rule)) | _head_repeats(rule)
    for ea in rule.exists:
        if isinstance(ea.subject, Var):
            out.add(ea.subject)
        out.add(ea.var)
    return frozenset(out)


@lru_cache(maxsize=None)
def beta_blocked(rule: FORule) -> frozenset:
    """As alpha_blocked, but zero-count atoms do not block (they are deleted
    on elimination instead)."""
    out = set(bound_vars(rule)) | _head_repeats(rule)
    for ea in rule.exists:
        if ea.count > 0:
            if isinstance(ea.subject, Var):
                out.add(ea.subject)
            out.add(ea.var)
    return frozenset(out)


# ---------------------------------------------------------------------------
# canonical fingerprints
# ---------------------------------------------------------------------------

_CANON_EXACT_LIMIT = 8


def _rule_var_order(rule: FORule) -> list:
    """Every variable of the rule in first-use order (binders excluded —
    an exact-count atom is determined by count, role, and subject)."""
    seen: list = []

    def add(t: Term) -> None:
        if isinstance(t, Var) and t not in seen:
            seen.append(t)

    for t in rule.head_group + rule.head_agg:
        add(t)
    for a in rule.pos + rule.neg:
        for t in a.args:
            add(t)
    for s, t in rule.eq:
        add(s)
        add(t)
    for ea in rule.exists:
        add(ea.subject)
    return seen


def _render_rule(rule: FORule, names: dict) -> str:
    def term(t: Term) -> str:
        if isinstance(t, Var):
            return names[t]
        return f"'{t.name}'"

    def atom(a: CQAtom) -> str:
        return f"{a.predicate}({','.join(term(t) for t in a.args)})"

    head = ",".join(term(t) for t in rule.head_group) + ":" + ",".join(
        term(t) for t in rule.head_agg
    )
    pos = ";".join(sorted(atom(a) for a in rule.pos))
    neg = ";".join(sorted(atom(a) for a in rule.neg))
    eq = ";".join(sorted("=".join(sorted((term(s), term(t)))) for s, t in rule.eq))
    ex = ";".join(
        sorted(f"{ea.count}|{ea.role}|{term(ea.subject)}" for ea in rule.exists)
    )
    return f"h[{head}]p[{pos}]n[{neg}]q[{eq}]e[{ex}]"


@lru_cache(maxsize=None)
def canonical_rule(rule: FORule) -> str:
    """Renaming- and reordering-invariant fingerprint of one rule.

    Head variables are named by position (a rule head is positional data);
    the remaining variables take the lexicographically best assignment, found
    by brute force when there are few enough and by first-use order beyond
    that.
    """
    names: dict = {}
    for i, t in enumerate(rule.head_group):
        if isinstance(t, Var) and t not in names:
            names[t] = f"g{i}"
    for i, t in enumerate(rule.head_agg):
        if isinstance(t, Var) and t not in names:
            names[t] = f"a{i}"
    rest = [v for v in _rule_var_order(rule) if v not in names]
    if not rest:
        return _render_rule(rule, names)
    if len(rest) > _CANON_EXACT_LIMIT:
        for k, v in enumerate(rest):
            names[v] = f"b{k}"
        return _render_rule(rule, names)
    best = None
    for perm in itertools.permutations(range(len(rest))):
        trial = dict(names)
        for v, k in zip(rest, perm):
            trial[v] = f"b{k}"
        s = _render_rule(rule, trial)
        if best is None or s < best:
            best = s
    return best


def canonical_query(q: FOCountQuery) -> str:
    """Fingerprint of a whole query: factor, head arities, rule set."""
    rules = "&".join(sorted(canonical_rule(r) for r in q.rules))
    return f"{q.factor}|{len(q.group_by)}|{len(q.agg_vars)}|{rules}"


@lru_cache(maxsize=None)
def _canon_exists_set(atoms: frozenset, rule: FORule) -> str:
    """Fingerprint of a set of exact-count atoms, subjects seeded by the
    rule's head positions (binders carry no identity)."""
    names: dict = {}
    for i, t in enumerate(rule.head_group):
        if isinstance(t, Var) and t not in names:
            names[t] = f"g{i}"
    for i, t in enumerate(rule.head_agg):
        if isinstance(t, Var) and t not in names:
            names[t] = f"a{i}"
    rest: list = []
    items = sorted(atoms, key=lambda ea: (ea.count, str(ea.role), str(ea.subject)))
    for ea in items:
        if isinstance(ea.subject, Var) and ea.subject not in names and ea.subject not in rest:
            rest.append(ea.subject)
    for k, v in enumerate(rest):
        names[v] = f"b{k}"

    def term(t: Term) -> str:
        return names[t] if isinstance(t, Var) else f"'{t.name}'"

    return ";".join(sorted(f"{ea.count}|{ea.role}|{term(ea.subject)}" for ea in items))


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------


def initialize(q: ConjunctiveQuery, tbox: TBox, dialect: Dialect = CORE_NM) -> FOCountQuery:
    """The seed query: factor 1, one rule whose body is the input query's.

    Rejects ontologies outside the requested dialect and queries that are
    not both connected and rooted — every connected component must contain
    an answer variable or a constant, otherwise matches may live entirely in
    the anonymous part, where data-only evaluation cannot see them.
    """
    violations = validate_dialect(tbox, dialect)
    if violations:
        detail = "; ".join(str(v) for v in violations)
        raise RewriteError(f"ontology outside {dialect.name}: {detail}")
    shape = classify_shape(q)
    if not shape.connected:
        raise RewriteError("query must be connected for rewriting")
    if not shape.rooted:
        raise RewriteError("query must be rooted for rewriting")
    agg = tuple(v for v in q.variables() if v not in q.head)
    rule = FORule(head_group=q.head, head_agg=agg, pos=q.body)
    return FOCountQuery(q.head, agg, 1, (rule,))


# ---------------------------------------------------------------------------
# AtomRewrite and Reduce
# ---------------------------------------------------------------------------


def _rule_names(rule: FORule) -> set:
    out = {v.name for v in _rule_var_order(rule)}
    out.update(ea.var.name for ea in rule.exists)
    return out


def _xi(b: BasicConcept, w: Term, used: set) -> CQAtom:
    """The atom asserting membership in a basic concept: ``B(w)`` for an
    atomic concept, ``R(w,_)`` with a fresh placeholder for an existential."""
    if isinstance(b, Atomic):
        return CQAtom(b.name, (w,))
    if b.n != 1:
        raise RewriteError(f"no single atom can assert {b}")
    fresh = fresh_wildcard(used)
    if b.role.inverted:
        return CQAtom(b.role.name, (fresh, w))
    return CQAtom(b.role.name, (w, fresh))


def _replace_atom(rule: FORule, old: CQAtom, new: CQAtom) -> FORule:
    pos = tuple(new if a == old else a for a in rule.pos)
    return replace(rule, pos=pos)


def _ar_new_rules(rule: FORule, tbox: TBox) -> Iterable[FORule]:
    """All single-step AtomRewrite derivations from one rule.

    A concept atom ``A(z)`` rewrites along any stated ``B sub A``.  A role
    atom rewrites along ``B sub >=n R`` — in either orientation — when its
    object is an unbound variable that is not an aggregation position of the
    rule's head: only then is the atom a pure existence test that the axiom
    can discharge.
    """
    bound = bound_vars(rule)
    agg = set(t for t in rule.head_agg if isinstance(t, Var))
    axioms = [ax for ax in tbox.concept_inclusions() if not ax.negated_rhs]
    for atom in rule.pos:
        if len(atom.args) == 1:
            for ax in axioms:
                if ax.rhs == Atomic(atom.predicate):
                    used = _rule_names(rule)
                    yield _replace_atom(rule, atom, _xi(ax.lhs, atom.args[0], used))
        elif len(atom.args) == 2:
            for inverted in (False, True):
                role = Role(atom.predicate, inverted)
                w, z = (atom.args[1], atom.args[0]) if inverted else atom.args
                if not isinstance(z, Var) or z in bound or z in agg:
                    continue
                for ax in axioms:
                    if isinstance(ax.rhs, MinCard) and ax.rhs.role == role:
                        used = _rule_names(rule)
                        yield _replace_atom(rule, atom, _xi(ax.lhs, w, used))


def _restricted_mgu(a1: CQAtom, a2: CQAtom, xs: frozenset, ys: frozenset) -> Optional[dict]:
    """Unifier over the two atoms' terms, or None.

    Group-by variables may only map to group-by variables, aggregation
    variables only to group-by or aggregation variables; placeholders map
    anywhere.  Orientation is by rank (constant < group-by < aggregation <
    placeholder), ties broken by name, so the result is deterministic.
    """
    if a1.predicate != a2.predicate or len(a1.args) != len(a2.args):
        return None
    sigma: dict = {}

    def find(t: Term) -> Term:
        while isinstance(t, Var) and t in sigma:
            t = sigma[t]
        return t

    def rank(t: Term) -> int:
        if isinstance(t, Const):
            return 0
        if t in xs:
            return 1
        if t in ys:
            return 2
        return 3

    for s, t in zip(a1.args, a2.args):
        s, t = find(s), find(t)
        if s == t:
            continue
        if rank(s) < rank(t) or (rank(s) == rank(t) and str(s) < str(t)):
            s, t = t, s
        if isinstance(s, Const):
            return None
        if s in xs and not (isinstance(t, Var) and t in xs):
            return None
        if s in ys and not (isinstance(t, Var) and (t in xs or t in ys)):
            return None
        sigma[s] = t
    return sigma


def _apply_sigma(rule: FORule, sigma: dict, drop: CQAtom) -> FORule:
    def res(t: Term) -> Term:
        while isinstance(t, Var) and t in sigma:
            t = sigma[t]
        return t

    def sub(a: CQAtom) -> CQAtom:
        return CQAtom(a.predicate, tuple(res(t) for t in a.args))

    pos = list(rule.pos)
    pos.remove(drop)
    return FORule(
        head_group=tuple(res(t) for t in rule.head_group),
        head_agg=tuple(res(t) for t in rule.head_agg),
        pos=tuple(sub(a) for a in pos),
        neg=tuple(sub(a) for a in rule.neg),
        eq=tuple((res(s), res(t)) for s, t in rule.eq),
        exists=tuple(
            ExistsAtom(ea.count, ea.role, res(ea.subject), ea.var) for ea in rule.exists
        ),
    )


def _reduce_new_rules(rule: FORule) -> Iterable[FORule]:
    """All single-step Reduce derivations: unify two same-predicate atoms
    under the mapping restrictions and drop the second."""
    xs = frozenset(t for t in rule.head_group if isinstance(t, Var))
    ys = frozenset(t for t in rule.head_agg if isinstance(t, Var))
    for i, a1 in enumerate(rule.pos):
        for a2 in rule.pos[i + 1 :]:
            sigma = _restricted_mgu(a1, a2, xs, ys)
            if sigma is not None:
                yield _apply_sigma(rule, sigma, a2)


def _ar_reduce_fixpoint(q: FOCountQuery, tbox: TBox, budget: _Budget) -> FOCountQuery:
    """Close one query's rule set under AtomRewrite and Reduce.

    New rules are deduplicated by canonical fingerprint, so rederivations
    that differ only in placeholder names do not loop.
    """
    rules = list(q.rules)
    fps = {canonical_rule(r) for r in rules}
    changed = True
    while changed:
        changed = False
        for rule in list(rules):
            for new in itertools.chain(_ar_new_rules(rule, tbox), _reduce_new_rules(rule)):
                fp = canonical_rule(new)
                if fp not in fps:
                    budget.tick()
                    fps.add(fp)
                    rules.append(new)
                    changed = True
    if len(rules) == len(q.rules):
        return q
    return replace(q, rules=tuple(rules))


def atom_rewrite(queries: Sequence[FOCountQuery], tbox: TBox) -> tuple:
    """Close every query under AtomRewrite alone (exposed for inspection)."""
    out = []
    budget = _Budget(DEFAULT_STEP_BUDGET)
    for q in queries:
        rules = list(q.rules)
        fps = {canonical_rule(r) for r in rules}
        changed = True
        while changed:
            changed = False
            for rule in list(rules):
                for new in _ar_new_rules(rule, tbox):
                    fp = canonical_rule(new)
                    if fp not in fps:
                        budget.tick()
                        fps.add(fp)
                        rules.append(new)
                        changed = True
        out.append(replace(q, rules=tuple(rules)))
    return tuple(out)


def reduce(queries: Sequence[FOCountQuery]) -> tuple:
    """Close every query under Reduce alone (exposed for inspection)."""
    out = []
    budget = _Budget(DEFAULT_STEP_BUDGET)
    for q in queries:
        rules = list(q.rules)
        fps = {canonical_rule(r) for r in rules}
        changed = True
        while changed:
            changed = False
            for rule in list(rules):
                for new in _reduce_new_rules(rule):
                    fp = canonical_rule(new)
                    if fp not in fps:
                        budget.tick()
                        fps.add(fp)
                        rules.append(new)
                        changed = True
        out.append(replace(q, rules=tuple(rules)))
    return tuple(out)


# ---------------------------------------------------------------------------
# generate-and-eliminate
# ---------------------------------------------------------------------------


def _atdec(
    chosen: tuple, excluded: tuple, w: Term, tbox: TBox, used: set
) -> tuple:
    """Positive and negated membership atoms for one decomposition case:
    assert each chosen subsumee on w, deny every subsumee of every excluded
    concept."""
    pos: list = []
    seen_pos: set = set()
    for b in chosen:
        if b not in seen_pos:
            seen_pos.add(b)
            pos.append(_xi(b, w, used))
    neg: list = []
    seen_neg: set = set()
    for b in excluded:
        for sub in sorted(subsumees(tbox, [b]), key=str):
            if sub not in seen_neg:
                seen_neg.add(sub)
                neg.append(_xi(sub, w, used))
    return tuple(pos), tuple(neg)


def _eliminate(
    rule: FORule,
    atom: CQAtom,
    z: Var,
    new_pos: tuple,
    new_neg: tuple,
    ea: ExistsAtom,
    delete_z: bool,
) -> FORule:
    pos = []
    for a in rule.pos:
        if a == atom:
            continue
        if delete_z and z in a.args:
            continue
        pos.append(a)
    pos.extend(new_pos)
    neg = [a for a in rule.neg if not (delete_z and z in a.args)]
    neg.extend(new_neg)
    eq = tuple((s, t) for s, t in rule.eq if not (delete_z and z in (s, t)))
    exs = [
        e
        for e in rule.exists
        if not (delete_z and (e.subject == z or e.var == z))
    ]
    exs.append(ea)
    return FORule(
        head_group=rule.head_group,
        head_agg=tuple(t for t in rule.head_agg if t != z),
        pos=tuple(pos),
        neg=tuple(neg),
        eq=eq,
        exists=tuple(exs),
    )


def _ge_step(
    state: list,
    tbox: TBox,
    beta: bool,
    fps: set,
    budget: _Budget,
    exists_fps: set,
    attempted: set,
) -> Optional[list]:
    """Fire the first admissible elimination and return its new queries.

    Candidates are scanned in (query, rule, atom, orientation) order.  One
    firing emits the whole family: every split of the forcing concepts,
    every already-present count i, every choice of subsumees for the
    asserted side, applied to every rule that carries the atom with the
    variable eliminable.

    ``exists_fps`` holds the exact-count-set fingerprint of every rule in
    the state; ``attempted`` records candidates already resolved.  Both only
    grow, and a candidate rejected once (guard hit, no forcing axiom, all
    results duplicate) stays rejected, so resolved candidates are final.
    """
    blocked_fn = beta_blocked if beta else alpha_blocked
    for q in state:
        q_fp = canonical_query(q)
        agg_set = set(q.agg_vars)
        head_vars = set(q.group_by) | agg_set
        for rule in q.rules:
            for atom in rule.pos:
                if len(atom.args) != 2:
                    continue
                for inverted in (False, True):
                    key = (q_fp, atom, inverted, beta)
                    if key in attempted:
                        continue
                    attempted.add(key)
                    role = Role(atom.predicate, inverted)
                    w, z = (atom.args[1], atom.args[0]) if inverted else atom.args
                    if not isinstance(z, Var) or z not in agg_set:
                        continue
                    if isinstance(w, Var) and w not in head_vars:
                        continue
                    pi = [
                        r
                        for r in q.rules
                        if atom in r.pos
                        and r.head_agg.count(z) == 1
                        and z not in blocked_fn(r)
                    ]
                    if not pi:
                        continue
                    b_k = []
                    for ax in tbox.concept_inclusions():
                        if (
                            not ax.negated_rhs
                            and isinstance(ax.rhs, MinCard)
                            and ax.rhs.role == role
                            and ax.lhs not in b_k
                        ):
                            b_k.append(ax.lhs)
                    if not b_k:
                        continue
                    b_k.sort(key=str)
                    guard = _canon_exists_set(
                        frozenset(pi[0].exists) | {ExistsAtom(0, role, w, z)}, pi[0]
                    )
                    if guard in exists_fps:
                        continue
                    news = _emit_family(q, pi, atom, role, w, z, b_k, tbox, beta, fps, budget)
                    if news:
                        return news
    return None


def _register_exists(q: FOCountQuery, exists_fps: set) -> None:
    for r in q.rules:
        exists_fps.add(_canon_exists_set(frozenset(r.exists), r))


def _emit_family(
    q: FOCountQuery,
    pi: list,
    atom: CQAtom,
    role: Role,
    w: Term,
    z: Var,
    b_k: list,
    tbox: TBox,
    beta: bool,
    fps: set,
    budget: _Budget,
) -> list:
    news: list = []
    agg_new = tuple(v for v in q.agg_vars if v != z)
    # NB: no admissibility filter on the split beyond B1 != empty.  A
    # "subsumees(B1) disjoint from subsumees(B2)" side condition looks
    # natural but rejects realizable cases when forcing concepts overlap
    # (A1 sub A2 with both forcing R-successors: the case "A2 active, A1
    # not" survives only without the filter), which silently undercounts.
    for size in range(1, len(b_k) + 1):
        for chosen_set in itertools.combinations(b_k, size):
            # complement split: the case "w activates exactly the chosen
            # concepts" — asserting one subsumee of each chosen concept while
            # denying every subsumee of the rest makes the cases mutually
            # exclusive and exhaustive over activation patterns
            excluded = tuple(b for b in b_k if b not in chosen_set)
            n = max(max_card(tbox, b, role) for b in chosen_set)
            pools = [sorted(subsumees(tbox, [b]), key=str) for b in chosen_set]
            for i in range(n):
                rules: list = []
                for combo in itertools.product(*pools):
                    for r in pi:
                        used = _rule_names(r) | {v.name for v in q.group_by + q.agg_vars}
                        new_pos, new_neg = _atdec(combo, excluded, w, tbox, used)
                        new_rule = _eliminate(
                            r, atom, z, new_pos, new_neg,
                            ExistsAtom(i, role, w, z), delete_z=beta,
                        )
                        if new_rule not in rules:
                            rules.append(new_rule)
                new_q = FOCountQuery(q.group_by, agg_new, (n - i) * q.factor, tuple(rules))
                fp = canonical_query(new_q)
                if fp not in fps:
                    budget.tick()
                    fps.add(fp)
                    news.append(new_q)
    return news


def ge_alpha(queries: Sequence[FOCountQuery], tbox: TBox) -> tuple:
    """One elimination step that keeps other atoms over the variable (none
    can exist unless they block it); returns the extended state."""
    state = list(queries)
    fps = {canonical_query(q) for q in state}
    exists_fps: set = set()
    for q in state:
        _register_exists(q, exists_fps)
    news = _ge_step(
        state, tbox, beta=False, fps=fps, budget=_Budget(DEFAULT_STEP_BUDGET),
        exists_fps=exists_fps, attempted=set(),
    )
    return tuple(state) + tuple(news or ())


def ge_beta(queries: Sequence[FOCountQuery], tbox: TBox) -> tuple:
    """One elimination step that also deletes every remaining atom over the
    eliminated variable (zero-count atoms included); returns the extended
    state."""
    state = list(queries)
    fps = {canonical_query(q) for q in state}
    exists_fps: set = set()
    for q in state:
        _register_exists(q, exists_fps)
    news = _ge_step(
        state, tbox, beta=True, fps=fps, budget=_Budget(DEFAULT_STEP_BUDGET),
        exists_fps=exists_fps, attempted=set(),
    )
    return tuple(state) + tuple(news or ())


# ---------------------------------------------------------------------------
# saturation
# ---------------------------------------------------------------------------


def saturate(
    q: ConjunctiveQuery,
    tbox: TBox,
    dialect: Dialect = CORE_NM,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> tuple:
    """Run the full expansion and return the normalized queries, sorted by
    canonical fingerprint.

    AtomRewrite and Reduce close every query before each elimination
    attempt; eliminations fire one family at a time, alpha before beta.
    Termination: the closure works inside a finite rule space, each
    elimination removes an aggregation variable, and the fingerprint sets
    refuse rediscoveries.  The step budget is a hard stop for safety and
    should never fire on supported inputs.
    """
    budget = _Budget(step_budget)
    first = _ar_reduce_fixpoint(initialize(q, tbox, dialect), tbox, budget)
    state = [first]
    fps = {canonical_query(first)}
    exists_fps: set = set()
    _register_exists(first, exists_fps)
    attempted: set = set()
    while True:
        news = _ge_step(
            state, tbox, beta=False, fps=fps, budget=budget,
            exists_fps=exists_fps, attempted=attempted,
        )
        if news is None:
            news = _ge_step(
                state, tbox, beta=True, fps=fps, budget=budget,
                exists_fps=exists_fps, attempted=attempted,
            )
        if news is None:
            break
        for fresh in news:
            closed = _ar_reduce_fixpoint(fresh, tbox, budget)
            if closed is not fresh:
                fps.discard(canonical_query(fresh))
                closed_fp = canonical_query(closed)
                if closed_fp in fps:
                    continue  # closure collided with a query already present
                fps.add(closed_fp)
            state.append(closed)
            _register_exists(closed, exists_fps)
    out = [_normalize_query(query) for query in state]
    return tuple(sorted(out, key=canonical_query))
