"""Counting first-order queries: the rewriting target language.

A query ``<Q(x, Count(y) * alpha), Pi>`` holds a set of rules
``q(x : y) :- pos, not-atoms, equalities, exists-atoms``.  A rule match is an
assignment of the rule's variables satisfying all four parts, where
``exists=i z: R(w,z)`` demands *exactly* i distinct R-successors of w.  The
query's answer for a binding of x is (number of distinct (x,y)-projections of
matches across all rules) * alpha; with no aggregation variables the count is
1 whenever some match exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .cq import (
    CQAtom,
    Const,
    ConjunctiveQuery,
    CountAnswer,
    Term,
    Var,
    _components,
    _Index,
    _match_component,
    is_wildcard,
)
from .interp import Anon, Element, Interpretation, Named, element_key
from .syntax import Role, SyntaxError_


@dataclass(frozen=True)
class ExistsAtom:
    """``exists=i z: R(w,z)``: w has exactly i distinct R-successors.

    The bound variable z occurs nowhere else in its rule; the subject w is a
    regular variable or a constant (a placeholder subject could never be
    evaluated once its positive atom is gone)."""

    count: int
    role: Role
    subject: Term
    var: Var

    def __post_init__(self) -> None:
        if self.count < 0:
            raise SyntaxError_(f"exists-atom needs a count >= 0, got {self.count}")
        if is_wildcard(self.subject):
            raise SyntaxError_("exists-atom subject cannot be a placeholder")

    def __str__(self) -> str:
        return f"exists={self.count} {self.var}: {self.role}({self.subject},{self.var})"


@dataclass(frozen=True)
class FORule:
    head_group: tuple = ()  # terms aligned with the query's group-by variables
    head_agg: tuple = ()  # terms aligned with the query's aggregation variables
    pos: tuple = ()  # CQAtoms, duplicate-free
    neg: tuple = ()  # CQAtoms; placeholders mean "for no value"
    eq: tuple = ()  # (term, term) pairs
    exists: tuple = ()  # ExistsAtoms

    def __post_init__(self) -> None:
        seen = []
        for a in self.pos:
            if a not in seen:
                seen.append(a)
        object.__setattr__(self, "pos", tuple(seen))

    def variables(self) -> tuple:
        """Every variable of the rule in a deterministic order (head, pos,
        neg, eq, exists-subjects; bound exists-variables excluded)."""
        out: list = []

        def add(t) -> None:
            if isinstance(t, Var) and t not in out:
                out.append(t)

        for t in self.head_group + self.head_agg:
            add(t)
        for a in self.pos + self.neg:
            for t in a.args:
                add(t)
        for s, t in self.eq:
            add(s)
            add(t)
        for ea in self.exists:
            add(ea.subject)
        return tuple(out)

    def __str__(self) -> str:
        head = f"q({','.join(str(t) for t in self.head_group)} : {','.join(str(t) for t in self.head_agg)})"
        items = [str(a) for a in self.pos]
        items += [f"not {a}" for a in self.neg]
        items += [f"{s} = {t}" for s, t in self.eq]
        items += [str(ea) for ea in self.exists]
        return f"{head} :- {', '.join(items)}."


@dataclass(frozen=True)
class FOCountQuery:
    group_by: tuple = ()  # Vars (x)
    agg_vars: tuple = ()  # Vars (y)
    factor: int = 1  # alpha
    rules: tuple = ()

    def __post_init__(self) -> None:
        if self.factor < 1:
            raise SyntaxError_(f"factor must be >= 1, got {self.factor}")
        for r in self.rules:
            if len(r.head_group) != len(self.group_by) or len(r.head_agg) != len(self.agg_vars):
                raise SyntaxError_("rule head does not line up with the query header")

    def __str__(self) -> str:
        head = f"Q({','.join(str(v) for v in self.group_by)} ; count({','.join(str(v) for v in self.agg_vars)}) * {self.factor})"
        return "\n".join([head] + [str(r) for r in self.rules])


def from_cq(q: ConjunctiveQuery) -> FOCountQuery:
    """Embed a plain query: count all non-distinguished variables, factor 1."""
    y = tuple(v for v in q.variables() if v not in q.head)
    rule = FORule(head_group=tuple(q.head), head_agg=y, pos=tuple(q.body))
    return FOCountQuery(tuple(q.head), y, 1, (rule,))


# ---------------------------------------------------------------------------
# evaluation


def _resolve(t: Term, rho: Mapping) -> Optional[Element]:
    if isinstance(t, Const):
        return Named(t.name)
    return rho.get(t)


def rule_matches(rule: FORule, i: Interpretation) -> list:
    """All assignments of the rule's variables satisfying the body.

    Positive atoms drive a backtracking join; variables that occur only in
    the head or in equalities are resolved through the equalities (or, as a
    last resort, enumerated over the domain); a negated atom kills an
    assignment if *some* extension of its placeholders makes it hold; an
    exists-atom checks its exact successor count.
    """
    idx = _Index(i)
    pos_assignments: list = [{}]
    for atoms in _components(rule.pos):
        part = list(_match_component(atoms, idx))
        if not part:
            return []
        pos_assignments = [{**m, **p} for m in pos_assignments for p in part]

    # variables living only inside negated atoms are placeholders: they stay
    # unassigned here so the negation check can range over their extensions
    anchored: set = set()
    for t in rule.head_group + rule.head_agg:
        anchored.add(t)
    for a in rule.pos:
        anchored.update(a.args)
    for s, t in rule.eq:
        anchored.update((s, t))
    for ea in rule.exists:
        anchored.add(ea.subject)
    all_vars = tuple(v for v in rule.variables() if v in anchored)
    domain = sorted(i.domain, key=element_key)
    out: list = []
    for rho in pos_assignments:
        # resolve head/equality-only variables through the equalities
        changed = True
        while changed:
            changed = False
            for s, t in rule.eq:
                sv, tv = _resolve(s, rho), _resolve(t, rho)
                if sv is None and tv is not None and isinstance(s, Var):
                    rho[s] = tv
                    changed = True
                elif tv is None and sv is not None and isinstance(t, Var):
                    rho[t] = sv
                    changed = True
        unresolved = [v for v in all_vars if v not in rho]
        candidates = [rho]
        if unresolved:  # last resort: enumerate the domain
            candidates = [
                {**rho, **dict(zip(unresolved, combo))}
                for combo in _product(domain, len(unresolved))
            ]
        for cand in candidates:
            if (
                all(_resolve(s, cand) == _resolve(t, cand) for s, t in rule.eq)
                and _neg_ok(rule, cand, idx)
                and _exists_ok(rule, cand, i)
            ):
                out.append(cand)
    return out


def _product(domain: list, k: int) -> Iterator[tuple]:
    if k == 0:
        yield ()
        return
    for head in domain:
        for rest in _product(domain, k - 1):
            yield (head,) + rest


def _neg_ok(rule: FORule, rho: Mapping, idx: _Index) -> bool:
    """No negated atom may be satisfiable: extensions range over the atom's
    own unassigned variables (each placeholder is independent)."""
    for a in rule.neg:
        for tup in idx.candidates(a, rho):
            repeat_ok = True
            seen: dict = {}
            for t, e in zip(a.args, tup):
                if isinstance(t, Var) and t not in rho:
                    if t in seen and seen[t] != e:
                        repeat_ok = False
                        break
                    seen[t] = e
            if repeat_ok:
                return False
    return True


def _exists_ok(rule: FORule, rho: Mapping, i: Interpretation) -> bool:
    for ea in rule.exists:
        w = _resolve(ea.subject, rho)
        if w is None:
            raise SyntaxError_(f"unresolved exists-atom subject in {rule}")
        if len(i.successors(w, ea.role)) != ea.count:
            return False
    return True


def _projections(q: FOCountQuery, i: Interpretation) -> set:
    """Distinct (group, agg) element tuples across all rules."""
    out: set = set()
    for r in q.rules:
        for rho in rule_matches(r, i):
            g = tuple(_resolve(t, rho) for t in r.head_group)
            a = tuple(_resolve(t, rho) for t in r.head_agg)
            if any(v is None for v in g + a):
                raise SyntaxError_(f"unsafe rule head in {r}")
            out.add((g, a))
    return out


def evaluate(q: FOCountQuery, i: Interpretation) -> list:
    """Count answers of a single query: per named group binding, the number
    of distinct aggregation tuples times the factor (existence * factor when
    there are no aggregation variables)."""
    groups: dict = {}
    for g, a in _projections(q, i):
        if any(isinstance(e, Anon) for e in g):
            continue
        groups.setdefault(g, set()).add(a)
    return [
        CountAnswer(g, len(aggs) * q.factor)
        for g, aggs in sorted(
            groups.items(), key=lambda kv: tuple(element_key(e) for e in kv[0])
        )
    ]


def evaluate_set(queries: Iterable[FOCountQuery], i: Interpretation) -> list:
    """Sum the per-binding values of several queries over one interpretation."""
    totals: dict = {}
    for q in queries:
        for ans in evaluate(q, i):
            totals[ans.binding] = totals.get(ans.binding, 0) + ans.count
    return [
        CountAnswer(b, c)
        for b, c in sorted(totals.items(), key=lambda kv: tuple(element_key(e) for e in kv[0]))
    ]


# ---------------------------------------------------------------------------
# normalization


def normalize(q: FOCountQuery) -> FOCountQuery:
    """Bring every rule head to exactly the query's (x ; y) variables.

    Head terms are renamed positionally; a constant or a repeated variable in
    a head position turns into a body equality pinning the fresh head
    variable.  Idempotent.
    """
    new_rules: list = []
    for r in q.rules:
        ren: dict = {}  # applied simultaneously, so head swaps are fine
        eqs = list(r.eq)
        for target, old in zip(q.group_by + q.agg_vars, r.head_group + r.head_agg):
            if isinstance(old, Var) and old not in ren:
                ren[old] = target
            else:
                resolved = ren.get(old, old) if isinstance(old, Var) else old
                eqs.append((target, resolved))
        # a target name alive elsewhere in the rule (and not itself renamed)
        # would be captured: push such bystanders to fresh names first
        rule_vars = set(r.variables()) | {ea.var for ea in r.exists}
        live = {v.name for v in rule_vars if v not in ren} | {v.name for v in ren.values()}
        for old, target in list(ren.items()):
            if target != old and target in rule_vars and target not in ren:
                k = 0
                while f"v{k}" in live:
                    k += 1
                live.add(f"v{k}")
                ren[target] = Var(f"v{k}")

        def sub(t: Term) -> Term:
            return ren.get(t, t) if isinstance(t, Var) else t

        new_rules.append(
            FORule(
                head_group=tuple(q.group_by),
                head_agg=tuple(q.agg_vars),
                pos=tuple(CQAtom(a.predicate, tuple(sub(t) for t in a.args)) for a in r.pos),
                neg=tuple(CQAtom(a.predicate, tuple(sub(t) for t in a.args)) for a in r.neg),
                eq=tuple((sub(s), sub(t)) for s, t in eqs),
                exists=tuple(
                    ExistsAtom(ea.count, ea.role, sub(ea.subject), sub(ea.var)) for ea in r.exists
                ),
            )
        )
    dedup: list = []
    for r in new_rules:
        if r not in dedup:
            dedup.append(r)
    return FOCountQuery(q.group_by, q.agg_vars, q.factor, tuple(dedup))


# ---------------------------------------------------------------------------
# SQL emission


def _q_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _q_str(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def _rule_sql(q: FOCountQuery, r: FORule) -> str:
    aliases: list = []
    col_of: dict = {}
    where: list = []
    frm: list = []
    for k, a in enumerate(r.pos):
        alias = f"p{k}"
        if len(a.args) == 1:
            frm.append(f"{_q_ident('concept_' + a.predicate)} AS {alias}")
            cols = ["e"]
        else:
            frm.append(f"{_q_ident('role_' + a.predicate)} AS {alias}")
            cols = ["s", "o"]
        for t, c in zip(a.args, cols):
            ref = f"{alias}.{c}"
            if isinstance(t, Const):
                where.append(f"{ref} = {_q_str(t.name)}")
            elif t in col_of:
                where.append(f"{ref} = {col_of[t]}")
            else:
                col_of[t] = ref
        aliases.append(alias)

    # pin equality-only variables to columns or literals
    changed = True
    pinned: dict = {}
    while changed:
        changed = False
        for s, t in r.eq:
            for a, b in ((s, t), (t, s)):
                if isinstance(a, Var) and a not in col_of and a not in pinned:
                    if isinstance(b, Const):
                        pinned[a] = _q_str(b.name)
                        changed = True
                    elif b in col_of:
                        pinned[a] = col_of[b]
                        changed = True
                    elif isinstance(b, Var) and b in pinned:
                        pinned[a] = pinned[b]
                        changed = True

    def ref_of(t: Term) -> str:
        if isinstance(t, Const):
            return _q_str(t.name)
        if t in col_of:
            return col_of[t]
        if t in pinned:
            return pinned[t]
        raise SyntaxError_(f"cannot emit SQL: {t} is not bound by the rule body in {r}")

    for s, t in r.eq:
        where.append(f"{ref_of(s)} = {ref_of(t)}")
    for n, a in enumerate(r.neg):
        alias = f"n{n}"
        if len(a.args) == 1:
            table, cols = "concept_" + a.predicate, ["e"]
        else:
            table, cols = "role_" + a.predicate, ["s", "o"]
        conds = []
        for t, c in zip(a.args, cols):
            if not is_wildcard(t):
                conds.append(f"{alias}.{c} = {ref_of(t)}")
        cond = " AND ".join(conds) if conds else "1=1"
        where.append(f"NOT EXISTS (SELECT 1 FROM {_q_ident(table)} AS {alias} WHERE {cond})")
    for n, ea in enumerate(r.exists):
        alias = f"x{n}"
        inner_col, outer_col = ("s", "o") if ea.role.inverted else ("o", "s")
        where.append(
            f"(SELECT COUNT(DISTINCT {alias}.{inner_col}) FROM {_q_ident('role_' + ea.role.name)} AS {alias} "
            f"WHERE {alias}.{outer_col} = {ref_of(ea.subject)}) = {ea.count}"
        )

    select = [f"{ref_of(t)} AS g{j}" for j, t in enumerate(r.head_group)]
    select += [f"{ref_of(t)} AS a{j}" for j, t in enumerate(r.head_agg)]
    if not select:
        select = ["1 AS one"]
    sql = "SELECT DISTINCT " + ", ".join(select)
    if frm:
        sql += " FROM " + ", ".join(frm)
    if where:
        sql += " WHERE " + " AND ".join(where)
    return sql


def emit_sql(q: FOCountQuery) -> str:
    """One SQL statement over tables ``concept_A(e)`` / ``role_P(s,o)``
    computing the query's answers: group-by columns plus ``cnt``.

    Rules become UNIONed DISTINCT selects over (x, y); the outer query counts
    rows per x-group and multiplies by the factor.  Negated atoms compile to
    NOT EXISTS, exists-atoms to a correlated successor count compared with i.
    A boolean query yields a single ``cnt`` column that is 0 when there is no
    match.
    """
    inner = "\nUNION\n".join(_rule_sql(q, r) for r in q.rules)
    gcols = [f"g{j}" for j in range(len(q.group_by))]
    outer = "SELECT "
    if gcols:
        outer += ", ".join(gcols) + ", "
    outer += f"COUNT(*) * {q.factor} AS cnt FROM (\n{inner}\n)"
    if gcols:
        outer += " GROUP BY " + ", ".join(gcols) + " ORDER BY " + ", ".join(gcols)
    return outer
