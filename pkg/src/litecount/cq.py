"""Conjunctive queries under exact-count semantics.

An answer is a pair (binding, k): the binding extends to *exactly* k matches
of the body.  Under annotated interpretations a match counts with the product
of the multiplicities of the elements it uses (per tuple position), which is
how one witness element can stand for several successors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .interp import Anon, Element, Interpretation, Named, element_key
from .syntax import IDENT_RE, Role, SyntaxError_


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    name: str

    def __post_init__(self) -> None:
        if not IDENT_RE.match(self.name):
            raise SyntaxError_(f"not a valid constant: {self.name!r}")

    def __str__(self) -> str:
        return f"'{self.name}'"


Term = Union[Var, Const]


def is_wildcard(t: Term) -> bool:
    """Placeholder variables (named ``_k``) never count toward boundness and
    serialize back to a bare ``_``."""
    return isinstance(t, Var) and t.name.startswith("_")


def fresh_wildcard(used: set) -> Var:
    k = 1
    while f"_{k}" in used:
        k += 1
    used.add(f"_{k}")
    return Var(f"_{k}")


@dataclass(frozen=True)
class CQAtom:
    predicate: str
    args: tuple

    def __post_init__(self) -> None:
        if not IDENT_RE.match(self.predicate):
            raise SyntaxError_(f"not a valid predicate: {self.predicate!r}")
        if len(self.args) not in (1, 2):
            raise SyntaxError_(f"atom arity must be 1 or 2: {self}")

    def variables(self) -> tuple:
        return tuple(a for a in self.args if isinstance(a, Var))

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    head: tuple  # distinguished variables, possibly empty (boolean query)
    body: tuple  # duplicate-free CQAtoms

    def __post_init__(self) -> None:
        seen = []
        for a in self.body:
            if a not in seen:
                seen.append(a)
        object.__setattr__(self, "body", tuple(seen))
        if not self.body:
            raise SyntaxError_("a query needs at least one body atom")
        if len(set(self.head)) != len(self.head):
            raise SyntaxError_("repeated distinguished variable")
        body_vars = set(self.variables())
        for v in self.head:
            if v not in body_vars:
                raise SyntaxError_(f"distinguished variable {v} does not occur in the body")

    def variables(self) -> tuple:
        out = []
        for a in self.body:
            for v in a.variables():
                if v not in out:
                    out.append(v)
        return tuple(out)

    def constants(self) -> tuple:
        out = []
        for a in self.body:
            for t in a.args:
                if isinstance(t, Const) and t not in out:
                    out.append(t)
        return tuple(out)

    def __str__(self) -> str:
        head = ",".join(str(v) for v in self.head)
        body = ", ".join(str(a) for a in self.body)
        return f"q({head}) :- {body}."


# ---------------------------------------------------------------------------
# shape classification


@dataclass(frozen=True)
class GaifmanGraph:
    vertices: frozenset  # variable names
    edges: frozenset  # frozensets of size 1 (self-loop) or 2

    def degree(self, v: str) -> int:
        d = 0
        for e in self.edges:
            if v in e:
                d += 2 if len(e) == 1 else 1
        return d

    def components(self) -> list:
        remaining = set(self.vertices)
        comps = []
        adj: dict = {v: set() for v in self.vertices}
        for e in self.edges:
            if len(e) == 2:
                a, b = tuple(e)
                adj[a].add(b)
                adj[b].add(a)
        while remaining:
            seed = min(remaining)
            comp = {seed}
            queue = [seed]
            while queue:
                v = queue.pop()
                for w in adj[v]:
                    if w not in comp:
                        comp.add(w)
                        queue.append(w)
            remaining -= comp
            comps.append(frozenset(comp))
        return comps


def gaifman(q: ConjunctiveQuery) -> GaifmanGraph:
    """Vertices are the body variables; an edge joins the two variables of a
    role atom (a role atom P(x,x) is a self-loop)."""
    vertices = {v.name for v in q.variables()}
    edges = set()
    for a in q.body:
        if len(a.args) == 2:
            vs = [t.name for t in a.args if isinstance(t, Var)]
            if len(vs) == 2:
                edges.add(frozenset(vs))
    return GaifmanGraph(frozenset(vertices), frozenset(edges))


@dataclass(frozen=True)
class ShapeReport:
    connected: bool
    acyclic: bool
    linear: bool
    rooted: bool
    atomic: bool
    class_labels: frozenset

    def words(self) -> str:
        parts = [
            "connected" if self.connected else "disconnected",
            "acyclic" if self.acyclic else "cyclic",
            "linear" if self.linear else "branching",
            "rooted" if self.rooted else "unrooted",
        ]
        if self.atomic:
            parts.append("atomic")
        return " ".join(parts)


def classify_shape(q: ConjunctiveQuery) -> ShapeReport:
    """Gaifman-graph shape flags.

    A self-loop adds 2 to its vertex's degree and counts as a cycle; a
    component is rooted when some variable in it is distinguished or shares
    an atom with a constant.  A query without variables has the empty graph:
    trivially connected, acyclic, linear, and rooted.
    """
    g = gaifman(q)
    comps = g.components()
    connected = len(comps) <= 1
    linear = all(g.degree(v) <= 2 for v in g.vertices)
    # acyclic: every edge must join two previously-disconnected vertices
    parent = {v: v for v in g.vertices}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    acyclic = True
    for e in sorted(g.edges, key=sorted):
        if len(e) == 1:
            acyclic = False
            continue
        a, b = sorted(e)
        ra, rb = find(a), find(b)
        if ra == rb:
            acyclic = False
        else:
            parent[ra] = rb

    anchored = {v.name for v in q.head}
    for a in q.body:
        if any(isinstance(t, Const) for t in a.args):
            anchored |= {t.name for t in a.args if isinstance(t, Var)}
    rooted = all(comp & anchored for comp in comps)

    atomic = len(q.body) == 1
    letters = "".join(
        c for c, flag in (("A", acyclic), ("C", connected), ("L", linear), ("R", rooted)) if flag
    )
    labels = {f"CQ^{letters}" if letters else "CQ"}
    if atomic:
        labels.add("AQ")
    return ShapeReport(connected, acyclic, linear, rooted, atomic, frozenset(labels))


# ---------------------------------------------------------------------------
# matching


class _Index:
    """Per-interpretation lookup structures for the backtracking join."""

    def __init__(self, i: Interpretation):
        self.i = i
        self.concept: dict = {n: sorted(ext, key=element_key) for n, ext in i.concepts.items()}
        self.pairs: dict = {}
        self.succ: dict = {}
        self.pred: dict = {}
        for n, ext in i.roles.items():
            self.pairs[n] = sorted(
                ext, key=lambda p: (element_key(p[0]), element_key(p[1]))
            )
            s: dict = {}
            p: dict = {}
            for x, y in self.pairs[n]:
                s.setdefault(x, []).append(y)
                p.setdefault(y, []).append(x)
            self.succ[n] = s
            self.pred[n] = p

    def candidates(self, atom: CQAtom, binding: dict) -> Iterator[tuple]:
        """Tuples of elements this atom can match, given the partial binding."""

        def res(t: Term):
            if isinstance(t, Const):
                return Named(t.name)
            return binding.get(t)

        if len(atom.args) == 1:
            v = res(atom.args[0])
            ext = self.concept.get(atom.predicate, ())
            if v is not None:
                if v in self.i.concept_ext(atom.predicate):
                    yield (v,)
                return
            yield from ((e,) for e in ext)
            return
        a, b = (res(t) for t in atom.args)
        if a is not None and b is not None:
            if (a, b) in self.i.role_ext(Role(atom.predicate)):
                yield (a, b)
        elif a is not None:
            for y in self.succ.get(atom.predicate, {}).get(a, ()):
                yield (a, y)
        elif b is not None:
            for x in self.pred.get(atom.predicate, {}).get(b, ()):
                yield (x, b)
        else:
            yield from self.pairs.get(atom.predicate, ())


def _order_atoms(atoms: Sequence[CQAtom]) -> list:
    """Deterministic join order: repeatedly take the atom sharing a variable
    with what is already placed (original order breaking ties), seeding with
    the first atom."""
    placed: list = []
    seen_vars: set = set()
    rest = list(atoms)
    while rest:
        pick = None
        for a in rest:
            if not placed or set(a.variables()) & seen_vars:
                pick = a
                break
        if pick is None:
            pick = rest[0]
        placed.append(pick)
        seen_vars |= set(pick.variables())
        rest.remove(pick)
    return placed


def _components(atoms: Sequence[CQAtom]) -> list:
    """Partition the body by variable sharing; variable-free atoms are
    singleton components."""
    comps: list = []
    for a in atoms:
        avars = set(a.variables())
        if not avars:
            comps.append(([a], set()))
            continue
        hits = [c for c in comps if c[1] & avars]
        merged = ([a], set(avars))
        for c in hits:
            merged[0].extend(c[0])
            merged[1].update(c[1])
            comps.remove(c)
        comps.append(merged)
    # keep a deterministic order: by first body position
    order = {id(a): k for k, a in enumerate(atoms)}
    for c in comps:
        c[0].sort(key=lambda a: order[id(a)])
    comps.sort(key=lambda c: order[id(c[0][0])])
    return [c[0] for c in comps]


def _match_component(atoms: list, idx: _Index) -> Iterator[dict]:
    ordered = _order_atoms(atoms)

    def step(k: int, binding: dict) -> Iterator[dict]:
        if k == len(ordered):
            yield dict(binding)
            return
        atom = ordered[k]
        for tup in idx.candidates(atom, binding):
            added = []
            ok = True
            for t, e in zip(atom.args, tup):
                if isinstance(t, Var):
                    if t in binding:
                        if binding[t] != e:
                            ok = False
                            break
                    else:
                        binding[t] = e
                        added.append(t)
            if ok:
                yield from step(k + 1, binding)
            for t in added:
                del binding[t]

    yield from step(0, {})


def matches(q: ConjunctiveQuery, i: Interpretation) -> list:
    """All matches of the body, as variable->element maps, ordered
    lexicographically by (variable first-occurrence order, element order)."""
    idx = _Index(i)
    out: list = [{}]
    for atoms in _components(q.body):
        part = list(_match_component(atoms, idx))
        if not part:
            return []
        out = [{**m, **p} for m in out for p in part]
    var_order = q.variables()
    out.sort(key=lambda m: tuple(element_key(m[v]) for v in var_order))
    return out


@dataclass(frozen=True)
class CountAnswer:
    """binding: elements aligned with the query head; count: exact multiplicity."""

    binding: tuple
    count: int

    def __str__(self) -> str:
        return f"{self.binding} -> {self.count}"


def _group(q: ConjunctiveQuery, ms: Iterable[dict], i: Interpretation) -> list:
    var_order = q.variables()
    groups: dict = {}
    for m in ms:
        key = tuple(m[v] for v in q.head)
        if any(isinstance(e, Anon) for e in key):
            continue  # anonymous witnesses are not certain answers
        weight = 1
        for v in var_order:
            weight *= i.card(m[v])
        groups[key] = groups.get(key, 0) + weight
    return [
        CountAnswer(k, c)
        for k, c in sorted(groups.items(), key=lambda kv: tuple(element_key(e) for e in kv[0]))
        if c > 0
    ]


def answers(q: ConjunctiveQuery, i: Interpretation) -> list:
    """Exact-count answers: one CountAnswer per named binding of the head,
    counting matches (weighted by multiplicities when ``i`` is annotated).
    Components of the body are evaluated independently and combined
    multiplicatively."""
    return _group(q, matches(q, i), i)


def count_matches(q: ConjunctiveQuery, i: Interpretation, cap: Optional[int] = None) -> int:
    """Number of matches of the body (weighted when annotated), without
    materializing them: the per-component counts multiply.

    With ``cap``, counting may stop early once the result is known to be at
    least ``cap``: the value returned is exact when below the cap and
    otherwise merely some number >= cap.  A first pass checks every
    component is nonempty (one empty component zeroes the product, so no
    early stop would be sound before that)."""
    idx = _Index(i)
    comps = []
    for atoms in _components(q.body):
        vs = []
        for a in atoms:
            for v in a.variables():
                if v not in vs:
                    vs.append(v)
        comps.append((atoms, vs))
        if cap is not None and next(_match_component(atoms, idx), None) is None:
            return 0
    total = 1
    for atoms, vs in comps:
        sub = 0
        for m in _match_component(atoms, idx):
            w = 1
            for v in vs:
                w *= i.card(m[v])
            sub += w
            if cap is not None and total * sub >= cap:
                return total * sub
        if sub == 0:
            return 0
        total *= sub
    return total


def boolify(q: ConjunctiveQuery, binding: Mapping) -> ConjunctiveQuery:
    """Ground the distinguished variables with the given binding (variable
    name or Var -> constant name), yielding a boolean query."""
    sub: dict = {}
    for v in q.head:
        if v in binding:
            val = binding[v]
        elif v.name in binding:
            val = binding[v.name]
        else:
            raise SyntaxError_(f"binding misses distinguished variable {v}")
        sub[v] = Const(val if isinstance(val, str) else str(val))
    extra = set(binding) - {v for v in q.head} - {v.name for v in q.head}
    if extra:
        raise SyntaxError_(f"binding names unknown variables: {sorted(map(str, extra))}")
    body = tuple(
        CQAtom(a.predicate, tuple(sub.get(t, t) for t in a.args)) for a in q.body
    )
    return ConjunctiveQuery((), body)
