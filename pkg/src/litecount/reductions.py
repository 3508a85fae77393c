"""Hardness-gadget generators: small graphs and NAND circuits compiled into
counting knowledge bases whose certain count crosses a stated threshold
exactly when the source object fails the corresponding property.

Three constructions:

* co-3-colorability with a linear, acyclic, four-component query over a
  plain existential TBox (threshold 4),
* co-3-colorability with a single tree-shaped query over a role hierarchy
  (threshold 3|V|+1),
* NAND-circuit invalidity with an atomic query, using disjointness and one
  >=2 restriction (threshold |P|+1).

``is_3colorable`` and ``eval_circuit`` answer the source-side questions
directly, so tests can confront every gadget with an independent oracle
instead of trusting the construction.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Sequence

from .cq import CQAtom, ConjunctiveQuery, Var
from .syntax import (
    ABox,
    Atomic,
    ConceptInclusion,
    CORE_H_NM,
    Dialect,
    Fact,
    KB,
    MinCard,
    Role,
    RoleInclusion,
    TBox,
    encode_numbers_into_H,
    exists,
)


class ReductionError(ValueError):
    """An ill-formed graph or circuit, or one outside a generator's scope."""


# ---------------------------------------------------------------------------
# source objects


@dataclass(frozen=True)
class UndirectedGraph:
    """A loopless undirected graph.

    Edges are stored lexicographically oriented, so two descriptions of the
    same graph compare equal regardless of the orientation they were given
    in.  Vertex names double as KB individuals, hence must be identifiers.
    """

    vertices: tuple
    edges: frozenset

    def __post_init__(self) -> None:
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(set(verts)) != len(verts):
            raise ReductionError("duplicate vertex name")
        canon = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ReductionError(f"self-loop on {u}")
            for x in (u, v):
                if x not in verts:
                    raise ReductionError(f"edge endpoint {x!r} is not a declared vertex")
            canon.add((u, v) if u <= v else (v, u))
        object.__setattr__(self, "edges", frozenset(canon))


@dataclass(frozen=True)
class NandCircuit:
    """A boolean circuit built from two-input NAND gates.

    ``inputs`` holds (name, polarity) pairs; the polarity is the truth value
    asserted for that input.  Each gate names two *distinct* earlier wires
    (circuit inputs or previous gates), so listing order is evaluation order
    and the wiring is acyclic by construction.  ``target`` names the gate
    asserted to evaluate to true.  Distinct wires matter downstream: the KB
    encoding counts distinct role predecessors, and a doubled wire would
    collapse into one.
    """

    inputs: tuple
    gates: tuple
    target: str

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "inputs", tuple((n, bool(p)) for n, p in self.inputs)
        )
        object.__setattr__(
            self, "gates", tuple((n, tuple(ws)) for n, ws in self.gates)
        )
        if not self.gates:
            raise ReductionError("a circuit needs at least one gate")
        seen: set = set()
        for name, _ in self.inputs:
            if name in seen:
                raise ReductionError(f"duplicate wire name {name!r}")
            seen.add(name)
        for name, wires in self.gates:
            if name in seen:
                raise ReductionError(f"duplicate wire name {name!r}")
            if len(wires) != 2 or wires[0] == wires[1]:
                raise ReductionError(f"gate {name} needs two distinct input wires")
            for w in wires:
                if w not in seen:
                    raise ReductionError(f"gate {name} uses undefined wire {w!r}")
            seen.add(name)
        if self.target not in {n for n, _ in self.gates}:
            raise ReductionError(f"target {self.target!r} is not a gate")


@dataclass(frozen=True)
class ReductionInstance:
    """A KB, a boolean query, a threshold, and the statement the three are
    claimed to satisfy together."""

    kb: KB
    query: ConjunctiveQuery
    threshold: int
    claim: str

    def __post_init__(self) -> None:
        if self.threshold < 1:
            raise ReductionError("threshold must be positive")
        if self.query.head:
            raise ReductionError("reduction queries are boolean")


# ---------------------------------------------------------------------------
# independent oracles


def is_3colorable(g: UndirectedGraph) -> bool:
    """Exhaustive search over all 3^|V| colorings."""
    pos = {v: i for i, v in enumerate(g.vertices)}
    for coloring in itertools.product(range(3), repeat=len(g.vertices)):
        if all(coloring[pos[u]] != coloring[pos[v]] for u, v in g.edges):
            return True
    return False


def eval_circuit(c: NandCircuit) -> bool:
    """True when the target gate evaluates to true under the asserted input
    polarities.  NAND(x, y) = not (x and y), in listing order."""
    val = dict(c.inputs)
    for name, (w1, w2) in c.gates:
        val[name] = not (val[w1] and val[w2])
    return val[c.target]


# ---------------------------------------------------------------------------
# generators


def _freshen(bases: Sequence[str], taken: set) -> dict:
    """Name the gadget individuals: each base keeps its name unless the
    source object already claims it, in which case the whole family moves
    to suffixed variants together (one shared suffix, for readability)."""
    if not (set(bases) & taken):
        return {b: b for b in bases}
    k = 0
    while True:
        cand = {b: f"{b}_{k}" for b in bases}
        if not (set(cand.values()) & taken):
            return cand
        k += 1


def _color_probe(i: int, color: str) -> list:
    """edge(vi, vi+1) with both endpoints colored ``color``."""
    v1, v2 = Var(f"v{i}"), Var(f"v{i + 1}")
    c1, c2 = Var(f"c{i}"), Var(f"c{i + 1}")
    return [
        CQAtom("edge", (v1, v2)),
        CQAtom("hasColor", (v1, c1)),
        CQAtom("hasColor", (v2, c2)),
        CQAtom(color, (c1,)),
        CQAtom(color, (c2,)),
    ]


def gen_3col_disconnected(g: UndirectedGraph) -> ReductionInstance:
    """Count instance for co-3-colorability with a linear but disconnected
    query (threshold 4).

    Every vertex must take a color.  The self-edged auxiliary individual
    pins each per-color probe to exactly one match in the intended models;
    a color outside {b, g, r} inflates the Color(c) component past 3, and a
    repeated color across an edge doubles one probe, so the count stays at
    3 = 3*1*1*1 exactly on the 3-colorable graphs.
    """
    names = _freshen(("a", "b", "g", "r"), set(g.vertices))
    a, blue, green, red = (names[k] for k in ("a", "b", "g", "r"))
    facts = [Fact("Vertex", (v,)) for v in g.vertices]
    facts += [Fact("edge", e) for e in sorted(g.edges)]
    facts += [Fact("Blue", (blue,)), Fact("Green", (green,)), Fact("Red", (red,))]
    facts += [
        Fact("hasColor", (a, blue)),
        Fact("hasColor", (a, green)),
        Fact("hasColor", (a, red)),
        Fact("edge", (a, a)),
    ]
    tbox = TBox(
        (
            ConceptInclusion(Atomic("Vertex"), exists(Role("hasColor"))),
            ConceptInclusion(exists(Role("hasColor", True)), Atomic("Color")),
        )
    )
    body = [CQAtom("Color", (Var("c"),))]
    for i, color in ((1, "Blue"), (3, "Green"), (5, "Red")):
        body += _color_probe(i, color)
    return ReductionInstance(
        kb=KB(tbox, ABox(tuple(facts))),
        query=ConjunctiveQuery((), tuple(body)),
        threshold=4,
        claim="the certain count is >= 4 iff the graph is not 3-colorable",
    )


def gen_3col_branching(g: UndirectedGraph) -> ReductionInstance:
    """Count instance for co-3-colorability whose query is one tree
    (threshold 3|V|+1).

    The three per-color probes hang off a conn-spine so the query stays
    connected, and the tail s(v7,c1), u(v7,c7) multiplies every probe match
    by 3|V| through the role hierarchy s/hasColor <= u: an off-palette color
    adds a u-edge (3|V|+1), a monochromatic edge adds a second spine match
    (6|V|).  Needs a nonempty graph -- with no vertices the 6|V| branch
    drops below the threshold.
    """
    if not g.vertices:
        raise ReductionError("the branching gadget needs a nonempty graph")
    names = _freshen(("a", "b", "g", "r"), set(g.vertices))
    a, blue, green, red = (names[k] for k in ("a", "b", "g", "r"))
    facts = [Fact("Vertex", (v,)) for v in g.vertices]
    facts += [Fact("edge", e) for e in sorted(g.edges)]
    for v in g.vertices:
        facts += [Fact("conn", (v, a)), Fact("conn", (a, v))]
    for v in g.vertices:
        for col in (blue, green, red):
            facts.append(Fact("s", (v, col)))
    facts += [
        Fact("edge", (a, a)),
        Fact("conn", (a, a)),
        Fact("hasColor", (a, blue)),
        Fact("hasColor", (a, green)),
        Fact("hasColor", (a, red)),
        Fact("Blue", (blue,)),
        Fact("Green", (green,)),
        Fact("Red", (red,)),
    ]
    tbox = TBox(
        (
            ConceptInclusion(Atomic("Vertex"), exists(Role("hasColor"))),
            RoleInclusion(Role("s"), Role("u")),
            RoleInclusion(Role("hasColor"), Role("u")),
        )
    )
    body = []
    for i, color in ((1, "Blue"), (3, "Green"), (5, "Red")):
        body += _color_probe(i, color)
    body += [
        CQAtom("conn", (Var("v1"), Var("v3"))),
        CQAtom("conn", (Var("v3"), Var("v5"))),
        CQAtom("s", (Var("v7"), Var("c1"))),
        CQAtom("u", (Var("v7"), Var("c7"))),
    ]
    n = len(g.vertices)
    return ReductionInstance(
        kb=KB(tbox, ABox(tuple(facts))),
        query=ConjunctiveQuery((), tuple(body)),
        threshold=3 * n + 1,
        claim=f"the certain count is >= 3*|V|+1 = {3 * n + 1} iff the graph "
        "is not 3-colorable",
    )


def gen_nand_circuit(c: NandCircuit, dialect: Dialect = CORE_H_NM) -> ReductionInstance:
    """Count instance for NAND-circuit invalidity with the atomic query
    q() :- P(x1, x2) (threshold |P|+1).

    Truth values become concepts T/F wired through subroles P_T/P_F of the
    input relation P: a true node needs one false input, a false node two
    true inputs, and T disj F keeps the assignment a function.  A harness
    of three extra individuals (t1, t2 true; f false) anchors the circuit
    inputs to their asserted polarities.  A model can meet every constraint
    with the given P-edges exactly when the circuit is valid; otherwise it
    pays at least (and, with one repair edge, exactly) one extra pair.
    With a dialect that lacks number restrictions the >=2 axiom is compiled
    away through fresh subroles (``encode_numbers_into_H``).
    """
    wires = [n for n, _ in c.inputs] + [n for n, _ in c.gates]
    names = _freshen(("t1", "t2", "f"), set(wires))
    t1, t2, f = (names[k] for k in ("t1", "t2", "f"))
    facts = []
    for n, pol in c.inputs:
        facts.append(Fact("T_I" if pol else "F_I", (n,)))
    facts.append(Fact("T_O", (c.target,)))
    for n, (w1, w2) in c.gates:
        facts += [Fact("P", (w1, n)), Fact("P", (w2, n))]
    for n, pol in c.inputs:
        feeders = (f, t1) if pol else (t1, t2)
        facts += [Fact("P", (feeders[0], n)), Fact("P", (feeders[1], n))]
    facts += [
        Fact("P", (t1, f)),
        Fact("P", (t2, f)),
        Fact("P", (f, t1)),
        Fact("P", (f, t2)),
        Fact("P", (t2, t1)),
        Fact("P", (t1, t2)),
    ]
    tbox = TBox(
        (
            RoleInclusion(Role("P_T"), Role("P")),
            RoleInclusion(Role("P_F"), Role("P")),
            ConceptInclusion(Atomic("F_I"), Atomic("F")),
            ConceptInclusion(Atomic("T_I"), Atomic("T")),
            ConceptInclusion(Atomic("T_O"), Atomic("T")),
            ConceptInclusion(Atomic("T"), Atomic("F"), negated_rhs=True),
            ConceptInclusion(Atomic("T"), exists(Role("P_F", True))),
            ConceptInclusion(Atomic("F"), MinCard(2, Role("P_T", True))),
            ConceptInclusion(exists(Role("P_T")), Atomic("T")),
            ConceptInclusion(exists(Role("P_F")), Atomic("F")),
        )
    )
    if not dialect.number_restrictions:
        tbox = encode_numbers_into_H(tbox)
    abox = ABox(tuple(facts))
    m = sum(1 for fact in abox if fact.predicate == "P")
    return ReductionInstance(
        kb=KB(tbox, abox),
        query=ConjunctiveQuery((), (CQAtom("P", (Var("x1"), Var("x2"))),)),
        threshold=m + 1,
        claim=f"the certain count is {m + 1} iff the circuit does not "
        f"evaluate to true (and {m} if it does)",
    )


# ---------------------------------------------------------------------------
# text formats


_INPUT_RE = re.compile(r"input\s+(\S+)\s+(pos|neg)")
_GATE_RE = re.compile(r"gate\s+(\S+)\s*=\s*nand\(\s*([^\s,()]+)\s*,\s*([^\s,()]+)\s*\)")
_TARGET_RE = re.compile(r"target\s+(\S+)")
_VERTEX_HEADER_RE = re.compile(r"#\s*vertices\s*:\s*(.*)")


def parse_graph(text: str) -> UndirectedGraph:
    """Edge-list format: one ``u v`` pair per line.  A ``# vertices: a b c``
    header declares the vertex set (the only way to get isolated vertices);
    endpoints outside the header are appended in first-mention order.
    Other ``#`` lines are comments.
    """
    vertices: list = []
    edges = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _VERTEX_HEADER_RE.fullmatch(line)
            if m:
                for v in m.group(1).split():
                    if v not in vertices:
                        vertices.append(v)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ReductionError(f"expected an `u v` edge line, got {line!r}")
        edges.append(tuple(parts))
    for u, v in edges:
        for x in (u, v):
            if x not in vertices:
                vertices.append(x)
    return UndirectedGraph(tuple(vertices), frozenset(edges))


def serialize_graph(g: UndirectedGraph) -> str:
    lines = ["# vertices: " + " ".join(g.vertices)]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> NandCircuit:
    """Netlist format, one statement per line: ``input i1 pos`` (or neg),
    ``gate g1 = nand(i1, i2)``, and exactly one ``target g1``."""
    inputs = []
    gates = []
    target = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if m := _INPUT_RE.fullmatch(line):
            inputs.append((m.group(1), m.group(2) == "pos"))
        elif m := _GATE_RE.fullmatch(line):
            gates.append((m.group(1), (m.group(2), m.group(3))))
        elif m := _TARGET_RE.fullmatch(line):
            if target is not None:
                raise ReductionError("more than one target line")
            target = m.group(1)
        else:
            raise ReductionError(f"unrecognized netlist line {line!r}")
    if target is None:
        raise ReductionError("missing target line")
    return NandCircuit(tuple(inputs), tuple(gates), target)


def serialize_circuit(c: NandCircuit) -> str:
    lines = [f"input {n} {'pos' if p else 'neg'}" for n, p in c.inputs]
    lines += [f"gate {n} = nand({w1}, {w2})" for n, (w1, w2) in c.gates]
    lines.append(f"target {c.target}")
    return "\n".join(lines) + "\n"
