"""Line-based text formats.

One parser/serializer pair per artifact: TBox, ABox, conjunctive query,
counting query (single and blank-line-separated sets), and interpretation.
Serializers produce the canonical form their parser accepts, so
serialize(parse(text)) is the identity on canonical input.

Conventions shared by all formats: identifiers are ``[A-Za-z_][A-Za-z0-9_]*``,
``#`` starts a comment, blank lines are ignored.  In query formats a quoted
term ``'a'`` is always a constant, a bare term is a variable unless it names
a known individual (the optional ``individuals`` namespace), and a leading
underscore marks a wildcard — a bare ``_`` gets a fresh name per occurrence.
"""

from __future__ import annotations

import re
from typing import Iterable, Optional

from .cq import CQAtom, ConjunctiveQuery, Const, Term, Var, fresh_wildcard
from .focount import ExistsAtom, FOCountQuery, FORule
from .interp import AnnotatedInterpretation, Anon, Element, Interpretation, Named, element_key
from .syntax import (
    ABox,
    Atomic,
    BasicConcept,
    ConceptInclusion,
    Fact,
    MinCard,
    Role,
    RoleInclusion,
    SyntaxError_,
    TBox,
)

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_ANON_RE = re.compile(r"^_:g(\d+)_(\d+)$")
_FACT_RE = re.compile(rf"^({_IDENT})\(([^()]*)\)$")
_EXISTS_CONCEPT_RE = re.compile(rf"^exists\s+({_IDENT})(-?)$")
_MINCARD_CONCEPT_RE = re.compile(rf"^>=\s*(\d+)\s+({_IDENT})(-?)$")
_BARE_RE = re.compile(rf"^({_IDENT})(-?)$")
_EXISTS_ATOM_RE = re.compile(rf"^exists=(\d+)\s+({_IDENT})\s*:\s*({_IDENT})(-?)\(([^()]*)\)$")
_HEADER_RE = re.compile(r"^Q\((.*?);\s*count\((.*?)\)\s*\*\s*(\d+)\s*\)$")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _content_lines(text: str) -> list:
    return [s for s in (_strip(ln) for ln in text.splitlines()) if s]


def _split_top(s: str, sep: str = ",") -> list:
    """Split on a separator, ignoring occurrences inside parentheses."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(s[start:i])
            start = i + 1
    parts.append(s[start:])
    return [p.strip() for p in parts]


# ---------------------------------------------------------------------------
# TBox
# ---------------------------------------------------------------------------


def parse_concept(token: str) -> BasicConcept:
    token = token.strip()
    m = _EXISTS_CONCEPT_RE.match(token)
    if m:
        return MinCard(1, Role(m.group(1), m.group(2) == "-"))
    m = _MINCARD_CONCEPT_RE.match(token)
    if m:
        n = int(m.group(1))
        if n < 1:
            raise SyntaxError_(f"cardinality must be >= 1: {token!r}")
        return MinCard(n, Role(m.group(2), m.group(3) == "-"))
    m = _BARE_RE.match(token)
    if m and not m.group(2):
        return Atomic(m.group(1))
    raise SyntaxError_(f"not a concept: {token!r}")


def parse_role(token: str) -> Role:
    m = _BARE_RE.match(token.strip())
    if not m:
        raise SyntaxError_(f"not a role: {token!r}")
    return Role(m.group(1), m.group(2) == "-")


def _side_kind(tokens: list) -> str:
    """Classify one side of an axiom: 'concept', 'role' (trailing -), or 'bare'."""
    s = " ".join(tokens)
    if _EXISTS_CONCEPT_RE.match(s) or _MINCARD_CONCEPT_RE.match(s):
        return "concept"
    m = _BARE_RE.match(s)
    if m:
        return "role" if m.group(2) else "bare"
    raise SyntaxError_(f"unparseable axiom side: {s!r}")


def parse_tbox(text: str, role_hints: Iterable[str] = ()) -> TBox:
    """Parse one axiom per line.

    A bare name is a concept unless the line (or another line, transitively
    through role inclusions) forces it to be a role: an explicit inverse
    marker ``P-``, appearing under ``exists`` / ``>=n``, or membership in
    ``role_hints`` (callers pass the binary-fact predicates of an
    accompanying ABox).  Unresolvable ``X sub Y`` lines default to concept
    inclusions.
    """
    rows = []  # (op, lhs_tokens, rhs_tokens, raw)
    for raw in _content_lines(text):
        tokens = raw.split()
        split_at = None
        for i in range(1, len(tokens)):
            if tokens[i] in ("sub", "disj"):
                try:
                    _side_kind(tokens[:i])
                    _side_kind(tokens[i + 1 :])
                except SyntaxError_:
                    continue
                split_at = i
                break
        if split_at is None:
            raise SyntaxError_(f"not an axiom: {raw!r}")
        rows.append((tokens[split_at], tokens[:split_at], tokens[split_at + 1 :], raw))

    # role evidence: explicit `-`, a name used under exists/>=n, or a hint
    role_names: set = set(role_hints)
    for op, lhs, rhs, raw in rows:
        for side in (lhs, rhs):
            s = " ".join(side)
            m = _EXISTS_CONCEPT_RE.match(s) or _MINCARD_CONCEPT_RE.match(s)
            if m:
                role_names.add(m.group(1) if m.re is _EXISTS_CONCEPT_RE else m.group(2))
            elif _side_kind(side) == "role":
                role_names.add(_BARE_RE.match(s).group(1))

    def is_role_line(op: str, lhs: list, rhs: list) -> bool:
        if op != "sub":
            return False
        kl, kr = _side_kind(lhs), _side_kind(rhs)
        if kl == "concept" or kr == "concept":
            if kl == "role" or kr == "role":
                raise SyntaxError_(f"axiom mixes a concept and a role: {' '.join(lhs)} sub {' '.join(rhs)}")
            return False
        if kl == "role" or kr == "role":
            return True
        # bare/bare: role iff either name already has role evidence
        return lhs[0] in role_names or rhs[0] in role_names

    changed = True
    while changed:
        changed = False
        for op, lhs, rhs, raw in rows:
            if is_role_line(op, lhs, rhs):
                for side in (lhs, rhs):
                    name = _BARE_RE.match(" ".join(side)).group(1)
                    if name not in role_names:
                        role_names.add(name)
                        changed = True

    axioms = []
    for op, lhs, rhs, raw in rows:
        if op == "disj":
            axioms.append(ConceptInclusion(parse_concept(" ".join(lhs)), parse_concept(" ".join(rhs)), negated_rhs=True))
        elif is_role_line(op, lhs, rhs):
            axioms.append(RoleInclusion(parse_role(" ".join(lhs)), parse_role(" ".join(rhs))))
        else:
            axioms.append(ConceptInclusion(parse_concept(" ".join(lhs)), parse_concept(" ".join(rhs))))
    return TBox(tuple(axioms))


def serialize_tbox(tbox: TBox, role_hints: Iterable[str] = ()) -> str:
    """One axiom per line, in the form the parser reads back identically.

    A role inclusion whose role-ness the parser could not infer (neither name
    appears under ``exists``/``>=n`` or with an inverse marker anywhere) is
    written in its equivalent inverted form ``P- sub Q-``, which pins both
    names as roles.  ``role_hints`` suppresses the marking for names whose
    evidence will come from elsewhere (an ABox shipped alongside).
    """
    evidence: set = set(role_hints)
    incls = [a for a in tbox.axioms if isinstance(a, RoleInclusion)]
    for axiom in tbox.axioms:
        if isinstance(axiom, ConceptInclusion):
            for side in (axiom.lhs, axiom.rhs):
                if isinstance(side, MinCard):
                    evidence.add(side.role.name)
        elif axiom.lhs.inverted:
            evidence.update((axiom.lhs.name, axiom.rhs.name))

    def close() -> None:
        changed = True
        while changed:
            changed = False
            for ax in incls:
                names = {ax.lhs.name, ax.rhs.name}
                if (ax.lhs.inverted or names & evidence) and not names <= evidence:
                    evidence.update(names)
                    changed = True

    close()
    marked: set = set()
    for idx, ax in enumerate(incls):
        names = {ax.lhs.name, ax.rhs.name}
        if not ax.lhs.inverted and not names & evidence:
            marked.add(idx)
            evidence.update(names)
            close()
    lines, k = [], 0
    for axiom in tbox.axioms:
        if isinstance(axiom, RoleInclusion):
            if k in marked:
                lines.append(f"{axiom.lhs}- sub {axiom.rhs}-")
            else:
                lines.append(str(axiom))
            k += 1
        else:
            lines.append(str(axiom))
    return "".join(ln + "\n" for ln in lines)


# ---------------------------------------------------------------------------
# ABox
# ---------------------------------------------------------------------------


def parse_abox(text: str) -> ABox:
    facts = []
    seen = set()
    for raw in _content_lines(text):
        m = _FACT_RE.match(raw)
        if not m:
            raise SyntaxError_(f"not a fact: {raw!r}")
        args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
        fact = Fact(m.group(1), args)
        if fact not in seen:
            seen.add(fact)
            facts.append(fact)
    return ABox(tuple(facts))


def serialize_abox(abox: ABox) -> str:
    return "".join(f"{fact}\n" for fact in abox.facts)


# ---------------------------------------------------------------------------
# conjunctive queries
# ---------------------------------------------------------------------------


def _parse_term(
    tok: str,
    individuals: frozenset,
    head_names: frozenset,
    used: set,
) -> Term:
    tok = tok.strip()
    if tok.startswith("'") and tok.endswith("'") and len(tok) >= 3:
        return Const(tok[1:-1])
    if tok == "_":
        w = fresh_wildcard(used)
        used.add(w.name)
        return w
    if not re.match(rf"^{_IDENT}$", tok):
        raise SyntaxError_(f"not a term: {tok!r}")
    if tok.startswith("_"):
        used.add(tok)
        return Var(tok)
    if tok in head_names:
        return Var(tok)
    if tok in individuals:
        return Const(tok)
    if tok[0].isupper():
        raise SyntaxError_(
            f"bare term {tok!r} starts uppercase: quote it ('{tok}') for a constant"
        )
    return Var(tok)


def _parse_atom(s: str, individuals: frozenset, head_names: frozenset, used: set) -> CQAtom:
    m = _FACT_RE.match(s)
    if not m:
        raise SyntaxError_(f"not an atom: {s!r}")
    args = tuple(
        _parse_term(t, individuals, head_names, used) for t in _split_top(m.group(2))
    )
    return CQAtom(m.group(1), args)


def parse_cq(text: str, individuals: Iterable[str] = ()) -> ConjunctiveQuery:
    """Parse ``q(x1,...) :- Atom, Atom, ... .`` (the final dot is optional).

    A bare body term is a constant when it names a known individual and does
    not appear in the head; quoting is always safe.
    """
    individuals = frozenset(individuals)
    flat = " ".join(_content_lines(text))
    if not flat:
        raise SyntaxError_("empty query text")
    if ":-" not in flat:
        raise SyntaxError_(f"missing ':-' in query: {flat!r}")
    head_s, body_s = flat.split(":-", 1)
    body_s = body_s.strip()
    if body_s.endswith("."):
        body_s = body_s[:-1]
    m = re.match(rf"^({_IDENT})\((.*)\)$", head_s.strip())
    if not m:
        raise SyntaxError_(f"malformed query head: {head_s.strip()!r}")
    head_inner = m.group(2).strip()
    head_vars = []
    if head_inner:
        for tok in _split_top(head_inner):
            if not re.match(rf"^{_IDENT}$", tok) or tok.startswith("_") or tok[0].isupper():
                raise SyntaxError_(f"head terms must be plain variables: {tok!r}")
            head_vars.append(Var(tok))
    head_names = frozenset(v.name for v in head_vars)
    used = {t for t in re.findall(_IDENT, body_s) if t.startswith("_")}
    atoms = tuple(
        _parse_atom(part, individuals, head_names, used)
        for part in _split_top(body_s)
        if part
    )
    return ConjunctiveQuery(tuple(head_vars), atoms)


def serialize_cq(q: ConjunctiveQuery) -> str:
    return str(q) + "\n"


# ---------------------------------------------------------------------------
# counting queries
# ---------------------------------------------------------------------------


def _parse_head_vars(s: str, what: str) -> tuple:
    out = []
    s = s.strip()
    if not s:
        return ()
    for tok in _split_top(s):
        if not re.match(rf"^{_IDENT}$", tok) or tok.startswith("_"):
            raise SyntaxError_(f"{what} must be plain variables: {tok!r}")
        out.append(Var(tok))
    return tuple(out)


def _parse_rule(
    line: str, header_names: frozenset, individuals: frozenset
) -> FORule:
    if ":-" not in line:
        raise SyntaxError_(f"missing ':-' in rule: {line!r}")
    head_s, body_s = line.split(":-", 1)
    body_s = body_s.strip()
    if body_s.endswith("."):
        body_s = body_s[:-1]
    m = re.match(rf"^({_IDENT})\((.*)\)$", head_s.strip())
    if not m:
        raise SyntaxError_(f"malformed rule head: {head_s.strip()!r}")
    halves = _split_top(m.group(2), ":")
    if len(halves) != 2:
        raise SyntaxError_(f"rule head needs one ':' separator: {head_s.strip()!r}")
    used = {t for t in re.findall(_IDENT, body_s) if t.startswith("_")}

    def term(tok: str) -> Term:
        return _parse_term(tok, individuals, header_names, used)

    head_group = tuple(term(t) for t in _split_top(halves[0]) if t)
    head_agg = tuple(term(t) for t in _split_top(halves[1]) if t)
    pos, neg, eq, exists = [], [], [], []
    for item in _split_top(body_s):
        if not item:
            continue
        if item.startswith("not "):
            neg.append(_parse_atom(item[4:].strip(), individuals, header_names, used))
            continue
        m = _EXISTS_ATOM_RE.match(item)
        if m:
            count, binder, rname, inv, inner = m.groups()
            args = _split_top(inner)
            if len(args) != 2:
                raise SyntaxError_(f"exists atom needs two arguments: {item!r}")
            if args[1] != binder:
                raise SyntaxError_(
                    f"exists atom must use its bound variable in object position: {item!r}"
                )
            exists.append(
                ExistsAtom(int(count), Role(rname, inv == "-"), term(args[0]), Var(binder))
            )
            continue
        if "=" in item:
            s, t = item.split("=", 1)
            eq.append((term(s), term(t)))
            continue
        pos.append(_parse_atom(item, individuals, header_names, used))
    return FORule(head_group, head_agg, tuple(pos), tuple(neg), tuple(eq), tuple(exists))


def parse_focount(text: str, individuals: Iterable[str] = ()) -> FOCountQuery:
    """Parse a header line ``Q(x ; count(y) * alpha)`` plus one rule per line."""
    individuals = frozenset(individuals)
    lines = _content_lines(text)
    if not lines:
        raise SyntaxError_("empty counting-query text")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise SyntaxError_(f"malformed counting-query header: {lines[0]!r}")
    group_by = _parse_head_vars(m.group(1), "group-by variables")
    agg_vars = _parse_head_vars(m.group(2), "aggregation variables")
    factor = int(m.group(3))
    header_names = frozenset(v.name for v in group_by + agg_vars)
    rules = tuple(_parse_rule(ln, header_names, individuals) for ln in lines[1:])
    return FOCountQuery(group_by, agg_vars, factor, rules)


def serialize_focount(q: FOCountQuery) -> str:
    return str(q) + "\n"


def parse_focount_set(text: str, individuals: Iterable[str] = ()) -> tuple:
    """Parse blank-line-separated counting queries."""
    blocks, current = [], []
    for raw in text.splitlines():
        s = _strip(raw)
        if s:
            current.append(s)
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    return tuple(parse_focount("\n".join(b), individuals) for b in blocks)


def serialize_focount_set(queries: Iterable[FOCountQuery]) -> str:
    return "\n".join(str(q) + "\n" for q in queries)


# ---------------------------------------------------------------------------
# interpretations
# ---------------------------------------------------------------------------


def _parse_element(tok: str) -> Element:
    tok = tok.strip()
    m = _ANON_RE.match(tok)
    if m:
        return Anon(int(m.group(1)), int(m.group(2)))
    if re.match(rf"^{_IDENT}$", tok):
        return Named(tok)
    raise SyntaxError_(f"not an element: {tok!r}")


_ELEMENT_LINE_RE = re.compile(r"^(\S+)(?:\s+@card=(\d+))?$")
_IFACT_RE = re.compile(rf"^({_IDENT})\(([^()]*)\)$")


def parse_interpretation(text: str, annotated: Optional[bool] = None) -> Interpretation:
    """Parse fact lines plus bare element lines.

    A bare line declares a domain element (needed for isolated elements);
    ``e @card=k`` sets its multiplicity.  The result is annotated iff any
    ``@card`` appears (or ``annotated=True`` is forced).
    """
    domain: set = set()
    concepts: dict = {}
    roles: dict = {}
    cards: dict = {}
    for raw in _content_lines(text):
        m = _IFACT_RE.match(raw)
        if m:
            elems = tuple(_parse_element(t) for t in m.group(2).split(","))
            domain.update(elems)
            if len(elems) == 1:
                concepts.setdefault(m.group(1), set()).add(elems[0])
            elif len(elems) == 2:
                roles.setdefault(m.group(1), set()).add(elems)
            else:
                raise SyntaxError_(f"facts take one or two elements: {raw!r}")
            continue
        m = _ELEMENT_LINE_RE.match(raw)
        if not m:
            raise SyntaxError_(f"not an interpretation line: {raw!r}")
        e = _parse_element(m.group(1))
        domain.add(e)
        if m.group(2) is not None:
            cards[e] = int(m.group(2))
    if cards or annotated:
        return AnnotatedInterpretation(
            domain=frozenset(domain), concepts=concepts, roles=roles, cards=cards
        )
    return Interpretation(domain=frozenset(domain), concepts=concepts, roles=roles)


def serialize_interpretation(i: Interpretation) -> str:
    """Fact lines, then bare lines for isolated elements and multiplicities."""
    lines = []
    mentioned: set = set()
    for name, args in i.facts():
        lines.append(f"{name}({','.join(str(e) for e in args)})")
        mentioned.update(args)
    for e in sorted(i.domain - mentioned, key=element_key):
        if i.card(e) == 1:
            lines.append(str(e))
    if isinstance(i, AnnotatedInterpretation):
        for e in sorted(i.domain, key=element_key):
            if i.card(e) > 1:
                lines.append(f"{e} @card={i.card(e)}")
    return "".join(ln + "\n" for ln in lines)
