"""Core syntax: roles, basic concepts, axioms, knowledge bases, dialects.

The dialect lattice is controlled by three switches (disjointness axioms,
role hierarchy, number restrictions).  ``>=1 R`` is the single canonical
form of the existential quantifier: ``exists(R)`` is just ``MinCard(1, R)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Union

IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class SyntaxError_(ValueError):
    """Malformed syntactic object (bad identifier, bad arity, ...)."""


def _check_ident(name: str) -> None:
    if not IDENT_RE.match(name):
        raise SyntaxError_(f"not a valid identifier: {name!r}")


# ---------------------------------------------------------------------------
# roles and basic concepts


@dataclass(frozen=True, order=True)
class Role:
    """A role name, possibly inverted (``P`` or ``P-``)."""

    name: str
    inverted: bool = False

    def __post_init__(self) -> None:
        _check_ident(self.name)

    def inverse(self) -> Role:
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return self.name + ("-" if self.inverted else "")


@dataclass(frozen=True, order=True)
class Atomic:
    """An atomic concept name."""

    name: str

    def __post_init__(self) -> None:
        _check_ident(self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class MinCard:
    """``>=n R``: at least n distinct R-successors.  n = 1 is ``exists R``."""

    n: int
    role: Role

    def __post_init__(self) -> None:
        if self.n < 1:
            raise SyntaxError_(f"number restriction needs n >= 1, got {self.n}")

    def __str__(self) -> str:
        if self.n == 1:
            return f"exists {self.role}"
        return f">={self.n} {self.role}"


BasicConcept = Union[Atomic, MinCard]


def exists(role: Role) -> MinCard:
    return MinCard(1, role)


# ---------------------------------------------------------------------------
# axioms


@dataclass(frozen=True, order=True)
class ConceptInclusion:
    """``lhs sub rhs`` or, with negated_rhs, the disjointness ``lhs disj rhs``."""

    lhs: BasicConcept
    rhs: BasicConcept
    negated_rhs: bool = False

    def __str__(self) -> str:
        op = "disj" if self.negated_rhs else "sub"
        return f"{self.lhs} {op} {self.rhs}"


@dataclass(frozen=True, order=True)
class RoleInclusion:
    """``lhs sub rhs`` between roles, normalized to a plain right-hand side.

    ``P sub Q-`` and ``P- sub Q`` say the same thing; construction flips
    both sides when needed so rhs.inverted is always False.
    """

    lhs: Role
    rhs: Role

    def __post_init__(self) -> None:
        if self.rhs.inverted:
            object.__setattr__(self, "lhs", self.lhs.inverse())
            object.__setattr__(self, "rhs", self.rhs.inverse())

    def __str__(self) -> str:
        return f"{self.lhs} sub {self.rhs}"


Axiom = Union[ConceptInclusion, RoleInclusion]


def _dedup(items: Iterable) -> tuple:
    seen = set()
    out = []
    for it in items:
        if it not in seen:
            seen.add(it)
            out.append(it)
    return tuple(out)


@dataclass(frozen=True)
class TBox:
    """A finite, duplicate-free sequence of axioms (order is kept: the chase
    fires axioms in list order)."""

    axioms: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "axioms", _dedup(self.axioms))

    def __iter__(self) -> Iterator[Axiom]:
        return iter(self.axioms)

    def __len__(self) -> int:
        return len(self.axioms)

    def concept_inclusions(self) -> Iterator[ConceptInclusion]:
        return (a for a in self.axioms if isinstance(a, ConceptInclusion))

    def role_inclusions(self) -> Iterator[RoleInclusion]:
        return (a for a in self.axioms if isinstance(a, RoleInclusion))

    def concept_names(self) -> set[str]:
        names: set[str] = set()
        for ax in self.concept_inclusions():
            for c in (ax.lhs, ax.rhs):
                if isinstance(c, Atomic):
                    names.add(c.name)
        return names

    def role_names(self) -> set[str]:
        names: set[str] = set()
        for ax in self.axioms:
            if isinstance(ax, RoleInclusion):
                names.add(ax.lhs.name)
                names.add(ax.rhs.name)
            else:
                for c in (ax.lhs, ax.rhs):
                    if isinstance(c, MinCard):
                        names.add(c.role.name)
        return names

    def basic_concepts(self) -> set[BasicConcept]:
        """Every A and exists R over the TBox vocabulary (both orientations)."""
        out: set[BasicConcept] = {Atomic(a) for a in self.concept_names()}
        for r in self.role_names():
            out.add(exists(Role(r)))
            out.add(exists(Role(r, True)))
        return out


@dataclass(frozen=True)
class Fact:
    """A ground assertion: ``A(a)`` (arity 1) or ``P(a,b)`` (arity 2)."""

    predicate: str
    args: tuple

    def __post_init__(self) -> None:
        _check_ident(self.predicate)
        if len(self.args) not in (1, 2):
            raise SyntaxError_(f"fact arity must be 1 or 2: {self}")
        for a in self.args:
            _check_ident(a)

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class ABox:
    facts: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "facts", _dedup(self.facts))

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def individuals(self) -> tuple:
        """Individual names in first-mention order (the chase creation order)."""
        return _dedup(a for f in self.facts for a in f.args)

    def concept_names(self) -> set[str]:
        return {f.predicate for f in self.facts if len(f.args) == 1}

    def role_names(self) -> set[str]:
        return {f.predicate for f in self.facts if len(f.args) == 2}


@dataclass(frozen=True)
class KB:
    tbox: TBox
    abox: ABox


# ---------------------------------------------------------------------------
# dialects


class RoleHierarchy(Enum):
    NONE = "none"
    RESTRICTED = "restricted"  # role inclusions, but no >=n R1 when R1 is a proper subrole
    FULL = "full"


@dataclass(frozen=True)
class Dialect:
    name: str
    allow_disjointness: bool
    role_hierarchy: RoleHierarchy
    number_restrictions: bool


POS = Dialect("pos", False, RoleHierarchy.NONE, False)
POS_H = Dialect("pos-h", False, RoleHierarchy.FULL, False)
POS_HM_NM = Dialect("pos-hm-nm", False, RoleHierarchy.RESTRICTED, True)
CORE = Dialect("core", True, RoleHierarchy.NONE, False)
CORE_NM = Dialect("core-nm", True, RoleHierarchy.NONE, True)
CORE_H = Dialect("core-h", True, RoleHierarchy.FULL, False)
CORE_H_NM = Dialect("core-h-nm", True, RoleHierarchy.FULL, True)

DIALECTS = {d.name: d for d in (POS, POS_H, POS_HM_NM, CORE, CORE_NM, CORE_H, CORE_H_NM)}


@dataclass(frozen=True)
class Violation:
    axiom: Axiom
    reason: str

    def __str__(self) -> str:
        return f"{self.axiom}: {self.reason}"


def validate_dialect(tbox: TBox, dialect: Dialect) -> list[Violation]:
    """Every axiom of ``tbox`` that falls outside the dialect grammar.

    Checks, per axiom: disjointness under a positive-only dialect, role
    inclusions under a hierarchy-free dialect, n > 1 under a dialect without
    number restrictions, >=n on the left-hand side (never grammatical), and —
    under the restricted hierarchy — any ``B sub >=n R1`` whose role R1 (or
    its inverse) is the left-hand side of a role inclusion onto a different
    role.
    """
    out: list[Violation] = []
    sub_lhs_roles: set[Role] = set()
    for ri in tbox.role_inclusions():
        if ri.lhs != ri.rhs:
            sub_lhs_roles.add(ri.lhs)
            sub_lhs_roles.add(ri.lhs.inverse())
    for ax in tbox:
        if isinstance(ax, RoleInclusion):
            if dialect.role_hierarchy is RoleHierarchy.NONE:
                out.append(Violation(ax, "role inclusions are not allowed"))
            continue
        if ax.negated_rhs and not dialect.allow_disjointness:
            out.append(Violation(ax, "disjointness axioms are not allowed"))
        if isinstance(ax.lhs, MinCard) and ax.lhs.n > 1:
            out.append(Violation(ax, ">=n with n > 1 cannot appear on the left-hand side"))
        if isinstance(ax.rhs, MinCard) and ax.rhs.n > 1 and not dialect.number_restrictions:
            out.append(Violation(ax, ">=n with n > 1 requires number restrictions"))
        if (
            dialect.role_hierarchy is RoleHierarchy.RESTRICTED
            and isinstance(ax.rhs, MinCard)
            and not ax.negated_rhs
            and ax.rhs.role in sub_lhs_roles
        ):
            out.append(
                Violation(
                    ax,
                    f"successors over {ax.rhs.role} cannot be required while "
                    f"{ax.rhs.role.name} has a proper super-role",
                )
            )
    return out


# ---------------------------------------------------------------------------
# TBox-level reasoning: role closure, subsumees, max_card


def role_closure(tbox: TBox) -> dict[Role, set[Role]]:
    """Reflexive-transitive super-role map, closed under inversion.

    ``closure[R]`` contains every S with R entailed-sub S.
    """
    roles: set[Role] = set()
    for name in tbox.role_names():
        roles.add(Role(name))
        roles.add(Role(name, True))
    edges: dict[Role, set[Role]] = {r: {r} for r in roles}
    for ri in tbox.role_inclusions():
        edges.setdefault(ri.lhs, {ri.lhs}).add(ri.rhs)
        edges.setdefault(ri.lhs.inverse(), {ri.lhs.inverse()}).add(ri.rhs.inverse())
        edges.setdefault(ri.rhs, {ri.rhs})
        edges.setdefault(ri.rhs.inverse(), {ri.rhs.inverse()})
    changed = True
    while changed:
        changed = False
        for r, sups in edges.items():
            extra = set().union(*(edges.get(s, {s}) for s in sups)) - sups
            if extra:
                sups |= extra
                changed = True
    return edges


def subsumees(tbox: TBox, concepts: Iterable[BasicConcept]) -> frozenset[BasicConcept]:
    """Downward closure under entailed concept inclusion.

    The closure is reflexive-transitive over three edge kinds: stated positive
    inclusions, numeric weakening (``>=n R`` entails ``>=m R`` for n >= m),
    and role-inclusion lifting (``>=n R1`` entails ``>=m R2`` when R1 is a
    subrole of R2 and n >= m).  Candidates are the basic concepts of the
    TBox vocabulary plus the requested concepts themselves; disjointness
    plays no part (no vacuous subsumption via unsatisfiable concepts).
    """
    targets = tuple(concepts)
    candidates: set[BasicConcept] = set(targets) | tbox.basic_concepts()
    rc = role_closure(tbox)

    def entailed_by_stated(c: BasicConcept) -> set[BasicConcept]:
        # direct super-concepts of candidate c among the candidates
        out: set[BasicConcept] = set()
        for ax in tbox.concept_inclusions():
            if ax.negated_rhs or ax.lhs != c:
                continue
            if isinstance(ax.rhs, Atomic):
                out.add(ax.rhs)
            else:
                for cand in candidates:
                    if isinstance(cand, MinCard) and cand.role == ax.rhs.role and cand.n <= ax.rhs.n:
                        out.add(cand)
        if isinstance(c, MinCard):
            for cand in candidates:
                if (
                    isinstance(cand, MinCard)
                    and cand.n <= c.n
                    and cand.role in rc.get(c.role, {c.role})
                ):
                    out.add(cand)
        return out

    supers: dict[BasicConcept, set[BasicConcept]] = {c: {c} for c in candidates}
    changed = True
    while changed:
        changed = False
        for c in candidates:
            new = set()
            for s in entailed_by_stated(c) | supers[c]:
                new |= supers.get(s, {s})
            if not new <= supers[c]:
                supers[c] |= new
                changed = True
    return frozenset(c for c in candidates if any(t in supers[c] for t in targets))


def max_card(tbox: TBox, b: BasicConcept, r: Role) -> int:
    """Largest n with ``b sub >=n r`` literally in the TBox; 0 if absent."""
    best = 0
    for ax in tbox.concept_inclusions():
        if ax.negated_rhs or ax.lhs != b:
            continue
        if isinstance(ax.rhs, MinCard) and ax.rhs.role == r:
            best = max(best, ax.rhs.n)
    return best


# ---------------------------------------------------------------------------
# number-restriction encoding


def _fresh_role_names(base: str, count: int, taken: set[str]) -> list[str]:
    prefix = "__aux_"
    while any(f"{prefix}{base}_{i}" in taken for i in range(1, count + 1)):
        prefix = "_" + prefix
    return [f"{prefix}{base}_{i}" for i in range(1, count + 1)]


def encode_numbers_into_H(tbox: TBox) -> TBox:
    """Rewrite every positive ``B sub >=n R`` with n > 1 into axioms without
    number restrictions, over fresh sub-roles of R.

    ``B sub >=n P`` becomes ``B sub exists Qi`` and ``Qi sub P`` for n fresh
    roles Qi, plus pairwise disjointness of the successor sets
    (``exists Qi- disj exists Qj-``), which forces the n witnesses apart.
    An inverse target ``>=n P-`` uses fresh plain roles with ``Qi- sub P``.
    Fresh names are shared per (role, index) across axioms, so two axioms
    over the same role reuse the same sub-roles.

    Raises on a negated ``>=n`` right-hand side with n > 1: "fewer than n
    successors" has no equivalent without number restrictions.
    """
    needed: dict[Role, int] = {}
    for ax in tbox.concept_inclusions():
        if isinstance(ax.rhs, MinCard) and ax.rhs.n > 1:
            if ax.negated_rhs:
                raise SyntaxError_(f"cannot encode a negated number restriction: {ax}")
            needed[ax.rhs.role] = max(needed.get(ax.rhs.role, 0), ax.rhs.n)

    if not needed:
        return tbox

    taken = tbox.role_names() | tbox.concept_names()
    fresh: dict[Role, list[Role]] = {}
    support: list[Axiom] = []
    for target_role in sorted(needed, key=str):
        n = needed[target_role]
        names = _fresh_role_names(str(target_role).replace("-", "_inv"), n, taken)
        taken |= set(names)
        subs = [Role(nm) for nm in names]
        fresh[target_role] = subs
        for q in subs:
            # Qi sub P, or Qi- sub P for an inverse target
            support.append(RoleInclusion(q if not target_role.inverted else q.inverse(),
                                         Role(target_role.name)))
        for qi, qj in itertools.combinations(subs, 2):
            support.append(ConceptInclusion(exists(qi.inverse()), exists(qj.inverse()), True))

    out: list[Axiom] = []
    for ax in tbox:
        if (
            isinstance(ax, ConceptInclusion)
            and isinstance(ax.rhs, MinCard)
            and ax.rhs.n > 1
        ):
            for q in fresh[ax.rhs.role][: ax.rhs.n]:
                out.append(ConceptInclusion(ax.lhs, exists(q)))
        else:
            out.append(ax)
    out.extend(support)
    return TBox(tuple(out))
