"""Certain-answer counting engines.

Four strategies compute (or bound) the certain count — the largest k such
that every model of the knowledge base yields at least k matches per
binding:

* ``rewrite``     — saturate the query into counting rules, evaluate over
                    the bare ABox facts.  Exact on core^{N-} / connected
                    rooted queries.
* ``chase``       — evaluate the query over a deep-enough restricted-chase
                    prefix.  Same coverage as ``rewrite``.
* ``merge-min``   — minimize over quotient images of the annotated chase.
                    Exact on pos^{H-N-} / connected linear queries.
* ``brute-force`` — minimum over all bounded models.  An oracle, not a
                    decision procedure: valid whenever a count-minimal model
                    lives inside the bounded domain.

``decide_count`` dispatches to the best applicable engine and compares
against a candidate k, with ``None`` ("unknown") as a first-class outcome
when only the one-sided brute-force bound applies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from .cq import (
    ConjunctiveQuery,
    CountAnswer,
    answers,
    classify_shape,
    count_matches,
    matches,
)
from .focount import evaluate_set
from .interp import (
    Anon,
    apply_function,
    element_key,
    enumerate_models,
    from_abox,
    is_model,
    is_satisfiable,
    restricted_chase,
)
from .rewriter import DEFAULT_STEP_BUDGET, RewriteError, saturate
from .syntax import CORE_NM, KB, POS_HM_NM, Dialect, validate_dialect


class EngineError(ValueError):
    """An engine's precondition (dialect, shape, saturation) is not met."""


ENGINES = ("rewrite", "chase", "merge-min", "brute-force")

#: whether the engine's answer is the certain count (given its preconditions)
#: or only an upper bound on it
ENGINE_EXACT = {
    "rewrite": True,
    "chase": True,
    "merge-min": True,
    "brute-force": False,
}


def default_depth(q: ConjunctiveQuery) -> int:
    """Chase depth sufficient for connected rooted queries: a match starting
    from a named element crosses at most one anonymous generation per atom,
    so |body| generations are reachable and one more is spare."""
    return len(q.body) + 1


def _require_dialect(kb: KB, dialect: Dialect, engine: str) -> None:
    violations = validate_dialect(kb.tbox, dialect)
    if violations:
        detail = "; ".join(str(v) for v in violations)
        raise EngineError(f"{engine} needs a {dialect.name} TBox: {detail}")


def _require_shape(q: ConjunctiveQuery, engine: str, *, linear: bool) -> None:
    shape = classify_shape(q)
    if linear:
        if not (shape.connected and shape.linear):
            raise EngineError(
                f"{engine} needs a connected linear query, got: {shape.words()}"
            )
    else:
        if not (shape.connected and shape.rooted):
            raise EngineError(
                f"{engine} needs a connected rooted query, got: {shape.words()}"
            )


def _abox_interpretation(kb: KB):
    if kb.abox.individuals():
        return from_abox(kb.abox)
    # the nonempty-domain requirement: a fact-free dummy element changes no count
    return from_abox(kb.abox, dummy="_e")


def certcount_rewrite(
    kb: KB, q: ConjunctiveQuery, step_budget: int = DEFAULT_STEP_BUDGET
) -> list:
    """Certain counts via query rewriting: saturate q against the TBox and
    evaluate the resulting counting rules over the ABox interpreted as-is."""
    _require_dialect(kb, CORE_NM, "rewrite")
    _require_shape(q, "rewrite", linear=False)
    if not is_satisfiable(kb):
        raise EngineError("rewrite needs a satisfiable knowledge base")
    queries = saturate(q, kb.tbox, step_budget=step_budget)
    return evaluate_set(queries, _abox_interpretation(kb))


def certcount_chase(
    kb: KB, q: ConjunctiveQuery, depth: Optional[int] = None
) -> list:
    """Certain counts by evaluating q over a restricted-chase prefix.

    The default depth leaves one spare generation beyond the query's reach.
    An unsaturated chase is only an error when its frontier is shallow
    enough for missing witnesses to fall inside that reach.
    """
    _require_dialect(kb, CORE_NM, "chase")
    _require_shape(q, "chase", linear=False)
    if not is_satisfiable(kb):
        raise EngineError("chase answers need a satisfiable knowledge base")
    if depth is None:
        depth = default_depth(q)
    res = restricted_chase(kb, depth_limit=depth)
    if not res.saturated and res.frontier_gen is not None:
        if res.frontier_gen <= len(q.body) - 1:
            raise EngineError(
                f"chase prefix of depth {depth} still has unmet obligations at "
                f"generation {res.frontier_gen}, within the query's reach of "
                f"{len(q.body)} generations; rerun with a larger depth"
            )
    return answers(q, res.interpretation)


def certcount_merge_min(
    kb: KB,
    q: ConjunctiveQuery,
    depth: Optional[int] = None,
    max_candidates: int = 500_000,
) -> Union[int, list]:
    """Certain counts by merge minimization over the annotated chase.

    Every model receives a homomorphism from the saturated chase, and for
    the covered class a count-minimal model arises as the image of a
    constant-preserving function from the match elements into the chase
    domain.  The search enumerates those functions, keeps the ones whose
    image is still a model, and per binding takes the minimal weighted
    number of distinct transformed matches.

    Returns a bare integer for a boolean query, per-binding answers
    otherwise.
    """
    _require_dialect(kb, POS_HM_NM, "merge-min")
    _require_shape(q, "merge-min", linear=True)
    if depth is None:
        depth = default_depth(q)
    res = restricted_chase(kb, depth_limit=depth, annotated=True)
    if not res.saturated:
        raise EngineError(
            f"annotated chase does not saturate within depth {depth}; "
            "minimizing over a prefix would be unsound"
        )
    chase_i = res.interpretation
    ms = matches(q, chase_i)
    boolean = not q.head
    if not ms:
        return 0 if boolean else []

    var_order = q.variables()
    anons = sorted(
        {e for m in ms for e in m.values() if isinstance(e, Anon)},
        key=element_key,
    )
    targets = sorted(chase_i.domain, key=element_key)
    if targets and len(targets) ** len(anons) > max_candidates:
        raise EngineError(
            f"merge search space {len(targets)}^{len(anons)} exceeds "
            f"{max_candidates} candidates"
        )

    best: dict = {}
    for combo in itertools.product(targets, repeat=len(anons)):
        f = dict(zip(anons, combo))
        image = apply_function(f, chase_i)
        if not is_model(image, kb):
            continue
        groups: dict = {}
        seen: set = set()
        for m in ms:
            t = tuple(f.get(m[v], m[v]) for v in var_order)
            if t in seen:
                continue
            seen.add(t)
            key = tuple(f.get(m[v], m[v]) for v in q.head)
            if any(isinstance(e, Anon) for e in key):
                continue
            weight = 1
            for e in t:
                weight *= image.card(e)
            groups[key] = groups.get(key, 0) + weight
        for key, c in groups.items():
            if key not in best or c < best[key]:
                best[key] = c
    if boolean:
        return best.get((), 0)
    return [
        CountAnswer(b, c)
        for b, c in sorted(
            best.items(), key=lambda kv: tuple(element_key(e) for e in kv[0])
        )
        if c > 0
    ]


def certcount_bruteforce(
    kb: KB, q: ConjunctiveQuery, extra_elements: int = 2, max_states: int = 500_000
) -> list:
    """Per-binding minimum of the count over all bounded models.

    A lower-approximation of the model space, hence an upper bound on
    nothing and a valid certain count only when a count-minimal model fits
    in the bounded domain; bindings that miss in some model drop to 0 and
    are removed.

    Counts are monotone in the fact set, which buys a branch-and-bound
    cut: a partial structure whose counts already reach the running minima
    pointwise cannot improve (or zero out) any of them, so its whole
    subtree is skipped.
    """
    mins: Optional[dict] = None

    def settled(view) -> bool:
        if mins is None:
            return False
        if not q.head:
            # boolean query: one binding, and a capped count suffices
            floor = mins.get((), 0)
            return count_matches(q, view, cap=floor) >= floor
        cur = {a.binding: a.count for a in answers(q, view)}
        return all(cur.get(b, 0) >= c for b, c in mins.items())

    for model in enumerate_models(
        kb, extra_elements=extra_elements, max_states=max_states, prune=settled
    ):
        cur = {a.binding: a.count for a in answers(q, model)}
        if mins is None:
            mins = cur
        else:
            mins = {b: min(c, cur.get(b, 0)) for b, c in mins.items()}
        mins = {b: c for b, c in mins.items() if c > 0}
        if not mins:
            break
    mins = mins or {}
    return [
        CountAnswer(b, c)
        for b, c in sorted(
            mins.items(), key=lambda kv: tuple(element_key(e) for e in kv[0])
        )
    ]


@dataclass(frozen=True)
class Bounds:
    chase_depth: Optional[int] = None
    extra_elements: int = 2
    step_budget: int = DEFAULT_STEP_BUDGET


@dataclass(frozen=True)
class CertainCountRequest:
    """One certain-count job: a KB, a query, an engine name, and bounds."""

    kb: KB
    query: ConjunctiveQuery
    engine: str
    bounds: Bounds = field(default_factory=Bounds)

    def __post_init__(self) -> None:
        if self.engine not in ENGINES:
            raise EngineError(
                f"unknown engine {self.engine!r}; pick one of {', '.join(ENGINES)}"
            )

    def run(self) -> Union[int, list]:
        b = self.bounds
        if self.engine == "rewrite":
            return certcount_rewrite(self.kb, self.query, step_budget=b.step_budget)
        if self.engine == "chase":
            return certcount_chase(self.kb, self.query, depth=b.chase_depth)
        if self.engine == "merge-min":
            return certcount_merge_min(self.kb, self.query, depth=b.chase_depth)
        return certcount_bruteforce(
            self.kb, self.query, extra_elements=b.extra_elements
        )


def _boolean_count(result: Union[int, list]) -> int:
    if isinstance(result, int):
        return result
    return result[0].count if result else 0


def pick_engine(kb: KB, q: ConjunctiveQuery) -> str:
    """Best applicable engine, preferring exact ones."""
    shape = classify_shape(q)
    if not validate_dialect(kb.tbox, CORE_NM) and shape.connected and shape.rooted:
        return "rewrite"
    if not validate_dialect(kb.tbox, POS_HM_NM) and shape.connected and shape.linear:
        return "merge-min"
    return "brute-force"


def decide_count(
    kb: KB,
    q: ConjunctiveQuery,
    k: int,
    engine: Optional[str] = None,
    bounds: Bounds = Bounds(),
) -> Optional[bool]:
    """Is k the certain count of the boolean query q?

    True/False when an exact engine applies.  With only brute force
    available the answer is one-sided: k above the bounded-model minimum is
    definitely wrong; anything else is ``None`` (unknown).  Certain answers
    need k >= 1, so k < 1 is always False.
    """
    if q.head:
        raise EngineError(
            "decide needs a boolean query; ground the head first (boolify)"
        )
    if k < 1:
        return False
    forced = engine is not None
    chosen = engine or pick_engine(kb, q)
    if chosen in ("rewrite", "chase"):
        try:
            result = CertainCountRequest(kb, q, chosen, bounds).run()
        except RewriteError:
            # step budget blown: the chase covers the same class
            result = CertainCountRequest(kb, q, "chase", bounds).run()
        return k == _boolean_count(result)
    if chosen == "merge-min":
        if forced:
            return k == _boolean_count(CertainCountRequest(kb, q, chosen, bounds).run())
        try:
            return k == _boolean_count(CertainCountRequest(kb, q, chosen, bounds).run())
        except EngineError:
            chosen = "brute-force"  # e.g. chase does not saturate
    bf = _boolean_count(CertainCountRequest(kb, q, "brute-force", bounds).run())
    if k > bf:
        return False
    return None
