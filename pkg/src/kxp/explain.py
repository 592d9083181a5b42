"""Why/why-not explanations: minimal sets, smallest-first enumeration, audits.

An abductive explanation (AXp) is a subset-minimal set of features whose
fixed values entail the prediction over the whole space, optionally modulo a
knowledge base; a contrastive explanation (CXp) is a subset-minimal set of
features whose freeing admits a differently-classified, knowledge-consistent
point. The two families are minimal-hitting-set duals, which drives the
smallest-first enumerator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import Explanation, Instance, Kind, KnowledgeBase
from .models import Model
from .oracle import EntailmentOracle, check_compatible


class ExplainError(ValueError):
    """Violated precondition (non-entailing seed, bad feature set, ...)."""


def _setup(model: Model, instance: Instance, contested: Optional[int],
           knowledge: Optional[KnowledgeBase],
           oracle: Optional[EntailmentOracle]) -> tuple[EntailmentOracle, int, KnowledgeBase]:
    kb = knowledge if knowledge is not None else KnowledgeBase()
    check_compatible(instance, kb)
    predicted = model.classify(instance)
    if contested is not None and contested != predicted:
        raise ExplainError("contested class %d is not the model's prediction %d"
                           % (contested, predicted))
    if oracle is None:
        oracle = EntailmentOracle(model, kb)
    elif set(oracle.knowledge.clauses) != set(kb.clauses):
        raise ExplainError("the supplied oracle was built over a different "
                           "knowledge base")
    return oracle, predicted, kb


def _shrink_axp(oracle: EntailmentOracle, v: Instance, c: int,
                seed: frozenset[int]) -> frozenset[int]:
    """Deletion-based linear search, ascending feature order; seed must entail."""
    kept = sorted(seed)
    current = set(kept)
    for f in kept:
        current.discard(f)
        if not oracle.query(current, v, c).entails:
            current.add(f)
    return frozenset(current)


def _shrink_cxp(oracle: EntailmentOracle, v: Instance, c: int,
                seed: frozenset[int]) -> frozenset[int]:
    """Re-fix freed features one by one, keeping each freed only when needed."""
    m = oracle.space.m
    allf = set(range(m))
    current = set(seed)
    for f in sorted(seed):
        current.discard(f)
        if oracle.query(allf - current, v, c).entails:
            current.add(f)
    return frozenset(current)


def find_axp(model: Model, instance: Instance, contested: Optional[int] = None,
             knowledge: Optional[KnowledgeBase] = None,
             seed: Optional[Iterable[int]] = None,
             oracle: Optional[EntailmentOracle] = None) -> Explanation:
    """Subset-minimal AXp inside `seed` (default: all features).

    One oracle call per seed feature, plus one validating the seed.
    """
    oracle, c, kb = _setup(model, instance, contested, knowledge, oracle)
    seed_set = frozenset(seed) if seed is not None else frozenset(range(model.space.m))
    if not oracle.query(seed_set, instance, c).entails:
        raise ExplainError("seed %s does not entail the prediction" % sorted(seed_set))
    features = _shrink_axp(oracle, instance, c, seed_set)
    return Explanation(Kind.AXP, features, bool(kb), instance, c)


def find_cxp(model: Model, instance: Instance, contested: Optional[int] = None,
             knowledge: Optional[KnowledgeBase] = None,
             seed: Optional[Iterable[int]] = None,
             oracle: Optional[EntailmentOracle] = None) -> Explanation:
    """Subset-minimal CXp inside `seed` (default: all features)."""
    oracle, c, kb = _setup(model, instance, contested, knowledge, oracle)
    m = model.space.m
    seed_set = frozenset(seed) if seed is not None else frozenset(range(m))
    if oracle.query(frozenset(range(m)) - seed_set, instance, c).entails:
        raise ExplainError("freeing seed %s admits no counterexample" % sorted(seed_set))
    features = _shrink_cxp(oracle, instance, c, seed_set)
    return Explanation(Kind.CXP, features, bool(kb), instance, c)


def check_explanation(features: Iterable[int], kind: Kind, model: Model,
                      instance: Instance, contested: Optional[int] = None,
                      knowledge: Optional[KnowledgeBase] = None,
                      oracle: Optional[EntailmentOracle] = None) -> bool:
    """Does the feature set satisfy the kind's defining condition? One oracle call."""
    oracle, c, _ = _setup(model, instance, contested, knowledge, oracle)
    fset = frozenset(features)
    if any(not 0 <= f < model.space.m for f in fset):
        raise ExplainError("feature index out of range in %s" % sorted(fset))
    kind = Kind(kind)
    if kind is Kind.AXP:
        return oracle.query(fset, instance, c).entails
    return not oracle.query(frozenset(range(model.space.m)) - fset, instance, c).entails


def reduce_explanation(features: Iterable[int], kind: Kind, model: Model,
                       instance: Instance, contested: Optional[int] = None,
                       knowledge: Optional[KnowledgeBase] = None,
                       oracle: Optional[EntailmentOracle] = None) -> Explanation:
    """Shrink a correct (possibly oversized) explanation to a subset-minimal one."""
    kind = Kind(kind)
    if kind is Kind.AXP:
        return find_axp(model, instance, contested, knowledge, features, oracle)
    return find_cxp(model, instance, contested, knowledge, features, oracle)


# ---------------------------------------------------------------------------
# smallest-first enumeration via minimal hitting set duality

@dataclass
class DualState:
    """Explanations found so far; every stored AXp intersects every stored CXp."""

    found_axps: list[frozenset[int]] = field(default_factory=list)
    found_cxps: list[frozenset[int]] = field(default_factory=list)
    blocked: list[frozenset[int]] = field(default_factory=list)


@dataclass
class EnumerationResult:
    explanations: list[Explanation]
    exhausted: bool           # true when no further explanation exists
    oracle_calls: int
    state: DualState

    @property
    def feature_sets(self) -> list[frozenset[int]]:
        return [e.features for e in self.explanations]


def _lb_disjoint(unhit: list[int]) -> int:
    count, covered = 0, 0
    for s in unhit:
        if not s & covered:
            count += 1
            covered |= s
    return count


def _mhs_dfs(i: int, chosen: int, count: int, k: int,
             sets: list[int], blocked: list[int]) -> Optional[int]:
    for b in blocked:
        if not b & ~chosen:
            return None  # chosen is a superset of a blocked emission
    unhit = [s for s in sets if not s & chosen]
    if not unhit:
        return chosen
    if count >= k:
        return None
    future = ~((1 << i) - 1)
    if any(not s & future for s in unhit):
        return None
    if count + _lb_disjoint(unhit) > k:
        return None
    union = 0
    for s in unhit:
        union |= s
    rest = union & future
    j = (rest & -rest).bit_length() - 1
    found = _mhs_dfs(j + 1, chosen | (1 << j), count + 1, k, sets, blocked)
    if found is not None:
        return found
    return _mhs_dfs(j + 1, chosen, count, k, sets, blocked)


def minimum_hitting_set(sets: Iterable[frozenset[int]],
                        blocked: Iterable[frozenset[int]],
                        universe: int) -> Optional[frozenset[int]]:
    """Smallest set hitting every set in `sets` while containing no blocked set.

    Exact iterative-deepening branch and bound over element bitmasks; ties
    between equal-cardinality answers break lexicographically. None when
    infeasible.
    """
    def mask(s):
        return sum(1 << e for e in s)

    set_masks = sorted({mask(s) for s in sets})
    blocked_masks = [mask(b) for b in blocked]
    if 0 in set_masks or 0 in blocked_masks:
        return None  # an empty dual cannot be hit / an empty emission blocks everything
    for k in range(universe + 1):
        found = _mhs_dfs(0, 0, 0, k, set_masks, blocked_masks)
        if found is not None:
            return frozenset(f for f in range(universe) if found >> f & 1)
    return None


def enumerate_smallest(kind: Kind, model: Model, instance: Instance,
                       contested: Optional[int] = None,
                       knowledge: Optional[KnowledgeBase] = None, n: int = 20,
                       oracle: Optional[EntailmentOracle] = None) -> EnumerationResult:
    """Up to n explanations of the kind, nondecreasing in size.

    Implicit hitting set loop: propose a minimum hitting set of the opposing
    duals collected so far (skipping supersets of prior emissions); an oracle
    check either certifies it (emit and block) or yields a counterexample
    from which a new dual is extracted and recorded.
    """
    kind = Kind(kind)
    oracle, c, kb = _setup(model, instance, contested, knowledge, oracle)
    calls0 = oracle.calls
    m = model.space.m
    allf = frozenset(range(m))
    state = DualState()
    out: list[Explanation] = []
    exhausted = False
    while len(out) < n:
        duals = state.found_cxps if kind is Kind.AXP else state.found_axps
        cand = minimum_hitting_set(duals, state.blocked, m)
        if cand is None:
            exhausted = True
            break
        if kind is Kind.AXP:
            res = oracle.query(cand, instance, c)
            if res.entails:
                out.append(Explanation(Kind.AXP, cand, bool(kb), instance, c))
                state.found_axps.append(cand)
                state.blocked.append(cand)
            else:
                diff = frozenset(f for f in range(m)
                                 if res.witness.values[f] != instance.values[f])
                state.found_cxps.append(_shrink_cxp(oracle, instance, c, diff))
        else:
            res = oracle.query(allf - cand, instance, c)
            if not res.entails:
                out.append(Explanation(Kind.CXP, cand, bool(kb), instance, c))
                state.found_cxps.append(cand)
                state.blocked.append(cand)
            else:
                state.found_axps.append(_shrink_axp(oracle, instance, c, allf - cand))
    return EnumerationResult(out, exhausted, oracle.calls - calls0, state)


# ---------------------------------------------------------------------------
# attributing explanations to knowledge rules

def attribute_rules(model: Model, instance: Instance, knowledge: KnowledgeBase,
                    axp_features: Iterable[int],
                    contested: Optional[int] = None) -> KnowledgeBase:
    """Subset-minimal part of the knowledge responsible for an assisted AXp.

    Returns the empty knowledge base when the AXp already holds without any
    knowledge; otherwise drops clauses one by one in the knowledge base's
    order, keeping each only if entailment breaks without it. Attribution is
    at clause granularity; provenance keeps all originating rule ids.
    """
    fset = frozenset(axp_features)
    _, c, _ = _setup(model, instance, contested, knowledge, None)
    if not EntailmentOracle(model, knowledge).query(fset, instance, c).entails:
        raise ExplainError("feature set %s is not an AXp under the knowledge"
                           % sorted(fset))
    if EntailmentOracle(model, None).query(fset, instance, c).entails:
        return knowledge.subset([])
    kept = list(knowledge.clauses)
    for clause in knowledge.clauses:
        trial = [cl for cl in kept if cl != clause]
        trial_kb = KnowledgeBase(tuple(trial))
        if EntailmentOracle(model, trial_kb).query(fset, instance, c).entails:
            kept = trial
    return knowledge.subset(kept)
