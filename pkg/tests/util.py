"""Independent reference implementations the tests check the package against.

Everything here is deliberately brute force: exhaustive lattice scans,
full-subset enumeration against the exhaustive oracle, and powerset hitting
set computation. None of it shares code paths with the implementations under
test beyond the core vocabulary types.
"""

from __future__ import annotations

import random
from itertools import combinations

from kxp import (Clause, Dataset, FeatureSpace, Instance, Kind, KnowledgeBase,
                 Rule, rule_to_clause)
from kxp.models import BoostedEnsemble, DecisionList, DLRule, Leaf, Node
from kxp.oracle import EntailmentQuery, entails_bruteforce


# ---------------------------------------------------------------------------
# reference rule miner: unpruned scan of the whole antecedent lattice

def candidate_literals(space: FeatureSpace, target):
    lits = []
    for f in range(space.m):
        if f == target.feature:
            continue
        for v in range(len(space.domain(f))):
            lits.append(space.literal(f, v))
        if len(space.domain(f)) >= 3:
            for v in range(len(space.domain(f))):
                lits.append(space.literal(f, v, negated=True))
    return sorted(lits)


def brute_force_min_rules(train: Dataset, target, blocked=(), max_size=3,
                          min_support=1):
    """All rules meeting consistency/support/subset-minimality, clausally deduped."""
    space = train.space
    insts = train.instances()
    lits = candidate_literals(space, target)

    def rows_of(antecedent):
        return [i for i, inst in enumerate(insts)
                if all(l.holds(inst) for l in antecedent)]

    def ok(antecedent):
        rows = rows_of(antecedent)
        support = sum(1 for i in rows if target.holds(insts[i]))
        consistent = all(target.holds(insts[i]) for i in rows)
        return consistent and support >= min_support, support

    emitted = []
    clauses = set(blocked)
    for size in range(0, max_size + 1):
        for combo in combinations(lits, size):
            good, support = ok(combo)
            if not good:
                continue
            minimal = True
            for k in range(len(combo)):
                for sub in combinations(combo, k):
                    if ok(sub)[0]:
                        minimal = False
                        break
                if not minimal:
                    break
            if not minimal:
                continue
            rule = Rule(frozenset(combo), target, support=support, consistency=1.0)
            clause = rule_to_clause(space, rule)
            if clause in clauses:
                continue
            clauses.add(clause)
            emitted.append(rule)
    return emitted


# ---------------------------------------------------------------------------
# reference explanation sets via the exhaustive oracle

def weak_explanation(model, v, c, kb, kind, features) -> bool:
    m = model.space.m
    fset = frozenset(features)
    if Kind(kind) is Kind.AXP:
        q = EntailmentQuery(fset, v, model, c, kb)
        return entails_bruteforce(q).entails
    q = EntailmentQuery(frozenset(range(m)) - fset, v, model, c, kb)
    return not entails_bruteforce(q).entails


def all_minimal_explanations(model, v, c, kb, kind):
    """Every subset-minimal AXp/CXp, by scanning all 2^m feature subsets."""
    m = model.space.m
    out = []
    for size in range(m + 1):
        for combo in combinations(range(m), size):
            fset = frozenset(combo)
            if not weak_explanation(model, v, c, kb, kind, fset):
                continue
            if all(not weak_explanation(model, v, c, kb, kind, fset - {f})
                   for f in fset):
                out.append(fset)
    return out


def explanation_sets_bruteforce(model, v, kb):
    """Minimal AXp and CXp sets from one exhaustive pass over the space.

    Classifies every point once, then answers all 2^m weak-set queries by
    scanning the admissible differing points. Only for small spaces.
    """
    space = model.space
    m = space.m
    c = model.classify(v)
    bad_points = []  # knowledge-consistent points classified differently
    for p in space.points():
        if model.classify(p) != c and kb.satisfied_by(p):
            bad_points.append(p.values)

    def weak_axp(fset):
        return not any(all(bp[f] == v.values[f] for f in fset)
                       for bp in bad_points)

    def weak_cxp(fset):
        outside = [f for f in range(m) if f not in fset]
        return any(all(bp[f] == v.values[f] for f in outside)
                   for bp in bad_points)

    def minimal(weak):
        out = []
        for size in range(m + 1):
            for combo in combinations(range(m), size):
                fset = frozenset(combo)
                if weak(fset) and all(not weak(fset - {f}) for f in fset):
                    out.append(fset)
        return out

    return {Kind.AXP: minimal(weak_axp), Kind.CXP: minimal(weak_cxp)}


def all_minimal_hitting_sets(sets, m):
    """Inclusion-minimal hitting sets of a collection, by powerset scan."""
    sets = [frozenset(s) for s in sets]

    def hits(candidate):
        return all(candidate & s for s in sets)

    out = []
    for size in range(m + 1):
        for combo in combinations(range(m), size):
            cand = frozenset(combo)
            if hits(cand) and all(not hits(cand - {f}) for f in cand):
                out.append(cand)
    return out


# ---------------------------------------------------------------------------
# random instance generators (seeded by the caller)

def random_space(rng: random.Random, min_features=3, max_features=5,
                 max_domain=3) -> FeatureSpace:
    m = rng.randint(min_features, max_features)
    feats = []
    for i in range(m):
        d = rng.randint(2, max_domain)
        feats.append(("f%d" % i, ["v%d" % j for j in range(d)]))
    return FeatureSpace.make(feats)


def random_instance(rng: random.Random, space: FeatureSpace) -> Instance:
    return Instance(tuple(rng.randrange(len(space.domain(f)))
                          for f in range(space.m)))


def random_dl(rng: random.Random, space: FeatureSpace, n_classes=2,
              max_rules=8) -> DecisionList:
    classes = tuple("c%d" % i for i in range(n_classes))
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        feats = rng.sample(range(space.m), rng.randint(1, min(3, space.m)))
        ante = set()
        for f in feats:
            negated = rng.random() < 0.3 and len(space.domain(f)) >= 3
            ante.add(space.literal(f, rng.randrange(len(space.domain(f))), negated))
        rules.append(DLRule(frozenset(ante), rng.randrange(n_classes)))
    return DecisionList(space, classes, tuple(rules), rng.randrange(n_classes))


def _random_tree(rng: random.Random, space: FeatureSpace, depth: int) -> Node | Leaf:
    if depth == 0 or rng.random() < 0.25:
        return Leaf(rng.randint(-400, 400))
    f = rng.randrange(space.m)
    negated = rng.random() < 0.25 and len(space.domain(f)) >= 3
    lit = space.literal(f, rng.randrange(len(space.domain(f))), negated)
    return Node(lit, _random_tree(rng, space, depth - 1),
                _random_tree(rng, space, depth - 1))


def random_bt(rng: random.Random, space: FeatureSpace, n_classes=2,
              max_trees=6, depth=2) -> BoostedEnsemble:
    classes = tuple("c%d" % i for i in range(n_classes))
    if n_classes == 2 and rng.random() < 0.5:
        group = tuple(_random_tree(rng, space, depth)
                      for _ in range(rng.randint(1, max_trees)))
        return BoostedEnsemble(space, classes, 4, (group,),
                               positive=rng.randrange(2))
    trees = tuple(tuple(_random_tree(rng, space, depth)
                        for _ in range(rng.randint(1, max_trees)))
                  for _ in range(n_classes))
    return BoostedEnsemble(space, classes, 4, trees)


def random_model(rng: random.Random, space: FeatureSpace, n_classes=2):
    if rng.random() < 0.5:
        return random_dl(rng, space, n_classes)
    return random_bt(rng, space, n_classes)


def random_knowledge(rng: random.Random, space: FeatureSpace, v: Instance,
                     max_clauses=4) -> KnowledgeBase:
    """Random clause set guaranteed compatible with v (each clause holds on v)."""
    clauses = []
    for _ in range(rng.randint(0, max_clauses)):
        feats = rng.sample(range(space.m), rng.randint(1, min(3, space.m)))
        lits = []
        for f in feats:
            negated = rng.random() < 0.3 and len(space.domain(f)) >= 3
            lits.append(space.literal(f, rng.randrange(len(space.domain(f))), negated))
        if not any(l.holds(v) for l in lits):
            f = lits[0].feature
            lits[0] = space.literal(f, v.values[f])
        clause = Clause.of(lits)
        if clause not in clauses:
            clauses.append(clause)
    return KnowledgeBase(tuple(clauses), {c: () for c in clauses}, ())


# ---------------------------------------------------------------------------
# a tiny DIMACS reader/evaluator for cross-checking CNF dumps

def parse_dimacs(text: str):
    n_vars = 0
    clauses = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            n_vars = int(line.split()[2])
            continue
        lits = [int(t) for t in line.split()]
        assert lits[-1] == 0
        clauses.append(lits[:-1])
    return n_vars, clauses


def dimacs_satisfiable(text: str) -> bool:
    """Exhaustive CNF check: only usable for small variable counts."""
    n, clauses = parse_dimacs(text)
    assert n <= 22, "dimacs evaluator is exhaustive; formula too large"
    for bits in range(1 << n):
        def val(lit):
            var = abs(lit)
            on = bits >> (var - 1) & 1
            return bool(on) if lit > 0 else not on
        if all(any(val(l) for l in clause) for clause in clauses):
            return True
    return False
