"""Mining background rules that are 100% consistent with training data.

The main engine is a breadth-first search of the antecedent lattice per
target feature-value, pruning unsupported antecedents and supersets of
already-consistent ones, so every emitted rule has a subset-minimal
antecedent. Rules are blocked in clausal form so that no clause is ever
emitted twice across targets. An Eclat-style vertical miner (equality
literals only, confidence 1.0) serves as the baseline.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import (Clause, FeatureSpace, Instance, KnowledgeBase, Literal,
                   Rule, rule_to_clause, space_from_obj, space_to_obj)
from .ingest import Dataset

RULES_FORMAT = "kxp.rules/1"


class MinerError(ValueError):
    pass


@dataclass(frozen=True)
class ExtractionLimit:
    """Truncation knobs: antecedent size applies per rule, count/time globally."""

    max_size: int = 5
    max_rules: Optional[int] = None
    time_budget: Optional[float] = None  # seconds over the whole extraction
    min_support: int = 1
    per_target_rules: Optional[int] = None

    def __post_init__(self):
        if self.max_size < 1:
            raise MinerError("max antecedent size must be >= 1")
        if self.min_support < 1:
            raise MinerError("min support must be >= 1")


def _candidate_literals(space: FeatureSpace, target: Literal) -> list[Literal]:
    # = literals for every value; != only where the domain has 3+ values
    # (binary != normalizes to the complementary =)
    lits = []
    for f in range(space.m):
        if f == target.feature:
            continue
        dsz = len(space.domain(f))
        for v in range(dsz):
            lits.append(space.literal(f, v))
        if dsz >= 3:
            for v in range(dsz):
                lits.append(space.literal(f, v, negated=True))
    lits.sort()
    return lits


def _row_mask(insts: list[Instance], lit: Literal) -> int:
    mask = 0
    for i, inst in enumerate(insts):
        if lit.holds(inst):
            mask |= 1 << i
    return mask


def _mine_target(space: FeatureSpace, insts: list[Instance], target: Literal,
                 blocked: set[Clause], limit: ExtractionLimit,
                 deadline: Optional[float], budget: Optional[int],
                 next_id: int) -> tuple[list[Rule], bool]:
    n = len(insts)
    all_rows = (1 << n) - 1
    t_true = _row_mask(insts, target)
    t_false = all_rows & ~t_true
    emitted: list[Rule] = []
    local_clauses: set[Clause] = set()

    def out_of_budget() -> bool:
        if budget is not None and len(emitted) >= budget:
            return True
        return deadline is not None and time.monotonic() > deadline

    def try_emit(antecedent: frozenset[Literal], support: int) -> None:
        nonlocal next_id
        rule = Rule(antecedent, target, id=next_id, support=support, consistency=1.0)
        clause = rule_to_clause(space, rule)
        if clause in blocked or clause in local_clauses:
            return
        local_clauses.add(clause)
        emitted.append(rule)
        next_id += 1

    if t_false == 0 and t_true.bit_count() >= limit.min_support:
        # the target holds on every row: the empty-antecedent rule subsumes all
        try_emit(frozenset(), t_true.bit_count())
        return emitted, out_of_budget()

    lits = _candidate_literals(space, target)
    lit_rows = [_row_mask(insts, lit) for lit in lits]
    lit_feat = [lit.feature for lit in lits]
    lit_neg = [lit.negated for lit in lits]
    dom_size = [len(space.domain(f)) for f in range(space.m)]

    closed: list[int] = []  # minimal consistent antecedents, as literal bitmasks
    # frontier entries: (literal mask, row mask, last literal id, =-feature mask,
    # {feature: != count})
    frontier = [(0, all_rows, -1, 0, {})]
    truncated = False
    for _size in range(1, limit.max_size + 1):
        new_frontier = []
        for litmask, rowmask, last, eqm, neq in frontier:
            for j in range(last + 1, len(lits)):
                f = lit_feat[j]
                if eqm >> f & 1 or (not lit_neg[j] and f in neq):
                    continue  # a second literal on an =-pinned feature is redundant
                if lit_neg[j] and neq.get(f, 0) + 1 >= dom_size[f]:
                    continue  # != literals may not exclude the whole domain
                rows = rowmask & lit_rows[j]
                support = (rows & t_true).bit_count()
                if support < limit.min_support:
                    continue
                newmask = litmask | (1 << j)
                if rows & t_false:
                    if lit_neg[j]:
                        nneq = dict(neq)
                        nneq[f] = nneq.get(f, 0) + 1
                        new_frontier.append((newmask, rows, j, eqm, nneq))
                    else:
                        new_frontier.append((newmask, rows, j, eqm | (1 << f), neq))
                    continue
                # consistent: minimal iff no already-closed antecedent is a subset
                if any(c & newmask == c for c in closed):
                    continue
                closed.append(newmask)
                antecedent = frozenset(lits[b] for b in range(len(lits))
                                       if newmask >> b & 1)
                try_emit(antecedent, support)
                if out_of_budget():
                    return emitted, True
        frontier = new_frontier
        if not frontier:
            break
    return emitted, truncated


def enumerate_min_rules(train: Dataset, target: Literal,
                        blocked: Iterable[Clause] = (),
                        limit: ExtractionLimit = ExtractionLimit()) -> list[Rule]:
    """All consistency-preserving rules with subset-minimal antecedents for one target.

    Emission order is nondecreasing in antecedent size, lexicographic within a
    size; clauses in `blocked` (and clauses already emitted) are suppressed.
    """
    space = train.space
    if target.negated:
        raise MinerError("targets must be = literals")
    deadline = None if limit.time_budget is None \
        else time.monotonic() + limit.time_budget
    budget = limit.max_rules
    if limit.per_target_rules is not None:
        budget = min(budget, limit.per_target_rules) if budget else limit.per_target_rules
    rules, _ = _mine_target(space, train.instances(), target, set(blocked),
                            limit, deadline, budget, next_id=0)
    return rules


def extract_all(train: Dataset, limit: ExtractionLimit = ExtractionLimit()) -> KnowledgeBase:
    """Mine every feature-value target, blocking emitted clauses between targets.

    The class column never participates (it is held outside the feature
    space). Exhausting the count or time budget returns the partial knowledge
    base with its truncation flag set.
    """
    space = train.space
    insts = train.instances()
    deadline = None if limit.time_budget is None \
        else time.monotonic() + limit.time_budget
    blocked: set[Clause] = set()
    rules: list[Rule] = []
    truncated = False
    stop = False
    for f in range(space.m):
        if stop:
            break
        for v in range(len(space.domain(f))):
            budget = None
            if limit.max_rules is not None:
                budget = limit.max_rules - len(rules)
            if limit.per_target_rules is not None:
                budget = limit.per_target_rules if budget is None \
                    else min(budget, limit.per_target_rules)
            target = space.literal(f, v)
            got, trunc = _mine_target(space, insts, target, blocked, limit,
                                      deadline, budget, next_id=len(rules))
            rules.extend(got)
            for rule in got:
                blocked.add(rule_to_clause(space, rule))
            truncated = truncated or trunc
            if limit.max_rules is not None and len(rules) >= limit.max_rules:
                truncated, stop = True, True
                break
            if deadline is not None and time.monotonic() > deadline:
                truncated, stop = True, True
                break
    return KnowledgeBase.from_rules(space, rules, truncated=truncated)


def extract_all_parallel(train: Dataset,
                         limit: ExtractionLimit = ExtractionLimit(),
                         jobs: int = 2) -> KnowledgeBase:
    """Opt-in parallel extraction: targets mined independently, deduplicated after.

    Each (feature, value) target runs against an empty blocked snapshot, so
    which clause reading is kept diverges from the sequential order-dependent
    blocking; the resulting clause set is deduplicated (first reading in
    target order wins) and, without count/time budgets, equals the sequential
    one. Rule ids are reassigned in target order.
    """
    space = train.space
    insts = train.instances()
    targets = [space.literal(f, v) for f in range(space.m)
               for v in range(len(space.domain(f)))]
    deadline = None if limit.time_budget is None \
        else time.monotonic() + limit.time_budget
    budget = limit.per_target_rules

    def mine(target):
        return _mine_target(space, insts, target, set(), limit, deadline,
                            budget, next_id=0)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(mine, targets))
    else:
        results = [mine(t) for t in targets]
    rules: list[Rule] = []
    truncated = False
    for got, trunc in results:
        truncated = truncated or trunc
        for rule in got:
            rules.append(Rule(rule.antecedent, rule.consequent, id=len(rules),
                              support=rule.support, consistency=rule.consistency))
            if limit.max_rules is not None and len(rules) >= limit.max_rules:
                return KnowledgeBase.from_rules(space, rules, truncated=True)
    return KnowledgeBase.from_rules(space, rules, truncated=truncated)


def filter_rules_by_accuracy(rules: Iterable[Rule], test: Dataset,
                             threshold: float) -> list[Rule]:
    """Optional post-pass dropping rules below a held-out accuracy threshold."""
    return [r for r in rules if rule_accuracy(r, test) >= threshold]


# ---------------------------------------------------------------------------
# Eclat baseline: vertical tid-list mining of confidence-1.0 equality rules

def eclat_mine(train: Dataset, min_support: int = 1,
               limit: ExtractionLimit = ExtractionLimit()) -> list[Rule]:
    """Frequent-itemset rules with = literals only and confidence 1.0.

    A rule per (itemset, consequent item) pair whose antecedent support equals
    the itemset support. Negated feature-value literals are out of this
    miner's language, so e.g. one != rule of the lattice miner corresponds to
    several = rules here.
    """
    if min_support < 1:
        raise MinerError("min support must be >= 1")
    space = train.space
    insts = train.instances()
    n = len(insts)
    items = [space.literal(f, v) for f in range(space.m)
             for v in range(len(space.domain(f)))]
    items.sort()
    tids = [_row_mask(insts, lit) for lit in items]
    order = [i for i in range(len(items)) if tids[i].bit_count() >= min_support]

    supports: dict[frozenset[Literal], int] = {frozenset(): n}
    found: list[tuple[frozenset[Literal], int]] = []

    def grow(prefix: list[int], ptids: int, candidates: list[tuple[int, int]]) -> None:
        for pos, (i, itids) in enumerate(candidates):
            itemset = frozenset(items[k] for k in prefix + [i])
            supports[itemset] = itids.bit_count()
            found.append((itemset, itids.bit_count()))
            if len(prefix) + 1 > limit.max_size:
                continue
            exts = []
            for k, ktids in candidates[pos + 1:]:
                if items[k].feature == items[i].feature:
                    continue
                t = itids & ktids
                if t.bit_count() >= min_support:
                    exts.append((k, t))
            if exts:
                grow(prefix + [i], itids, exts)

    grow([], (1 << n) - 1, [(i, tids[i]) for i in order])

    rules: list[Rule] = []
    next_id = 0
    for itemset, supp in found:
        for consequent in sorted(itemset):
            antecedent = itemset - {consequent}
            if supports.get(antecedent, 0 if antecedent else n) != supp:
                continue
            rules.append(Rule(antecedent, consequent, id=next_id,
                              support=supp, consistency=1.0))
            next_id += 1
            if limit.max_rules is not None and len(rules) >= limit.max_rules:
                return rules
    return rules


def rule_accuracy(rule: Rule, test: Dataset) -> float:
    """1 - (fraction of test rows that falsify the rule's clausal form)."""
    insts = test.instances()
    if not insts:
        raise MinerError("cannot score a rule on an empty dataset")
    violations = sum(1 for inst in insts if rule.violated_by(inst))
    return 1.0 - violations / len(insts)


# ---------------------------------------------------------------------------
# line-oriented rule files: a header line declaring the feature space, then
# one JSON rule per line; the blocked-clause set is reconstructible from it

def save_rules(path, space: FeatureSpace, rules: Iterable[Rule],
               truncated: bool = False, engine: str = "lattice",
               manifest: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": RULES_FORMAT, "engine": engine, "truncated": truncated,
                  "features": space_to_obj(space)}
        if manifest is not None:
            header["manifest"] = manifest
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rule in rules:
            obj = {"id": rule.id, "size": rule.size,
                   "if": [l.to_obj(space) for l in sorted(rule.antecedent)],
                   "then": rule.consequent.to_obj(space),
                   "support": rule.support, "consistency": rule.consistency}
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_rules(path) -> tuple[FeatureSpace, list[Rule], dict]:
    """Returns (declared space, rules, header metadata)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise MinerError("%s: empty rules file" % path)
    header = json.loads(lines[0])
    if header.get("format") != RULES_FORMAT:
        raise MinerError("%s: unrecognized rules format %r" % (path, header.get("format")))
    space = space_from_obj(header["features"])
    rules = []
    for ln in lines[1:]:
        obj = json.loads(ln)
        rules.append(Rule(
            frozenset(Literal.from_obj(space, l) for l in obj["if"]),
            Literal.from_obj(space, obj["then"]),
            obj.get("id"), obj.get("support"), obj.get("consistency")))
    return space, rules, header


def load_knowledge(path, target_space: Optional[FeatureSpace] = None) -> KnowledgeBase:
    """Load a rules file as a knowledge base, optionally rebound onto a model's space."""
    from .core import rebind_rule
    space, rules, header = load_rules(path)
    if target_space is not None:
        rules = [rebind_rule(r, space, target_space) for r in rules]
        space = target_space
    return KnowledgeBase.from_rules(space, rules, truncated=bool(header.get("truncated")))
