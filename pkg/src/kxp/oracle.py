"""The entailment oracle: is "fixed features AND knowledge AND misclassification" satisfiable?

UNSAT answers certify abductive explanations; SAT answers return a witness
point that seeds contrastive explanations. The search is a complete
backtracking procedure with watched-literal unit propagation over one-hot
feature domains; ensembles add sound per-class score-interval pruning and an
exact check on full assignments.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterable, Optional

from .core import FeatureSpace, Instance, KnowledgeBase
from .models import (BTEncoding, DLEncoding, Model, SLit, model_constraints)

DEFAULT_BRUTE_BOUND = 10_000_000


class OracleError(ValueError):
    """Bad query: malformed inputs or violated preconditions."""


class Status(Enum):
    ENTAILS = "entails"
    COUNTEREXAMPLE = "counterexample"


@dataclass(frozen=True)
class OracleResult:
    status: Status
    witness: Optional[Instance] = None

    def __post_init__(self):
        if (self.status is Status.COUNTEREXAMPLE) != (self.witness is not None):
            raise OracleError("counterexamples carry a witness; entailments do not")

    @property
    def entails(self) -> bool:
        return self.status is Status.ENTAILS


@dataclass(frozen=True)
class EntailmentQuery:
    """One satisfiability question: fixed features Z, knowledge, contested class."""

    fixed: frozenset[int]
    instance: Instance
    model: Model
    contested: int
    knowledge: KnowledgeBase = field(default_factory=KnowledgeBase)

    def __post_init__(self):
        space = self.model.space
        if len(self.instance.values) != space.m:
            raise OracleError("instance has %d values, space has %d features"
                              % (len(self.instance.values), space.m))
        for f, v in enumerate(self.instance.values):
            if not 0 <= v < len(space.domain(f)):
                raise OracleError("instance value %d out of range for feature %d" % (v, f))
        if any(not 0 <= f < space.m for f in self.fixed):
            raise OracleError("fixed feature index out of range")
        if not 0 <= self.contested < self.model.class_count():
            raise OracleError("contested class %d out of range" % self.contested)
        check_compatible(self.instance, self.knowledge)


def check_compatible(instance: Instance, knowledge: KnowledgeBase) -> None:
    """Raise unless the instance satisfies every knowledge clause."""
    for clause in knowledge.clauses:
        if not clause.satisfied_by(instance):
            raise OracleError("instance is incompatible with the knowledge clause %s"
                              % sorted(clause.literals))


def _event(slit: SLit) -> tuple:
    var, value, negated = slit
    # the event on which this literal becomes false
    return ("fix", var, value) if negated else ("rm", var, value)


def _tree_features(tree, out: set) -> None:
    if hasattr(tree, "test"):
        out.add(tree.test.feature)
        _tree_features(tree.yes, out)
        _tree_features(tree.no, out)


class EntailmentOracle:
    """Reusable oracle over one (model, knowledge) pair; queries vary Z and c.

    Owns mutable search state: confine an instance to one task at a time.
    """

    def __init__(self, model: Model, knowledge: Optional[KnowledgeBase] = None):
        self.model = model
        self.space: FeatureSpace = model.space
        self.knowledge = knowledge if knowledge is not None else KnowledgeBase()
        self.encoding = model_constraints(model)
        self.calls = 0

        m = self.space.m
        self.sizes = [len(self.space.domain(f)) for f in range(m)]
        self.sizes += [2] * self.encoding.aux_count
        self.n_vars = len(self.sizes)
        self.dom: list[set[int]] = [set(range(s)) for s in self.sizes]
        self.trail: list[tuple[int, int]] = []

        # ensembles: decide score-relevant features first and re-check score
        # bounds only when one of them was pruned
        if self.encoding.kind == "bt":
            tested: set[int] = set()
            for group in model.trees:
                for tree in group:
                    _tree_features(tree, tested)
            self._score_feats = tested
            self._order = sorted(tested) + sorted(set(range(m)) - tested)
        else:
            self._score_feats = set()
            self._order = list(range(m))

        self.clauses: list[list[SLit]] = []
        self.cwatch: list[list[int]] = []
        self.watch: dict[tuple, list[int]] = {}
        self.base_units: list[SLit] = []
        for clause in self.encoding.clauses:
            self._add_clause(clause)
        for clause in self.knowledge.clauses:
            self._add_clause([(l.feature, l.value, l.negated) for l in clause.literals])
        self._n_base = len(self.clauses)

    # -- clause database -----------------------------------------------------

    def _add_clause(self, slits: list[SLit]) -> None:
        if len(slits) == 1:
            self.base_units.append(slits[0])
            return
        ci = len(self.clauses)
        self.clauses.append(slits)
        self.cwatch.append([0, 1])
        for pos in (0, 1):
            self.watch.setdefault(_event(slits[pos]), []).append(ci)

    def _push_temp_clause(self, slits: list[SLit]) -> Optional[int]:
        if len(slits) == 1:
            return None  # caller forces it instead
        ci = len(self.clauses)
        self.clauses.append(slits)
        self.cwatch.append([0, 1])
        for pos in (0, 1):
            self.watch.setdefault(_event(slits[pos]), []).append(ci)
        return ci

    def _pop_temp_clause(self, ci: int) -> None:
        assert ci == len(self.clauses) - 1  # one temp clause, pushed last
        slits = self.clauses[ci]
        for pos in self.cwatch[ci]:
            key = _event(slits[pos])
            lst = self.watch.get(key, [])
            if ci in lst:
                lst.remove(ci)
        del self.clauses[ci]
        del self.cwatch[ci]

    # -- literal state -------------------------------------------------------

    def _true(self, slit: SLit) -> bool:
        var, value, negated = slit
        d = self.dom[var]
        return (value not in d) if negated else (len(d) == 1 and value in d)

    def _false(self, slit: SLit) -> bool:
        var, value, negated = slit
        d = self.dom[var]
        return (len(d) == 1 and value in d) if negated else (value not in d)

    # -- propagation ---------------------------------------------------------

    def _remove(self, var: int, value: int, queue: deque) -> bool:
        d = self.dom[var]
        if value not in d:
            return True
        if len(d) == 1:
            return False
        d.discard(value)
        self.trail.append((var, value))
        queue.append(("rm", var, value))
        if len(d) == 1:
            queue.append(("fix", var, next(iter(d))))
        return True

    def _force(self, slit: SLit, queue: deque) -> bool:
        var, value, negated = slit
        if negated:
            return self._remove(var, value, queue)
        if value not in self.dom[var]:
            return False
        for other in list(self.dom[var]):
            if other != value and not self._remove(var, other, queue):
                return False
        return True

    def _propagate(self, queue: deque) -> bool:
        while queue:
            ev = queue.popleft()
            lst = self.watch.get(ev)
            if not lst:
                continue
            keep: list[int] = []
            i = 0
            while i < len(lst):
                ci = lst[i]
                i += 1
                slits = self.clauses[ci]
                w = self.cwatch[ci]
                if _event(slits[w[0]]) == ev and self._false(slits[w[0]]):
                    which = 0
                elif _event(slits[w[1]]) == ev and self._false(slits[w[1]]):
                    which = 1
                else:
                    keep.append(ci)  # spurious wakeup (stale entry after backtrack)
                    continue
                other = slits[w[1 - which]]
                if self._true(other):
                    keep.append(ci)
                    continue
                moved = False
                for pos, sl in enumerate(slits):
                    if pos in (w[0], w[1]) or self._false(sl):
                        continue
                    w[which] = pos
                    self.watch.setdefault(_event(sl), []).append(ci)
                    moved = True
                    break
                if moved:
                    continue
                keep.append(ci)
                if self._false(other):
                    keep.extend(lst[i:])
                    self.watch[ev] = keep
                    return False
                if not self._force(other, queue):
                    keep.extend(lst[i:])
                    self.watch[ev] = keep
                    return False
            self.watch[ev] = keep
        return True

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            var, value = self.trail.pop()
            self.dom[var].add(value)

    # -- search --------------------------------------------------------------

    def _bt_prune(self, contested: int) -> bool:
        enc = self.encoding
        if enc.kind != "bt":
            return True
        return enc.challenge_possible(contested, self.dom)

    def _full_check(self, contested: int) -> bool:
        if self.encoding.kind != "bt":
            return True
        witness = self._witness()
        return self.model.classify(witness) != contested

    def _witness(self) -> Instance:
        return Instance(tuple(next(iter(self.dom[f])) for f in range(self.space.m)))

    def _search(self, contested: int) -> Optional[Instance]:
        var = next((f for f in self._order if len(self.dom[f]) > 1), None)
        if var is None:
            return self._witness() if self._full_check(contested) else None
        for value in sorted(self.dom[var]):
            mark = len(self.trail)
            queue: deque = deque()
            ok = self._force((var, value, False), queue) and self._propagate(queue)
            if ok and (not self._score_touched(mark) or self._bt_prune(contested)):
                found = self._search(contested)
                if found is not None:
                    return found
            self._undo_to(mark)
        return None

    def _score_touched(self, mark: int) -> bool:
        if not self._score_feats:
            return False
        return any(var in self._score_feats for var, _ in self.trail[mark:])

    def query(self, fixed: Iterable[int], instance: Instance,
              contested: int) -> OracleResult:
        """Decide the query; Z-fixing and the class challenge are per-call."""
        self.calls += 1
        temp_ci = None
        challenge_unit: Optional[SLit] = None
        if isinstance(self.encoding, DLEncoding):
            ch = self.encoding.challenge_clause(contested)
            if ch is not None and not ch:
                return OracleResult(Status.ENTAILS)
            if ch is not None:
                if len(ch) == 1:
                    challenge_unit = ch[0]
                else:
                    temp_ci = self._push_temp_clause(ch)
        try:
            queue: deque = deque()
            ok = True
            for slit in self.base_units:
                ok = ok and self._force(slit, queue)
            if challenge_unit is not None:
                ok = ok and self._force(challenge_unit, queue)
            for f in sorted(set(fixed)):
                ok = ok and self._force((f, instance.values[f], False), queue)
            ok = ok and self._propagate(queue)
            witness = None
            if ok and self._bt_prune(contested):
                witness = self._search(contested)
        finally:
            self._undo_to(0)
            if temp_ci is not None:
                self._pop_temp_clause(temp_ci)
        if witness is None:
            return OracleResult(Status.ENTAILS)
        self._verify_witness(fixed, instance, contested, witness)
        return OracleResult(Status.COUNTEREXAMPLE, witness)

    def _verify_witness(self, fixed, instance, contested, witness) -> None:
        ok = all(witness.values[f] == instance.values[f] for f in fixed) \
            and self.knowledge.satisfied_by(witness) \
            and self.model.classify(witness) != contested
        if not ok:
            raise AssertionError("internal error: witness fails direct evaluation")


def entails(query: EntailmentQuery) -> OracleResult:
    """One-shot oracle call; reuse an EntailmentOracle for query batches."""
    return EntailmentOracle(query.model, query.knowledge).query(
        query.fixed, query.instance, query.contested)


def entails_bruteforce(query: EntailmentQuery,
                       bound: int = DEFAULT_BRUTE_BOUND) -> OracleResult:
    """Exhaustive reference oracle; first witness in lexicographic instance order."""
    space = query.model.space
    size = space.size()
    if size > bound:
        raise OracleError("feature space has %d points, above the brute-force "
                          "bound %d" % (size, bound))
    ranges = [
        [query.instance.values[f]] if f in query.fixed
        else range(len(space.domain(f)))
        for f in range(space.m)
    ]
    for combo in product(*ranges):
        point = Instance(tuple(combo))
        if not query.knowledge.satisfied_by(point):
            continue
        if query.model.classify(point) != query.contested:
            return OracleResult(Status.COUNTEREXAMPLE, point)
    return OracleResult(Status.ENTAILS)


# ---------------------------------------------------------------------------
# DIMACS dump for cross-checking with external solvers

def query_to_dimacs(query: EntailmentQuery) -> str:
    """CNF image of the query over one-hot indicators.

    Indicator id = 1 + offset(feature) + value index, where offset is the sum
    of the domain sizes of earlier features. For decision lists the dump is
    equisatisfiable with the query; for ensembles the score comparison is not
    clausal and is omitted (a comment line says so).
    """
    space = query.model.space
    offsets = []
    total = 0
    for f in range(space.m):
        offsets.append(total)
        total += len(space.domain(f))

    def ind(f: int, d: int) -> int:
        return 1 + offsets[f] + d

    aux_base = total  # aux Boolean b -> id aux_base + (b - m) + 1
    enc = model_constraints(query.model)

    def slit_dimacs(slit: SLit) -> int:
        var, value, negated = slit
        if var < space.m:
            lit = ind(var, value)
            return -lit if negated else lit
        lit = aux_base + (var - space.m) + 1
        positive = (value == 1) != negated
        return lit if positive else -lit

    lines = []
    clauses: list[list[int]] = []
    comments = ["c entailment query: fixed=%s contested=%d"
                % (sorted(query.fixed), query.contested)]
    for f in range(space.m):
        name, domain = space.features[f]
        for d, label in enumerate(domain):
            comments.append("c var %d = [%s = %s]" % (ind(f, d), name, label))
        clauses.append([ind(f, d) for d in range(len(domain))])
        for a in range(len(domain)):
            for b in range(a + 1, len(domain)):
                clauses.append([-ind(f, a), -ind(f, b)])
    for f in sorted(query.fixed):
        clauses.append([ind(f, query.instance.values[f])])
    for clause in query.knowledge.clauses:
        clauses.append([slit_dimacs((l.feature, l.value, l.negated))
                        for l in clause.sorted_literals()])

    n_vars = total
    if isinstance(enc, DLEncoding):
        n_vars += enc.aux_count
        comments.append("c aux vars %d..%d: rule match/fire/prefix chain"
                        % (aux_base + 1, n_vars))
        for slits in enc.clauses:
            clauses.append([slit_dimacs(sl) for sl in slits])
        ch = enc.challenge_clause(query.contested)
        if ch is not None:
            clauses.append([slit_dimacs(sl) for sl in ch])
    else:
        assert isinstance(enc, BTEncoding)
        leaf_id = n_vars
        for leaves in enc.leaf_paths():
            tree_vars = []
            for path, weight in leaves:
                leaf_id += 1
                tree_vars.append(leaf_id)
                comments.append("c var %d = leaf with weight %d" % (leaf_id, weight))
                for sl in path:
                    clauses.append([-leaf_id, slit_dimacs(sl)])
                clauses.append([leaf_id] + [-slit_dimacs(sl) for sl in path])
            clauses.append(list(tree_vars))
            for a in range(len(tree_vars)):
                for b in range(a + 1, len(tree_vars)):
                    clauses.append([-tree_vars[a], -tree_vars[b]])
        n_vars = leaf_id
        comments.append("c note: the class-score comparison is not encoded; "
                        "this dump covers the propositional part only")

    lines.extend(comments)
    lines.append("p cnf %d %d" % (n_vars, len(clauses)))
    for clause in clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"
