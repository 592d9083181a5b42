"""Decision lists and boosted tree ensembles: classification, encodings, file IO."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .core import (FeatureSpace, Instance, Literal, space_from_obj,
                   space_to_obj)
from .ingest import Dataset

MODEL_FORMAT = "kxp.model/1"

# solver literal: (variable, value, negated); variables 0..m-1 are the features,
# higher ids are Boolean auxiliaries with domain {0, 1}
SLit = tuple[int, int, bool]


class ModelError(ValueError):
    """Malformed model structure or file."""


@dataclass(frozen=True)
class DLRule:
    antecedent: frozenset[Literal]
    cls: int

    def matches(self, inst: Instance) -> bool:
        return all(lit.holds(inst) for lit in self.antecedent)


@dataclass(frozen=True)
class DecisionList:
    """First-match rule list with a default class; classification is total."""

    space: FeatureSpace
    classes: tuple[str, ...]
    rules: tuple[DLRule, ...]
    default: int

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ModelError("need at least two classes")
        if not 0 <= self.default < len(self.classes):
            raise ModelError("default class index %d out of range" % self.default)
        for r, rule in enumerate(self.rules):
            if not 0 <= rule.cls < len(self.classes):
                raise ModelError("rule %d: class index %d out of range" % (r, rule.cls))
            for lit in rule.antecedent:
                if not (0 <= lit.feature < self.space.m
                        and 0 <= lit.value < len(self.space.domain(lit.feature))):
                    raise ModelError("rule %d references an invalid feature-value" % r)

    def classify(self, inst: Instance) -> int:
        for rule in self.rules:
            if rule.matches(inst):
                return rule.cls
        return self.default

    def class_count(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class Leaf:
    weight: int  # fixed point at the ensemble's scale


@dataclass(frozen=True)
class Node:
    test: Literal
    yes: Union["Node", Leaf]
    no: Union["Node", Leaf]


Tree = Union[Node, Leaf]


@dataclass(frozen=True)
class BoostedEnsemble:
    """Tree ensemble with integer leaf weights at scale 10^-scale.

    In single-score binary mode (`positive` set) there is one tree group and
    the positive class wins strictly when the summed score exceeds zero.
    Otherwise there is one group per class and the argmax wins, ties going to
    the lowest class index.
    """

    space: FeatureSpace
    classes: tuple[str, ...]
    scale: int
    trees: tuple[tuple[Tree, ...], ...]
    positive: Optional[int] = None

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ModelError("need at least two classes")
        if self.positive is not None:
            if len(self.classes) != 2 or len(self.trees) != 1:
                raise ModelError("single-score mode needs 2 classes and 1 tree group")
            if self.positive not in (0, 1):
                raise ModelError("positive class index %d out of range" % self.positive)
        elif len(self.trees) != len(self.classes):
            raise ModelError("expected %d tree groups, got %d"
                             % (len(self.classes), len(self.trees)))
        for group in self.trees:
            for tree in group:
                _check_tree(self.space, tree)

    def group_score(self, group: int, inst: Instance) -> int:
        return sum(_walk(tree, inst).weight for tree in self.trees[group])

    def scores(self, inst: Instance) -> tuple[int, ...]:
        return tuple(self.group_score(g, inst) for g in range(len(self.trees)))

    def classify(self, inst: Instance) -> int:
        if self.positive is not None:
            return self.positive if self.group_score(0, inst) > 0 else 1 - self.positive
        scores = self.scores(inst)
        best = 0
        for c in range(1, len(scores)):
            if scores[c] > scores[best]:
                best = c
        return best

    def class_count(self) -> int:
        return len(self.classes)


def _check_tree(space: FeatureSpace, tree: Tree) -> None:
    if isinstance(tree, Leaf):
        if not isinstance(tree.weight, int):
            raise ModelError("leaf weight %r is not an integer" % (tree.weight,))
        return
    lit = tree.test
    if not (0 <= lit.feature < space.m and 0 <= lit.value < len(space.domain(lit.feature))):
        raise ModelError("tree node references an invalid feature-value: %r" % (lit,))
    _check_tree(space, tree.yes)
    _check_tree(space, tree.no)


def _walk(tree: Tree, inst: Instance) -> Leaf:
    while isinstance(tree, Node):
        tree = tree.yes if tree.test.holds(inst) else tree.no
    return tree


Model = Union[DecisionList, BoostedEnsemble]


# ---------------------------------------------------------------------------
# logical encodings consumed by the entailment oracle

def _lit_slit(lit: Literal) -> SLit:
    return (lit.feature, lit.value, lit.negated)


def _neg(slit: SLit) -> SLit:
    var, value, negated = slit
    return (var, value, not negated)


@dataclass
class DLEncoding:
    """Clauses over feature indicators plus per-rule match/prefix/fire Booleans.

    fire[j] is true iff rule j's antecedent holds and no earlier rule matched;
    the default path fires iff the last prefix variable is true.
    """

    model: DecisionList
    aux_count: int
    clauses: list[list[SLit]]
    fire: list[int]           # var id of fire_j
    default_var: Optional[int]  # var id of "no rule matched", None when no rules

    kind = "dl"

    def challenge_clause(self, contested: int) -> Optional[list[SLit]]:
        """Clause forcing the model output to differ from `contested`.

        Returns None when the challenge is vacuously true (constant model of
        another class) and [] when it is unsatisfiable (constant model of the
        contested class).
        """
        lits = [(f, 1, False) for f, rule in zip(self.fire, self.model.rules)
                if rule.cls != contested]
        if self.model.default != contested:
            if self.default_var is None:
                return None
            lits.append((self.default_var, 1, False))
        return lits


def _encode_dl(model: DecisionList) -> DLEncoding:
    m = model.space.m
    next_var = m
    clauses: list[list[SLit]] = []
    fire: list[int] = []
    prev_prefix: Optional[int] = None  # None means "vacuously true" (before rule 0)
    for j, rule in enumerate(model.rules):
        match = next_var
        next_var += 1
        lits = [_lit_slit(l) for l in sorted(rule.antecedent)]
        for sl in lits:
            clauses.append([(match, 0, False), sl])
        clauses.append([(match, 1, False)] + [_neg(sl) for sl in lits])
        f = next_var
        next_var += 1
        fire.append(f)
        if prev_prefix is None:
            clauses.append([(f, 0, False), (match, 1, False)])
            clauses.append([(f, 1, False), (match, 0, False)])
        else:
            clauses.append([(f, 0, False), (prev_prefix, 1, False)])
            clauses.append([(f, 0, False), (match, 1, False)])
            clauses.append([(f, 1, False), (prev_prefix, 0, False), (match, 0, False)])
        prefix = next_var
        next_var += 1
        if prev_prefix is None:
            clauses.append([(prefix, 0, False), (match, 0, False)])
            clauses.append([(prefix, 1, False), (match, 1, False)])
        else:
            clauses.append([(prefix, 0, False), (prev_prefix, 1, False)])
            clauses.append([(prefix, 0, False), (match, 0, False)])
            clauses.append([(prefix, 1, False), (prev_prefix, 0, False), (match, 1, False)])
        prev_prefix = prefix
    return DLEncoding(model, next_var - m, clauses, fire, prev_prefix)


@dataclass
class BTEncoding:
    """Score-side handle for ensembles: reachable-leaf bounds per class group.

    The class test is not clausal; the oracle prunes with interval bounds and
    decides exactly on full assignments. Leaf activation clauses are still
    derivable for the CNF dump (leaf active iff its whole path holds, one
    leaf per tree).
    """

    model: BoostedEnsemble

    kind = "bt"
    aux_count = 0
    clauses: list[list[SLit]] = field(default_factory=list)

    def group_bounds(self, group: int,
                     allowed: Sequence[set[int]]) -> tuple[int, int]:
        lo = hi = 0
        for tree in self.model.trees[group]:
            tlo, thi = _tree_bounds(tree, allowed)
            lo += tlo
            hi += thi
        return lo, hi

    def challenge_possible(self, contested: int,
                           allowed: Sequence[set[int]]) -> bool:
        """Can some completion of `allowed` be classified differently from contested?

        Sound over-approximation: per-class bounds are computed independently.
        """
        model = self.model
        if model.positive is not None:
            lo, hi = self.group_bounds(0, allowed)
            return lo <= 0 if contested == model.positive else hi > 0
        bounds = [self.group_bounds(g, allowed) for g in range(len(model.trees))]
        if not 0 <= contested < len(bounds):
            return True
        c_lo = bounds[contested][0]
        for other in range(len(bounds)):
            if other == contested:
                continue
            hi = bounds[other][1]
            if (other < contested and hi >= c_lo) or (other > contested and hi > c_lo):
                return True
        return False

    def leaf_paths(self) -> list[list[tuple[list[SLit], int]]]:
        """Per tree (all groups flattened): [(path literals, leaf weight)]."""
        out = []
        for group in self.model.trees:
            for tree in group:
                leaves: list[tuple[list[SLit], int]] = []
                _collect_paths(tree, [], leaves)
                out.append(leaves)
        return out


def _tree_bounds(tree: Tree, allowed: Sequence[set[int]]) -> tuple[int, int]:
    if isinstance(tree, Leaf):
        return tree.weight, tree.weight
    dom = allowed[tree.test.feature]
    v = tree.test.value
    other = len(dom) > 1 or v not in dom  # some allowed value differs from v
    if tree.test.negated:
        can_yes, can_no = other, v in dom
    else:
        can_yes, can_no = v in dom, other
    lo, hi = None, None
    if can_yes:
        lo, hi = _tree_bounds(tree.yes, allowed)
    if can_no:
        nlo, nhi = _tree_bounds(tree.no, allowed)
        lo = nlo if lo is None else min(lo, nlo)
        hi = nhi if hi is None else max(hi, nhi)
    return lo, hi


def _collect_paths(tree: Tree, path: list[SLit],
                   leaves: list[tuple[list[SLit], int]]) -> None:
    if isinstance(tree, Leaf):
        leaves.append((list(path), tree.weight))
        return
    sl = _lit_slit(tree.test)
    _collect_paths(tree.yes, path + [sl], leaves)
    _collect_paths(tree.no, path + [_neg(sl)], leaves)


def model_constraints(model: Model) -> Union[DLEncoding, BTEncoding]:
    """Expose the model's decision semantics as logical constraints."""
    if isinstance(model, DecisionList):
        return _encode_dl(model)
    if isinstance(model, BoostedEnsemble):
        return BTEncoding(model)
    raise ModelError("unsupported model type %r" % type(model).__name__)


# ---------------------------------------------------------------------------
# model files

def _tree_obj(space: FeatureSpace, tree: Tree):
    if isinstance(tree, Leaf):
        return {"leaf": tree.weight}
    return {"test": tree.test.to_obj(space),
            "yes": _tree_obj(space, tree.yes),
            "no": _tree_obj(space, tree.no)}


def _tree_from_obj(space: FeatureSpace, obj) -> Tree:
    if "leaf" in obj:
        return Leaf(int(obj["leaf"]))
    return Node(Literal.from_obj(space, obj["test"]),
                _tree_from_obj(space, obj["yes"]),
                _tree_from_obj(space, obj["no"]))


def model_to_obj(model: Model) -> dict:
    space = model.space
    obj = {"format": MODEL_FORMAT, "features": space_to_obj(space),
           "classes": list(model.classes)}
    if isinstance(model, DecisionList):
        obj["kind"] = "dl"
        obj["rules"] = [{"if": [l.to_obj(space) for l in sorted(r.antecedent)],
                         "then": model.classes[r.cls]} for r in model.rules]
        obj["default"] = model.classes[model.default]
    else:
        obj["kind"] = "bt"
        obj["scale"] = model.scale
        obj["positive"] = None if model.positive is None else model.classes[model.positive]
        obj["trees"] = [[_tree_obj(space, t) for t in group] for group in model.trees]
    return obj


def model_from_obj(obj: Mapping) -> Model:
    if obj.get("format") != MODEL_FORMAT:
        raise ModelError("unrecognized model format %r" % obj.get("format"))
    space = space_from_obj(obj["features"])
    classes = tuple(obj["classes"])
    if obj["kind"] == "dl":
        rules = []
        for r in obj["rules"]:
            ante = frozenset(Literal.from_obj(space, l) for l in r["if"])
            rules.append(DLRule(ante, classes.index(r["then"])))
        return DecisionList(space, classes, tuple(rules), classes.index(obj["default"]))
    if obj["kind"] == "bt":
        trees = tuple(tuple(_tree_from_obj(space, t) for t in group)
                      for group in obj["trees"])
        positive = None if obj.get("positive") is None \
            else classes.index(obj["positive"])
        return BoostedEnsemble(space, classes, int(obj["scale"]), trees, positive)
    raise ModelError("unknown model kind %r" % obj.get("kind"))


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_obj(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return model_from_obj(json.load(fh))


# ---------------------------------------------------------------------------
# convenience trainers (desk-scale harness models; no quality claims)

def _class_instances(ds: Dataset) -> tuple[FeatureSpace, list[Instance], list[int]]:
    if ds.class_labels is None:
        raise ModelError("dataset has no class column")
    return ds.space, ds.instances(), list(ds.class_labels)


def train_decision_list(ds: Dataset, max_antecedent: int = 3,
                        max_rules: int = 32) -> DecisionList:
    """Greedy sequential covering; deterministic, first-appearance tie-breaks."""
    space, insts, labels = _class_instances(ds)
    classes = ds.class_domain
    all_lits = [space.literal(f, v) for f in range(space.m)
                for v in range(len(space.domain(f)))]
    remaining = list(range(len(insts)))
    rules: list[DLRule] = []
    while remaining and len(rules) < max_rules:
        counts = [0] * len(classes)
        for i in remaining:
            counts[labels[i]] += 1
        target = max(range(len(classes)), key=lambda c: (counts[c], -c))
        covered = list(remaining)
        chosen: list[Literal] = []
        while len(chosen) < max_antecedent:
            pure = all(labels[i] == target for i in covered)
            if pure:
                break
            best = None
            for lit in all_lits:
                if any(l.feature == lit.feature for l in chosen):
                    continue
                sub = [i for i in covered if lit.holds(insts[i])]
                pos = sum(1 for i in sub if labels[i] == target)
                if not sub or pos == 0:
                    continue
                score = (pos / len(sub), pos)
                if best is None or score > best[0]:
                    best = (score, lit, sub)
            if best is None:
                break
            chosen.append(best[1])
            covered = best[2]
        if not chosen or not covered:
            break
        rules.append(DLRule(frozenset(chosen), target))
        covered_set = set(covered)
        remaining = [i for i in remaining if i not in covered_set]
    if remaining:
        counts = [0] * len(classes)
        for i in remaining:
            counts[labels[i]] += 1
        default = max(range(len(classes)), key=lambda c: (counts[c], -c))
    else:
        counts = [0] * len(classes)
        for c in labels:
            counts[c] += 1
        default = max(range(len(classes)), key=lambda c: (counts[c], -c))
    return DecisionList(space, classes, tuple(rules), default)


def _fit_tree(insts, rows, residual, lits, depth, min_leaf=4) -> tuple[Tree, bool]:
    """Least-squares regression tree over literal tests; bool flags a real split."""
    mean = sum(residual[i] for i in rows) / len(rows) if rows else 0.0
    if depth == 0 or len(rows) < 2 * min_leaf:
        return Leaf(mean), False
    sse = sum((residual[i] - mean) ** 2 for i in rows)
    best = None
    for lit in lits:
        yes = [i for i in rows if lit.holds(insts[i])]
        if len(yes) < min_leaf or len(rows) - len(yes) < min_leaf:
            continue
        no = [i for i in rows if i not in set(yes)]
        ymean = sum(residual[i] for i in yes) / len(yes)
        nmean = sum(residual[i] for i in no) / len(no)
        gain = sse - (sum((residual[i] - ymean) ** 2 for i in yes)
                      + sum((residual[i] - nmean) ** 2 for i in no))
        if best is None or gain > best[0] + 1e-12:
            best = (gain, lit, yes, no)
    if best is None or best[0] <= 1e-9:
        return Leaf(mean), False
    _, lit, yes, no = best
    ytree, _ = _fit_tree(insts, yes, residual, lits, depth - 1, min_leaf)
    ntree, _ = _fit_tree(insts, no, residual, lits, depth - 1, min_leaf)
    return Node(lit, ytree, ntree), True


def _scale_tree(tree: Tree, lr: float, scale: int) -> Tree:
    if isinstance(tree, Leaf):
        return Leaf(int(round(tree.weight * lr * 10 ** scale)))
    return Node(tree.test, _scale_tree(tree.yes, lr, scale),
                _scale_tree(tree.no, lr, scale))


def train_boosted(ds: Dataset, rounds: int = 12, depth: int = 2,
                  lr: float = 0.5, scale: int = 4) -> BoostedEnsemble:
    """Least-squares stump boosting at fixed-point scale; one-vs-rest when multiclass."""
    space, insts, labels = _class_instances(ds)
    classes = ds.class_domain
    lits = [space.literal(f, v) for f in range(space.m)
            for v in range(len(space.domain(f)))]
    rows = list(range(len(insts)))

    def boost(target_cls: int) -> tuple[Tree, ...]:
        target = [1.0 if labels[i] == target_cls else -1.0 for i in rows]
        score = [0.0] * len(rows)
        group: list[Tree] = []
        for _ in range(rounds):
            residual = [target[i] - score[i] for i in rows]
            tree, split = _fit_tree(insts, rows, residual, lits, depth)
            fixed = _scale_tree(tree, lr, scale)
            group.append(fixed)
            for i in rows:
                score[i] += _walk(fixed, insts[i]).weight / 10 ** scale
            if not split:
                break
        return tuple(group)

    if len(classes) == 2:
        return BoostedEnsemble(space, classes, scale, (boost(1),), positive=1)
    return BoostedEnsemble(space, classes, scale,
                           tuple(boost(c) for c in range(len(classes))))
