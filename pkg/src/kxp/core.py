"""Shared vocabulary: feature spaces, instances, literals, clauses, rules, knowledge."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterable, Iterator, Mapping, Optional, Sequence


class SpaceError(ValueError):
    """Raised when a feature space, literal, rule or clause is malformed."""


@dataclass(frozen=True)
class FeatureSpace:
    """Finite categorical feature space: an ordered list of (name, domain) pairs.

    Domains are ordered tuples of value labels; all indices used by literals
    and instances refer to positions in these tuples.
    """

    features: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        names = [name for name, _ in self.features]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate feature names: %s" % names)
        for name, domain in self.features:
            if len(domain) < 2:
                raise SpaceError("feature %r needs a domain of size >= 2, got %r"
                                 % (name, list(domain)))
            if len(set(domain)) != len(domain):
                raise SpaceError("feature %r has duplicate value labels" % name)

    @classmethod
    def make(cls, features: Iterable[tuple[str, Sequence[str]]]) -> "FeatureSpace":
        return cls(tuple((name, tuple(domain)) for name, domain in features))

    @property
    def m(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.features)

    def domain(self, feature: int) -> tuple[str, ...]:
        return self.features[feature][1]

    def size(self) -> int:
        """Number of points in the induced space (exact integer)."""
        return math.prod(len(dom) for _, dom in self.features)

    def feature_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.features):
            if n == name:
                return i
        raise SpaceError("unknown feature %r" % name)

    def value_index(self, feature: int, label: str) -> int:
        try:
            return self.domain(feature).index(label)
        except ValueError:
            raise SpaceError("unknown value %r for feature %r"
                             % (label, self.features[feature][0])) from None

    def literal(self, feature: int | str, value: int | str,
                negated: bool = False) -> "Literal":
        """Build a literal, normalizing != on binary domains to the complementary =."""
        f = feature if isinstance(feature, int) else self.feature_index(feature)
        if not 0 <= f < self.m:
            raise SpaceError("feature index %d out of range" % f)
        v = value if isinstance(value, int) else self.value_index(f, value)
        dom = self.domain(f)
        if not 0 <= v < len(dom):
            raise SpaceError("value index %d out of range for feature %r"
                             % (v, self.features[f][0]))
        if negated and len(dom) == 2:
            return Literal(feature=f, negated=False, value=1 - v)
        return Literal(feature=f, negated=negated, value=v)

    def negate(self, lit: "Literal") -> "Literal":
        return self.literal(lit.feature, lit.value, not lit.negated)

    def instance(self, values: Sequence[int | str]) -> "Instance":
        """Build an instance from value indices or labels, validating lengths and ranges."""
        if len(values) != self.m:
            raise SpaceError("expected %d values, got %d" % (self.m, len(values)))
        out = []
        for f, v in enumerate(values):
            idx = v if isinstance(v, int) else self.value_index(f, v)
            if not 0 <= idx < len(self.domain(f)):
                raise SpaceError("value index %d out of range for feature %r"
                                 % (idx, self.features[f][0]))
            out.append(idx)
        return Instance(tuple(out))

    def instance_from_labels(self, mapping: Mapping[str, str]) -> "Instance":
        """Build an instance from a {feature name: value label} mapping."""
        values = []
        for name, _ in self.features:
            if name not in mapping:
                raise SpaceError("missing value for feature %r" % name)
            values.append(mapping[name])
        return self.instance(values)

    def points(self) -> Iterator["Instance"]:
        """All points of the space in lexicographic order of value indices."""
        for combo in product(*(range(len(dom)) for _, dom in self.features)):
            yield Instance(combo)

    def render_literal(self, lit: "Literal") -> str:
        name, dom = self.features[lit.feature]
        return "%s %s %s" % (name, "!=" if lit.negated else "=", dom[lit.value])

    def render_instance(self, inst: "Instance") -> str:
        return ", ".join("%s = %s" % (name, dom[v])
                         for (name, dom), v in zip(self.features, inst.values))


@dataclass(frozen=True)
class Instance:
    """A full point of the feature space, as one value index per feature."""

    values: tuple[int, ...]

    def __getitem__(self, feature: int) -> int:
        return self.values[feature]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, order=True)
class Literal:
    """A feature-value (in)equality atom over a FeatureSpace.

    Build through FeatureSpace.literal so that != on a binary domain is
    normalized away; field order gives the (feature, polarity, value)
    sort used for deterministic tie-breaking, with = before !=.
    """

    feature: int
    negated: bool
    value: int

    def holds(self, inst: Instance) -> bool:
        return (inst.values[self.feature] != self.value) if self.negated \
            else (inst.values[self.feature] == self.value)

    def to_obj(self, space: FeatureSpace) -> dict:
        name, dom = space.features[self.feature]
        return {"feature": name, "op": "!=" if self.negated else "==",
                "value": dom[self.value]}

    @staticmethod
    def from_obj(space: FeatureSpace, obj: Mapping) -> "Literal":
        if obj["op"] not in ("==", "!="):
            raise SpaceError("bad literal op %r" % obj["op"])
        return space.literal(obj["feature"], obj["value"], negated=obj["op"] == "!=")


def literal_satisfied(lit: Literal, inst: Instance) -> bool:
    """True iff the instance's value for the literal's feature matches its polarity."""
    if lit.feature >= len(inst.values):
        raise SpaceError("literal feature %d out of range for instance of length %d"
                         % (lit.feature, len(inst.values)))
    return lit.holds(inst)


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals, kept as a set; tautologies are rejected."""

    literals: frozenset[Literal]

    def __post_init__(self):
        if not self.literals:
            raise SpaceError("empty clause")
        seen = {}
        for lit in self.literals:
            key = (lit.feature, lit.value)
            if key in seen and seen[key] != lit.negated:
                raise SpaceError("tautological clause: complementary pair on "
                                 "feature %d value %d" % key)
            seen[key] = lit.negated

    @classmethod
    def of(cls, literals: Iterable[Literal]) -> "Clause":
        return cls(frozenset(literals))

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def sorted_literals(self) -> list[Literal]:
        return sorted(self.literals)

    def satisfied_by(self, inst: Instance) -> bool:
        return any(lit.holds(inst) for lit in self.literals)


@dataclass(frozen=True)
class Rule:
    """IF antecedent THEN consequent, with mining stats when it came from a miner."""

    antecedent: frozenset[Literal]
    consequent: Literal
    id: Optional[int] = None
    support: Optional[int] = None
    consistency: Optional[float] = None

    def __post_init__(self):
        if any(lit.feature == self.consequent.feature for lit in self.antecedent):
            raise SpaceError("consequent feature %d occurs in the antecedent"
                             % self.consequent.feature)

    @property
    def size(self) -> int:
        return len(self.antecedent)

    def matches(self, inst: Instance) -> bool:
        return all(lit.holds(inst) for lit in self.antecedent)

    def violated_by(self, inst: Instance) -> bool:
        return self.matches(inst) and not self.consequent.holds(inst)

    def render(self, space: FeatureSpace) -> str:
        if self.antecedent:
            body = " AND ".join(space.render_literal(l)
                                for l in sorted(self.antecedent))
        else:
            body = "TRUE"
        return "IF %s THEN %s" % (body, space.render_literal(self.consequent))


def validate_rule(space: FeatureSpace, rule: Rule) -> None:
    """Check the space-dependent rule invariants (raises SpaceError)."""
    per_feature_eq: dict[int, int] = {}
    per_feature_neq: dict[int, set[int]] = {}
    for lit in rule.antecedent:
        if not 0 <= lit.feature < space.m or not 0 <= lit.value < len(space.domain(lit.feature)):
            raise SpaceError("antecedent literal out of range: %r" % (lit,))
        if lit.negated:
            per_feature_neq.setdefault(lit.feature, set()).add(lit.value)
        else:
            per_feature_eq[lit.feature] = per_feature_eq.get(lit.feature, 0) + 1
    for f, count in per_feature_eq.items():
        if count > 1:
            raise SpaceError("two = literals on feature %d" % f)
    for f, excluded in per_feature_neq.items():
        if len(excluded) >= len(space.domain(f)):
            raise SpaceError("!= literals exclude the whole domain of feature %d" % f)
    rule_to_clause(space, rule)  # must form a valid clause


def rule_to_clause(space: FeatureSpace, rule: Rule) -> Clause:
    """Clausal form: negated antecedent literals plus the consequent."""
    lits = {space.negate(l) for l in rule.antecedent}
    lits.add(rule.consequent)
    return Clause(frozenset(lits))


def clause_to_rules(space: FeatureSpace, clause: Clause) -> list[Rule]:
    """All |clause| rule readings of a clause, one per consequent choice.

    Used for duplicate detection and reporting only; the readings carry no stats.
    """
    out = []
    for consequent in clause.sorted_literals():
        antecedent = frozenset(space.negate(l) for l in clause.literals
                               if l != consequent)
        out.append(Rule(antecedent, consequent))
    return out


@dataclass(frozen=True)
class KnowledgeBase:
    """A conjunction of clauses over feature literals, with rule provenance.

    `provenance` maps each clause to the ids of the mined rules it came from;
    `rules` keeps the emitted rule objects for reporting. `truncated` is set
    when mining stopped on a count or time budget.
    """

    clauses: tuple[Clause, ...] = ()
    provenance: Mapping[Clause, tuple[int, ...]] = field(default_factory=dict)
    rules: tuple[Rule, ...] = ()
    truncated: bool = False

    def __post_init__(self):
        if len(set(self.clauses)) != len(self.clauses):
            raise SpaceError("duplicate clauses in knowledge base")

    @classmethod
    def from_rules(cls, space: FeatureSpace, rules: Iterable[Rule],
                   truncated: bool = False) -> "KnowledgeBase":
        """Deduplicate rules clausally, merging provenance ids per clause."""
        clauses: list[Clause] = []
        prov: dict[Clause, list[int]] = {}
        kept: list[Rule] = []
        for rule in rules:
            clause = rule_to_clause(space, rule)
            if clause not in prov:
                clauses.append(clause)
                prov[clause] = []
                kept.append(rule)
            if rule.id is not None:
                prov[clause].append(rule.id)
        return cls(tuple(clauses),
                   {c: tuple(ids) for c, ids in prov.items()},
                   tuple(kept), truncated)

    def __len__(self) -> int:
        return len(self.clauses)

    def __bool__(self) -> bool:
        return bool(self.clauses)

    def satisfied_by(self, inst: Instance) -> bool:
        """Conjunction semantics: true iff every clause is satisfied."""
        return all(clause.satisfied_by(inst) for clause in self.clauses)

    def subset(self, clauses: Iterable[Clause]) -> "KnowledgeBase":
        chosen = list(clauses)
        chosen_set = set(chosen)
        rules = tuple(r for c, r in zip(self.clauses, self.rules) if c in chosen_set) \
            if len(self.rules) == len(self.clauses) else ()
        return KnowledgeBase(tuple(chosen),
                             {c: self.provenance.get(c, ()) for c in chosen},
                             rules, self.truncated)


def space_to_obj(space: FeatureSpace) -> list:
    return [{"name": name, "domain": list(domain)} for name, domain in space.features]


def space_from_obj(obj) -> FeatureSpace:
    return FeatureSpace.make((f["name"], f["domain"]) for f in obj)


def rebind_literal(lit: Literal, old: FeatureSpace, new: FeatureSpace) -> Literal:
    """Re-express a literal in another space by feature name and value label."""
    name, dom = old.features[lit.feature]
    return new.literal(name, dom[lit.value], negated=lit.negated)


def rebind_rule(rule: Rule, old: FeatureSpace, new: FeatureSpace) -> Rule:
    return Rule(frozenset(rebind_literal(l, old, new) for l in rule.antecedent),
                rebind_literal(rule.consequent, old, new),
                rule.id, rule.support, rule.consistency)


def rebind_knowledge(kb: "KnowledgeBase", old: FeatureSpace,
                     new: FeatureSpace) -> "KnowledgeBase":
    """Carry a knowledge base onto a compatible space (e.g. a model's space).

    Every feature name and value label must exist in the target space; target
    domains may be larger (models sometimes know values the data never took).
    """
    return KnowledgeBase.from_rules(
        new, [rebind_rule(r, old, new) for r in kb.rules], truncated=kb.truncated)


class Kind(str, Enum):
    """Explanation kind: abductive (why) or contrastive (why not)."""

    AXP = "axp"
    CXP = "cxp"


@dataclass(frozen=True)
class Explanation:
    """A set of feature indices explaining one prediction, with provenance flags."""

    kind: Kind
    features: frozenset[int]
    knowledge_assisted: bool
    instance: Instance
    predicted_class: int

    @property
    def size(self) -> int:
        return len(self.features)

    def feature_names(self, space: FeatureSpace) -> list[str]:
        return [space.names[f] for f in sorted(self.features)]
