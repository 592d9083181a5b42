import random

import pytest

from kxp import (Dataset, ExtractionLimit, FeatureSpace, MinerError, Rule,
                 eclat_mine, enumerate_min_rules, extract_all, rule_accuracy,
                 rule_to_clause)
from kxp.miner import (extract_all_parallel, filter_rules_by_accuracy,
                       load_knowledge, load_rules, save_rules)

from util import brute_force_min_rules, random_space

RNG_DATASETS = 25


def tiny_dataset(rng, space, n_rows):
    rows = tuple(tuple(rng.randrange(len(space.domain(f)))
                       for f in range(space.m)) for _ in range(n_rows))
    return Dataset(space.names, tuple(d for _, d in space.features), rows)


def texts(space, rules):
    return {r.render(space) for r in rules}


def test_status_married_rules(toy_ds):
    sp = toy_ds.space
    rules = enumerate_min_rules(toy_ds, sp.literal("Status", "Married"),
                                limit=ExtractionLimit(max_size=2))
    got = texts(sp, rules)
    assert "IF Relationship = Husband THEN Status = Married" in got
    assert "IF Relationship = Wife THEN Status = Married" in got


def test_relationship_husband_rule(toy_ds):
    sp = toy_ds.space
    rules = enumerate_min_rules(toy_ds, sp.literal("Relationship", "Husband"),
                                limit=ExtractionLimit(max_size=2))
    assert "IF Status = Married AND Sex = Male THEN Relationship = Husband" \
        in texts(sp, rules)


def test_blocked_clause_suppresses_duplicate(toy_ds):
    sp = toy_ds.space
    husband = Rule(frozenset({sp.literal("Status", "Married"),
                              sp.literal("Sex", "Male")}),
                   sp.literal("Relationship", "Husband"))
    blocked = {rule_to_clause(sp, husband)}
    rules = enumerate_min_rules(toy_ds, sp.literal("Sex", "Female"),
                                blocked=blocked,
                                limit=ExtractionLimit(max_size=2))
    dup = "IF Status = Married AND Relationship != Husband THEN Sex = Female"
    assert dup not in texts(sp, rules)
    unblocked = enumerate_min_rules(toy_ds, sp.literal("Sex", "Female"),
                                    limit=ExtractionLimit(max_size=2))
    assert dup in texts(sp, unblocked)


def test_extract_all_blocks_across_targets(toy_ds):
    sp = toy_ds.space
    kb = extract_all(toy_ds, ExtractionLimit(max_size=2))
    assert not kb.truncated
    # no two emitted rules share a clause
    clauses = [rule_to_clause(sp, r) for r in kb.rules]
    assert len(set(clauses)) == len(clauses) == len(kb)
    got = texts(sp, kb.rules)
    assert "IF Relationship = Husband THEN Status = Married" in got
    assert "IF Status = Married AND Sex = Male THEN Relationship = Husband" in got
    # the duplicate reading under the Sex = Female target was suppressed
    assert "IF Status = Married AND Relationship != Husband THEN Sex = Female" \
        not in got
    # every clause satisfied by every train row
    for inst in toy_ds.instances():
        assert all(c.satisfied_by(inst) for c in kb.clauses)


def test_emitted_rules_satisfy_contract(toy_ds):
    sp = toy_ds.space
    insts = toy_ds.instances()
    kb = extract_all(toy_ds, ExtractionLimit(max_size=3))
    for rule in kb.rules:
        assert not any(rule.violated_by(i) for i in insts)
        support = sum(1 for i in insts
                      if rule.matches(i) and rule.consequent.holds(i))
        assert support == rule.support >= 1
        # single-literal deletion breaks consistency or support
        for lit in rule.antecedent:
            smaller = rule.antecedent - {lit}
            rows = [i for i in insts if all(l.holds(i) for l in smaller)]
            sup = sum(1 for i in rows if rule.consequent.holds(i))
            consistent = all(rule.consequent.holds(i) for i in rows)
            assert not (consistent and sup >= 1)


def test_emission_order_nondecreasing(toy_ds):
    sp = toy_ds.space
    rules = enumerate_min_rules(toy_ds, sp.literal("Relationship", "Husband"),
                                limit=ExtractionLimit(max_size=3))
    sizes = [r.size for r in rules]
    assert sizes == sorted(sizes)
    ids = [r.id for r in rules]
    assert ids == sorted(ids)


def test_matches_bruteforce_on_random_data():
    rng = random.Random(1234)
    for trial in range(RNG_DATASETS):
        sp = random_space(rng, min_features=3, max_features=5, max_domain=3)
        ds = tiny_dataset(rng, sp, rng.randint(3, 10))
        f = rng.randrange(sp.m)
        target = sp.literal(f, rng.randrange(len(sp.domain(f))))
        min_sup = rng.choice((1, 1, 2))
        limit = ExtractionLimit(max_size=3, min_support=min_sup)
        fast = enumerate_min_rules(ds, target, limit=limit)
        slow = brute_force_min_rules(ds, target, max_size=3, min_support=min_sup)
        fast_set = {(r.antecedent, r.consequent) for r in fast}
        slow_set = {(r.antecedent, r.consequent) for r in slow}
        assert fast_set == slow_set, "trial %d" % trial


def test_binary_dataset_matches_bruteforce():
    rng = random.Random(77)
    sp = FeatureSpace.make([("x%d" % i, ["0", "1"]) for i in range(4)])
    for _ in range(10):
        ds = tiny_dataset(rng, sp, 8)
        target = sp.literal(0, rng.randrange(2))
        fast = enumerate_min_rules(ds, target, limit=ExtractionLimit(max_size=3))
        slow = brute_force_min_rules(ds, target, max_size=3)
        assert {(r.antecedent, r.consequent) for r in fast} \
            == {(r.antecedent, r.consequent) for r in slow}


def test_extract_all_matches_bruteforce_pipeline():
    rng = random.Random(9090)
    for _ in range(6):
        sp = random_space(rng, min_features=3, max_features=4, max_domain=3)
        ds = tiny_dataset(rng, sp, rng.randint(3, 8))
        fast = extract_all(ds, ExtractionLimit(max_size=2))
        blocked = set()
        slow = []
        for f in range(sp.m):
            for v in range(len(sp.domain(f))):
                got = brute_force_min_rules(ds, sp.literal(f, v),
                                            blocked=blocked, max_size=2)
                slow.extend(got)
                blocked.update(rule_to_clause(sp, r) for r in got)
        assert [(r.antecedent, r.consequent) for r in fast.rules] \
            == [(r.antecedent, r.consequent) for r in slow]


def test_target_must_be_equality(toy_ds):
    sp = toy_ds.space
    with pytest.raises(MinerError):
        enumerate_min_rules(toy_ds, sp.literal("Status", "Married", negated=True))


def test_empty_dataset_gives_empty_kb(toy_ds):
    empty = toy_ds.take([])
    kb = extract_all(empty, ExtractionLimit(max_size=2))
    assert len(kb) == 0 and not kb.truncated


def test_rule_count_budget_truncates(toy_ds):
    kb = extract_all(toy_ds, ExtractionLimit(max_size=2, max_rules=5))
    assert len(kb.rules) == 5 and kb.truncated


def test_time_budget_truncates(toy_ds):
    kb = extract_all(toy_ds, ExtractionLimit(max_size=5, time_budget=0.0))
    assert kb.truncated


def test_limit_validation():
    with pytest.raises(MinerError):
        ExtractionLimit(max_size=0)
    with pytest.raises(MinerError):
        ExtractionLimit(min_support=0)


def test_parallel_mode_same_clause_set(toy_ds):
    limit = ExtractionLimit(max_size=2)
    sequential = extract_all(toy_ds, limit)
    parallel = extract_all_parallel(toy_ds, limit, jobs=3)
    assert set(parallel.clauses) == set(sequential.clauses)
    assert not parallel.truncated


def test_accuracy_filter(toy_ds):
    sp = toy_ds.space
    good = Rule(frozenset({sp.literal("Relationship", "Husband")}),
                sp.literal("Status", "Married"))
    bad = Rule(frozenset({sp.literal("Education", "Dropout")}),
               sp.literal("Sex", "Female"))
    kept = filter_rules_by_accuracy([good, bad], toy_ds, threshold=0.9)
    assert kept == [good]


# ---------------------------------------------------------------------------
# eclat

def test_eclat_cannot_express_negations():
    sp = FeatureSpace.make([("x1", ["0", "1", "2"]), ("x2", ["0", "1", "2"])])
    # both rows with x1 != 0 have x2 = 1
    ds = Dataset(sp.names, tuple(d for _, d in sp.features),
                 ((0, 0), (1, 1), (2, 1)))
    lattice = texts(sp, enumerate_min_rules(ds, sp.literal("x2", "1"),
                                            limit=ExtractionLimit(max_size=1)))
    assert "IF x1 != 0 THEN x2 = 1" in lattice
    eclat = texts(sp, eclat_mine(ds))
    assert "IF x1 != 0 THEN x2 = 1" not in eclat
    assert "IF x1 = 1 THEN x2 = 1" in eclat
    assert "IF x1 = 2 THEN x2 = 1" in eclat


def test_eclat_includes_husband_rule(toy_ds):
    sp = toy_ds.space
    rules = eclat_mine(toy_ds, min_support=1, limit=ExtractionLimit(max_size=2))
    assert "IF Relationship = Husband THEN Status = Married" in texts(sp, rules)


def test_eclat_confidence_contract(toy_ds):
    insts = toy_ds.instances()
    for rule in eclat_mine(toy_ds, min_support=1,
                           limit=ExtractionLimit(max_size=2)):
        assert not any(rule.violated_by(i) for i in insts)
        assert rule.support >= 1
        assert all(not l.negated for l in rule.antecedent)
        assert not rule.consequent.negated


def test_eclat_respects_min_support(toy_ds):
    for rule in eclat_mine(toy_ds, min_support=3,
                           limit=ExtractionLimit(max_size=2)):
        assert rule.support >= 3


# ---------------------------------------------------------------------------
# accuracy and file round trips

def test_rule_accuracy_values(toy_ds):
    sp = toy_ds.space
    consistent = Rule(frozenset({sp.literal("Relationship", "Husband")}),
                      sp.literal("Status", "Married"))
    assert rule_accuracy(consistent, toy_ds) == 1.0
    wrong = Rule(frozenset({sp.literal("Education", "Dropout")}),
                 sp.literal("Sex", "Female"))
    # dropouts are male in both matching rows: 2 violations out of 6
    assert rule_accuracy(wrong, toy_ds) == pytest.approx(4 / 6)
    with pytest.raises(MinerError):
        rule_accuracy(consistent, toy_ds.take([]))


def test_rules_file_round_trip(tmp_path, toy_ds):
    sp = toy_ds.space
    kb = extract_all(toy_ds, ExtractionLimit(max_size=2))
    path = tmp_path / "rules.jsonl"
    save_rules(path, sp, kb.rules, truncated=kb.truncated)
    space2, rules2, header = load_rules(path)
    assert space2 == sp
    assert [(r.antecedent, r.consequent, r.id, r.support) for r in rules2] \
        == [(r.antecedent, r.consequent, r.id, r.support) for r in kb.rules]
    kb2 = load_knowledge(path)
    assert set(kb2.clauses) == set(kb.clauses)
    assert kb2.truncated == kb.truncated


def test_load_knowledge_rebinds(tmp_path, toy_ds, toy_dl):
    path = tmp_path / "rules.jsonl"
    kb = extract_all(toy_ds, ExtractionLimit(max_size=1))
    save_rules(path, toy_ds.space, kb.rules)
    moved = load_knowledge(path, toy_dl.space)
    assert len(moved) == len(kb)
    for inst in toy_ds.instances():
        translated = toy_dl.space.instance_from_labels(
            {n: toy_ds.space.domain(i)[inst.values[i]]
             for i, n in enumerate(toy_ds.names)})
        assert moved.satisfied_by(translated)
